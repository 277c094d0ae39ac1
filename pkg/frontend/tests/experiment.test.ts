/** Automated browser-level walk of the experiment flow (happy-dom). */

import { beforeEach, describe, expect, it, vi } from "vitest";

import { SessionApi } from "../src/api.js";
import { boot } from "../src/main.js";
import { FakeServer, LABELS, makeEntries } from "./fakeServer.js";

const PLAN = {
  training_trials: 1,
  test_blocks: 1,
  trials_per_test_block: 5,
  feedback_in_training: true,
};

function mount(): HTMLElement {
  document.body.innerHTML = '<div id="experiment"></div>';
  return document.getElementById("experiment")!;
}

function q<T extends HTMLElement>(sel: string): T {
  const node = document.querySelector(sel);
  if (!node) throw new Error(`missing element ${sel}`);
  return node as T;
}

async function settle(): Promise<void> {
  for (let i = 0; i < 10; i++) await Promise.resolve();
}

async function showStimulus(): Promise<void> {
  q<HTMLButtonElement>("#fixation").click();
  await vi.waitFor(() => q<HTMLImageElement>("#stimulus"));
  q<HTMLImageElement>("#stimulus").dispatchEvent(new Event("load"));
}

describe("experiment flow", () => {
  let server: FakeServer;

  beforeEach(() => {
    server = new FakeServer(makeEntries(6), PLAN);
    window.sessionStorage.clear();
  });

  async function bootApp(observerId = "h1") {
    const root = mount();
    const experiment = await boot(root, {
      baseUrl: "http://fake",
      observerId,
      fetchFn: server.fetch,
      storage: window.sessionStorage,
    });
    await settle();
    return experiment;
  }

  it("gates the experiment behind instructions", async () => {
    const experiment = await bootApp();
    expect(q("#instructions").textContent).toBe(server.instructions);
    // direct attempt to reach a trial before acknowledging: redirected back
    await experiment.clickFixation();
    await settle();
    expect(document.querySelector("#stimulus")).toBeNull();
    expect(document.querySelector("#consent")).not.toBeNull();
    q<HTMLButtonElement>("#acknowledge").click();
    await settle();
    expect(document.querySelector("#fixation")).not.toBeNull();
  });

  it("walks fixation -> stimulus -> response with feedback only in training", async () => {
    await bootApp();
    q<HTMLButtonElement>("#acknowledge").click();
    await settle();

    // --- training trial ---
    expect(q("#fixation").textContent).toBe("+");
    await showStimulus();
    const buttons = Array.from(
      document.querySelectorAll<HTMLButtonElement>("#choices button"),
    );
    expect(buttons).toHaveLength(16);
    expect(buttons.map((b) => b.textContent)).toEqual(LABELS);
    // wrong answer on purpose: trial 0's true category is LABELS[0]
    const wrong = buttons.find((b) => b.textContent === LABELS[3])!;
    wrong.click();
    await vi.waitFor(() => q("#feedback"));
    expect(q("#feedback .verdict").textContent).toBe("incorrect");
    expect(q("#true-category").textContent).toContain(LABELS[0]);
    q<HTMLButtonElement>("#continue").click();
    await settle();

    // --- test trial: no feedback rendered ---
    await showStimulus();
    q<HTMLButtonElement>('[data-category="cat"]').click();
    await vi.waitFor(() => q("#fixation"));
    expect(document.querySelector("#feedback")).toBeNull();
    expect(server.records).toHaveLength(2);
    expect(server.records[0].block).toBe("training");
    expect(server.records[1].block).toBe("test");
  });

  it("keeps category buttons disabled until the stimulus displays", async () => {
    await bootApp();
    q<HTMLButtonElement>("#acknowledge").click();
    await settle();
    q<HTMLButtonElement>("#fixation").click();
    await vi.waitFor(() => q<HTMLImageElement>("#stimulus"));
    const button = q<HTMLButtonElement>('[data-category="dog"]');
    expect(button.disabled).toBe(true);
    button.click(); // must be a no-op while disabled
    await settle();
    expect(server.records).toHaveLength(0);
    q<HTMLImageElement>("#stimulus").dispatchEvent(new Event("load"));
    expect(q<HTMLButtonElement>('[data-category="dog"]').disabled).toBe(false);
  });

  it("resumes after a reload without duplicate records", async () => {
    await bootApp("resumer");
    q<HTMLButtonElement>("#acknowledge").click();
    await settle();
    for (let i = 0; i < 3; i++) {
      await showStimulus();
      q<HTMLButtonElement>('[data-category="oven"]').click();
      await settle();
      const fb = document.querySelector("#continue");
      if (fb) {
        (fb as HTMLButtonElement).click();
        await settle();
      }
    }
    expect(server.records).toHaveLength(3);

    // reload: fresh DOM + app, same observer and storage
    const experiment = await bootApp("resumer");
    // consent already acknowledged: straight to fixation at trial 4
    expect(document.querySelector("#consent")).toBeNull();
    expect(q("#progress").textContent).toContain("trial 4 of 6");
    await showStimulus();
    expect(experiment.trial?.stimulus_id).toBe("stim_00003");
    q<HTMLButtonElement>('[data-category="oven"]').click();
    await settle();
    const ids = server.records.map((r) => r.stimulus_id);
    expect(new Set(ids).size).toBe(ids.length); // no duplicates
    expect(ids).toHaveLength(4);
  });

  it("treats a duplicated response POST as already recorded", async () => {
    const api = new SessionApi("http://fake", server.fetch);
    const session = await api.newSession("dup");
    const trial = await api.nextTrial(session.session_id);
    const first = await api.postResponse(session.session_id, trial.stimulus_id!, "cat");
    expect(first.recorded).toBe(true);
    const second = await api.postResponse(session.session_id, trial.stimulus_id!, "cat");
    expect(second.duplicate).toBe(true);
    expect(server.records).toHaveLength(1);
  });

  it("finishes with a completion screen", async () => {
    server = new FakeServer(makeEntries(2), {
      training_trials: 0,
      test_blocks: 1,
      trials_per_test_block: 2,
      feedback_in_training: true,
    });
    await bootApp("finisher");
    q<HTMLButtonElement>("#acknowledge").click();
    await settle();
    for (let i = 0; i < 2; i++) {
      await showStimulus();
      q<HTMLButtonElement>('[data-category="cat"]').click();
      await settle();
    }
    expect(q("#done").textContent).toContain("complete");
  });
});
