/** DOM renderer for the experiment state machine.
 *
 * One root element, re-rendered per phase. Stimuli are shown at native
 * 224x224 on a mid-gray background; the 16 category buttons stay disabled
 * until the stimulus image has actually displayed.
 */

import { ExperimentConfig } from "./api.js";
import { Experiment, StateSnapshot } from "./state.js";

const GRAY = "#808080"; // background at the contrast pivot (0.5)

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  if (text !== undefined) node.textContent = text;
  return node;
}

export class ExperimentView {
  constructor(
    private readonly root: HTMLElement,
    private readonly experiment: Experiment,
    private readonly config: ExperimentConfig,
  ) {
    experiment.onChange((snap) => this.render(snap));
  }

  render(snap: StateSnapshot): void {
    this.root.innerHTML = "";
    this.root.style.background = GRAY;
    switch (snap.phase) {
      case "consent":
        this.renderConsent();
        break;
      case "fixation":
        this.renderFixation(snap);
        break;
      case "stimulus":
        this.renderStimulus(snap);
        break;
      case "feedback":
        this.renderFeedback(snap);
        break;
      case "done":
        this.root.appendChild(el("p", { id: "done" }, "Session complete. Thank you!"));
        break;
    }
  }

  private renderConsent(): void {
    const box = el("div", { id: "consent" });
    box.appendChild(el("h1", {}, "Instructions"));
    box.appendChild(el("p", { id: "instructions" }, this.config.instructions));
    const ok = el("button", { id: "acknowledge" }, "I understand, begin");
    ok.addEventListener("click", () => this.experiment.acknowledgeConsent());
    box.appendChild(ok);
    this.root.appendChild(box);
  }

  private progressLine(snap: StateSnapshot): HTMLElement {
    const block = snap.trial?.block ?? "";
    const label = block ? `${block} block - ` : "";
    return el(
      "p",
      { id: "progress" },
      `${label}trial ${snap.completed + 1} of ${snap.total}`,
    );
  }

  private renderFixation(snap: StateSnapshot): void {
    const cross = el("button", { id: "fixation", "aria-label": "fixation cross" }, "+");
    cross.addEventListener("click", () => void this.experiment.clickFixation());
    this.root.appendChild(cross);
    this.root.appendChild(this.progressLine(snap));
  }

  private renderStimulus(snap: StateSnapshot): void {
    const trial = snap.trial!;
    const img = el("img", {
      id: "stimulus",
      width: "224",
      height: "224",
      alt: "stimulus",
      src: this.experiment.api.stimulusUrl(trial),
    });
    this.root.appendChild(img);

    const grid = el("div", { id: "choices", role: "group" });
    const buttons: HTMLButtonElement[] = [];
    for (const label of trial.labels ?? this.config.labels) {
      const b = el("button", { "data-category": label, disabled: "" }, label);
      b.addEventListener("click", () => void this.experiment.respond(label));
      buttons.push(b);
      grid.appendChild(b);
    }
    // buttons stay disabled until the stimulus has displayed
    const enable = () => buttons.forEach((b) => b.removeAttribute("disabled"));
    img.addEventListener("load", enable);
    img.addEventListener("error", enable); // still allow responding
    this.root.appendChild(grid);
    this.root.appendChild(this.progressLine(snap));
  }

  private renderFeedback(snap: StateSnapshot): void {
    const fb = snap.feedback!;
    const box = el("div", { id: "feedback" });
    if (fb.correct) {
      box.appendChild(el("p", { class: "verdict" }, "correct"));
    } else {
      box.appendChild(el("p", { class: "verdict" }, "incorrect"));
      box.appendChild(
        el("p", { id: "true-category" }, `correct answer: ${fb.true_category}`),
      );
    }
    const next = el("button", { id: "continue" }, "continue");
    next.addEventListener("click", () => this.experiment.continueAfterFeedback());
    box.appendChild(next);
    this.root.appendChild(box);
    this.root.appendChild(this.progressLine(snap));
  }
}
