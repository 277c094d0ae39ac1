/** Bootstrap: wire the API, state machine, and view into a DOM root. */

import { SessionApi, FetchLike } from "./api.js";
import { Experiment, StorageConsent } from "./state.js";
import { ExperimentView } from "./ui.js";

export interface BootOptions {
  baseUrl?: string;
  observerId?: string;
  fetchFn?: FetchLike;
  storage?: Storage;
}

/** Mount the experiment into `root` and start (or resume) the session. */
export async function boot(root: HTMLElement, opts: BootOptions = {}): Promise<Experiment> {
  const baseUrl = opts.baseUrl ?? window.location.origin;
  const api = new SessionApi(baseUrl, opts.fetchFn);
  const config = await api.config();
  const observerId =
    opts.observerId ??
    new URLSearchParams(window.location.search).get("observer") ??
    "anonymous";
  const experiment = new Experiment(
    api,
    observerId,
    new StorageConsent(opts.storage ?? window.sessionStorage),
  );
  new ExperimentView(root, experiment, config);
  await experiment.start();
  return experiment;
}

declare global {
  interface Window {
    bandmaskBoot?: typeof boot;
  }
}

if (typeof window !== "undefined") {
  window.bandmaskBoot = boot;
}
