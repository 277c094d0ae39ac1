/** Experiment state machine.
 *
 * The cycle is fixation -> stimulus -> (feedback on training trials) ->
 * fixation, gated behind a consent/instructions screen. Every response is
 * persisted through the session API before the machine advances, so the
 * browser holds no authoritative state and a reload resumes cleanly.
 */

import { Feedback, SessionApi, SessionInfo, Trial } from "./api.js";

export type Phase = "consent" | "fixation" | "stimulus" | "feedback" | "done";

export interface StateSnapshot {
  phase: Phase;
  trial: Trial | null;
  feedback: Feedback | null;
  completed: number;
  total: number;
}

export interface ConsentStore {
  isAcknowledged(observerId: string): boolean;
  acknowledge(observerId: string): void;
}

/** Storage-backed consent persistence, keyed per observer so that a page
 * reload (which opens a fresh session token) does not re-gate the run. */
export class StorageConsent implements ConsentStore {
  constructor(private readonly storage: Storage) {}

  private key(observerId: string): string {
    return `bandmask-consent-${observerId}`;
  }

  isAcknowledged(observerId: string): boolean {
    return this.storage.getItem(this.key(observerId)) === "yes";
  }

  acknowledge(observerId: string): void {
    this.storage.setItem(this.key(observerId), "yes");
  }
}

export class Experiment {
  phase: Phase = "consent";
  session: SessionInfo | null = null;
  trial: Trial | null = null;
  feedback: Feedback | null = null;
  completed = 0;

  private listeners: Array<(s: StateSnapshot) => void> = [];

  constructor(
    readonly api: SessionApi,
    readonly observerId: string,
    private readonly consent: ConsentStore,
  ) {}

  onChange(fn: (s: StateSnapshot) => void): void {
    this.listeners.push(fn);
  }

  snapshot(): StateSnapshot {
    return {
      phase: this.phase,
      trial: this.trial,
      feedback: this.feedback,
      completed: this.completed,
      total: this.session?.total_trials ?? 0,
    };
  }

  private emit(): void {
    const snap = this.snapshot();
    for (const fn of this.listeners) fn(snap);
  }

  /** Open (or resume) the session; lands on consent or fixation. */
  async start(): Promise<void> {
    this.session = await this.api.newSession(this.observerId);
    this.completed = this.session.completed;
    if (this.completed >= this.session.total_trials) {
      this.phase = "done";
    } else if (this.consent.isAcknowledged(this.observerId)) {
      this.phase = "fixation";
    } else {
      this.phase = "consent";
    }
    this.emit();
  }

  acknowledgeConsent(): void {
    if (!this.session) throw new Error("session not started");
    this.consent.acknowledge(this.observerId);
    this.phase = this.completed >= this.session.total_trials ? "done" : "fixation";
    this.emit();
  }

  /** Any attempt to reach a trial before consent redirects back. */
  guard(): boolean {
    if (!this.session) return false;
    if (!this.consent.isAcknowledged(this.observerId)) {
      this.phase = "consent";
      this.emit();
      return false;
    }
    return true;
  }

  async clickFixation(): Promise<void> {
    if (!this.guard() || this.phase !== "fixation") return;
    const trial = await this.api.nextTrial(this.session!.session_id);
    if (trial.done) {
      this.phase = "done";
      this.trial = null;
    } else {
      this.trial = trial;
      this.phase = "stimulus";
    }
    this.emit();
  }

  async respond(category: string): Promise<void> {
    if (!this.guard() || this.phase !== "stimulus" || !this.trial) return;
    const reply = await this.api.postResponse(
      this.session!.session_id,
      this.trial.stimulus_id!,
      category,
    );
    if (reply.duplicate) {
      // already recorded (e.g. a retried POST after a reload): just move on
      this.trial = null;
      this.phase = "fixation";
      this.emit();
      return;
    }
    this.completed = reply.completed;
    if (reply.feedback) {
      this.feedback = reply.feedback;
      this.phase = "feedback";
    } else {
      this.trial = null;
      this.phase = this.completed >= this.session!.total_trials ? "done" : "fixation";
    }
    this.emit();
  }

  continueAfterFeedback(): void {
    if (this.phase !== "feedback") return;
    this.feedback = null;
    this.trial = null;
    this.phase =
      this.completed >= (this.session?.total_trials ?? 0) ? "done" : "fixation";
    this.emit();
  }
}
