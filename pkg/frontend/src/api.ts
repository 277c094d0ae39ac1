/** Typed client for the experiment session HTTP API. */

export interface BlockPlan {
  training_trials: number;
  test_blocks: number;
  trials_per_test_block: number;
  feedback_in_training: boolean;
}

export interface ExperimentConfig {
  instructions: string;
  labels: string[];
  block_plan: BlockPlan;
  total_trials: number;
}

export interface SessionInfo {
  session_id: string;
  block_plan: BlockPlan;
  labels: string[];
  total_trials: number;
  completed: number;
}

export interface Trial {
  done: boolean;
  completed?: number;
  stimulus_id?: string;
  stimulus_url?: string;
  labels?: string[];
  block?: "training" | "test";
  block_number?: number;
  index?: number;
  total_trials?: number;
}

export interface Feedback {
  correct: boolean;
  true_category: string;
}

export interface ResponseReply {
  recorded: boolean;
  feedback: Feedback | null;
  completed: number;
  duplicate?: boolean;
}

export interface Progress {
  completed: number;
  total: number;
  next_index: number;
  block: string;
  done: boolean;
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

async function parse<T>(resp: Response, allow409 = false): Promise<T> {
  if (resp.status === 409 && allow409) {
    return { recorded: false, feedback: null, completed: -1, duplicate: true } as T;
  }
  if (!resp.ok) {
    let reason = `${resp.status}`;
    try {
      const body = (await resp.json()) as { error?: string };
      if (body.error) reason = body.error;
    } catch {
      /* non-JSON error body */
    }
    throw new Error(`session API error: ${reason}`);
  }
  return (await resp.json()) as T;
}

export class SessionApi {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (u, i) => fetch(u, i),
  ) {}

  stimulusUrl(trial: Trial): string {
    return new URL(trial.stimulus_url ?? "", this.baseUrl).toString();
  }

  async config(): Promise<ExperimentConfig> {
    return parse(await this.fetchFn(`${this.baseUrl}/experiment/config`));
  }

  async newSession(observerId: string): Promise<SessionInfo> {
    return parse(
      await this.fetchFn(`${this.baseUrl}/session`, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({ observer_id: observerId, kind: "human" }),
      }),
    );
  }

  async nextTrial(sessionId: string): Promise<Trial> {
    return parse(await this.fetchFn(`${this.baseUrl}/session/${sessionId}/trial`));
  }

  /** Posting is idempotent: a duplicate (409) is reported, never thrown. */
  async postResponse(
    sessionId: string,
    stimulusId: string,
    category: string,
  ): Promise<ResponseReply> {
    return parse(
      await this.fetchFn(`${this.baseUrl}/session/${sessionId}/response`, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({ stimulus_id: stimulusId, category }),
      }),
      true,
    );
  }

  async progress(sessionId: string): Promise<Progress> {
    return parse(await this.fetchFn(`${this.baseUrl}/session/${sessionId}/progress`));
  }
}
