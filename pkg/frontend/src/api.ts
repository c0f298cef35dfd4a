/** Typed client for the annotation service HTTP API. */

export type SessionStatus = "training" | "awaiting_labels" | "complete";

export interface CreateResponse {
  session_id: string;
  status: SessionStatus;
  iteration: number;
}

export interface ScoreComponents {
  sum_entropy: number;
  sigma_global: number | null;
  sigma_labeled: number | null;
  sigma_internal: number | null;
  mu: number | null;
}

export interface QueryResponse {
  session_id: string;
  status: SessionStatus;
  iteration: number;
  indices: number[];
  positions: number[][] | null;
  polylines: number[][][] | null;
  probabilities: number[];
  components: ScoreComponents | null;
}

export interface SubmitResponse {
  session_id: string;
  status: SessionStatus;
  iteration: number;
  n_labeled: number;
  next_indices: number[];
}

export interface StatusResponse {
  session_id: string;
  status: SessionStatus;
  iteration: number;
  n_labeled: number;
  budget: number;
  strategy: string;
  k: number;
}

export interface GraphResponse {
  session_id: string;
  n_samples: number;
  positions: number[][] | null;
  adjacency: [number, number][];
  polylines: number[][][] | null;
}

export interface ExportResponse {
  format: string;
  version: number;
  session_id: string;
  iteration: number;
  status: SessionStatus;
  labels: [number, number][];
  query_log: { iteration: number; indices: number[] }[];
}

export interface SessionOverrides {
  strategy?: string;
  k?: number;
  budget?: number;
  seed?: number;
  seed_per_class?: number;
  graph_path?: string;
}

export type Label = 0 | 1;

/** Non-2xx response, carrying the service's error detail. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
    this.name = "ApiError";
  }
}

async function asJson<T>(resp: Response): Promise<T> {
  if (!resp.ok) {
    let detail = resp.statusText;
    try {
      const body = (await resp.json()) as { detail?: string };
      if (typeof body.detail === "string") detail = body.detail;
    } catch {
      // not a JSON error body; keep the status text
    }
    throw new ApiError(resp.status, detail);
  }
  return (await resp.json()) as T;
}

export class ApiClient {
  constructor(readonly baseUrl: string) {}

  private url(path: string): string {
    return this.baseUrl.replace(/\/$/, "") + path;
  }

  async createSession(overrides: SessionOverrides = {}): Promise<CreateResponse> {
    const resp = await fetch(this.url("/sessions"), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(overrides),
    });
    return asJson<CreateResponse>(resp);
  }

  async getQuery(sessionId: string): Promise<QueryResponse> {
    return asJson(await fetch(this.url(`/sessions/${sessionId}/query`)));
  }

  async submitLabels(
    sessionId: string,
    labels: Record<number, Label>,
  ): Promise<SubmitResponse> {
    const resp = await fetch(this.url(`/sessions/${sessionId}/labels`), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ labels }),
    });
    return asJson<SubmitResponse>(resp);
  }

  async getStatus(sessionId: string): Promise<StatusResponse> {
    return asJson(await fetch(this.url(`/sessions/${sessionId}/status`)));
  }

  async getGraph(sessionId: string): Promise<GraphResponse> {
    return asJson(await fetch(this.url(`/sessions/${sessionId}/graph`)));
  }

  async exportSession(sessionId: string): Promise<ExportResponse> {
    return asJson(await fetch(this.url(`/sessions/${sessionId}/export`)));
  }
}
