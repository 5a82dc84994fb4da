// Thin client over the session service. Errors carry the service's detail
// text so the view can surface the failing statement verbatim.

import type {
  ProblemInput,
  ProblemSummary,
  SearchReport,
  SessionState,
  StepReport,
} from "./types.js";

export class ApiError extends Error {
  constructor(public status: number, detail: string) {
    super(detail);
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private base: string = "",
    private fetcher: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetcher(this.base + path, {
      headers: { "Content-Type": "application/json" },
      ...init,
    });
    const body = await response.json().catch(() => ({}));
    if (!response.ok) {
      const detail =
        typeof body?.detail === "string"
          ? body.detail
          : JSON.stringify(body?.detail ?? response.statusText);
      throw new ApiError(response.status, detail);
    }
    return body as T;
  }

  listProblems(): Promise<ProblemSummary[]> {
    return this.request("/problems");
  }

  createSession(selection: { problem?: ProblemInput; problem_id?: number }):
    Promise<SessionState> {
    return this.request("/sessions", {
      method: "POST",
      body: JSON.stringify(selection),
    });
  }

  snapshot(sessionId: string): Promise<SessionState> {
    return this.request(`/sessions/${sessionId}`);
  }

  applyStep(sessionId: string, theorem: string, binding?: string):
    Promise<StepReport> {
    return this.request(`/sessions/${sessionId}/steps`, {
      method: "POST",
      body: JSON.stringify(binding ? { theorem, binding } : { theorem }),
    });
  }

  undo(sessionId: string): Promise<SessionState> {
    return this.request(`/sessions/${sessionId}/undo`, { method: "POST" });
  }

  suggest(sessionId: string, budget: number, method = "forward",
          strategy = "bfs"): Promise<SearchReport> {
    return this.request(`/sessions/${sessionId}/search`, {
      method: "POST",
      body: JSON.stringify({ method, strategy, budget }),
    });
  }
}
