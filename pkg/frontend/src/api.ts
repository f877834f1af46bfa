// Thin fetch wrapper around the session service. All knowledge of URLs and
// error envelopes lives here; the screens never touch fetch directly.

import type {
  Catalogue,
  Recommendation,
  ScenarioRef,
  SearchConfig,
  SessionView,
  TreePayload,
} from "./types";

export class ApiError extends Error {
  readonly status: number;
  readonly code: string;

  constructor(status: number, code: string, message: string) {
    super(message);
    this.status = status;
    this.code = code;
  }
}

async function request<T>(base: string, path: string, init?: RequestInit): Promise<T> {
  const response = await fetch(base + path, {
    headers: { "Content-Type": "application/json" },
    ...init,
  });
  const body = await response.json().catch(() => null);
  if (!response.ok) {
    const code = body?.code ?? "http_error";
    const message = body?.message ?? `${response.status} on ${path}`;
    throw new ApiError(response.status, code, message);
  }
  return body as T;
}

export interface CreateSessionRequest {
  scenario: ScenarioRef | string;
  config?: SearchConfig;
  seed?: number;
}

export class ApiClient {
  constructor(readonly base: string) {}

  listScenarios(): Promise<Catalogue> {
    return request(this.base, "/scenarios");
  }

  createSession(payload: CreateSessionRequest): Promise<SessionView> {
    return request(this.base, "/sessions", {
      method: "POST",
      body: JSON.stringify(payload),
    });
  }

  getSession(id: string): Promise<SessionView> {
    return request(this.base, `/sessions/${id}`);
  }

  getRecommendation(id: string): Promise<Recommendation> {
    return request(this.base, `/sessions/${id}/recommendation`);
  }

  getTree(id: string): Promise<TreePayload> {
    return request(this.base, `/sessions/${id}/tree`);
  }

  submitResult(
    id: string,
    activity: string | null,
    result?: boolean,
    override?: boolean,
  ): Promise<SessionView> {
    const payload: Record<string, unknown> = { activity };
    if (activity !== null) payload.result = result;
    if (override) payload.override = true;
    return request(this.base, `/sessions/${id}/results`, {
      method: "POST",
      body: JSON.stringify(payload),
    });
  }
}
