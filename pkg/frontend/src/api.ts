/**
 * Thin typed client over the agent service HTTP API.  All methods either
 * resolve with the parsed payload or reject with ApiError; network-level
 * failures get code "network_failure" and status 0 so callers can branch
 * the same way for both.
 */

import type {
  ErrorEnvelope,
  HealthPayload,
  MessageReply,
  SessionPayload,
} from "./types.js";

export class ApiError extends Error {
  readonly code: string;
  readonly stage: string | null;
  /** HTTP status, or 0 when the request never reached the server. */
  readonly status: number;

  constructor(code: string, message: string, stage: string | null, status: number) {
    super(message);
    this.name = "ApiError";
    this.code = code;
    this.stage = stage;
    this.status = status;
  }

  get isNetwork(): boolean {
    return this.status === 0;
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  private readonly base: string;
  private readonly fetchFn: FetchLike;

  constructor(baseUrl: string, fetchFn?: FetchLike) {
    this.base = baseUrl.replace(/\/+$/, "");
    // default to the ambient fetch, bound so jsdom/window contexts work
    this.fetchFn = fetchFn ?? ((input, init) => fetch(input, init));
  }

  async createSession(): Promise<{ session_id: string }> {
    return this.request("POST", "/sessions");
  }

  async postMessage(sessionId: string, text: string): Promise<MessageReply> {
    return this.request("POST", `/sessions/${encodeURIComponent(sessionId)}/messages`, {
      text,
    });
  }

  async getSession(sessionId: string): Promise<SessionPayload> {
    return this.request("GET", `/sessions/${encodeURIComponent(sessionId)}`);
  }

  async health(): Promise<HealthPayload> {
    return this.request("GET", "/health");
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    let resp: Response;
    try {
      resp = await this.fetchFn(this.base + path, {
        method,
        headers: body === undefined ? undefined : { "content-type": "application/json" },
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (err) {
      const msg = err instanceof Error ? err.message : String(err);
      throw new ApiError("network_failure", msg, null, 0);
    }
    if (!resp.ok) {
      throw new ApiError(...(await readEnvelope(resp)), resp.status);
    }
    return (await resp.json()) as T;
  }
}

async function readEnvelope(resp: Response): Promise<[string, string, string | null]> {
  // non-envelope bodies (proxy errors, HTML) still become a usable ApiError
  try {
    const data = (await resp.json()) as Partial<ErrorEnvelope>;
    if (typeof data.code === "string" && typeof data.message === "string") {
      return [data.code, data.message, data.stage ?? null];
    }
  } catch {
    // fall through
  }
  return ["http_error", `server returned ${resp.status}`, null];
}
