/**
 * Wire types for the agent service, mirrored field-for-field from its
 * JSON payloads, plus the client-side session state built on top of them.
 */

/** Cognitive-distortion analysis attached to an agent turn. */
export interface AssessmentPayload {
  utterance: string;
  activation_event: string;
  belief: string;
  belief_kind: string;
  consequence: string;
  distorted_part: string;
  reasoning: string;
  verdict: "yes" | "no";
  distortion: string | null;
  variant: string;
  warnings: string[];
}

/** Three-part therapeutic reply; sections are empty on the safety path. */
export interface ResponsePayload {
  reflective_inquiry: string;
  challenging_thoughts: string;
  cognitive_restructuring: string;
  full_text: string;
  grounded_on: string[];
  safety: boolean;
}

export interface ScreeningPayload {
  probability: number;
  decision: string;
  modality_availability: Record<string, boolean>;
  model_checkpoint: string | null;
}

/**
 * One turn as stored in a session's history.  User turns carry only the
 * base fields; agent turns add assessment/response/screening/safety.
 */
export interface TurnRecord {
  kind: "turn";
  index: number;
  role: "user" | "agent";
  text: string;
  ts: number;
  assessment?: AssessmentPayload | null;
  response?: ResponsePayload | null;
  screening?: ScreeningPayload | null;
  safety?: boolean;
}

export interface SessionPayload {
  session_id: string;
  created_at: number;
  turns: TurnRecord[];
}

/** Reply of POST /sessions/{id}/messages: the agent turn just appended. */
export interface MessageReply {
  turn_index: number;
  assessment: AssessmentPayload | null;
  response: ResponsePayload;
  screening: ScreeningPayload | null;
  safety: boolean;
}

export interface HealthPayload {
  status: string;
  backends: {
    llm: string | null;
    retriever: boolean;
    checkpoint: boolean;
    features_root: boolean;
  };
}

/** Error envelope every non-2xx response carries. */
export interface ErrorEnvelope {
  code: string;
  message: string;
  stage: string | null;
}

/**
 * offline: server unreachable.  degraded: reachable but chat cannot work
 * (no LLM behind it).  ok: everything needed for a conversation is up.
 */
export type BackendHealth = "ok" | "degraded" | "offline";

/** What the UI knows about the live session. */
export interface UiSessionState {
  sessionId: string | null;
  /** Mirror of the server's turn order; never locally reordered. */
  turns: TurnRecord[];
  /** True only between send and reply. */
  pending: boolean;
  backendHealth: BackendHealth;
}
