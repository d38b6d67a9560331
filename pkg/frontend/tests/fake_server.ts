/**
 * In-memory stand-in for the agent service, speaking the same five
 * routes with the same payload shapes and the same error envelope.
 * Fixture text matches what the real service produces for the same
 * inputs so the tests exercise realistic payloads, not idealized ones.
 */

import type {
  AssessmentPayload,
  ErrorEnvelope,
  ResponsePayload,
  SessionPayload,
  TurnRecord,
} from "../src/types.js";
import type { FetchLike } from "../src/api.js";

export const RESOURCES_TEXT =
  "Thank you for trusting me with this. What you are describing sounds serious, " +
  "and you deserve immediate support from a person, not a chat tool.\n" +
  "If you are in danger right now, please contact your local emergency number, " +
  "or call or text 988 to reach the Suicide and Crisis Lifeline.";

type Plan = { status: number; body: ErrorEnvelope } | "network" | null;

export class FakeServer {
  readonly sessions = new Map<string, SessionPayload>();
  /** Log of "METHOD path" strings, oldest first. */
  readonly requests: string[] = [];
  /** Consumed by the next POST .../messages; "network" rejects the fetch. */
  failNextMessage: Plan = null;
  /** When true every request rejects as if the host were down. */
  offline = false;
  llmName: string | null = "HeuristicLLMClient";
  /** Overrides merged into the next generated assessment. */
  nextAssessmentOverride: Partial<AssessmentPayload> | null = null;
  private counter = 0;
  private gate: Promise<void> | null = null;

  /** Make the next message request hang until the returned release runs. */
  holdMessages(): () => void {
    let release!: () => void;
    this.gate = new Promise((resolve) => {
      release = resolve;
    });
    return release;
  }

  seed(payload: SessionPayload): void {
    this.sessions.set(payload.session_id, payload);
  }

  readonly fetch: FetchLike = async (input, init) => {
    const method = init?.method ?? "GET";
    const path = new URL(input).pathname;
    this.requests.push(`${method} ${path}`);
    if (this.offline) {
      throw new TypeError("fetch failed");
    }

    if (method === "POST" && path === "/sessions") {
      const sid = `fake${String(this.counter++).padStart(12, "0")}`;
      this.sessions.set(sid, { session_id: sid, created_at: 1787000000, turns: [] });
      return json(200, { session_id: sid });
    }

    const msgMatch = path.match(/^\/sessions\/([^/]+)\/messages$/);
    if (method === "POST" && msgMatch) {
      if (this.gate !== null) {
        const gate = this.gate;
        this.gate = null;
        await gate;
      }
      const plan = this.failNextMessage;
      if (plan !== null) {
        this.failNextMessage = null;
        if (plan === "network") throw new TypeError("fetch failed");
        return json(plan.status, plan.body);
      }
      const session = this.sessions.get(msgMatch[1]!);
      if (session === undefined) return unknownSession(msgMatch[1]!);
      const { text } = JSON.parse(String(init?.body)) as { text: string };
      if (text.trim() === "") {
        return json(400, {
          code: "empty_utterance",
          message: "message text is empty",
          stage: null,
        });
      }
      const base = session.turns.length;
      const agent = this.agentTurn(text, base + 1);
      session.turns.push(
        { kind: "turn", index: base, role: "user", text, ts: 1787000001 },
        agent,
      );
      return json(200, {
        turn_index: agent.index,
        assessment: agent.assessment,
        response: agent.response,
        screening: agent.screening,
        safety: agent.safety,
      });
    }

    const sessMatch = path.match(/^\/sessions\/([^/]+)$/);
    if (method === "GET" && sessMatch) {
      const session = this.sessions.get(sessMatch[1]!);
      if (session === undefined) return unknownSession(sessMatch[1]!);
      return json(200, session);
    }

    if (method === "GET" && path === "/health") {
      return json(200, {
        status: "ok",
        backends: {
          llm: this.llmName,
          retriever: true,
          checkpoint: false,
          features_root: false,
        },
      });
    }

    return json(404, { code: "not_found", message: `no route ${path}`, stage: null });
  };

  private agentTurn(text: string, index: number): TurnRecord {
    if (/kill\s+myself|self[- ]?harm/i.test(text)) {
      const response: ResponsePayload = {
        reflective_inquiry: "",
        challenging_thoughts: "",
        cognitive_restructuring: "",
        full_text: RESOURCES_TEXT,
        grounded_on: [],
        safety: true,
      };
      return {
        kind: "turn",
        index,
        role: "agent",
        text: RESOURCES_TEXT,
        ts: 1787000002,
        assessment: null,
        response,
        screening: null,
        safety: true,
      };
    }

    const absolute = text.match(/\b(always|never)\b[^.!?]*/i);
    const distorted = absolute !== null;
    let assessment: AssessmentPayload = {
      utterance: text,
      activation_event: text,
      belief: text,
      belief_kind: distorted ? "irrational" : "rational",
      consequence: distorted ? "emotional distress and withdrawal" : "a proportionate reaction",
      distorted_part: distorted ? absolute[0]! : "",
      reasoning: distorted
        ? `The wording '${absolute[1]!.toLowerCase()}' marks an exaggerated, rigid pattern.`
        : "The statement stays specific and allows exceptions.",
      verdict: distorted ? "yes" : "no",
      distortion: distorted ? "overgeneralization" : null,
      variant: "FCOT_ABCDR",
      warnings: [],
    };
    if (this.nextAssessmentOverride !== null) {
      assessment = { ...assessment, ...this.nextAssessmentOverride };
      this.nextAssessmentOverride = null;
    }

    const sections: [string, string, string] = distorted
      ? [
          `It sounds heavy to carry the thought that ${text}. Thank you for putting it into words.`,
          "When you look at the full picture, what evidence supports that thought, and what evidence does not fit it?",
          "Try restating the thought in more precise terms, allowing for exceptions, and notice how the feeling shifts when the wording softens.",
        ]
      : [
          "Thank you for sharing that; it sounds like you are reading the situation fairly.",
          "What feels most manageable about it right now?",
          "Noticing what already works can make the next step clearer.",
        ];
    const full_text =
      `1. Reflective Inquiry: ${sections[0]}\n` +
      `2. Challenging Thoughts: ${sections[1]}\n` +
      `3. Cognitive Restructuring: ${sections[2]}`;
    const response: ResponsePayload = {
      reflective_inquiry: sections[0],
      challenging_thoughts: sections[1],
      cognitive_restructuring: sections[2],
      full_text,
      grounded_on: distorted ? ["reframing#0000", "evidence#0000"] : [],
      safety: false,
    };
    return {
      kind: "turn",
      index,
      role: "agent",
      text: full_text,
      ts: 1787000002,
      assessment,
      response,
      screening: null,
      safety: false,
    };
  }
}

function json(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

function unknownSession(sid: string): Response {
  return json(404, {
    code: "unknown_session",
    message: `unknown session: ${sid}`,
    stage: null,
  });
}

/**
 * A canned four-turn transcript in exactly the server's history shape,
 * for tests that render straight from GET /sessions/{id}.
 */
export function fixtureTranscript(sid: string): SessionPayload {
  const server = new FakeServer();
  server.seed({ session_id: sid, created_at: 1787000000, turns: [] });
  const payload = server.sessions.get(sid)!;
  const post = (text: string) => {
    const base = payload.turns.length;
    const agent = (server as unknown as {
      agentTurn(text: string, index: number): TurnRecord;
    }).agentTurn(text, base + 1);
    payload.turns.push(
      { kind: "turn", index: base, role: "user", text, ts: 1787000001 },
      agent,
    );
  };
  post("I always ruin everything");
  post("my friend liked the dinner I cooked");
  return payload;
}
