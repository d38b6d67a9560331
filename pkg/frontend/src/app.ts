/**
 * Chat application shell: owns the UI session state, talks to the agent
 * service through ApiClient, and re-renders the transcript from state on
 * every change.
 *
 * State rules, enforced here and nowhere else:
 *  - `turns` mirrors the server's order exactly.  It is only ever
 *    replaced by a full history fetch or extended by the pair of records
 *    a successful post confirms; any index disagreement triggers a
 *    refetch instead of local repair.
 *  - `pending` is true only between send and reply, and while it is true
 *    the composer is disabled (single in-flight message).
 *  - the optimistic echo and the error bubble live outside `turns`, so
 *    unconfirmed text can never contaminate the mirror.
 */

import { ApiClient, ApiError } from "./api.js";
import type {
  BackendHealth,
  SessionPayload,
  TurnRecord,
  UiSessionState,
} from "./types.js";
import {
  renderBanner,
  renderErrorBubble,
  renderPendingEcho,
  renderTurn,
} from "./view.js";

const SESSION_KEY = "mindvlog.session";
const CACHE_PREFIX = "mindvlog.cache.";

export type StorageLike = Pick<Storage, "getItem" | "setItem" | "removeItem">;

export interface ChatAppOptions {
  api: ApiClient;
  /** Defaults to window.localStorage; inject for tests. */
  storage?: StorageLike;
  now?: () => number;
}

export interface ChatApp {
  readonly root: HTMLElement;
  /** Snapshot of the current session state. */
  readonly state: UiSessionState;
  /** Resolves once health + session restore have settled. */
  readonly ready: Promise<void>;
  send(text: string): Promise<void>;
  toggleAnalysis(index: number): void;
  /** Re-pull health and history from the server. */
  refresh(): Promise<void>;
}

interface FailedSend {
  code: string;
  message: string;
  text: string;
}

export function mountChatApp(root: HTMLElement, options: ChatAppOptions): ChatApp {
  const doc = root.ownerDocument;
  const api = options.api;
  const storage = options.storage ?? defaultStorage();
  const now = options.now ?? (() => Date.now() / 1000);

  let sessionId: string | null = null;
  let turns: TurnRecord[] = [];
  let pending = false;
  let backendHealth: BackendHealth = "ok";
  let readOnly = false;
  let pendingEcho: string | null = null;
  let lastError: FailedSend | null = null;
  const openAnalysis = new Set<number>();

  // --- skeleton ---------------------------------------------------------

  root.classList.add("mindvlog-chat");

  const header = doc.createElement("header");
  const title = doc.createElement("h1");
  title.textContent = "mindvlog";
  const healthEl = doc.createElement("span");
  healthEl.className = "health ok";
  healthEl.textContent = "ok";
  header.append(title, healthEl);

  const bannerSlot = doc.createElement("div");
  bannerSlot.className = "banner-slot";

  const turnsEl = doc.createElement("ol");
  turnsEl.className = "turns";

  const form = doc.createElement("form");
  form.className = "composer";
  const input = doc.createElement("textarea");
  input.name = "message";
  input.rows = 2;
  input.placeholder = "What is on your mind?";
  const sendBtn = doc.createElement("button");
  sendBtn.type = "submit";
  sendBtn.className = "send";
  sendBtn.textContent = "Send";
  form.append(input, sendBtn);

  root.append(header, bannerSlot, turnsEl, form);

  form.addEventListener("submit", (ev) => {
    ev.preventDefault();
    void send(input.value);
  });
  input.addEventListener("input", () => syncComposer());

  // --- rendering --------------------------------------------------------

  function syncComposer() {
    input.disabled = readOnly;
    sendBtn.disabled = pending || readOnly || input.value.trim() === "";
  }

  function render() {
    healthEl.className = `health ${backendHealth}`;
    healthEl.textContent = backendHealth;

    bannerSlot.textContent = "";
    if (backendHealth === "offline") {
      bannerSlot.append(
        renderBanner(doc, "Server unreachable. Showing the last saved conversation, read-only."),
      );
    } else if (backendHealth === "degraded") {
      bannerSlot.append(
        renderBanner(doc, "The language backend is not available; replies may fail."),
      );
    }

    turnsEl.textContent = "";
    for (const record of turns) {
      turnsEl.append(
        renderTurn(doc, record, openAnalysis.has(record.index), {
          onToggleAnalysis: toggleAnalysis,
        }),
      );
    }
    if (pendingEcho !== null) {
      turnsEl.append(renderPendingEcho(doc, pendingEcho));
    }
    if (lastError !== null) {
      turnsEl.append(renderErrorBubble(doc, lastError.code, lastError.message, retry));
    }
    turnsEl.scrollTop = turnsEl.scrollHeight;
    syncComposer();
  }

  // --- state transitions --------------------------------------------------

  function cacheSession() {
    if (sessionId === null) return;
    const payload: SessionPayload = { session_id: sessionId, created_at: 0, turns };
    try {
      storage.setItem(CACHE_PREFIX + sessionId, JSON.stringify(payload));
    } catch {
      // cache is best-effort; a full quota must not break the chat
    }
  }

  function readCache(sid: string): SessionPayload | null {
    const raw = storage.getItem(CACHE_PREFIX + sid);
    if (raw === null) return null;
    try {
      return JSON.parse(raw) as SessionPayload;
    } catch {
      return null;
    }
  }

  async function checkHealth(): Promise<BackendHealth> {
    try {
      const h = await api.health();
      const llm = h.backends.llm;
      const usable = llm !== null && llm !== "UnavailableClient";
      return h.status === "ok" && usable ? "ok" : "degraded";
    } catch {
      return "offline";
    }
  }

  async function startSession() {
    const created = await api.createSession();
    sessionId = created.session_id;
    turns = [];
    openAnalysis.clear();
    storage.setItem(SESSION_KEY, sessionId);
  }

  /** Restore the stored session, falling back to a fresh one or, with the
   *  server unreachable, to a cached read-only view. */
  async function restore() {
    const stored = storage.getItem(SESSION_KEY);
    try {
      if (stored !== null) {
        try {
          const session = await api.getSession(stored);
          sessionId = session.session_id;
          turns = session.turns;
          cacheSession();
          return;
        } catch (err) {
          if (err instanceof ApiError && !err.isNetwork) {
            // unknown or evicted session: fall through to a fresh one
            storage.removeItem(SESSION_KEY);
            storage.removeItem(CACHE_PREFIX + stored);
          } else {
            throw err;
          }
        }
      }
      await startSession();
    } catch (err) {
      if (err instanceof ApiError && err.isNetwork) {
        backendHealth = "offline";
        readOnly = true;
        const cached = stored === null ? null : readCache(stored);
        if (cached !== null) {
          sessionId = cached.session_id;
          turns = cached.turns;
        }
        return;
      }
      throw err;
    }
  }

  async function send(text: string): Promise<void> {
    const trimmed = text.trim();
    if (trimmed === "" || pending || readOnly || sessionId === null) return;

    pending = true;
    pendingEcho = text;
    lastError = null;
    render();

    try {
      const reply = await api.postMessage(sessionId, text);
      const userIndex = reply.turn_index - 1;
      if (userIndex === turns.length) {
        turns = [
          ...turns,
          { kind: "turn", index: userIndex, role: "user", text, ts: now() },
          {
            kind: "turn",
            index: reply.turn_index,
            role: "agent",
            text: reply.response.full_text,
            ts: now(),
            assessment: reply.assessment,
            response: reply.response,
            screening: reply.screening,
            safety: reply.safety,
          },
        ];
      } else {
        // another client advanced the session; the server order wins
        const session = await api.getSession(sessionId);
        turns = session.turns;
      }
      pendingEcho = null;
      input.value = "";
      cacheSession();
    } catch (err) {
      if (!(err instanceof ApiError)) throw err;
      lastError = { code: err.code, message: err.message, text };
      if (err.isNetwork) backendHealth = "offline";
    } finally {
      pending = false;
      render();
    }
  }

  function retry() {
    if (lastError === null) return;
    const text = lastError.text;
    lastError = null;
    pendingEcho = null;
    if (backendHealth === "offline") backendHealth = "ok"; // optimistic; send re-flags
    void send(text);
  }

  function toggleAnalysis(index: number) {
    if (openAnalysis.has(index)) {
      openAnalysis.delete(index);
    } else {
      openAnalysis.add(index);
    }
    render();
  }

  async function refresh() {
    backendHealth = await checkHealth();
    if (sessionId !== null && backendHealth !== "offline") {
      const session = await api.getSession(sessionId);
      turns = session.turns;
      readOnly = false;
      cacheSession();
    }
    render();
  }

  const ready = (async () => {
    backendHealth = await checkHealth();
    if (backendHealth === "offline") {
      readOnly = true;
      const stored = storage.getItem(SESSION_KEY);
      const cached = stored === null ? null : readCache(stored);
      if (cached !== null) {
        sessionId = cached.session_id;
        turns = cached.turns;
      }
    } else {
      await restore();
    }
    render();
  })();

  return {
    root,
    get state(): UiSessionState {
      return { sessionId, turns: [...turns], pending, backendHealth };
    },
    ready,
    send,
    toggleAnalysis,
    refresh,
  };
}

function defaultStorage(): StorageLike {
  try {
    return globalThis.localStorage;
  } catch {
    // non-browser context without injected storage: volatile fallback
    const map = new Map<string, string>();
    return {
      getItem: (k) => map.get(k) ?? null,
      setItem: (k, v) => void map.set(k, v),
      removeItem: (k) => void map.delete(k),
    };
  }
}
