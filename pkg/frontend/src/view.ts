/**
 * DOM builders for the chat transcript.  Everything here is a pure
 * function of the payloads: no state, no fetches.  All user- and
 * server-provided strings go through textContent, never innerHTML.
 */

import { renderHighlighted } from "./highlight.js";
import type { AssessmentPayload, ResponsePayload, TurnRecord } from "./types.js";

/** Labels for the three reply sections, in reply order. */
export const SECTION_LABELS: ReadonlyArray<
  readonly [keyof ResponsePayload & string, string]
> = [
  ["reflective_inquiry", "Reflective Inquiry"],
  ["challenging_thoughts", "Challenging Thoughts"],
  ["cognitive_restructuring", "Cognitive Restructuring"],
];

export interface TurnHandlers {
  /** Called with the turn index when the analysis toggle is clicked. */
  onToggleAnalysis: (index: number) => void;
}

export function renderTurn(
  doc: Document,
  record: TurnRecord,
  analysisOpen: boolean,
  handlers: TurnHandlers,
): HTMLLIElement {
  const li = doc.createElement("li");
  li.className = `turn ${record.role}`;
  li.dataset["index"] = String(record.index);

  if (record.role === "user") {
    const bubble = doc.createElement("div");
    bubble.className = "bubble";
    bubble.textContent = record.text;
    li.append(bubble);
    return li;
  }

  if (record.safety) {
    // safety-rail replies show the resources text verbatim, styled apart
    const bubble = doc.createElement("div");
    bubble.className = "bubble safety";
    bubble.textContent = record.text;
    li.append(bubble);
    return li;
  }

  const bubble = doc.createElement("div");
  bubble.className = "bubble agent-reply";
  const response = record.response;
  if (response) {
    SECTION_LABELS.forEach(([field, label], i) => {
      const text = response[field];
      if (typeof text !== "string" || !text) return;
      const section = doc.createElement("p");
      section.className = `section ${field}`;
      const tag = doc.createElement("strong");
      tag.textContent = `${i + 1}. ${label}: `;
      section.append(tag, text);
      bubble.append(section);
    });
  } else {
    bubble.textContent = record.text;
  }
  li.append(bubble);

  if (record.screening) {
    const line = doc.createElement("div");
    line.className = "screening";
    const p = record.screening.probability;
    line.textContent = `screening: ${record.screening.decision} (p=${p.toFixed(2)})`;
    li.append(line);
  }

  if (record.assessment) {
    const toggle = doc.createElement("button");
    toggle.type = "button";
    toggle.className = "analysis-toggle";
    toggle.textContent = analysisOpen ? "Hide analysis" : "Show analysis";
    toggle.setAttribute("aria-expanded", String(analysisOpen));
    toggle.addEventListener("click", () => handlers.onToggleAnalysis(record.index));
    li.append(toggle);
    if (analysisOpen) {
      li.append(
        renderAssessmentCard(doc, record.assessment, record.response?.grounded_on ?? []),
      );
    }
  }

  return li;
}

/**
 * The expanded A/B/C/D card.  Only non-empty fields get a row; the
 * distorted part is additionally shown highlighted inside the user's own
 * utterance when it survives the substring check.
 */
export function renderAssessmentCard(
  doc: Document,
  a: AssessmentPayload,
  groundedOn: readonly string[],
): HTMLElement {
  const card = doc.createElement("div");
  card.className = "assessment-card";

  const header = doc.createElement("div");
  header.className = "card-header";
  const verdict = doc.createElement("span");
  verdict.className = `verdict verdict-${a.verdict}`;
  verdict.textContent = a.verdict === "yes" ? "distortion detected" : "no distortion";
  header.append(verdict);
  if (a.distortion) {
    const label = doc.createElement("span");
    label.className = "distortion-label";
    label.textContent = a.distortion;
    header.append(label);
  }
  card.append(header);

  const dl = doc.createElement("dl");
  const row = (cls: string, term: string, fill: (dd: HTMLElement) => void) => {
    const dt = doc.createElement("dt");
    dt.textContent = term;
    const dd = doc.createElement("dd");
    dd.className = cls;
    fill(dd);
    dl.append(dt, dd);
  };

  if (a.activation_event) {
    row("activation-event", "A. Activation event", (dd) => {
      dd.textContent = a.activation_event;
    });
  }
  if (a.belief) {
    row("belief", "B. Belief", (dd) => {
      dd.textContent = a.belief;
      if (a.belief_kind) {
        const badge = doc.createElement("span");
        badge.className = "kind-badge";
        badge.textContent = a.belief_kind;
        dd.append(" ", badge);
      }
    });
  }
  if (a.consequence) {
    row("consequence", "C. Consequence", (dd) => {
      dd.textContent = a.consequence;
    });
  }
  if (a.distorted_part) {
    row("distorted-part", "D. Distorted part", (dd) => {
      // highlighted within the utterance; plain utterance on a failed check
      renderHighlighted(dd, a.utterance, a.distorted_part);
    });
  }
  if (a.reasoning) {
    row("reasoning", "Reasoning", (dd) => {
      dd.textContent = a.reasoning;
    });
  }
  card.append(dl);

  if (groundedOn.length > 0) {
    const evidence = doc.createElement("div");
    evidence.className = "evidence";
    const caption = doc.createElement("div");
    caption.textContent = "Grounded on:";
    const ul = doc.createElement("ul");
    for (const chunkId of groundedOn) {
      const item = doc.createElement("li");
      item.className = "chunk";
      item.textContent = chunkId;
      ul.append(item);
    }
    evidence.append(caption, ul);
    card.append(evidence);
  }

  return card;
}

/** Optimistic echo of a message the server has not confirmed yet. */
export function renderPendingEcho(doc: Document, text: string): HTMLLIElement {
  const li = doc.createElement("li");
  li.className = "turn user pending";
  const bubble = doc.createElement("div");
  bubble.className = "bubble";
  bubble.textContent = text;
  li.append(bubble);
  return li;
}

export function renderErrorBubble(
  doc: Document,
  code: string,
  message: string,
  onRetry: () => void,
): HTMLLIElement {
  const li = doc.createElement("li");
  li.className = "turn error";
  const bubble = doc.createElement("div");
  bubble.className = "bubble error-bubble";
  const codeEl = doc.createElement("code");
  codeEl.textContent = code;
  bubble.append(codeEl, ` ${message} `);
  const retry = doc.createElement("button");
  retry.type = "button";
  retry.className = "retry";
  retry.textContent = "Retry";
  retry.addEventListener("click", onRetry);
  bubble.append(retry);
  li.append(bubble);
  return li;
}

export function renderBanner(doc: Document, text: string): HTMLElement {
  const banner = doc.createElement("div");
  banner.className = "banner";
  banner.textContent = text;
  return banner;
}
