/**
 * Distorted-part highlighting.  The highlight only happens when the
 * reported part is literally a substring of the user's own text; anything
 * fuzzier would risk marking words the user never said, so the fallback
 * is no highlight at all.
 */

export interface HighlightSplit {
  head: string;
  match: string;
  tail: string;
}

/**
 * Split `text` around the first occurrence of `part`, or return null
 * when the substring check fails (empty part included).
 */
export function splitForHighlight(text: string, part: string): HighlightSplit | null {
  if (!part) return null;
  const at = text.indexOf(part);
  if (at < 0) return null;
  return {
    head: text.slice(0, at),
    match: part,
    tail: text.slice(at + part.length),
  };
}

/**
 * Render `text` into `target` with `part` wrapped in a <mark> when the
 * substring check passes, as plain text otherwise.  Uses text nodes
 * throughout, so server strings can never inject markup.
 */
export function renderHighlighted(target: HTMLElement, text: string, part: string): boolean {
  const split = splitForHighlight(text, part);
  if (split === null) {
    target.textContent = text;
    return false;
  }
  target.textContent = "";
  target.append(split.head);
  const mark = target.ownerDocument.createElement("mark");
  mark.textContent = split.match;
  target.append(mark, split.tail);
  return true;
}
