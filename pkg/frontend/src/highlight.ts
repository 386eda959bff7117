/**
 * Token-overlap highlighting for retrieved passages. The server reports
 * matches as (draft token index, passage token index) pairs; this maps
 * passage token indices back to character ranges for rendering.
 */

export interface TokenSpan {
  text: string;
  start: number;
  end: number;
}

export interface Segment {
  text: string;
  highlighted: boolean;
}

// Mirrors the service tokenizer: lowercase alphanumeric runs, underscore excluded.
const TOKEN_RE = /[\p{L}\p{N}]+/gu;

export function tokenSpans(text: string): TokenSpan[] {
  const spans: TokenSpan[] = [];
  for (const match of text.matchAll(TOKEN_RE)) {
    spans.push({
      text: match[0].toLowerCase(),
      start: match.index ?? 0,
      end: (match.index ?? 0) + match[0].length,
    });
  }
  return spans;
}

/** Split `text` into plain / highlighted segments for the given token indices. */
export function highlightSegments(text: string, tokenIndices: Set<number>): Segment[] {
  const spans = tokenSpans(text);
  const segments: Segment[] = [];
  let cursor = 0;
  spans.forEach((span, index) => {
    if (!tokenIndices.has(index)) {
      return;
    }
    if (span.start > cursor) {
      segments.push({ text: text.slice(cursor, span.start), highlighted: false });
    }
    segments.push({ text: text.slice(span.start, span.end), highlighted: true });
    cursor = span.end;
  });
  if (cursor < text.length) {
    segments.push({ text: text.slice(cursor), highlighted: false });
  }
  return segments.filter((segment) => segment.text.length > 0);
}

/** Passage-side token indices from the server's (draft, passage) match pairs. */
export function passageTokenIndices(highlights: [number, number][]): Set<number> {
  return new Set(highlights.map(([, passageIndex]) => passageIndex));
}

/** Render segments into a container, wrapping matches in <mark>. */
export function renderHighlighted(container: HTMLElement, text: string, highlights: [number, number][]): void {
  container.textContent = "";
  for (const segment of highlightSegments(text, passageTokenIndices(highlights))) {
    if (segment.highlighted) {
      const mark = document.createElement("mark");
      mark.textContent = segment.text;
      container.appendChild(mark);
    } else {
      container.appendChild(document.createTextNode(segment.text));
    }
  }
}
