// Sample-sentence rendering with the scored trigram window and both
// entity spans marked. String-in string-out so tests need no DOM.

import type { SampleSentence } from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

function inSpan(i: number, span: readonly [number, number]): boolean {
  return i >= span[0] && i <= span[1];
}

/** One span per token. The window index marks the trigram's center
 * token; the trigram covers its immediate neighbours, clipped at the
 * sentence edges. Entity spans are inclusive. */
export function renderSentenceHtml(s: SampleSentence): string {
  const n = s.tokens.length;
  const lo = Math.max(0, s.window - 1);
  const hi = Math.min(n - 1, s.window + 1);
  const parts = s.tokens.map((token, i) => {
    const classes: string[] = ["tok"];
    if (i >= lo && i <= hi) classes.push("hit");
    if (inSpan(i, s.e1)) classes.push("e1");
    if (inSpan(i, s.e2)) classes.push("e2");
    return `<span class="${classes.join(" ")}">${escapeHtml(token)}</span>`;
  });
  return `<span class="sentence" data-id="${escapeHtml(s.id)}">${parts.join(" ")}</span>`;
}
