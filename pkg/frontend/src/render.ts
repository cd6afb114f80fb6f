// HTML renderers for every view. All of them are pure string builders
// so the view layer stays testable without a browser; main.ts owns the
// DOM wiring and event delegation.

import type {
  Decision,
  RoundRecord,
  SampleSentence,
  StatusPayload,
  TrigramRow,
  WorkspaceSummary,
} from "./types.js";
import type { DeltaRow, TrigramDiff } from "./compare.js";
import { points } from "./compare.js";
import { escapeHtml, renderSentenceHtml } from "./highlight.js";

export interface TrigramCard {
  row: TrigramRow;
  samples: SampleSentence[];
  decision: Decision;
}

function attr(text: string): string {
  return escapeHtml(text);
}

/** One card per trigram: the phrase, its attribution value and count,
 * up to five sample sentences with the trigram highlighted, and the
 * keep/ban toggle. The toggle carries the identifying data attributes
 * the event delegation in main.ts reads back. */
export function renderTrigramCard(card: TrigramCard): string {
  const { row, samples, decision } = card;
  const phrase = row.trigram.join(" ");
  const sampleHtml = samples.length
    ? samples.map((s) => `<li>${renderSentenceHtml(s)}</li>`).join("")
    : "<li class=\"empty\">no stored samples</li>";
  const toggleLabel = decision === "ban" ? "banned" : "keep";
  return `<article class="card decision-${decision}" data-relation="${attr(row.relation)}" data-trigram="${attr(phrase)}">
  <header>
    <span class="phrase">${escapeHtml(phrase)}</span>
    <span class="value">${row.value.toFixed(4)}</span>
    <span class="count">${row.count} match${row.count === 1 ? "" : "es"}</span>
    <button type="button" class="toggle decision-${decision}" data-relation="${attr(row.relation)}" data-trigram="${attr(phrase)}">${toggleLabel}</button>
  </header>
  <ul class="samples">${sampleHtml}</ul>
</article>`;
}

export function renderCardList(cards: readonly TrigramCard[]): string {
  if (cards.length === 0) {
    return "<p class=\"empty\">No trigrams recorded for this relation.</p>";
  }
  return cards.map(renderTrigramCard).join("\n");
}

export function renderRelationSelector(relations: readonly string[],
                                       active: string | null): string {
  const options = relations
    .map((r) => {
      const selected = r === active ? " selected" : "";
      return `<option value="${attr(r)}"${selected}>${escapeHtml(r)}</option>`;
    })
    .join("");
  return `<select id="relation-select">${options}</select>`;
}

function deltaCell(row: DeltaRow): string {
  if (row.direction === "gap") {
    return "<td class=\"delta delta-gap\">&mdash;</td>";
  }
  return `<td class="delta delta-${row.direction}">${row.delta}</td>`;
}

function pointsCell(value: number | null): string {
  if (value === null) return "<td class=\"gap\">&mdash;</td>";
  return `<td>${points(value)}</td>`;
}

/** Per-class F1 table for two rounds, deltas highlighted, plus the
 * trigram turnover per relation. */
export function renderCompare(beforeIndex: number, afterIndex: number,
                              rows: readonly DeltaRow[], macro: DeltaRow,
                              diffs: readonly TrigramDiff[]): string {
  const body = rows
    .map(
      (row) => `<tr>
    <th scope="row">${escapeHtml(row.label)}</th>
    ${pointsCell(row.before)}
    ${pointsCell(row.after)}
    ${deltaCell(row)}
  </tr>`,
    )
    .join("\n");
  const macroHtml = `<tr class="macro">
    <th scope="row">macro</th>
    ${pointsCell(macro.before)}
    ${pointsCell(macro.after)}
    ${deltaCell(macro)}
  </tr>`;
  const diffHtml = diffs
    .filter((d) => d.added.length > 0 || d.removed.length > 0)
    .map((d) => {
      const added = d.added
        .map((t) => `<li class="added">${escapeHtml(t.join(" "))}</li>`)
        .join("");
      const removed = d.removed
        .map((t) => `<li class="removed">${escapeHtml(t.join(" "))}</li>`)
        .join("");
      return `<section class="trigram-diff">
    <h3>${escapeHtml(d.relation)}</h3>
    <ul>${added}${removed}</ul>
  </section>`;
    })
    .join("\n");
  return `<section class="compare">
  <h2>Round ${beforeIndex} vs round ${afterIndex}</h2>
  <table class="metrics">
    <thead>
      <tr><th>class</th><th>round ${beforeIndex}</th><th>round ${afterIndex}</th><th>delta</th></tr>
    </thead>
    <tbody>
${body}
${macroHtml}
    </tbody>
  </table>
  ${diffHtml}
</section>`;
}

export function renderCompareEmpty(beforeIndex: number, afterIndex: number,
                                   missing: number): string {
  return `<section class="compare empty">
  <h2>Round ${beforeIndex} vs round ${afterIndex}</h2>
  <p>Round ${missing} does not exist in this workspace yet.</p>
</section>`;
}

export function renderStatus(status: StatusPayload): string {
  const badge = `<span class="badge state-${attr(status.state)}">${escapeHtml(status.state)}</span>`;
  let detail = "";
  if (status.state === "training" && status.progress) {
    detail = `<span class="progress">epoch ${status.progress.epoch}/${status.progress.total_epochs}</span>`;
  } else if (status.state === "failed" && status.reason) {
    detail = `<span class="reason">${escapeHtml(status.reason)}</span>`;
  }
  return `${badge}${detail ? " " + detail : ""}`;
}

export function renderWorkspaceList(workspaces: readonly WorkspaceSummary[]): string {
  if (workspaces.length === 0) {
    return "<p class=\"empty\">No workspaces found. Create one with the workbench CLI, then reload.</p>";
  }
  const items = workspaces
    .map(
      (w) => `<li>
    <a href="#/w/${attr(w.id)}">${escapeHtml(w.id)}</a>
    <span class="meta">${w.rounds} round${w.rounds === 1 ? "" : "s"}, ${escapeHtml(w.state)}</span>
  </li>`,
    )
    .join("\n");
  return `<ul class="workspaces">${items}</ul>`;
}

export function renderRoundPicker(rounds: readonly RoundRecord[],
                                  workspaceId: string): string {
  if (rounds.length < 2) return "";
  const latest = rounds[rounds.length - 1]!.index;
  const previous = rounds[rounds.length - 2]!.index;
  const options = rounds
    .map((r) => `<option value="${r.index}">round ${r.index}</option>`)
    .join("");
  return `<form class="round-picker" data-workspace="${attr(workspaceId)}">
  <label>compare <select name="before">${options}</select></label>
  <label>to <select name="after">${options}</select></label>
  <button type="submit">show</button>
  <a href="#/w/${attr(workspaceId)}/compare/${previous}/${latest}">latest vs previous</a>
</form>`;
}

export function renderError(message: string): string {
  return `<div class="error" role="alert">
  <span>${escapeHtml(message)}</span>
  <button type="button" id="retry">retry</button>
</div>`;
}
