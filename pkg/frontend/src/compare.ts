// Round comparison: per-class F1 deltas and the trigram diff between
// two rounds. Pure data shaping; rendering lives in render.ts.

import type { MetricsReport, TrigramRow } from "./types.js";

export interface DeltaRow {
  label: string;
  before: number | null;
  after: number | null;
  delta: string;
  direction: "up" | "down" | "flat" | "gap";
}

/** F1 as printed points: 0.2472 renders as "24.72". */
export function points(x: number): string {
  return (x * 100).toFixed(2);
}

/** Signed delta in points, from the raw fractions: 0.2472 to 0.3117 is
 * "+6.45". Zero after rounding renders as "0.00" with no sign. */
export function formatDelta(before: number, after: number): string {
  const pts = (after - before) * 100;
  const text = Math.abs(pts).toFixed(2);
  if (text === "0.00") return "0.00";
  return (pts < 0 ? "-" : "+") + text;
}

function deltaDirection(delta: string): "up" | "down" | "flat" {
  if (delta.startsWith("+")) return "up";
  if (delta.startsWith("-")) return "down";
  return "flat";
}

function classRow(label: string, before: MetricsReport | null,
                  after: MetricsReport | null): DeltaRow {
  const b = before?.per_class[label]?.f1 ?? null;
  const a = after?.per_class[label]?.f1 ?? null;
  if (b === null || a === null) {
    return { label, before: b, after: a, delta: "", direction: "gap" };
  }
  const delta = formatDelta(b, a);
  return { label, before: b, after: a, delta, direction: deltaDirection(delta) };
}

/** One row per class label across both reports. Labels from the newer
 * report keep their order; labels only the older report knows are
 * appended. A label missing on either side is a gap, not a zero. */
export function f1Deltas(before: MetricsReport | null,
                         after: MetricsReport): DeltaRow[] {
  const labels: string[] = [];
  for (const label of Object.keys(after.per_class)) labels.push(label);
  if (before) {
    for (const label of Object.keys(before.per_class)) {
      if (!labels.includes(label)) labels.push(label);
    }
  }
  return labels.map((label) => classRow(label, before, after));
}

export function macroRow(before: MetricsReport | null,
                         after: MetricsReport): DeltaRow {
  const b = before?.macro_f1 ?? null;
  const a = after.macro_f1;
  if (b === null) {
    return { label: "macro", before: b, after: a, delta: "", direction: "gap" };
  }
  const delta = formatDelta(b, a);
  return { label: "macro", before: b, after: a, delta, direction: deltaDirection(delta) };
}

export interface TrigramDiff {
  relation: string;
  added: string[][];
  removed: string[][];
}

/** Which top trigrams appeared and disappeared per relation between two
 * rounds' attribution listings. */
export function trigramDiff(beforeRows: readonly TrigramRow[],
                            afterRows: readonly TrigramRow[]): TrigramDiff[] {
  const byRelation = (rows: readonly TrigramRow[]) => {
    const map = new Map<string, Set<string>>();
    for (const row of rows) {
      let set = map.get(row.relation);
      if (!set) {
        set = new Set();
        map.set(row.relation, set);
      }
      set.add(row.trigram.join(" "));
    }
    return map;
  };
  const beforeMap = byRelation(beforeRows);
  const afterMap = byRelation(afterRows);
  const relations: string[] = [];
  for (const rel of afterMap.keys()) relations.push(rel);
  for (const rel of beforeMap.keys()) {
    if (!relations.includes(rel)) relations.push(rel);
  }
  return relations.map((relation) => {
    const beforeSet = beforeMap.get(relation) ?? new Set<string>();
    const afterSet = afterMap.get(relation) ?? new Set<string>();
    const added: string[][] = [];
    const removed: string[][] = [];
    for (const t of afterSet) {
      if (!beforeSet.has(t)) added.push(t.split(" "));
    }
    for (const t of beforeSet) {
      if (!afterSet.has(t)) removed.push(t.split(" "));
    }
    return { relation, added, removed };
  });
}
