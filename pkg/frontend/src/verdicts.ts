// View-side verdict state. Toggles are pure pending edits layered over
// the server's stored verdicts; only the difference is ever submitted,
// and cancel drops the pending layer without touching the server copy.

import type { Decision, Verdict } from "./types.js";
import type { VerdictChange } from "./api.js";

export function verdictKey(relation: string, trigram: readonly string[]): string {
  return `${relation}\t${trigram.join(" ")}`;
}

export class VerdictSheet {
  private server = new Map<string, Decision>();
  private pending = new Map<string, { relation: string; trigram: string[]; decision: Decision }>();

  /** Replace the server layer with freshly fetched verdicts and drop
   * every pending edit. */
  loadServer(verdicts: readonly Verdict[]): void {
    this.server = new Map(
      verdicts.map((v) => [verdictKey(v.relation, v.trigram), v.decision]),
    );
    this.pending.clear();
  }

  /** The decision the server holds, with keep as the default for
   * trigrams it has no record of. */
  serverDecision(relation: string, trigram: readonly string[]): Decision {
    return this.server.get(verdictKey(relation, trigram)) ?? "keep";
  }

  /** The decision the view should show: pending edit if any, server
   * state otherwise. */
  decisionFor(relation: string, trigram: readonly string[]): Decision {
    return (
      this.pending.get(verdictKey(relation, trigram))?.decision ??
      this.serverDecision(relation, trigram)
    );
  }

  set(relation: string, trigram: readonly string[], decision: Decision): void {
    const key = verdictKey(relation, trigram);
    if (decision === this.serverDecision(relation, trigram)) {
      this.pending.delete(key);
    } else {
      this.pending.set(key, { relation, trigram: [...trigram], decision });
    }
  }

  toggle(relation: string, trigram: readonly string[]): Decision {
    const next: Decision = this.decisionFor(relation, trigram) === "ban" ? "keep" : "ban";
    this.set(relation, trigram, next);
    return next;
  }

  isDirty(): boolean {
    return this.pending.size > 0;
  }

  /** Edits that differ from the server, in insertion order: exactly the
   * batch a submit should carry. */
  changes(): VerdictChange[] {
    return [...this.pending.values()].map((p) => ({
      relation: p.relation,
      trigram: [...p.trigram],
      decision: p.decision,
    }));
  }

  /** Cancel: back to the server state exactly. */
  reset(): void {
    this.pending.clear();
  }
}

export interface VerdictSubmitter {
  postVerdicts(workspaceId: string, round: number,
               verdicts: VerdictChange[]): Promise<unknown>;
}

/** Submit the pending edits, or do nothing at all when there are none.
 * Returns the number of verdicts sent. */
export async function submitSheet(api: VerdictSubmitter, workspaceId: string,
                                  round: number, sheet: VerdictSheet): Promise<number> {
  const changes = sheet.changes();
  if (changes.length === 0) return 0;
  await api.postVerdicts(workspaceId, round, changes);
  return changes.length;
}
