// View controller. Hash-routed so every view is reconstructable from
// the service's GET endpoints alone: #/ lists workspaces, #/w/{id} is
// the review flow, #/w/{id}/compare/{k}/{k2} compares two rounds.

import { ApiClient, ApiError, resolveApiBase } from "./api.js";
import { f1Deltas, macroRow, trigramDiff } from "./compare.js";
import {
  renderCardList,
  renderCompare,
  renderCompareEmpty,
  renderError,
  renderRelationSelector,
  renderRoundPicker,
  renderStatus,
  renderWorkspaceList,
  TrigramCard,
} from "./render.js";
import { RetrainControl } from "./retrain.js";
import type { SampleSentence, StatusPayload, TrigramRow } from "./types.js";
import { submitSheet, VerdictSheet } from "./verdicts.js";

export type Route =
  | { kind: "list" }
  | { kind: "review"; workspace: string }
  | { kind: "compare"; workspace: string; before: number; after: number };

export function parseRoute(hash: string): Route {
  const parts = hash.replace(/^#\/?/, "").split("/").filter((p) => p.length > 0);
  if (parts[0] === "w" && parts[1]) {
    const workspace = decodeURIComponent(parts[1]);
    if (parts[2] === "compare" && parts[3] !== undefined && parts[4] !== undefined) {
      const before = Number(parts[3]);
      const after = Number(parts[4]);
      if (Number.isInteger(before) && Number.isInteger(after)) {
        return { kind: "compare", workspace, before, after };
      }
    }
    return { kind: "review", workspace };
  }
  return { kind: "list" };
}

const api = new ApiClient(resolveApiBase());
const sheet = new VerdictSheet();

let currentRoute: Route = { kind: "list" };
let currentHash = "#/";
let restoringHash = false;
let verdictRound: number | null = null;
let reviewRound: number | null = null;
let activeRelation: string | null = null;
let cards: TrigramCard[] = [];
let retrainControl: RetrainControl | null = null;

function appEl(): HTMLElement {
  return document.getElementById("app")!;
}

function statusBarEl(): HTMLElement {
  return document.getElementById("status-bar")!;
}

function showError(err: unknown, retry: () => void): void {
  const message =
    err instanceof ApiError ? `${err.code}: ${err.message}` : String(err);
  appEl().innerHTML = renderError(message);
  document.getElementById("retry")?.addEventListener("click", retry);
}

async function showWorkspaceList(): Promise<void> {
  const workspaces = await api.listWorkspaces();
  statusBarEl().innerHTML = "";
  appEl().innerHTML = `<h2>Workspaces</h2>${renderWorkspaceList(workspaces)}`;
}

async function loadCards(workspace: string, round: number,
                          relation: string): Promise<TrigramCard[]> {
  const rows = await api.getTrigrams(workspace, round, relation, 20);
  const samples = await Promise.all(
    rows.map((row): Promise<SampleSentence[]> =>
      row.samples.length === 0
        ? Promise.resolve([])
        : api.getSamples(workspace, round, row.relation, row.trigram, 5)),
  );
  return rows.map((row: TrigramRow, i) => ({
    row,
    samples: samples[i] ?? [],
    decision: sheet.decisionFor(row.relation, row.trigram),
  }));
}

function refreshCards(): void {
  cards = cards.map((c) => ({
    ...c,
    decision: sheet.decisionFor(c.row.relation, c.row.trigram),
  }));
  const host = document.getElementById("cards");
  if (host) host.innerHTML = renderCardList(cards);
  updateSubmitBar();
}

function updateSubmitBar(): void {
  const submit = document.getElementById("submit") as HTMLButtonElement | null;
  const cancel = document.getElementById("cancel") as HTMLButtonElement | null;
  const note = document.getElementById("dirty-note");
  const dirty = sheet.isDirty();
  if (submit) submit.disabled = !dirty;
  if (cancel) cancel.disabled = !dirty;
  if (note) {
    const n = sheet.changes().length;
    note.textContent = dirty ? `${n} unsaved change${n === 1 ? "" : "s"}` : "";
  }
}

function updateRetrainButton(): void {
  const button = document.getElementById("retrain") as HTMLButtonElement | null;
  const note = document.getElementById("retrain-note");
  if (!button || !retrainControl) return;
  button.disabled = retrainControl.busy();
  if (note && retrainControl.lastStatus) {
    note.innerHTML = renderStatus(retrainControl.lastStatus);
  }
}

async function showReview(workspace: string): Promise<void> {
  const status = await api.getStatus(workspace);
  statusBarEl().innerHTML = renderStatus(status);
  const rounds = await api.listRounds(workspace);
  if (rounds.length === 0) {
    appEl().innerHTML =
      "<p class=\"empty\">This workspace has no trained rounds yet.</p>";
    return;
  }
  reviewRound = rounds[rounds.length - 1]!.index;

  const summaries = await api.listWorkspaces();
  const relations = summaries.find((w) => w.id === workspace)?.relations ?? [];
  if (activeRelation === null || !relations.includes(activeRelation)) {
    activeRelation = relations[0] ?? null;
  }

  const payload = await api.getVerdicts(workspace);
  verdictRound = payload.round;
  sheet.loadServer(payload.verdicts);

  cards = activeRelation === null
    ? []
    : await loadCards(workspace, reviewRound, activeRelation);

  appEl().innerHTML = `<section class="review">
  <header class="controls">
    <label>relation ${renderRelationSelector(relations, activeRelation)}</label>
    <button type="button" id="retrain">retrain</button>
    <span id="retrain-note"></span>
  </header>
  <div id="cards">${renderCardList(cards)}</div>
  <footer class="submit-bar">
    <button type="button" id="submit" disabled>submit verdicts</button>
    <button type="button" id="cancel" disabled>cancel</button>
    <span id="dirty-note"></span>
  </footer>
  ${renderRoundPicker(rounds, workspace)}
</section>`;

  document.getElementById("relation-select")?.addEventListener("change", (ev) => {
    activeRelation = (ev.target as HTMLSelectElement).value;
    void loadCards(workspace, reviewRound!, activeRelation).then((loaded) => {
      cards = loaded;
      refreshCards();
    });
  });

  document.getElementById("submit")?.addEventListener("click", () => {
    void handleSubmit(workspace);
  });
  document.getElementById("cancel")?.addEventListener("click", () => {
    sheet.reset();
    refreshCards();
  });

  retrainControl = new RetrainControl(api, workspace, (control) => {
    updateRetrainButton();
    if (control.lastStatus) statusBarEl().innerHTML = renderStatus(control.lastStatus);
  });
  retrainControl.adopt(status);
  document.getElementById("retrain")?.addEventListener("click", () => {
    void handleRetrain(workspace);
  });
  if (status.state === "training") void followExternalJob(workspace);

  document.querySelector(".round-picker")?.addEventListener("submit", (ev) => {
    ev.preventDefault();
    const form = ev.currentTarget as HTMLFormElement;
    const before = (form.elements.namedItem("before") as HTMLSelectElement).value;
    const after = (form.elements.namedItem("after") as HTMLSelectElement).value;
    location.hash = `#/w/${workspace}/compare/${before}/${after}`;
  });

  updateSubmitBar();
  updateRetrainButton();
}

async function handleSubmit(workspace: string): Promise<void> {
  if (verdictRound === null) return;
  try {
    const sent = await submitSheet(api, workspace, verdictRound, sheet);
    if (sent === 0) return;
    await showReview(workspace);
  } catch (err) {
    if (err instanceof ApiError && err.code === "stale_round") {
      if (confirm("A newer round exists; reload this view? Unsaved verdicts will be kept as edits.")) {
        const pending = sheet.changes();
        await showReview(workspace);
        for (const p of pending) sheet.set(p.relation, p.trigram, p.decision);
        refreshCards();
      }
      return;
    }
    showError(err, () => void handleSubmit(workspace));
  }
}

async function handleRetrain(workspace: string): Promise<void> {
  if (!retrainControl || retrainControl.busy()) return;
  try {
    await retrainControl.start();
  } catch (err) {
    showError(err, () => void showRoute(currentRoute));
    return;
  }
  // a finished job means a new round; rebuild the view from the server
  await showReview(workspace);
}

/** A job someone else started: poll it to completion, then refresh.
 * Stops quietly if the user navigates to another view meanwhile. */
async function followExternalJob(workspace: string): Promise<void> {
  const route = currentRoute;
  for (;;) {
    await new Promise((resolve) => setTimeout(resolve, 1000));
    if (currentRoute !== route) return;
    let status: StatusPayload;
    try {
      status = await api.getStatus(workspace);
    } catch {
      return;
    }
    statusBarEl().innerHTML = renderStatus(status);
    retrainControl?.adopt(status);
    if (status.state !== "training") {
      await showReview(workspace);
      return;
    }
  }
}

async function showCompare(workspace: string, before: number,
                           after: number): Promise<void> {
  const rounds = await api.listRounds(workspace);
  statusBarEl().innerHTML = "";
  const beforeRec = rounds.find((r) => r.index === before);
  const afterRec = rounds.find((r) => r.index === after);
  if (!beforeRec || !afterRec) {
    appEl().innerHTML = renderCompareEmpty(before, after, !beforeRec ? before : after);
    return;
  }
  const [beforeRows, afterRows] = await Promise.all([
    api.getTrigrams(workspace, before),
    api.getTrigrams(workspace, after),
  ]);
  const rows = f1Deltas(beforeRec.metrics, afterRec.metrics);
  const macro = macroRow(beforeRec.metrics, afterRec.metrics);
  const diffs = trigramDiff(beforeRows, afterRows);
  appEl().innerHTML =
    `<p><a href="#/w/${workspace}">back to review</a></p>` +
    renderCompare(before, after, rows, macro, diffs);
}

async function showRoute(route: Route): Promise<void> {
  currentRoute = route;
  try {
    if (route.kind === "list") await showWorkspaceList();
    else if (route.kind === "review") await showReview(route.workspace);
    else await showCompare(route.workspace, route.before, route.after);
  } catch (err) {
    showError(err, () => void showRoute(route));
  }
}

function onHashChange(): void {
  if (restoringHash) {
    restoringHash = false;
    return;
  }
  const next = parseRoute(location.hash);
  const leavingReview = currentRoute.kind === "review" &&
    !(next.kind === "review" && next.workspace === currentRoute.workspace);
  if (leavingReview && sheet.isDirty() &&
      !confirm("Discard unsaved verdicts?")) {
    restoringHash = true;
    location.hash = currentHash;
    return;
  }
  if (leavingReview) sheet.reset();
  currentHash = location.hash;
  void showRoute(next);
}

export function boot(): void {
  currentHash = location.hash || "#/";
  window.addEventListener("hashchange", onHashChange);
  window.addEventListener("beforeunload", (ev) => {
    if (sheet.isDirty()) {
      ev.preventDefault();
      ev.returnValue = "";
    }
  });
  document.getElementById("app")!.addEventListener("click", (ev) => {
    const target = (ev.target as HTMLElement).closest("button.toggle");
    if (!target) return;
    const relation = target.getAttribute("data-relation");
    const trigram = target.getAttribute("data-trigram");
    if (!relation || !trigram) return;
    sheet.toggle(relation, trigram.split(" "));
    refreshCards();
  });
  void showRoute(parseRoute(location.hash));
}

if (typeof document !== "undefined" && typeof window !== "undefined") {
  if (document.readyState === "loading") {
    document.addEventListener("DOMContentLoaded", boot);
  } else {
    boot();
  }
}
