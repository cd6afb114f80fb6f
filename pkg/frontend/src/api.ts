// Thin typed client over the workbench service. Every mutation the UI
// performs goes through here; nothing else talks to the network.

import type {
  Decision,
  RoundRecord,
  SampleSentence,
  StatusPayload,
  TrigramRow,
  Verdict,
  VerdictsPayload,
  WorkspaceSummary,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export interface VerdictChange {
  relation: string;
  trigram: string[];
  decision: Decision;
  reviewer?: string;
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/** Base URL detection: an injected global wins, then a meta tag, then
 * same-origin relative paths. */
export function resolveApiBase(): string {
  const injected = (globalThis as { REXLOOP_API_BASE?: string }).REXLOOP_API_BASE;
  if (typeof injected === "string") return injected.replace(/\/$/, "");
  if (typeof document !== "undefined") {
    const meta = document.querySelector('meta[name="rexloop-api-base"]');
    const content = meta?.getAttribute("content");
    if (content) return content.replace(/\/$/, "");
  }
  return "";
}

export class ApiClient {
  constructor(
    private readonly base: string = "",
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    let resp: Response;
    try {
      resp = await this.fetchFn(this.base + path, {
        method,
        headers: body === undefined ? {} : { "content-type": "application/json" },
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (err) {
      throw new ApiError(0, "network_error", `cannot reach the service: ${String(err)}`);
    }
    if (!resp.ok) {
      let code = "http_error";
      let message = `${resp.status} ${resp.statusText}`;
      try {
        const payload = (await resp.json()) as { code?: string; message?: string };
        if (payload.code) code = payload.code;
        if (payload.message) message = payload.message;
      } catch {
        // non-JSON error body; keep the status line
      }
      throw new ApiError(resp.status, code, message);
    }
    return (await resp.json()) as T;
  }

  listWorkspaces(): Promise<WorkspaceSummary[]> {
    return this.request("GET", "/workspaces");
  }

  getStatus(workspaceId: string): Promise<StatusPayload> {
    return this.request("GET", `/workspaces/${workspaceId}/status`);
  }

  listRounds(workspaceId: string): Promise<RoundRecord[]> {
    return this.request("GET", `/workspaces/${workspaceId}/rounds`);
  }

  getTrigrams(workspaceId: string, round: number, relation?: string,
              top?: number): Promise<TrigramRow[]> {
    const params = new URLSearchParams();
    if (relation !== undefined) params.set("relation", relation);
    if (top !== undefined) params.set("top", String(top));
    const query = params.toString();
    return this.request(
      "GET",
      `/workspaces/${workspaceId}/rounds/${round}/trigrams${query ? "?" + query : ""}`,
    );
  }

  getSamples(workspaceId: string, round: number, relation: string,
             trigram: string[], limit = 5): Promise<SampleSentence[]> {
    const params = new URLSearchParams({
      relation,
      trigram: trigram.join(" "),
      limit: String(limit),
    });
    return this.request(
      "GET",
      `/workspaces/${workspaceId}/rounds/${round}/samples?${params}`,
    );
  }

  getVerdicts(workspaceId: string, round?: number): Promise<VerdictsPayload> {
    const query = round === undefined ? "" : `?round=${round}`;
    return this.request("GET", `/workspaces/${workspaceId}/verdicts${query}`);
  }

  postVerdicts(workspaceId: string, round: number,
               verdicts: VerdictChange[]): Promise<{ round: number; verdicts: Verdict[] }> {
    return this.request("POST", `/workspaces/${workspaceId}/verdicts`, {
      round,
      verdicts,
    });
  }

  retrain(workspaceId: string): Promise<{ accepted: boolean; round: number }> {
    return this.request("POST", `/workspaces/${workspaceId}/retrain`);
  }
}
