// Retrain control. One job at a time: the button disables the moment a
// request leaves, stays disabled while the service reports training,
// and re-enables only when the poll comes back idle or failed.

import { ApiError } from "./api.js";
import type { ApiClient } from "./api.js";
import type { StatusPayload } from "./types.js";

export type RetrainPhase = "idle" | "requesting" | "training" | "failed";

type RetrainApi = Pick<ApiClient, "retrain" | "getStatus">;

const defaultSleep = (ms: number) =>
  new Promise<void>((resolve) => setTimeout(resolve, ms));

export class RetrainControl {
  phase: RetrainPhase = "idle";
  lastStatus: StatusPayload | null = null;

  constructor(
    private api: RetrainApi,
    private workspaceId: string,
    private onChange: (control: RetrainControl) => void = () => {},
    private delayMs = 500,
    private sleep: (ms: number) => Promise<void> = defaultSleep,
  ) {}

  busy(): boolean {
    return this.phase === "requesting" || this.phase === "training";
  }

  /** Adopt a freshly polled status, e.g. on page load. */
  adopt(status: StatusPayload): void {
    this.lastStatus = status;
    if (status.state === "training") this.setPhase("training");
    else if (status.state === "failed") this.setPhase("failed");
    else this.setPhase("idle");
  }

  private setPhase(phase: RetrainPhase): void {
    this.phase = phase;
    this.onChange(this);
  }

  /** Kick off a retrain and follow it to completion. Re-entry while a
   * job is pending is a no-op, so a double click sends one request. */
  async start(): Promise<void> {
    if (this.busy()) return;
    this.setPhase("requesting");
    try {
      await this.api.retrain(this.workspaceId);
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        // someone else already started one; watch that job instead
      } else {
        this.lastStatus = null;
        this.setPhase("failed");
        throw err;
      }
    }
    this.setPhase("training");
    await this.follow();
  }

  private async follow(): Promise<void> {
    for (;;) {
      const status = await this.api.getStatus(this.workspaceId);
      this.lastStatus = status;
      if (status.state !== "training") {
        this.setPhase(status.state === "failed" ? "failed" : "idle");
        return;
      }
      this.setPhase("training");
      await this.sleep(this.delayMs);
    }
  }
}
