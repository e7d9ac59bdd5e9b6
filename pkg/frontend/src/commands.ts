/** Command sending with confirmation, a single-flight guard and distinct
 * rendering of ack / not-connected / delivery-unknown outcomes. */
import type { ApiClient } from "./api.js";
import type { CommandResult, MissionDoc } from "./types.js";

const DESTRUCTIVE = new Set(["RTB", "SET_MODE"]);

export class CommandSender {
  private inFlight = false;
  private lastUnknownSeq: number | null = null;

  onResult: (result: CommandResult, text: string) => void = () => {};
  confirm: (message: string) => boolean = () => true;

  constructor(private api: ApiClient) {}

  get busy(): boolean {
    return this.inFlight;
  }

  /** Send one command; repeated clicks while in flight are dropped, and a
   * retry after delivery-unknown reuses the seq so the vehicle dedupes. */
  async send(uavId: string, kind: string, mode?: string,
             mission?: MissionDoc): Promise<CommandResult | null> {
    if (this.inFlight) return null;
    if (DESTRUCTIVE.has(kind)) {
      const what = mode ? `${kind} ${mode}` : kind;
      if (!this.confirm(`Send ${what} to ${uavId}?`)) return null;
    }
    this.inFlight = true;
    try {
      const body: { kind: string; mode?: string; mission?: MissionDoc; seq?: number } =
        { kind, mode, mission };
      if (this.lastUnknownSeq !== null) body.seq = this.lastUnknownSeq;
      const result = await this.api.sendCommand(uavId, body);
      this.lastUnknownSeq =
        result.status === "delivery-unknown" ? result.seq ?? null : null;
      this.onResult(result, renderResult(result));
      return result;
    } catch (err) {
      const result: CommandResult = { status: "request-failed", detail: String(err) };
      this.onResult(result, renderResult(result));
      return result;
    } finally {
      this.inFlight = false;
    }
  }
}

export function renderResult(r: CommandResult): string {
  switch (r.status) {
    case "ack":
      return r.ack === "ok"
        ? `acknowledged (seq ${r.seq}): ${r.detail ?? "ok"}`
        : `vehicle refused (seq ${r.seq}): ${r.detail ?? "error"}`;
    case "not-connected":
      return `UAV not connected (${r.uav_id ?? "?"})`;
    case "delivery-unknown":
      return `delivery unknown (seq ${r.seq}); retry will reuse this seq`;
    default:
      return `${r.status}: ${r.detail ?? ""}`;
  }
}
