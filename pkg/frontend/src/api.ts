/** Thin typed client over the ground-station REST API. */
import type {
  AlertRecord, CommandResult, Measurement, MissionDoc, UavState, WhoLimit,
} from "./types.js";

export interface MeasurementFilter {
  from?: string;
  to?: string;
  bbox?: string;
  params?: string[];
  uav?: string;
}

export class ApiClient {
  constructor(readonly base: string = "") {}

  private async getJson<T>(path: string): Promise<T> {
    const r = await fetch(this.base + path);
    if (!r.ok) throw new Error(`${path}: HTTP ${r.status}`);
    return (await r.json()) as T;
  }

  private query(filter: MeasurementFilter): string {
    const q = new URLSearchParams();
    if (filter.from) q.set("from", filter.from);
    if (filter.to) q.set("to", filter.to);
    if (filter.bbox) q.set("bbox", filter.bbox);
    if (filter.uav) q.set("uav", filter.uav);
    for (const p of filter.params ?? []) q.append("param", p);
    const s = q.toString();
    return s ? `?${s}` : "";
  }

  measurements(filter: MeasurementFilter = {}): Promise<{ measurements: Measurement[] }> {
    return this.getJson(`/api/measurements${this.query(filter)}`);
  }

  average(param: string, window: string): Promise<{ value: number | null }> {
    return this.getJson(`/api/average?param=${param}&window=${window}`);
  }

  alerts(): Promise<{ alerts: AlertRecord[] }> {
    return this.getJson("/api/alerts");
  }

  limits(): Promise<{ limits: WhoLimit[]; dust_conversion: number }> {
    return this.getJson("/api/limits");
  }

  uavs(): Promise<{ uavs: string[] }> {
    return this.getJson("/api/uavs");
  }

  state(uavId: string): Promise<UavState> {
    return this.getJson(`/api/uav/${encodeURIComponent(uavId)}/state`);
  }

  grid(param: string, bbox: string, cols = 16, rows = 16):
      Promise<{ cells: (number | null)[][] }> {
    return this.getJson(
      `/api/grid?param=${param}&bbox=${bbox}&cols=${cols}&rows=${rows}`);
  }

  exportUrl(filter: MeasurementFilter = {}): string {
    return `${this.base}/api/export.csv${this.query(filter)}`;
  }

  async sendCommand(uavId: string, body: {
    kind: string; mode?: string; mission?: MissionDoc; seq?: number; timeout?: number;
  }): Promise<CommandResult> {
    const r = await fetch(
      `${this.base}/api/uav/${encodeURIComponent(uavId)}/command`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(body),
      });
    return (await r.json()) as CommandResult;
  }

  async postMission(doc: MissionDoc): Promise<{
    status: string; id?: number; violations: { code: string; message: string }[];
  }> {
    const r = await fetch(`${this.base}/api/missions`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(doc),
    });
    return (await r.json()) as {
      status: string; id?: number; violations: { code: string; message: string }[];
    };
  }
}
