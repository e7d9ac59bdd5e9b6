/** Server-push subscriber: SSE over a streaming fetch, with reconnect.
 *
 * Implemented on fetch + ReadableStream rather than EventSource so the
 * same code runs in the browser and under the node test runner. Data
 * events are deduplicated by (uav, timestamp) so a reconnect never doubles
 * trail points.
 */
import type { LiveEvent } from "./types.js";

export type LiveStatus = "connecting" | "connected" | "down";

/** Incremental SSE frame parser; returns completed `data:` payloads. */
export function parseSseChunk(buffer: string): { events: string[]; rest: string } {
  const events: string[] = [];
  const frames = buffer.split("\n\n");
  const rest = frames.pop() ?? "";
  for (const frame of frames) {
    const dataLines = frame
      .split("\n")
      .filter((l) => l.startsWith("data: "))
      .map((l) => l.slice(6));
    if (dataLines.length > 0) events.push(dataLines.join("\n"));
  }
  return { events, rest };
}

export class LiveClient {
  private stopped = false;
  private seenData = new Set<string>();
  private backoffMs = 200;

  onEvent: (event: LiveEvent) => void = () => {};
  onStatus: (status: LiveStatus) => void = () => {};

  constructor(readonly base: string = "") {}

  start(): void {
    this.stopped = false;
    void this.loop();
  }

  stop(): void {
    this.stopped = true;
  }

  private async loop(): Promise<void> {
    while (!this.stopped) {
      this.onStatus("connecting");
      try {
        const resp = await fetch(`${this.base}/api/live`);
        if (!resp.ok || !resp.body) throw new Error(`HTTP ${resp.status}`);
        this.onStatus("connected");
        this.backoffMs = 200;
        const reader = resp.body.getReader();
        const decoder = new TextDecoder();
        let buffer = "";
        for (;;) {
          const { done, value } = await reader.read();
          if (done || this.stopped) break;
          buffer += decoder.decode(value, { stream: true });
          const { events, rest } = parseSseChunk(buffer);
          buffer = rest;
          for (const payload of events) this.dispatch(payload);
        }
        reader.cancel().catch(() => undefined);
      } catch {
        // fall through to retry
      }
      if (this.stopped) return;
      this.onStatus("down");
      await new Promise((res) => setTimeout(res, this.backoffMs));
      this.backoffMs = Math.min(this.backoffMs * 2, 5000);
    }
  }

  private dispatch(payload: string): void {
    let event: LiveEvent;
    try {
      event = JSON.parse(payload) as LiveEvent;
    } catch {
      return;
    }
    if (event.type === "data") {
      const key = `${event.uav_id}|${event.timestamp}`;
      if (this.seenData.has(key)) return;
      this.seenData.add(key);
      if (this.seenData.size > 20000) {
        // keep the dedupe window bounded
        const drop = this.seenData.values().next().value as string;
        this.seenData.delete(drop);
      }
    }
    this.onEvent(event);
  }
}
