/** Console wiring: live view, map, charts, commands, mission editor. */
import { ApiClient } from "./api.js";
import { bucketSeries, type BucketMode, type SeriesPoint } from "./bucket.js";
import { CanvasMap } from "./map.js";
import { CommandSender } from "./commands.js";
import { drawSeries } from "./charts.js";
import { LiveClient } from "./live.js";
import { MissionEditor } from "./mission-editor.js";
import { VideoPanel } from "./video.js";
import type { LiveEvent, MissionDoc, UavState } from "./types.js";

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

const DEFAULT_MISSION: MissionDoc = {
  home: { lat: 25.68, lon: 51.22, alt: 0.0 },
  waypoints: [
    { lat: 25.6835494, lon: 51.2214334, alt: 120.0 },
    { lat: 25.6816293, lon: 51.2267472, alt: 120.0 },
    { lat: 25.6749376, lon: 51.2232431, alt: 120.0 },
    { lat: 25.6772253, lon: 51.2163308, alt: 120.0 },
  ],
  cruise_speed: 20.0,
  cruise_alt: 120.0,
};

class ConsoleApp {
  api = new ApiClient("");
  live = new LiveClient("");
  map = new CanvasMap($("map") as HTMLCanvasElement);
  video = new VideoPanel($("video") as HTMLCanvasElement, $("video-readout"));
  sender = new CommandSender(this.api);
  editor = new MissionEditor(this.api);
  uavId = "";
  chartParam = "temp";
  chartMode: BucketMode = "date";
  bucketMs = 10_000;
  series = new Map<string, SeriesPoint[]>();

  start(): void {
    this.sender.confirm = (msg) => window.confirm(msg);
    this.sender.onResult = (_r, text) => {
      $("command-result").textContent = text;
    };
    this.wireButtons();
    this.wireEditor();
    this.wireCharts();
    this.live.onStatus = (status) => {
      const banner = $("link-banner");
      banner.dataset.state = status;
      banner.textContent = status === "connected"
        ? "link up"
        : status === "connecting" ? "connecting..." : "connection lost, retrying";
    };
    this.live.onEvent = (event) => this.onLive(event);
    this.live.start();
    void this.bootstrap();
  }

  private async bootstrap(): Promise<void> {
    try {
      const { limits, dust_conversion } = await this.api.limits();
      this.map.limits = limits;
      this.map.dustConversion = dust_conversion;
    } catch { /* offline start; live loop will banner it */ }
    try {
      const { uavs } = await this.api.uavs();
      if (uavs.length > 0) this.selectUav(uavs[0]);
      const select = $("uav-select") as HTMLSelectElement;
      select.innerHTML = "";
      for (const id of uavs) {
        const opt = document.createElement("option");
        opt.value = opt.textContent = id;
        select.appendChild(opt);
      }
      select.onchange = () => this.selectUav(select.value);
    } catch { /* same */ }
    ($("mission-text") as HTMLTextAreaElement).value =
      JSON.stringify(DEFAULT_MISSION, null, 2);
    this.editor.check(($("mission-text") as HTMLTextAreaElement).value);
    await this.refreshHistory();
  }

  private selectUav(id: string): void {
    this.uavId = id;
    $("uav-name").textContent = id || "(none)";
  }

  private wireButtons(): void {
    const bind = (id: string, kind: string, mode?: string) => {
      $(id).onclick = () => {
        if (!this.uavId) return;
        const text = ($("mission-text") as HTMLTextAreaElement).value;
        const mission = kind === "UPLOAD_MISSION"
          ? (JSON.parse(text) as MissionDoc)
          : undefined;
        void this.sender.send(this.uavId, kind, mode, mission);
      };
    };
    bind("btn-start-data", "START_DATA");
    bind("btn-stop-data", "STOP_DATA");
    bind("btn-start-video", "START_VIDEO");
    bind("btn-stop-video", "STOP_VIDEO");
    bind("btn-manual", "SET_MODE", "MANUAL");
    bind("btn-takeoff", "SET_MODE", "AUTO_TAKEOFF");
    bind("btn-mission", "SET_MODE", "AUTO_MISSION");
    bind("btn-rtb", "RTB");
    bind("btn-upload", "UPLOAD_MISSION");
    $("btn-export").onclick = () => {
      window.open(this.api.exportUrl({ uav: this.uavId || undefined }), "_blank");
    };
  }

  private wireEditor(): void {
    const text = $("mission-text") as HTMLTextAreaElement;
    const out = $("mission-violations");
    this.editor.onValidity = (violations, parseError) => {
      if (parseError) {
        out.textContent = parseError;
        out.dataset.state = "bad";
        return;
      }
      if (violations.length === 0) {
        out.textContent = "plan looks valid";
        out.dataset.state = "ok";
      } else {
        out.textContent = this.editor.describe(violations).join("\n");
        out.dataset.state = "bad";
      }
    };
    this.editor.onSubmitResult = (message, ok) => {
      out.textContent = message;
      out.dataset.state = ok ? "ok" : "bad";
    };
    this.editor.onAccepted = (doc) => this.map.setMission(doc);
    text.oninput = () => this.editor.check(text.value);
    $("btn-validate").onclick = () => void this.editor.submit(text.value);
  }

  private wireCharts(): void {
    const paramSel = $("chart-param") as HTMLSelectElement;
    const modeSel = $("chart-mode") as HTMLSelectElement;
    const bucketSel = $("chart-bucket") as HTMLSelectElement;
    const update = () => {
      this.chartParam = paramSel.value;
      this.chartMode = modeSel.value as BucketMode;
      this.bucketMs = Number(bucketSel.value);
      this.redrawChart();
    };
    paramSel.onchange = modeSel.onchange = bucketSel.onchange = update;
    $("btn-grid").onclick = () => void this.loadGrid();
  }

  private async refreshHistory(): Promise<void> {
    try {
      const { measurements } = await this.api.measurements({});
      for (const m of measurements) {
        const arr = this.series.get(m.parameter) ?? [];
        arr.push({ t: Date.parse(m.timestamp), value: m.value });
        this.series.set(m.parameter, arr);
      }
      this.map.setMarkers(measurements
        .filter((m) => m.parameter === this.chartParam)
        .map((m) => ({ lat: m.lat, lon: m.lon, parameter: m.parameter, value: m.value })));
      this.redrawChart();
    } catch { /* server not up yet */ }
  }

  private async loadGrid(): Promise<void> {
    const pts = this.series.get(this.chartParam);
    if (!pts || pts.length === 0) return;
    const b = { minLat: 25.66, minLon: 51.20, maxLat: 25.70, maxLon: 51.24 };
    try {
      const { cells } = await this.api.grid(
        this.chartParam, `${b.minLat},${b.minLon},${b.maxLat},${b.maxLon}`, 20, 20);
      this.map.setGrid(cells, b);
    } catch { /* keep previous overlay */ }
  }

  private redrawChart(): void {
    const pts = this.series.get(this.chartParam) ?? [];
    const buckets = bucketSeries(pts, this.bucketMs, this.chartMode);
    drawSeries($("chart") as HTMLCanvasElement, buckets,
               `${this.chartParam} (${this.chartMode} buckets)`, this.chartMode);
  }

  private onLive(event: LiveEvent): void {
    if (event.type === "state" && event.state) {
      this.renderState(event.state);
      return;
    }
    if (event.type === "video") {
      this.video.onVideoEvent(event);
      return;
    }
    if (event.type === "alert" && event.alert) {
      const el = document.createElement("div");
      const a = event.alert;
      el.textContent =
        `${a.timestamp} ${a.parameter} ${a.window}: ` +
        `${a.averaged_value.toFixed(3)} > ${a.limit_value}`;
      $("alerts").prepend(el);
      return;
    }
    if (event.type === "data" && event.frame) {
      if (event.lat !== undefined && event.lon !== undefined) {
        this.map.addTrailPoint({ lat: event.lat, lon: event.lon });
      }
      const t = Date.parse(event.timestamp ?? event.pushed_at);
      for (const [param, value] of Object.entries(event.frame)) {
        const arr = this.series.get(param) ?? [];
        arr.push({ t, value });
        this.series.set(param, arr);
      }
      const frame = event.frame;
      $("latest-frame").textContent =
        `hum ${frame.humidity}  temp ${frame.temp}  dust ${frame.dust}  ` +
        `o3 ${frame.o3}  co2 ${frame.co2}  co ${frame.co}  ` +
        `lpg ${frame.lpg}  smoke ${frame.smoke}` +
        (event.valid === false ? "  [warm-up]" : "");
      this.redrawChart();
    }
  }

  private renderState(s: UavState): void {
    $("state-mode").textContent = s.mode ?? "?";
    $("state-battery").textContent =
      s.battery_mah === null ? "?" : `${s.battery_mah.toFixed(0)} mAh`;
    $("state-alt").textContent = s.alt === null ? "?" : `${s.alt.toFixed(1)} m`;
    $("state-speed").textContent =
      s.airspeed === null ? "?" : `${s.airspeed.toFixed(1)} m/s`;
    $("state-warmup").textContent =
      s.warmup_s === null || s.warmup_s <= 0 ? "ready" : `warm-up ${s.warmup_s.toFixed(0)} s`;
    $("state-link").textContent = s.link_ok ? "link ok" : "LINK LOST";
  }
}

new ConsoleApp().start();
