/** Offline canvas map: track trail, waypoints, colored readings, heat grid.
 *
 * Plain lat/lon projection fitted to the data bounds; no tile service or
 * API key needed, which keeps the console fully local.
 */
import { STATUS_COLORS, whoStatus } from "./whostatus.js";
import type { MissionDoc, WhoLimit } from "./types.js";

export interface TrailPoint {
  lat: number;
  lon: number;
  parameter?: string;
  value?: number;
}

interface Bounds {
  minLat: number;
  maxLat: number;
  minLon: number;
  maxLon: number;
}

export class CanvasMap {
  private trail: TrailPoint[] = [];
  private markers: TrailPoint[] = [];
  private mission: MissionDoc | null = null;
  private grid: (number | null)[][] | null = null;
  private gridBounds: Bounds | null = null;
  limits: WhoLimit[] = [];
  dustConversion = 1.0;

  constructor(private canvas: HTMLCanvasElement) {}

  setMission(mission: MissionDoc | null): void {
    this.mission = mission;
    this.render();
  }

  addTrailPoint(p: TrailPoint): void {
    this.trail.push(p);
    if (this.trail.length > 5000) this.trail.shift();
    this.render();
  }

  setMarkers(markers: TrailPoint[]): void {
    this.markers = markers;
    this.render();
  }

  setGrid(cells: (number | null)[][] | null, bounds: Bounds | null): void {
    this.grid = cells;
    this.gridBounds = bounds;
    this.render();
  }

  reset(): void {
    this.trail = [];
    this.markers = [];
    this.render();
  }

  private bounds(): Bounds {
    const lats: number[] = [];
    const lons: number[] = [];
    for (const p of this.trail) { lats.push(p.lat); lons.push(p.lon); }
    for (const p of this.markers) { lats.push(p.lat); lons.push(p.lon); }
    if (this.mission) {
      lats.push(this.mission.home.lat);
      lons.push(this.mission.home.lon);
      for (const w of this.mission.waypoints) { lats.push(w.lat); lons.push(w.lon); }
    }
    if (lats.length === 0) return { minLat: -1, maxLat: 1, minLon: -1, maxLon: 1 };
    const pad = 3e-4;
    return {
      minLat: Math.min(...lats) - pad, maxLat: Math.max(...lats) + pad,
      minLon: Math.min(...lons) - pad, maxLon: Math.max(...lons) + pad,
    };
  }

  private project(b: Bounds, lat: number, lon: number): [number, number] {
    const w = this.canvas.width;
    const h = this.canvas.height;
    const x = ((lon - b.minLon) / (b.maxLon - b.minLon || 1e-9)) * w;
    const y = h - ((lat - b.minLat) / (b.maxLat - b.minLat || 1e-9)) * h;
    return [x, y];
  }

  render(): void {
    const ctx = this.canvas.getContext("2d");
    if (!ctx) return;
    const { width, height } = this.canvas;
    ctx.clearRect(0, 0, width, height);
    ctx.fillStyle = "#10151c";
    ctx.fillRect(0, 0, width, height);
    const b = this.bounds();

    if (this.grid && this.gridBounds) {
      const gb = this.gridBounds;
      const rows = this.grid.length;
      const cols = rows > 0 ? this.grid[0].length : 0;
      const values = this.grid.flat().filter((v): v is number => v !== null);
      const max = values.length ? Math.max(...values) : 1;
      for (let r = 0; r < rows; r++) {
        for (let c = 0; c < cols; c++) {
          const v = this.grid[r][c];
          if (v === null) continue;
          const lat0 = gb.minLat + ((gb.maxLat - gb.minLat) * r) / rows;
          const lat1 = gb.minLat + ((gb.maxLat - gb.minLat) * (r + 1)) / rows;
          const lon0 = gb.minLon + ((gb.maxLon - gb.minLon) * c) / cols;
          const lon1 = gb.minLon + ((gb.maxLon - gb.minLon) * (c + 1)) / cols;
          const [x0, y0] = this.project(b, lat1, lon0);
          const [x1, y1] = this.project(b, lat0, lon1);
          ctx.fillStyle = `rgba(220, 120, 40, ${0.08 + 0.5 * (v / (max || 1))})`;
          ctx.fillRect(x0, y0, x1 - x0, y1 - y0);
        }
      }
    }

    if (this.trail.length > 1) {
      ctx.strokeStyle = "#4ea3ff";
      ctx.lineWidth = 1.5;
      ctx.beginPath();
      this.trail.forEach((p, i) => {
        const [x, y] = this.project(b, p.lat, p.lon);
        if (i === 0) ctx.moveTo(x, y);
        else ctx.lineTo(x, y);
      });
      ctx.stroke();
    }

    for (const m of this.markers) {
      const [x, y] = this.project(b, m.lat, m.lon);
      const status = m.parameter !== undefined && m.value !== undefined
        ? whoStatus(m.parameter, m.value, this.limits, this.dustConversion)
        : "unmonitored";
      ctx.fillStyle = STATUS_COLORS[status];
      ctx.beginPath();
      ctx.arc(x, y, 3.2, 0, 2 * Math.PI);
      ctx.fill();
    }

    if (this.mission) {
      ctx.strokeStyle = "#f5d04c";
      ctx.fillStyle = "#f5d04c";
      this.mission.waypoints.forEach((w, i) => {
        const [x, y] = this.project(b, w.lat, w.lon);
        ctx.beginPath();
        ctx.arc(x, y, 6, 0, 2 * Math.PI);
        ctx.stroke();
        ctx.font = "10px sans-serif";
        ctx.fillText(String(i + 1), x + 8, y - 8);
      });
      const [hx, hy] = this.project(b, this.mission.home.lat, this.mission.home.lon);
      ctx.strokeStyle = "#8df0a0";
      ctx.strokeRect(hx - 5, hy - 5, 10, 10);
    }

    const head = this.trail[this.trail.length - 1];
    if (head) {
      const [x, y] = this.project(b, head.lat, head.lon);
      ctx.fillStyle = "#ffffff";
      ctx.beginPath();
      ctx.arc(x, y, 4.5, 0, 2 * Math.PI);
      ctx.fill();
    }
  }
}
