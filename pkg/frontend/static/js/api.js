export class ApiClient {
    constructor(base = "") {
        this.base = base;
    }
    async getJson(path) {
        const r = await fetch(this.base + path);
        if (!r.ok)
            throw new Error(`${path}: HTTP ${r.status}`);
        return (await r.json());
    }
    query(filter) {
        const q = new URLSearchParams();
        if (filter.from)
            q.set("from", filter.from);
        if (filter.to)
            q.set("to", filter.to);
        if (filter.bbox)
            q.set("bbox", filter.bbox);
        if (filter.uav)
            q.set("uav", filter.uav);
        for (const p of filter.params ?? [])
            q.append("param", p);
        const s = q.toString();
        return s ? `?${s}` : "";
    }
    measurements(filter = {}) {
        return this.getJson(`/api/measurements${this.query(filter)}`);
    }
    average(param, window) {
        return this.getJson(`/api/average?param=${param}&window=${window}`);
    }
    alerts() {
        return this.getJson("/api/alerts");
    }
    limits() {
        return this.getJson("/api/limits");
    }
    uavs() {
        return this.getJson("/api/uavs");
    }
    state(uavId) {
        return this.getJson(`/api/uav/${encodeURIComponent(uavId)}/state`);
    }
    grid(param, bbox, cols = 16, rows = 16) {
        return this.getJson(`/api/grid?param=${param}&bbox=${bbox}&cols=${cols}&rows=${rows}`);
    }
    exportUrl(filter = {}) {
        return `${this.base}/api/export.csv${this.query(filter)}`;
    }
    async sendCommand(uavId, body) {
        const r = await fetch(`${this.base}/api/uav/${encodeURIComponent(uavId)}/command`, {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify(body),
        });
        return (await r.json());
    }
    async postMission(doc) {
        const r = await fetch(`${this.base}/api/missions`, {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify(doc),
        });
        return (await r.json());
    }
}
