export class VideoPanel {
    constructor(canvas, readout) {
        this.canvas = canvas;
        this.readout = readout;
        this.frameCount = 0;
    }
    onVideoEvent(event) {
        if (event.type !== "video")
            return;
        this.frameCount += 1;
        const ctx = this.canvas.getContext("2d");
        if (ctx) {
            const { width: w, height: h } = this.canvas;
            // placeholder imagery: a moving test bar keyed to the frame id
            ctx.fillStyle = "#0a0e13";
            ctx.fillRect(0, 0, w, h);
            const x = ((event.frame_id ?? 0) * 13) % w;
            const grad = ctx.createLinearGradient(x, 0, x + 60, h);
            grad.addColorStop(0, "#33485e");
            grad.addColorStop(1, "#182330");
            ctx.fillStyle = grad;
            ctx.fillRect(x, 0, 60, h);
            ctx.fillStyle = "#d5dae1";
            ctx.font = "12px monospace";
            ctx.fillText(`frame ${event.frame_id}`, 10, 18);
            ctx.fillText(`src ${event.source_ts ?? "?"}`, 10, h - 10);
        }
        const latency = event.latency_s;
        this.readout.textContent = latency === undefined || latency === null
            ? "video latency: n/a"
            : `video latency: ${latency.toFixed(2)} s (${this.frameCount} frames)`;
    }
}
