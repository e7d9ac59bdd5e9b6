export function drawSeries(canvas, buckets, label, mode = "date") {
    const ctx = canvas.getContext("2d");
    if (!ctx)
        return;
    const { width: w, height: h } = canvas;
    ctx.clearRect(0, 0, w, h);
    ctx.fillStyle = "#10151c";
    ctx.fillRect(0, 0, w, h);
    ctx.fillStyle = "#c8cdd4";
    ctx.font = "11px sans-serif";
    ctx.fillText(label, 8, 14);
    if (buckets.length === 0) {
        ctx.fillText("no data for this selection", w / 2 - 60, h / 2);
        return;
    }
    const pad = { l: 46, r: 10, t: 22, b: 22 };
    const xs = buckets.map((b) => b.key);
    const ys = buckets.map((b) => b.mean);
    const x0 = Math.min(...xs);
    const x1 = Math.max(...xs);
    const yMin = Math.min(...ys);
    const yMax = Math.max(...ys);
    const ySpan = yMax - yMin || 1;
    const px = (x) => pad.l + ((x - x0) / (x1 - x0 || 1)) * (w - pad.l - pad.r);
    const py = (y) => h - pad.b - ((y - yMin) / ySpan) * (h - pad.t - pad.b);
    ctx.strokeStyle = "#2a3240";
    ctx.beginPath();
    ctx.moveTo(pad.l, pad.t);
    ctx.lineTo(pad.l, h - pad.b);
    ctx.lineTo(w - pad.r, h - pad.b);
    ctx.stroke();
    ctx.fillText(yMax.toPrecision(4), 4, py(yMax) + 4);
    ctx.fillText(yMin.toPrecision(4), 4, py(yMin) + 4);
    const fmt = (key) => mode === "date"
        ? new Date(key).toISOString().slice(5, 16).replace("T", " ")
        : new Date(key).toISOString().slice(11, 16);
    ctx.fillText(fmt(x0), pad.l, h - 6);
    ctx.fillText(fmt(x1), w - pad.r - 70, h - 6);
    ctx.strokeStyle = "#4ea3ff";
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    buckets.forEach((b, i) => {
        if (i === 0)
            ctx.moveTo(px(b.key), py(b.mean));
        else
            ctx.lineTo(px(b.key), py(b.mean));
    });
    ctx.stroke();
    ctx.fillStyle = "#4ea3ff";
    for (const b of buckets) {
        ctx.beginPath();
        ctx.arc(px(b.key), py(b.mean), 2, 0, 2 * Math.PI);
        ctx.fill();
    }
}
