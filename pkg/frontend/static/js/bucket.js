/** Time-series bucketing for the charts: by date (absolute time buckets)
 * or by time of day (aggregating the same clock slot across days). */
const DAY_MS = 86400000;
export function bucketSeries(points, bucketMs, mode = "date") {
    if (bucketMs <= 0)
        throw new Error("bucketMs must be positive");
    const sums = new Map();
    for (const p of points) {
        const base = mode === "date" ? p.t : ((p.t % DAY_MS) + DAY_MS) % DAY_MS;
        const key = Math.floor(base / bucketMs) * bucketMs;
        const cell = sums.get(key) ?? { sum: 0, count: 0 };
        cell.sum += p.value;
        cell.count += 1;
        sums.set(key, cell);
    }
    return [...sums.entries()]
        .map(([key, { sum, count }]) => ({ key, mean: sum / count, count }))
        .sort((a, b) => a.key - b.key);
}
