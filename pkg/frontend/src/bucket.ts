/** Time-series bucketing for the charts: by date (absolute time buckets)
 * or by time of day (aggregating the same clock slot across days). */

export interface SeriesPoint {
  t: number; // epoch ms
  value: number;
}

export interface Bucket {
  key: number; // bucket start (epoch ms) or ms-of-day for time mode
  mean: number;
  count: number;
}

export type BucketMode = "date" | "time";

const DAY_MS = 86_400_000;

export function bucketSeries(
  points: SeriesPoint[], bucketMs: number, mode: BucketMode = "date",
): Bucket[] {
  if (bucketMs <= 0) throw new Error("bucketMs must be positive");
  const sums = new Map<number, { sum: number; count: number }>();
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
