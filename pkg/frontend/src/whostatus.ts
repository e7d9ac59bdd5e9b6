/** Marker status against the configured ambient limits.
 *
 * A reading is "exceeded" the moment it crosses the tightest limit
 * configured for its parameter (any window); equal to the limit is still
 * ok, matching the server-side check.
 */
import type { WhoLimit } from "./types.js";

export type WhoStatus = "ok" | "exceeded" | "unmonitored";

export const STATUS_COLORS: Record<WhoStatus, string> = {
  ok: "#2e9e44",
  exceeded: "#d1342f",
  unmonitored: "#8a8f98",
};

export function tightestLimit(
  parameter: string, limits: WhoLimit[], dustConversion = 1.0,
): number | null {
  let best: number | null = null;
  for (const lim of limits) {
    if (lim.parameter !== parameter) continue;
    // dust limits are in ug/m3; readings arrive on the sensor scale
    const effective = parameter === "dust"
      ? lim.limit_value / (dustConversion || 1.0)
      : lim.limit_value;
    if (best === null || effective < best) best = effective;
  }
  return best;
}

export function whoStatus(
  parameter: string, value: number, limits: WhoLimit[], dustConversion = 1.0,
): WhoStatus {
  const limit = tightestLimit(parameter, limits, dustConversion);
  if (limit === null) return "unmonitored";
  return value > limit ? "exceeded" : "ok";
}
