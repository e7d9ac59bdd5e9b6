/** Client-side mission validation, mirroring the server rule for rule.
 *
 * The server stays authoritative on submit; this mirror exists so the
 * editor can flag violations as the operator types. The differential test
 * suite holds the two implementations to identical verdicts, so this
 * validator must never accept a plan the server rejects.
 */
import { distanceM } from "./geo.js";
export const MIN_FIRST_WAYPOINT_M = 100.0;
export const MIN_LAST_WAYPOINT_M = 200.0;
// boundary is inclusive; same float-error slack as the server
const GEO_EPSILON_M = 1e-6;
function isNum(x) {
    return typeof x === "number" && Number.isFinite(x);
}
function waypointOk(w, fallbackAlt) {
    if (!w || !isNum(w.lat) || !isNum(w.lon))
        return false;
    const alt = w.alt === undefined ? fallbackAlt : w.alt;
    if (!isNum(alt))
        return false;
    return Math.abs(w.lat) <= 90 && Math.abs(w.lon) <= 180 && alt >= 0;
}
/** Violation codes for a mission document; ["malformed"] when the document
 * cannot even be interpreted as a plan (matching the server's behavior). */
export function validateMission(doc) {
    const d = doc;
    if (!d || typeof d !== "object")
        return ["malformed"];
    const { home, waypoints } = d;
    if (!home || !Array.isArray(waypoints))
        return ["malformed"];
    if (!isNum(d.cruise_speed) || !isNum(d.cruise_alt))
        return ["malformed"];
    const fallbackAlt = d.cruise_alt ?? 0;
    if (!waypointOk({ ...home, alt: home.alt ?? 0 }, 0))
        return ["malformed"];
    if (waypoints.length === 0)
        return ["malformed"];
    for (const w of waypoints) {
        if (!waypointOk(w, fallbackAlt))
            return ["malformed"];
    }
    const codes = [];
    const first = waypoints[0];
    const last = waypoints[waypoints.length - 1];
    if (distanceM(home.lat, home.lon, first.lat, first.lon)
        < MIN_FIRST_WAYPOINT_M - GEO_EPSILON_M) {
        codes.push("first-waypoint-too-close");
    }
    if (distanceM(home.lat, home.lon, last.lat, last.lon)
        < MIN_LAST_WAYPOINT_M - GEO_EPSILON_M) {
        codes.push("last-waypoint-too-close");
    }
    if (d.cruise_speed <= 0)
        codes.push("bad-cruise-speed");
    if (d.cruise_alt <= 0)
        codes.push("bad-cruise-alt");
    return codes.sort();
}
/** Human-readable message per violation code for the editor. */
export function describeViolation(code) {
    const messages = {
        "first-waypoint-too-close": `first waypoint must be at least ${MIN_FIRST_WAYPOINT_M} m from launch`,
        "last-waypoint-too-close": `last waypoint must be at least ${MIN_LAST_WAYPOINT_M} m from the base`,
        "bad-cruise-speed": "cruise speed must be positive",
        "bad-cruise-alt": "cruise altitude must be positive",
        "malformed": "mission document is malformed",
    };
    return { code, message: messages[code] ?? code };
}
