/** Geodesy helpers matching the server's flat-earth-over-short-legs math. */
export const EARTH_RADIUS_M = 6371008.8;
const DEG = Math.PI / 180;
/** Equirectangular horizontal distance in meters; fine below ~30 km legs. */
export function distanceM(aLat, aLon, bLat, bLon) {
    const lat1 = aLat * DEG;
    const lat2 = bLat * DEG;
    const x = (bLon - aLon) * DEG * Math.cos((lat1 + lat2) / 2);
    const y = lat2 - lat1;
    return EARTH_RADIUS_M * Math.hypot(x, y);
}
