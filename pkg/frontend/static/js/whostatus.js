export const STATUS_COLORS = {
    ok: "#2e9e44",
    exceeded: "#d1342f",
    unmonitored: "#8a8f98",
};
export function tightestLimit(parameter, limits, dustConversion = 1.0) {
    let best = null;
    for (const lim of limits) {
        if (lim.parameter !== parameter)
            continue;
        // dust limits are in ug/m3; readings arrive on the sensor scale
        const effective = parameter === "dust"
            ? lim.limit_value / (dustConversion || 1.0)
            : lim.limit_value;
        if (best === null || effective < best)
            best = effective;
    }
    return best;
}
export function whoStatus(parameter, value, limits, dustConversion = 1.0) {
    const limit = tightestLimit(parameter, limits, dustConversion);
    if (limit === null)
        return "unmonitored";
    return value > limit ? "exceeded" : "ok";
}
