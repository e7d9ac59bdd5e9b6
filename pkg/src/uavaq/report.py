"""Sizing report and figure rendering for the CLI report path.

The report reproduces the platform's sizing chain from a profile: take-off
speed, Reynolds number, thrust, force balance, power draw and the
partial-load flight-time table (emitted as CSV in the table's column
order). Figures are rendered to files next to the delimited output: the
take-off-speed-vs-wing-area family, the thrust-vs-airspeed curve, and for
mission runs the flown trajectory and measurement time series.
"""
from __future__ import annotations

import io
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from . import flightdyn as fd
from .mission import MissionPlan
from .profiles import SizingProfile
from .store import MeasurementStore, PARAMETERS, QueryFilter

MS_TO_KMH = 3.6


def sizing_report(profile: SizingProfile) -> dict:
    env = profile.env
    prop = profile.propulsion
    takeoff = profile.airplane_takeoff()
    cruise = profile.airplane_cruise()
    fw = profile.weight_force_n if profile.weight_force_n is not None \
        else fd.weight_force(takeoff, env)
    v_takeoff = fd.takeoff_velocity(takeoff, env, weight_n=fw)
    rpm = fd.motor_rpm(prop)
    thrust_static = fd.dynamic_thrust(prop, rpm, 0.0)
    thrust_cruise = fd.dynamic_thrust(prop, rpm, v_takeoff)
    drag_speed = profile.drag_ref_speed_ms if profile.drag_ref_speed_ms else v_takeoff
    balance = fd.net_force_accel_power(cruise, env, prop, v=v_takeoff,
                                       thrust_airspeed=v_takeoff,
                                       drag_airspeed=drag_speed, weight_n=fw)
    power_speed = profile.power_eval_speed_ms if profile.power_eval_speed_ms \
        else balance.accel
    power = fd.net_force_accel_power(cruise, env, prop, v=power_speed,
                                     thrust_airspeed=v_takeoff,
                                     drag_airspeed=drag_speed, weight_n=fw)
    tw = fd.thrust_to_weight(thrust_cruise.newtons, fw)
    payload_total, payload_ok = fd.payload_budget(profile.components_g,
                                                  profile.max_payload_g)
    table = []
    for row in profile.partial_load:
        table.append({
            "rpm": row.rpm, "throttle_pct": row.throttle_pct,
            "current_a": row.current_a, "thrust_g": row.thrust_g,
            "run_time_min": row.run_time_min,
            "flight_time_min": fd.flight_time(prop, row.current_a),
        })
    return {
        "profile": profile.name,
        "weight_force_n": fw,
        "takeoff_velocity_ms": v_takeoff,
        "reynolds": fd.reynolds(env, v_takeoff, profile.chord_m),
        "motor_rpm": rpm,
        "static_thrust_n": thrust_static.newtons,
        "cruise_thrust_n": thrust_cruise.newtons,
        "drag_n": balance.drag_n,
        "friction_n": balance.friction_n,
        "net_force_n": balance.net_force_n,
        "accel_ms2": balance.accel,
        "power_eval_speed_ms": power_speed,
        "p_mech_w": power.p_mech_w,
        "p_elec_w": power.p_elec_w,
        "thrust_to_weight": tw.ratio,
        "thrust_to_weight_feasible": tw.feasible,
        "payload_total_g": payload_total,
        "payload_feasible": payload_ok,
        "max_payload_g": profile.max_payload_g,
        "partial_load": table,
    }


TABLE_COLUMNS = ("rpm", "throttle_pct", "current_a", "thrust_g",
                 "run_time_min", "flight_time_min")


def report_csv(report: dict) -> str:
    """Key/value section, a blank line, then the partial-load table."""
    buf = io.StringIO()
    buf.write("key,value\n")
    for key, value in report.items():
        if key == "partial_load":
            continue
        buf.write(f"{key},{value}\n")
    buf.write("\n")
    buf.write(",".join(TABLE_COLUMNS) + "\n")
    for row in report["partial_load"]:
        buf.write(",".join(_fmt(row[c]) for c in TABLE_COLUMNS) + "\n")
    return buf.getvalue()


def _fmt(x) -> str:
    return f"{x:g}" if isinstance(x, float) else str(x)


def report_text(report: dict) -> str:
    lines = [
        f"profile: {report['profile']}",
        f"weight force: {report['weight_force_n']:.2f} N",
        f"takeoff velocity: {report['takeoff_velocity_ms']:.2f} m/s",
        f"reynolds number: {report['reynolds']:.0f}",
        f"motor rpm: {report['motor_rpm']:.0f}",
        f"static thrust: {report['static_thrust_n']:.2f} N",
        f"cruise thrust: {report['cruise_thrust_n']:.2f} N",
        f"drag: {report['drag_n']:.2f} N   friction: {report['friction_n']:.2f} N",
        f"net force: {report['net_force_n']:.2f} N   accel: {report['accel_ms2']:.2f} m/s^2",
        (f"power at {report['power_eval_speed_ms']:.2f} m/s: "
         f"{report['p_mech_w']:.0f} W mech, {report['p_elec_w']:.0f} W elec"),
        (f"thrust/weight: {report['thrust_to_weight']:.3f} "
         f"({'ok' if report['thrust_to_weight_feasible'] else 'INFEASIBLE'})"),
        (f"payload: {report['payload_total_g']:.1f} g of {report['max_payload_g']:.0f} g "
         f"({'ok' if report['payload_feasible'] else 'OVER BUDGET'})"),
    ]
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Figures

def fig_velocity_vs_area(profile: SizingProfile, path: Path,
                         masses=(2.0, 3.0, 4.0, 5.0, 6.0)) -> Path:
    areas = np.linspace(0.3, 1.2, 60)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for m in masses:
        vs = []
        for a in areas:
            cfg = fd.AirplaneConfig(m, float(a), profile.chord_m,
                                    profile.cl_takeoff, profile.cd, profile.mu)
            vs.append(fd.takeoff_velocity(cfg, profile.env))
        ax.plot(areas, vs, label=f"{m:.0f} kg")
    ax.set_xlabel("wing area (m$^2$)")
    ax.set_ylabel("take-off velocity (m/s)")
    ax.set_title("Take-off velocity vs wing area")
    ax.grid(True, alpha=0.3)
    ax.legend(title="mass")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def fig_thrust_vs_speed(profile: SizingProfile, path: Path) -> Path:
    prop = profile.propulsion
    rpm = fd.motor_rpm(prop)
    crossing = fd.THRUST_K2 * rpm * prop.prop_pitch_in
    speeds = np.linspace(0.0, crossing * 1.05, 120)
    thrust_kg = [fd.dynamic_thrust(prop, rpm, float(v)).newtons / profile.env.gravity
                 for v in speeds]
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(speeds * MS_TO_KMH, thrust_kg)
    ax.axhline(profile.mass_kg, linestyle="--", alpha=0.6,
               label=f"airframe mass {profile.mass_kg:g} kg")
    ax.set_xlabel("airspeed (km/h)")
    ax.set_ylabel("thrust (kg)")
    ax.set_title("Dynamic thrust vs airspeed")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def fig_trajectory(store: MeasurementStore, plan: MissionPlan, path: Path) -> Path:
    rows = store.query(QueryFilter(parameters=frozenset({"co"})))
    fig, ax = plt.subplots(figsize=(6.5, 6.5))
    if rows:
        lons = [m.lon for m in rows]
        lats = [m.lat for m in rows]
        ax.plot(lons, lats, "-", linewidth=1.2, label="track")
    ax.plot([w.lon for w in plan.waypoints], [w.lat for w in plan.waypoints],
            "o", markersize=8, fillstyle="none", label="waypoints")
    for i, w in enumerate(plan.waypoints):
        ax.annotate(str(i + 1), (w.lon, w.lat), textcoords="offset points",
                    xytext=(6, 6), fontsize=9)
    ax.plot([plan.home.lon], [plan.home.lat], "s", markersize=9, label="home")
    ax.set_xlabel("longitude (deg)")
    ax.set_ylabel("latitude (deg)")
    ax.set_title("Mission trajectory")
    ax.grid(True, alpha=0.3)
    ax.legend(loc="best")
    ax.set_aspect("equal", adjustable="datalim")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def fig_timeseries(store: MeasurementStore, path: Path) -> Path:
    fig, axes = plt.subplots(4, 2, figsize=(11, 9), sharex=True)
    for ax, param in zip(axes.flat, PARAMETERS):
        rows = store.query(QueryFilter(parameters=frozenset({param})))
        if rows:
            t0 = rows[0].timestamp
            xs = [(m.timestamp - t0).total_seconds() for m in rows]
            ys = [m.value for m in rows]
            ok = [m.valid for m in rows]
            ax.plot(xs, ys, linewidth=1.0)
            bad = [(x, y) for x, y, v in zip(xs, ys, ok) if not v]
            if bad:
                ax.plot(*zip(*bad), "x", markersize=3, alpha=0.6, label="warm-up")
                ax.legend(fontsize=7)
        ax.set_title(param, fontsize=9)
        ax.grid(True, alpha=0.3)
    for ax in axes[-1]:
        ax.set_xlabel("seconds")
    fig.suptitle("Sensor channels")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path
