"""Headless mission runs on a virtual clock, replayable byte for byte.

The full stack runs in-process and single-threaded: the vehicle sim feeds
telemetry lines through the link model into the relay router, whose ground
leg lands in a real ground station (store, alerts, state cache). Nothing
reads the wall clock, so a (mission, seed, dt) triple always produces
identical artifacts: events.log, measurements.csv, summary.json and the
report figures.

Event log format: one record per line,
    <iso-utc> <kind> <json-detail>
"""
from __future__ import annotations

import heapq
import json
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from importlib import resources
from pathlib import Path
from typing import Optional

from . import mission as ms
from . import protocol as pt
from .groundstation import GroundStation
from .linksim import LinkConfig, LinkSimulator
from .profiles import SizingProfile
from .relay import RelayRouter
from .store import MeasurementStore, QueryFilter, iso
from .vehicle import VehicleSim

EPOCH = datetime(2026, 1, 1, tzinfo=timezone.utc)


class ReplayError(ValueError):
    def __init__(self, message: str, line_no: int):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


def vts(t: float) -> datetime:
    """Virtual seconds to an absolute UTC instant."""
    return EPOCH + timedelta(seconds=round(t, 6))


def default_mission_path() -> str:
    return str(resources.files("uavaq.data").joinpath("missions/demo.json"))


@dataclass
class RunSpec:
    plan: ms.MissionPlan
    profile: SizingProfile
    duration_s: float = 300.0
    seed: int = 42
    dt: float = 0.1
    telemetry_period: float = 1.0
    uav_id: str = "sim-1"
    link: Optional[LinkConfig] = None
    outages: tuple[tuple[float, float], ...] = ()  # (start_s, end_s) link-down windows
    out_dir: Optional[Path] = None
    wind_ms: tuple[float, float] = (0.0, 0.0)
    figures: bool = True
    ln_compat: bool = False  # reproduce the original board code's ln-based curves


@dataclass
class RunResult:
    summary: dict
    events: list[tuple[float, str, dict]]
    store: MeasurementStore
    exit_code: int
    artifacts: dict[str, Path] = field(default_factory=dict)


class _VirtualNode:
    """Command surface of the UAV session, minus threads and sockets."""

    def __init__(self, sim: VehicleSim, uplink: LinkSimulator):
        self.sim = sim
        self.uplink = uplink
        self.streaming = False
        self.video_on = False
        self.processed: dict[int, tuple[str, str]] = {}

    def on_command(self, line: str) -> str:
        cmd = pt.decode_command(line)
        if cmd.seq in self.processed:
            status, detail = self.processed[cmd.seq]
            return pt.encode_ack(cmd.seq, status, detail)
        if cmd.kind == pt.CommandKind.START_DATA:
            self.streaming, status, detail = True, "ok", "data-on"
        elif cmd.kind == pt.CommandKind.STOP_DATA:
            self.streaming, status, detail = False, "ok", "data-off"
        elif cmd.kind == pt.CommandKind.START_VIDEO:
            self.video_on, status, detail = True, "ok", "video-on"
        elif cmd.kind == pt.CommandKind.STOP_VIDEO:
            self.video_on, status, detail = False, "ok", "video-off"
        else:
            status, detail = self.sim.execute(cmd)
        self.processed[cmd.seq] = (status, detail)
        return pt.encode_ack(cmd.seq, status, detail)


def run(spec: RunSpec) -> RunResult:
    violations = ms.validate_mission(spec.plan)
    if violations:
        return RunResult(
            summary={"status": "invalid-mission",
                     "violations": [{"code": v.code, "message": v.message}
                                    for v in violations]},
            events=[], store=MeasurementStore(), exit_code=2)

    events: list[tuple[float, str, dict]] = []
    store = MeasurementStore()
    gs = GroundStation(store)
    router = RelayRouter()
    suite_config = None
    if spec.ln_compat:
        from .sensors import SuiteConfig, load_curve_registry
        suite_config = SuiteConfig(registry=load_curve_registry(), ln_compat=True)
    sim = VehicleSim(spec.profile, plan=spec.plan, seed=spec.seed,
                     suite_config=suite_config)
    uplink = LinkSimulator(spec.link or LinkConfig(seed=spec.seed))
    node = _VirtualNode(sim, uplink)

    # deliveries waiting on the wire: (deliver_at, tie, line)
    wire: list[tuple[float, int, str]] = []
    tie = iter(range(10 ** 9))
    now_holder = {"t": 0.0}

    def ground_rx(wrapped: str) -> None:
        uav_id, inner = pt.decode_envelope(wrapped)
        gs.on_line(uav_id, inner, vts(now_holder["t"]))
        tag = pt.line_tag(inner)
        if tag == "D":
            events.append((now_holder["t"], "frame-delivered",
                           {"delay_ms": round((now_holder["t"] - last_sent[inner]) * 1000, 3)
                            if inner in last_sent else None}))
        elif tag == "A":
            seq, status, detail = pt.decode_ack(inner)
            events.append((now_holder["t"], "command-ack",
                           {"seq": seq, "status": status, "detail": detail}))

    def node_rx(line: str) -> None:
        ack = node.on_command(line)
        send_up(ack, now_holder["t"])

    router.register_ground(ground_rx)
    router.register_uav(spec.uav_id, node_rx)

    last_sent: dict[str, float] = {}

    def send_up(line: str, t: float) -> None:
        d = uplink.transmit(line, t)
        if d.dropped:
            if pt.line_tag(line) == "D":
                events.append((t, "frame-dropped", {}))
            return
        last_sent[line] = t
        heapq.heappush(wire, (d.deliver_at, next(tie), line))

    def drain(t: float) -> None:
        now_holder["t"] = t
        while wire and wire[0][0] <= t:
            _, _, line = heapq.heappop(wire)
            router.from_uav(spec.uav_id, line)

    # scripted operator: upload the plan, open the data stream, take off
    for seq, (kind, kw) in enumerate([
            (pt.CommandKind.UPLOAD_MISSION, {"mission": spec.plan.to_dict()}),
            (pt.CommandKind.START_DATA, {}),
            (pt.CommandKind.SET_MODE, {"mode": "AUTO_TAKEOFF"})], start=1):
        router.to_uav(spec.uav_id, pt.encode_command(pt.Command(kind, seq, **kw)))
    drain(0.0)

    t = 0.0
    next_emit = 0.0
    crashed = False
    steps = int(round(spec.duration_s / spec.dt))
    for _ in range(steps):
        link_ok = not any(a <= t < b for a, b in spec.outages)
        sim.set_link(link_ok)
        try:
            step_events = sim.step(spec.dt, spec.wind_ms)
        except ms.MissionError:
            crashed = True
            break
        for ev in step_events:
            events.append((ev.t, ev.kind, ev.detail))
        t = round(t + spec.dt, 9)
        if t >= next_emit:
            next_emit = round(next_emit + spec.telemetry_period, 9)
            ts = vts(t)
            frame = sim.sample_frame()
            st = sim.state
            send_up(pt.encode_status(sim.status_record(ts)), t)
            if node.streaming:
                events.append((t, "frame-sent", {"valid": frame.valid}))
                send_up(pt.encode_frame(frame, st.position.lat, st.position.lon,
                                        st.position.alt, ts), t)
        drain(t)
        if sim.state.crashed:
            crashed = True
            break
    drain(t + 10.0)  # let the wire empty

    final = sim.state
    events.append((t, "run-end", {
        "mode": final.mode.value, "battery_remaining_mah": round(final.battery_remaining, 1),
        "battery_capacity_mah": round(final.battery_capacity, 1),
        "lat": round(final.position.lat, 7), "lon": round(final.position.lon, 7),
        "alt": round(final.position.alt, 2), "crashed": crashed,
        "sim_duration_s": round(final.clock, 3)}))
    for alert in store.alerts():
        events.append(((alert.timestamp - EPOCH).total_seconds(), "alert", {
            "parameter": alert.parameter, "window": alert.window,
            "averaged_value": alert.averaged_value, "limit_value": alert.limit_value,
            "lat": alert.lat, "lon": alert.lon}))
    events.sort(key=lambda e: e[0])

    summary = summarize(events)
    exit_code = 3 if crashed else 0
    result = RunResult(summary, events, store, exit_code)
    if spec.out_dir is not None:
        result.artifacts = write_artifacts(spec, result)
    return result


def summarize(events: list[tuple[float, str, dict]]) -> dict:
    """Summary derived purely from the event log, so replay reproduces it."""
    reached = [e for _, k, e in events if k == "waypoint-reached"]
    modes = [d["mode"] for _, k, d in events if k == "mode-change"]
    end = next((d for _, k, d in reversed(events) if k == "run-end"), {})
    counts = {k: sum(1 for _, kind, _ in events if kind == k)
              for k in ("frame-sent", "frame-delivered", "frame-dropped")}
    alerts = [d for _, k, d in events if k == "alert"]
    dist = [d["distance_m"] for d in reached]
    return {
        "waypoints_reached": len(reached),
        "waypoint_max_distance_m": max(dist) if dist else None,
        "mode_sequence": modes,
        "completed": "LOITER" in modes,
        "frames_sent": counts["frame-sent"],
        "frames_delivered": counts["frame-delivered"],
        "frames_dropped": counts["frame-dropped"],
        "alerts": alerts,
        "final": end,
    }


def event_lines(events: list[tuple[float, str, dict]]) -> str:
    out = []
    for t, kind, detail in events:
        out.append(f"{iso(vts(t))} {kind} {json.dumps(detail, sort_keys=True)}")
    return "\n".join(out) + "\n"


def parse_event_line(line: str, line_no: int) -> tuple[float, str, dict]:
    parts = line.split(" ", 2)
    if len(parts) != 3:
        raise ReplayError("expected '<iso> <kind> <json>'", line_no)
    ts_text, kind, payload = parts
    try:
        from .groundstation import parse_iso
        ts = parse_iso(ts_text)
    except ValueError:
        raise ReplayError(f"bad timestamp {ts_text!r}", line_no) from None
    try:
        detail = json.loads(payload)
    except json.JSONDecodeError as exc:
        raise ReplayError(f"bad json detail: {exc.msg}", line_no) from None
    if not isinstance(detail, dict):
        raise ReplayError("detail must be a json object", line_no)
    return (ts - EPOCH).total_seconds(), kind, detail


def replay(events_path: Path) -> dict:
    """Recompute a run summary from its event log alone."""
    events = []
    with open(events_path) as fh:
        for i, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                raise ReplayError("empty line", i)
            events.append(parse_event_line(line, i))
    return summarize(events)


def write_artifacts(spec: RunSpec, result: RunResult) -> dict[str, Path]:
    out = Path(spec.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "events": out / "events.log",
        "measurements": out / "measurements.csv",
        "summary": out / "summary.json",
    }
    paths["events"].write_text(event_lines(result.events))
    paths["measurements"].write_text(result.store.export_csv(QueryFilter()))
    paths["summary"].write_text(json.dumps(result.summary, sort_keys=True, indent=2) + "\n")
    if spec.figures:
        from . import report
        fig_dir = out / "figures"
        fig_dir.mkdir(exist_ok=True)
        paths["trajectory"] = report.fig_trajectory(
            result.store, spec.plan, fig_dir / "trajectory.png")
        paths["timeseries"] = report.fig_timeseries(
            result.store, fig_dir / "timeseries.png")
    return paths


def load_mission(path: Optional[str]) -> ms.MissionPlan:
    return ms.MissionPlan.load(path if path else default_mission_path())
