"""The simulated vehicle: flight state, sensor rig and ambient truth model.

VehicleSim couples the point-mass flight model with the sensor suite over a
synthetic pollution field. It is clock-agnostic: callers advance it with
step() in whatever time base they run (wall clock for the live node,
virtual time for headless runs), making replays exact.
"""
from __future__ import annotations

import math
import random
import threading
from dataclasses import dataclass, field
from typing import Optional

from . import mission as ms
from . import nmea
from . import protocol as pt
from .profiles import SizingProfile
from .sensors import GasId, SensorSuite, SuiteConfig, load_curve_registry


@dataclass(frozen=True)
class Plume:
    """Gaussian hotspot of pollutants anchored near the operating area."""

    lat: float
    lon: float
    radius_m: float
    gas_amplitude: dict[GasId, float]  # added ppm at the center
    dust_lpo_us: float = 0.0           # added low-pulse time per sample at center


@dataclass(frozen=True)
class FieldModel:
    """Deterministic ambient truth the synthetic sensors observe."""

    baseline_ppm: dict[GasId, float]
    plumes: tuple[Plume, ...] = ()
    humidity_base: float = 41.4
    temp_base: float = 23.4
    dust_lpo_base_us: float = 400.0

    def true_ppm(self, pos: ms.Waypoint, t: float) -> dict[GasId, float]:
        out = dict(self.baseline_ppm)
        for plume in self.plumes:
            w = self._weight(plume, pos)
            if w <= 0:
                continue
            for gas, amp in plume.gas_amplitude.items():
                out[gas] = out.get(gas, 0.0) + amp * w
        return out

    def dust_lpo_us(self, pos: ms.Waypoint, t: float) -> float:
        extra = sum(p.dust_lpo_us * self._weight(p, pos) for p in self.plumes)
        return self.dust_lpo_base_us + extra

    def climate(self, pos: ms.Waypoint, t: float) -> tuple[float, float]:
        # slow deterministic drift so charts are not flat lines
        hum = self.humidity_base + 0.5 * math.sin(t / 90.0)
        temp = self.temp_base + 0.1 * math.sin(t / 60.0) - 0.006 * pos.alt
        return hum, temp

    @staticmethod
    def _weight(plume: Plume, pos: ms.Waypoint) -> float:
        d = ms.distance_m(pos, ms.Waypoint(plume.lat, plume.lon))
        return math.exp(-0.5 * (d / plume.radius_m) ** 2)


def default_field(home: ms.Waypoint, seed: int = 0) -> FieldModel:
    """Mild ambient field with a couple of plumes around the launch area;
    levels stay below the configured alert limits."""
    rng = random.Random(seed)
    plumes = []
    for _ in range(2):
        spot = ms.offset_point(home, rng.uniform(0, 360), rng.uniform(200, 600))
        plumes.append(Plume(
            lat=spot.lat, lon=spot.lon, radius_m=rng.uniform(120, 250),
            gas_amplitude={GasId.CO: rng.uniform(1.0, 3.0),
                           GasId.CO2: rng.uniform(40.0, 120.0),
                           GasId.O3: rng.uniform(0.004, 0.012),
                           GasId.LPG: rng.uniform(1.0, 4.0),
                           GasId.SMOKE: rng.uniform(1.0, 4.0)},
            dust_lpo_us=rng.uniform(600.0, 1500.0)))
    return FieldModel(
        baseline_ppm={GasId.CO: 2.0, GasId.CO2: 420.0, GasId.O3: 0.02,
                      GasId.LPG: 5.0, GasId.SMOKE: 8.0},
        plumes=tuple(plumes),
        dust_lpo_base_us=60.0)


class VehicleSim:
    """One simulated airframe plus its sensor payload.

    step()/execute() are serialized by an internal lock so a real-time node
    can drive physics from one thread while the session thread applies
    commands; the headless runner calls everything from a single loop.
    """

    def __init__(self, profile: SizingProfile, plan: Optional[ms.MissionPlan] = None,
                 params: Optional[ms.VehicleParams] = None,
                 suite_config: Optional[SuiteConfig] = None,
                 field_model: Optional[FieldModel] = None,
                 home: Optional[ms.Waypoint] = None, seed: int = 42):
        self.profile = profile
        self.plan = plan
        home = home if home is not None else (plan.home if plan else ms.Waypoint(25.68, 51.22, 0.0))
        usable = profile.propulsion.battery_capacity_mah * profile.propulsion.usable_fraction
        self.params = params if params is not None else ms.VehicleParams(
            cruise_throttle_pct=profile.cruise_throttle_pct,
            load_table=profile.partial_load)
        self.state = ms.UavState(position=home, mode=ms.FlightMode.MANUAL,
                                 battery_remaining=usable, battery_capacity=usable)
        self.suite = SensorSuite(suite_config or SuiteConfig(registry=load_curve_registry()),
                                 now_s=0.0)
        self.field = field_model if field_model is not None else default_field(home, seed)
        self.link_ok = True
        self._lock = threading.Lock()
        self._pending_events: list[ms.Event] = []

    # -- physics ------------------------------------------------------------

    def step(self, dt: float, wind: tuple[float, float] = (0.0, 0.0)) -> list[ms.Event]:
        with self._lock:
            events, self._pending_events = self._pending_events, []
            st, evs = ms.on_comm_status(self.state, self.params.failsafe,
                                        self.link_ok, self.state.clock)
            events.extend(evs)
            st, evs = ms.step(st, self.plan, self.params, dt, wind)
            events.extend(evs)
            self.state = st
            return events

    def set_link(self, ok: bool) -> None:
        with self._lock:
            self.link_ok = ok

    @property
    def clock(self) -> float:
        return self.state.clock

    # -- operator commands ---------------------------------------------------

    def execute(self, cmd: pt.Command) -> tuple[str, str]:
        """Apply a vehicle-level command; returns (status, detail)."""
        with self._lock:
            try:
                if cmd.kind == pt.CommandKind.SET_MODE:
                    mode = ms.FlightMode(cmd.mode)
                    self.state, evs = ms.manual_override(self.state, mode, self.plan)
                    self._pending_events.extend(evs)
                    return "ok", mode.value
                if cmd.kind == pt.CommandKind.RTB:
                    self.state = ms.replace_state(self.state)
                    self.state.mode = ms.FlightMode.RETURN_TO_BASE
                    self._pending_events.append(ms.Event(
                        self.state.clock, "mode-change",
                        {"mode": "RETURN_TO_BASE", "reason": "operator-rtb"}))
                    return "ok", "RETURN_TO_BASE"
                if cmd.kind == pt.CommandKind.UPLOAD_MISSION:
                    plan = ms.MissionPlan.from_dict(cmd.mission or {})
                    violations = ms.validate_mission(plan)
                    if violations:
                        return "error", "; ".join(v.code for v in violations)
                    self.plan = plan
                    self.state = ms.replace_state(self.state)
                    self.state.visited = tuple(False for _ in plan.waypoints)
                    self.state.next_wp = 0
                    self._pending_events.append(ms.Event(
                        self.state.clock, "mission-loaded",
                        {"waypoints": len(plan.waypoints)}))
                    return "ok", f"{len(plan.waypoints)} waypoints"
                return "error", f"not a vehicle command: {cmd.kind.value}"
            except (ms.MissionError, ValueError) as exc:
                return "error", str(exc)

    # -- payload sampling ----------------------------------------------------

    def sample_frame(self) -> pt.SensorFrame:
        with self._lock:
            st = self.state
            t = st.clock
            hum, temp = self.field.climate(st.position, t)
            return self.suite.sample(self.field.true_ppm(st.position, t), hum, temp,
                                     self.field.dust_lpo_us(st.position, t),
                                     st.airspeed, now_s=t)

    def gps_sentence(self) -> str:
        with self._lock:
            st = self.state
            secs = int(st.clock) % 86400
            utc = f"{secs // 3600:02d}{(secs % 3600) // 60:02d}{secs % 60:02d}"
            return nmea.build_gga(st.position.lat, st.position.lon, st.position.alt, utc)

    def status_record(self, ts) -> pt.StatusRecord:
        with self._lock:
            st = self.state
            return pt.StatusRecord(
                timestamp=ts, mode=st.mode.value, lat=st.position.lat,
                lon=st.position.lon, alt=st.position.alt, heading=st.heading,
                airspeed=st.airspeed, battery_mah=st.battery_remaining,
                throttle=st.throttle, warmup_s=self.suite.warm_up_left(st.clock),
                link_ok=st.comm_ok)
