"""Waypoint mission state machine and deterministic point-mass flight model.

The vehicle is a constant-airspeed point mass with a turn-rate limit and a
rate-limited first-order altitude loop. step() is the only mutator: external
commands and link-status updates are applied between steps, so a fixed
(dt, command log, seed) replays to an identical trajectory.

Mission geometry rules: the first waypoint must be at least 100 m from the
launch point and the last at least 200 m, otherwise the platform is forced
into steep turns it cannot fly cleanly.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional

from .flightdyn import PartialLoadRow, partial_load_interpolate

EARTH_RADIUS_M = 6371008.8  # WGS-84 mean radius

MIN_FIRST_WAYPOINT_M = 100.0
MIN_LAST_WAYPOINT_M = 200.0
GEO_EPSILON_M = 1e-6  # boundary is inclusive; slack absorbs geodesic float error


class MissionError(ValueError):
    pass


class FlightMode(str, Enum):
    MANUAL = "MANUAL"
    AUTO_TAKEOFF = "AUTO_TAKEOFF"
    AUTO_MISSION = "AUTO_MISSION"
    RETURN_TO_BASE = "RETURN_TO_BASE"
    LOITER = "LOITER"


AUTO_MODES = (FlightMode.AUTO_TAKEOFF, FlightMode.AUTO_MISSION)


@dataclass(frozen=True)
class Waypoint:
    lat: float
    lon: float
    alt: float = 0.0  # m AGL

    def __post_init__(self) -> None:
        if not -90 <= self.lat <= 90:
            raise MissionError(f"latitude {self.lat} outside [-90, 90]")
        if not -180 <= self.lon <= 180:
            raise MissionError(f"longitude {self.lon} outside [-180, 180]")
        if self.alt < 0:
            raise MissionError("altitude must be >= 0")


@dataclass(frozen=True)
class MissionPlan:
    home: Waypoint
    waypoints: tuple[Waypoint, ...]
    cruise_speed: float  # m/s
    cruise_alt: float    # m AGL

    @staticmethod
    def from_dict(doc: dict) -> "MissionPlan":
        try:
            home = Waypoint(float(doc["home"]["lat"]), float(doc["home"]["lon"]),
                            float(doc["home"].get("alt", 0.0)))
            wps = tuple(Waypoint(float(w["lat"]), float(w["lon"]),
                                 float(w.get("alt", doc.get("cruise_alt", 0.0))))
                        for w in doc["waypoints"])
            return MissionPlan(home, wps, float(doc["cruise_speed"]),
                               float(doc["cruise_alt"]))
        except (KeyError, TypeError) as exc:
            raise MissionError(f"mission document malformed: {exc!r}") from None

    def to_dict(self) -> dict:
        return {
            "home": {"lat": self.home.lat, "lon": self.home.lon, "alt": self.home.alt},
            "waypoints": [{"lat": w.lat, "lon": w.lon, "alt": w.alt} for w in self.waypoints],
            "cruise_speed": self.cruise_speed,
            "cruise_alt": self.cruise_alt,
        }

    @staticmethod
    def load(path: str) -> "MissionPlan":
        with open(path) as fh:
            return MissionPlan.from_dict(json.load(fh))


@dataclass(frozen=True)
class FailsafeConfig:
    comm_loss_timeout: float = 5.0     # s without ground contact before RTB
    waypoint_radius: float = 30.0      # m, horizontal acceptance radius
    takeoff_alt: float = 100.0         # m, auto-takeoff hands over to mission here
    loiter_radius: float = 200.0       # m, circle flown around home after RTB

    def __post_init__(self) -> None:
        for name in ("comm_loss_timeout", "waypoint_radius", "takeoff_alt", "loiter_radius"):
            if getattr(self, name) <= 0:
                raise MissionError(f"{name} must be > 0")


@dataclass(frozen=True)
class VehicleParams:
    """Kinematic envelope plus the battery-draw table for one airframe."""

    failsafe: FailsafeConfig = field(default_factory=FailsafeConfig)
    max_turn_rate_dps: float = 30.0
    max_climb_rate_ms: float = 5.0
    alt_tau_s: float = 5.0
    cruise_throttle_pct: float = 70.0
    takeoff_throttle_pct: float = 100.0
    battery_low_fraction: float = 0.2
    attitude_tau_s: float = 0.3  # keeps a disturbance under 5% within 1 s
    load_table: tuple[PartialLoadRow, ...] = ()


@dataclass
class UavState:
    position: Waypoint
    heading: float = 0.0           # deg, 0 = north, clockwise
    airspeed: float = 0.0          # m/s
    mode: FlightMode = FlightMode.MANUAL
    battery_remaining: float = 5400.0  # mAh
    battery_capacity: float = 5400.0
    throttle: float = 0.0          # %
    attitude_error: float = 0.0    # deg
    comm_ok: bool = True
    clock: float = 0.0             # s
    # progression bookkeeping
    next_wp: int = 0
    visited: tuple[bool, ...] = ()
    link_down_since: Optional[float] = None
    battery_low_sent: bool = False
    crashed: bool = False
    turn_saturated: bool = False


@dataclass(frozen=True)
class Event:
    t: float
    kind: str
    detail: dict


# ---------------------------------------------------------------------------
# Geometry

def distance_m(a: Waypoint, b: Waypoint) -> float:
    """Horizontal distance via the equirectangular approximation on the
    mean-radius sphere; error < 0.1% for legs under 30 km."""
    lat1, lat2 = math.radians(a.lat), math.radians(b.lat)
    dlat = lat2 - lat1
    dlon = math.radians(b.lon - a.lon)
    x = dlon * math.cos((lat1 + lat2) / 2.0)
    return EARTH_RADIUS_M * math.hypot(x, dlat)


def bearing_deg(a: Waypoint, b: Waypoint) -> float:
    """Initial bearing from a to b, degrees clockwise from north."""
    lat1, lat2 = math.radians(a.lat), math.radians(b.lat)
    dlon = math.radians(b.lon - a.lon)
    y = math.sin(dlon) * math.cos(lat2)
    x = math.cos(lat1) * math.sin(lat2) - math.sin(lat1) * math.cos(lat2) * math.cos(dlon)
    return math.degrees(math.atan2(y, x)) % 360.0


def offset_point(origin: Waypoint, bearing: float, dist_m: float,
                 alt: Optional[float] = None) -> Waypoint:
    """Destination point dist_m along a bearing (small-angle flat step)."""
    b = math.radians(bearing)
    dlat = dist_m * math.cos(b) / EARTH_RADIUS_M
    dlon = dist_m * math.sin(b) / (EARTH_RADIUS_M * math.cos(math.radians(origin.lat)))
    return Waypoint(origin.lat + math.degrees(dlat), origin.lon + math.degrees(dlon),
                    origin.alt if alt is None else alt)


def _wrap_deg(angle: float) -> float:
    """Wrap to (-180, 180]."""
    a = (angle + 180.0) % 360.0 - 180.0
    return 180.0 if a == -180.0 else a


# ---------------------------------------------------------------------------
# Validation and acceptance

@dataclass(frozen=True)
class Violation:
    code: str
    message: str


def validate_mission(plan: MissionPlan) -> list[Violation]:
    """Geometry and invariant checks; empty list means the plan is flyable."""
    if not plan.waypoints:
        raise MissionError("mission has no waypoints")
    out: list[Violation] = []
    d_first = distance_m(plan.home, plan.waypoints[0])
    if d_first < MIN_FIRST_WAYPOINT_M - GEO_EPSILON_M:
        out.append(Violation(
            "first-waypoint-too-close",
            f"first waypoint {d_first:.1f} m from launch; need >= {MIN_FIRST_WAYPOINT_M:.0f} m"))
    d_last = distance_m(plan.home, plan.waypoints[-1])
    if d_last < MIN_LAST_WAYPOINT_M - GEO_EPSILON_M:
        out.append(Violation(
            "last-waypoint-too-close",
            f"last waypoint {d_last:.1f} m from base; need >= {MIN_LAST_WAYPOINT_M:.0f} m"))
    if plan.cruise_speed <= 0:
        out.append(Violation("bad-cruise-speed", "cruise_speed must be > 0"))
    if plan.cruise_alt <= 0:
        out.append(Violation("bad-cruise-alt", "cruise_alt must be > 0"))
    return out


def waypoint_reached(position: Waypoint, wp: Waypoint, radius_m: float) -> bool:
    """Horizontal acceptance test, inclusive at the radius."""
    if radius_m <= 0:
        raise MissionError("radius must be > 0")
    return distance_m(position, wp) <= radius_m


# ---------------------------------------------------------------------------
# Failsafe / operator transitions

def on_comm_status(state: UavState, cfg: FailsafeConfig, link_ok: bool,
                   now: float) -> tuple[UavState, list[Event]]:
    """Track ground-link health; a sustained outage in an AUTO mode forces
    return-to-base. Restoration never re-enters AUTO on its own."""
    events: list[Event] = []
    st = replace_state(state)
    if link_ok:
        if not st.comm_ok:
            events.append(Event(now, "comm-restored", {}))
        st.comm_ok = True
        st.link_down_since = None
        return st, events
    if st.comm_ok:
        st.comm_ok = False
        st.link_down_since = now
        events.append(Event(now, "comm-loss", {}))
    down_for = now - (st.link_down_since if st.link_down_since is not None else now)
    if down_for >= cfg.comm_loss_timeout and st.mode in AUTO_MODES:
        st.mode = FlightMode.RETURN_TO_BASE
        events.append(Event(now, "mode-change", {
            "mode": st.mode.value, "reason": "comm-loss-failsafe",
            "outage_s": round(down_for, 3)}))
    return st, events


def manual_override(state: UavState, mode_request: FlightMode,
                    plan: Optional[MissionPlan] = None) -> tuple[UavState, list[Event]]:
    """Operator-commanded mode change.

    MANUAL is always granted. AUTO modes need a validated mission loaded.
    LOITER cannot be requested directly; it is only entered by arriving home.
    """
    st = replace_state(state)
    if mode_request == FlightMode.LOITER:
        raise MissionError("LOITER is entered automatically, not on request")
    if mode_request in AUTO_MODES:
        if plan is None:
            raise MissionError(f"{mode_request.value} requires a mission")
        violations = validate_mission(plan)
        if violations:
            raise MissionError(f"{mode_request.value} refused: mission invalid "
                               f"({violations[0].code})")
        if not st.visited or len(st.visited) != len(plan.waypoints):
            st.visited = tuple(False for _ in plan.waypoints)
        # resume at the first unvisited waypoint
        st.next_wp = next((i for i, v in enumerate(st.visited) if not v),
                          len(plan.waypoints))
    old = st.mode
    st.mode = mode_request
    ev = [Event(st.clock, "mode-change", {"mode": st.mode.value, "reason": "operator",
                                          "from": old.value})]
    return st, ev


def stabilize(state: UavState, disturbance_deg: float, dt: float,
              tau_s: float = 0.3) -> UavState:
    """Apply an attitude disturbance and decay the total error exponentially;
    with the default time constant the error is under 5% after one second."""
    st = replace_state(state)
    st.attitude_error = (st.attitude_error + disturbance_deg) * math.exp(-dt / tau_s)
    return st


def replace_state(state: UavState) -> UavState:
    """Shallow copy so callers keep the old state for comparison/replay."""
    return replace(state)


# ---------------------------------------------------------------------------
# The step function

def step(state: UavState, plan: Optional[MissionPlan], params: VehicleParams,
         dt: float, wind_ms: tuple[float, float] = (0.0, 0.0)) -> tuple[UavState, list[Event]]:
    """Advance the vehicle by dt seconds; the only mutator of flight state.

    wind_ms is a constant (east, north) vector added to ground velocity.
    Raises on a crashed vehicle and on dt outside (0, 1].
    """
    if state.crashed:
        raise MissionError("cannot step a crashed vehicle")
    if not 0 < dt <= 1:
        raise MissionError("dt must be in (0, 1]")
    if state.mode in AUTO_MODES and plan is None:
        raise MissionError(f"{state.mode.value} requires a mission")

    st = replace_state(state)
    events: list[Event] = []
    cfg = params.failsafe
    now = st.clock + dt

    # --- guidance: pick target, altitude and throttle per mode
    target: Optional[Waypoint] = None
    target_alt = st.position.alt
    if st.mode == FlightMode.AUTO_TAKEOFF:
        assert plan is not None
        st.throttle = params.takeoff_throttle_pct
        idx = min(st.next_wp, len(plan.waypoints) - 1)
        target = plan.waypoints[idx]
        target_alt = max(cfg.takeoff_alt, plan.cruise_alt)
        st.airspeed = plan.cruise_speed
    elif st.mode == FlightMode.AUTO_MISSION:
        assert plan is not None
        st.throttle = params.cruise_throttle_pct
        st.airspeed = plan.cruise_speed
        if st.next_wp < len(plan.waypoints):
            wp = plan.waypoints[st.next_wp]
            target = wp
            target_alt = wp.alt if wp.alt > 0 else plan.cruise_alt
    elif st.mode == FlightMode.RETURN_TO_BASE:
        st.throttle = params.cruise_throttle_pct
        if plan is not None:
            st.airspeed = plan.cruise_speed
            target = plan.home
            target_alt = plan.cruise_alt
    elif st.mode == FlightMode.LOITER:
        st.throttle = params.cruise_throttle_pct
        if plan is not None:
            st.airspeed = plan.cruise_speed
            target_alt = plan.cruise_alt
            # orbit: aim 90 deg off the bearing to home, nudged to hold the radius
            d_home = distance_m(st.position, plan.home)
            to_home = bearing_deg(st.position, plan.home)
            correction = max(-60.0, min(60.0, (d_home - cfg.loiter_radius) * 0.5))
            desired = (to_home + 90.0 - correction) % 360.0
            target = offset_point(st.position, desired, max(st.airspeed * dt, 1.0))
    # MANUAL: hold current heading/airspeed/throttle; operator owns them.

    # --- heading with turn-rate limit
    if target is not None:
        desired = bearing_deg(st.position, target)
        err = _wrap_deg(desired - st.heading)
        max_turn = params.max_turn_rate_dps * dt
        needed_rate = abs(err) / dt
        if needed_rate > params.max_turn_rate_dps and not st.turn_saturated:
            st.turn_saturated = True
            events.append(Event(now, "steep-turn", {
                "required_dps": round(needed_rate, 1),
                "max_dps": params.max_turn_rate_dps}))
        elif needed_rate <= params.max_turn_rate_dps:
            st.turn_saturated = False
        st.heading = (st.heading + max(-max_turn, min(max_turn, err))) % 360.0

    # --- translate
    if st.airspeed > 0 or wind_ms != (0.0, 0.0):
        hdg = math.radians(st.heading)
        ve = st.airspeed * math.sin(hdg) + wind_ms[0]
        vn = st.airspeed * math.cos(hdg) + wind_ms[1]
        ground = math.hypot(ve, vn)
        if ground > 0:
            course = math.degrees(math.atan2(ve, vn)) % 360.0
            st.position = offset_point(st.position, course, ground * dt, alt=st.position.alt)

    # --- altitude: rate-limited first-order approach
    alt_err = target_alt - st.position.alt
    rate = max(-params.max_climb_rate_ms, min(params.max_climb_rate_ms,
                                              alt_err / params.alt_tau_s))
    st.position = replace(st.position, alt=max(0.0, st.position.alt + rate * dt))

    # --- mode progression
    if st.mode == FlightMode.AUTO_TAKEOFF and st.position.alt >= cfg.takeoff_alt:
        st.mode = FlightMode.AUTO_MISSION
        events.append(Event(now, "mode-change", {"mode": st.mode.value,
                                                 "reason": "takeoff-complete",
                                                 "alt": round(st.position.alt, 1)}))
    elif st.mode == FlightMode.AUTO_MISSION and plan is not None:
        if st.next_wp < len(plan.waypoints):
            wp = plan.waypoints[st.next_wp]
            d = distance_m(st.position, wp)
            if d <= cfg.waypoint_radius:
                visited = list(st.visited) if st.visited else [False] * len(plan.waypoints)
                visited[st.next_wp] = True
                st.visited = tuple(visited)
                events.append(Event(now, "waypoint-reached", {
                    "index": st.next_wp, "distance_m": round(d, 2)}))
                st.next_wp += 1
        if st.next_wp >= len(plan.waypoints):
            st.mode = FlightMode.RETURN_TO_BASE
            events.append(Event(now, "mission-complete", {}))
            events.append(Event(now, "mode-change", {"mode": st.mode.value,
                                                     "reason": "mission-complete"}))
    elif st.mode == FlightMode.RETURN_TO_BASE and plan is not None:
        if distance_m(st.position, plan.home) <= cfg.loiter_radius:
            st.mode = FlightMode.LOITER
            events.append(Event(now, "mode-change", {"mode": st.mode.value,
                                                     "reason": "arrived-home"}))

    # --- battery draw from the partial-load table at the current throttle
    if params.load_table and st.throttle > 0:
        amps = partial_load_interpolate(params.load_table, st.throttle).current_a
        drawn_mah = amps * dt * 1000.0 / 3600.0
        st.battery_remaining = max(0.0, st.battery_remaining - drawn_mah)
        low_mark = params.battery_low_fraction * st.battery_capacity
        if st.battery_remaining <= low_mark and not st.battery_low_sent:
            st.battery_low_sent = True
            events.append(Event(now, "battery-low", {
                "remaining_mah": round(st.battery_remaining, 1)}))
        if st.battery_remaining == 0.0:
            st.crashed = True
            events.append(Event(now, "battery-empty", {"emergency": True}))

    st.attitude_error *= math.exp(-dt / params.attitude_tau_s)
    st.clock = now
    return st, events
