"""Airframe and propulsion math for a small fixed-wing electric UAV.

Pure functions over value types: sizing (take-off speed, Reynolds number,
thrust, drag, net force, power) plus the battery/run-time model and the
motor partial-load table used by the mission simulator for current draw.
All functions are safe to call concurrently; nothing here holds state.

Units are SI except where the empirical propeller thrust fit requires
inches (propeller diameter/pitch) and the battery model uses mAh; those
fields carry their unit in the name.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

# Empirical constants of the propeller dynamic-thrust fit (diameter and
# pitch in inches, airspeed in m/s, result in newtons).
THRUST_K1 = 4.3294399e-8
THRUST_K2 = 4.3294399e-4

GRAVITY_STD = 9.81  # m/s^2


class ConfigError(ValueError):
    """A config value violates its physical range."""


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ConfigError(msg)


@dataclass(frozen=True)
class Environment:
    """Ambient air and gravity around the airfield."""

    air_density: float = 1.225           # kg/m^3
    kinematic_viscosity: float = 1.5111e-5  # m^2/s
    gravity: float = GRAVITY_STD         # m/s^2

    def __post_init__(self) -> None:
        _require(self.air_density > 0, "air_density must be > 0")
        _require(self.kinematic_viscosity > 0, "kinematic_viscosity must be > 0")
        _require(self.gravity > 0, "gravity must be > 0")


@dataclass(frozen=True)
class AirplaneConfig:
    """Airframe parameters of the fixed-wing platform.

    chord is the wing width used for the Reynolds number; rolling_friction_mu
    is the sliding-friction coefficient of the take-off surface.
    """

    mass: float                 # kg
    wing_area: float            # m^2
    chord: float                # m
    lift_coeff: float           # Cl, dimensionless
    drag_coeff: float           # Cd, dimensionless
    rolling_friction_mu: float  # dimensionless

    def __post_init__(self) -> None:
        _require(self.mass > 0, "mass must be > 0")
        _require(self.wing_area > 0, "wing_area must be > 0")
        _require(self.chord > 0, "chord must be > 0")
        _require(0 < self.lift_coeff <= 2, "lift_coeff must be in (0, 2]")
        _require(self.drag_coeff >= 0, "drag_coeff must be >= 0")
        _require(0 <= self.rolling_friction_mu < 1, "rolling_friction_mu must be in [0, 1)")


@dataclass(frozen=True)
class PropulsionConfig:
    """Motor, propeller and battery parameters of the electric drive."""

    kv: float                   # rpm per volt, unloaded
    voltage: float              # V
    prop_diameter_in: float     # inches
    prop_pitch_in: float        # inches
    motor_efficiency: float     # fraction (0, 1]
    battery_capacity_mah: float
    usable_fraction: float = 0.9  # max discharge depth

    def __post_init__(self) -> None:
        _require(self.kv > 0, "kv must be > 0")
        _require(self.voltage > 0, "voltage must be > 0")
        _require(self.prop_diameter_in > 0, "prop_diameter_in must be > 0")
        _require(self.prop_pitch_in > 0, "prop_pitch_in must be > 0")
        _require(0 < self.motor_efficiency <= 1, "motor_efficiency must be in (0, 1]")
        _require(self.battery_capacity_mah > 0, "battery_capacity_mah must be > 0")
        _require(0 < self.usable_fraction <= 1, "usable_fraction must be in (0, 1]")


class PartialLoadRow(NamedTuple):
    """One row of the motor partial-load table."""

    rpm: float
    throttle_pct: float
    current_a: float
    thrust_g: float
    run_time_min: float


class ThrustResult(NamedTuple):
    newtons: float
    clamped: bool  # true when the fit went negative and was floored at 0


class ThrustWeight(NamedTuple):
    ratio: float
    feasible: bool  # ratio >= 1 allows vertical acceleration


class PowerBalance(NamedTuple):
    thrust_n: float
    drag_n: float
    friction_n: float
    net_force_n: float   # along the flight axis
    accel: float         # m/s^2
    p_mech_w: float
    p_elec_w: float
    thrust_clamped: bool


def weight_force(cfg: AirplaneConfig, env: Environment) -> float:
    """Weight in newtons: gravity times mass."""
    return cfg.mass * env.gravity


def takeoff_velocity(cfg: AirplaneConfig, env: Environment, weight_n: float | None = None) -> float:
    """Minimum airspeed (m/s) at which lift equals weight.

    V = sqrt(2 Fw / (Cl A rho)). weight_n overrides the computed m*g, which
    lets a profile pin a rounded weight figure.
    """
    fw = weight_force(cfg, env) if weight_n is None else weight_n
    denom = cfg.lift_coeff * cfg.wing_area * env.air_density
    if denom <= 0:
        raise ConfigError("Cl * A * rho must be positive")
    return math.sqrt(2.0 * fw / denom)


def lift_coefficient(cfg: AirplaneConfig, env: Environment, v: float,
                     weight_n: float | None = None) -> float:
    """Lift coefficient needed to hold weight at airspeed v (inverse of
    takeoff_velocity at fixed weight)."""
    if v <= 0:
        raise ConfigError("airspeed must be > 0")
    fw = weight_force(cfg, env) if weight_n is None else weight_n
    return fw / (0.5 * env.air_density * v * v * cfg.wing_area)


def reynolds(env: Environment, v: float, chord: float) -> float:
    """Reynolds number V*chord/nu selecting the applicable airfoil polar."""
    return v * chord / env.kinematic_viscosity


def motor_rpm(prop: PropulsionConfig) -> float:
    """Unloaded motor speed: Kv times supply voltage."""
    return prop.kv * prop.voltage


def dynamic_thrust(prop: PropulsionConfig, rpm: float, v0: float) -> ThrustResult:
    """Propeller thrust (N) at forward airspeed v0; static thrust at v0=0.

    Empirical fit in rpm, inches and m/s. Past the zero crossing the fit
    goes negative, which is non-physical here; the result is floored at 0
    and flagged.
    """
    if rpm < 0:
        raise ConfigError("rpm must be >= 0")
    ft = (THRUST_K1 * rpm * (prop.prop_diameter_in ** 3.5 / math.sqrt(prop.prop_pitch_in))
          * (THRUST_K2 * rpm * prop.prop_pitch_in - v0))
    if ft < 0:
        return ThrustResult(0.0, True)
    return ThrustResult(ft, False)


def drag_force(cfg: AirplaneConfig, env: Environment, v: float) -> float:
    """Aerodynamic drag 0.5 Cd rho A V^2 in newtons."""
    if v < 0:
        raise ConfigError("airspeed must be >= 0")
    return 0.5 * cfg.drag_coeff * env.air_density * cfg.wing_area * v * v


def rolling_friction(cfg: AirplaneConfig, weight_n: float) -> float:
    """Ground-roll friction mu * Fw in newtons."""
    if weight_n < 0:
        raise ConfigError("weight must be >= 0")
    return cfg.rolling_friction_mu * weight_n


def net_force_accel_power(cfg: AirplaneConfig, env: Environment, prop: PropulsionConfig,
                          v: float,
                          thrust_airspeed: float | None = None,
                          drag_airspeed: float | None = None,
                          weight_n: float | None = None) -> PowerBalance:
    """Force balance along the flight axis and the resulting motor power.

    Fx = Ft - Fd - Fr, a = Fx / m, P_mech = Fx * v, P_elec = P_mech / eta.
    v is the speed the power terms are evaluated at; thrust_airspeed and
    drag_airspeed default to v but can be pinned separately when a sizing
    chain evaluates each force at its own reference speed.
    """
    if v < 0:
        raise ConfigError("airspeed must be >= 0")
    fw = weight_force(cfg, env) if weight_n is None else weight_n
    thrust = dynamic_thrust(prop, motor_rpm(prop), v if thrust_airspeed is None else thrust_airspeed)
    fd = drag_force(cfg, env, v if drag_airspeed is None else drag_airspeed)
    fr = rolling_friction(cfg, fw)
    fx = thrust.newtons - fd - fr
    accel = fx / cfg.mass
    p_mech = fx * v
    p_elec = p_mech / prop.motor_efficiency
    return PowerBalance(thrust.newtons, fd, fr, fx, accel, p_mech, p_elec, thrust.clamped)


def thrust_to_weight(ft_n: float, fw_n: float) -> ThrustWeight:
    """Thrust-to-weight ratio; feasible (can accelerate upward) iff >= 1."""
    if fw_n <= 0:
        raise ConfigError("weight must be > 0")
    ratio = ft_n / fw_n
    return ThrustWeight(ratio, ratio >= 1.0)


def flight_time(prop: PropulsionConfig, current_draw_a: float) -> float:
    """Run time in minutes at a constant current draw.

    minutes = 60 * capacity_Ah * usable_fraction / I
    """
    if current_draw_a <= 0:
        raise ConfigError("current draw must be > 0")
    capacity_ah = prop.battery_capacity_mah / 1000.0
    return 60.0 * capacity_ah * prop.usable_fraction / current_draw_a


def flight_time_weighted(prop: PropulsionConfig,
                         duty: Sequence[tuple[float, float]]) -> float:
    """Run time under a mixed duty cycle: (time_fraction, current_A) pairs.

    The fractions must sum to 1; the result is the constant-draw run time at
    the duty-weighted average current. There is no authoritative mixed-load
    reference figure, so this stays a plain user-supplied weighting.
    """
    if not duty:
        raise ConfigError("duty cycle needs at least one segment")
    total_frac = sum(f for f, _ in duty)
    if abs(total_frac - 1.0) > 1e-9:
        raise ConfigError("duty-cycle fractions must sum to 1")
    if any(f < 0 or i <= 0 for f, i in duty):
        raise ConfigError("fractions must be >= 0 and currents > 0")
    avg_current = sum(f * i for f, i in duty)
    return flight_time(prop, avg_current)


def partial_load_interpolate(table: Sequence[PartialLoadRow], throttle_pct: float) -> PartialLoadRow:
    """Linear interpolation of the partial-load table at a throttle setting.

    Throttle outside the table range clamps to the end rows. The table must
    be non-empty and strictly increasing in rpm and throttle.
    """
    if not table:
        raise ConfigError("partial-load table is empty")
    for prev, cur in zip(table, table[1:]):
        _require(cur.rpm > prev.rpm and cur.throttle_pct > prev.throttle_pct,
                 "partial-load table must be strictly increasing in rpm and throttle")
    if throttle_pct <= table[0].throttle_pct:
        return table[0]
    if throttle_pct >= table[-1].throttle_pct:
        return table[-1]
    for lo, hi in zip(table, table[1:]):
        if lo.throttle_pct <= throttle_pct <= hi.throttle_pct:
            frac = (throttle_pct - lo.throttle_pct) / (hi.throttle_pct - lo.throttle_pct)
            lerp = lambda a, b: a + (b - a) * frac
            return PartialLoadRow(
                rpm=lerp(lo.rpm, hi.rpm),
                throttle_pct=throttle_pct,
                current_a=lerp(lo.current_a, hi.current_a),
                thrust_g=lerp(lo.thrust_g, hi.thrust_g),
                run_time_min=lerp(lo.run_time_min, hi.run_time_min),
            )
    raise AssertionError("unreachable: throttle bracketing failed")


def payload_budget(components: Sequence[tuple[str, float]], max_payload_g: float) -> tuple[float, bool]:
    """Sum component weights (grams); feasible iff total <= max_payload_g."""
    total = 0.0
    for name, grams in components:
        _require(grams >= 0, f"component {name!r} has negative weight")
        total += grams
    return total, total <= max_payload_g
