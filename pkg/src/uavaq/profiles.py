"""Sizing profiles: named parameter sets feeding the airframe math.

A profile is a flat JSON object (see data/profiles documentation in the
README). The shipped "stick60-paper" profile reproduces the published
worked example for the Stick-60 trainer airframe, including its quirks:
the weight force is pinned at the rounded 40 N, the take-off and cruise
force terms use slightly different wing areas, and the power row is
evaluated at a pinned reference speed.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .flightdyn import (
    AirplaneConfig,
    ConfigError,
    Environment,
    PartialLoadRow,
    PropulsionConfig,
)

BUILTIN_PROFILES = ("stick60-paper",)


@dataclass(frozen=True)
class SizingProfile:
    name: str
    mass_kg: float
    chord_m: float
    wing_area_takeoff_m2: float
    wing_area_cruise_m2: float
    cl_takeoff: float
    cl_cruise: float
    cd: float
    mu: float
    env: Environment
    propulsion: PropulsionConfig
    partial_load: tuple[PartialLoadRow, ...]
    components_g: tuple[tuple[str, float], ...]
    max_payload_g: float
    weight_force_n: float | None = None   # pinned rounded weight, optional
    drag_ref_speed_ms: float | None = None
    power_eval_speed_ms: float | None = None
    cruise_throttle_pct: float = 70.0
    notes: str = ""

    def airplane_takeoff(self) -> AirplaneConfig:
        """Airframe variant used for the take-off (lift) terms."""
        return AirplaneConfig(self.mass_kg, self.wing_area_takeoff_m2, self.chord_m,
                              self.cl_takeoff, self.cd, self.mu)

    def airplane_cruise(self) -> AirplaneConfig:
        """Airframe variant used for the cruise (drag/polar) terms."""
        return AirplaneConfig(self.mass_kg, self.wing_area_cruise_m2, self.chord_m,
                              self.cl_cruise, self.cd, self.mu)


def _rows(raw) -> tuple[PartialLoadRow, ...]:
    return tuple(PartialLoadRow(*map(float, r)) for r in raw)


def profile_from_dict(doc: dict) -> SizingProfile:
    """Build a profile from its JSON document, validating every field."""
    try:
        env = Environment(
            air_density=float(doc.get("air_density_kgm3", 1.225)),
            kinematic_viscosity=float(doc.get("kinematic_viscosity_m2s", 1.5111e-5)),
            gravity=float(doc.get("gravity_ms2", 9.81)),
        )
        prop = PropulsionConfig(
            kv=float(doc["kv_rpm_per_v"]),
            voltage=float(doc["voltage_v"]),
            prop_diameter_in=float(doc["prop_diameter_in"]),
            prop_pitch_in=float(doc["prop_pitch_in"]),
            motor_efficiency=float(doc["motor_efficiency"]),
            battery_capacity_mah=float(doc["battery_capacity_mah"]),
            usable_fraction=float(doc.get("usable_fraction", 0.9)),
        )
        profile = SizingProfile(
            name=str(doc["name"]),
            mass_kg=float(doc["mass_kg"]),
            chord_m=float(doc["chord_m"]),
            wing_area_takeoff_m2=float(doc["wing_area_takeoff_m2"]),
            wing_area_cruise_m2=float(doc.get("wing_area_cruise_m2", doc["wing_area_takeoff_m2"])),
            cl_takeoff=float(doc["cl_takeoff"]),
            cl_cruise=float(doc.get("cl_cruise", doc["cl_takeoff"])),
            cd=float(doc["cd"]),
            mu=float(doc["mu"]),
            env=env,
            propulsion=prop,
            partial_load=_rows(doc.get("partial_load", [])),
            components_g=tuple((str(k), float(v)) for k, v in doc.get("components_g", {}).items()),
            max_payload_g=float(doc.get("max_payload_g", 3000.0)),
            weight_force_n=(None if doc.get("weight_force_n") is None
                            else float(doc["weight_force_n"])),
            drag_ref_speed_ms=(None if doc.get("drag_ref_speed_ms") is None
                               else float(doc["drag_ref_speed_ms"])),
            power_eval_speed_ms=(None if doc.get("power_eval_speed_ms") is None
                                 else float(doc["power_eval_speed_ms"])),
            cruise_throttle_pct=float(doc.get("cruise_throttle_pct", 70.0)),
            notes=str(doc.get("notes", "")),
        )
    except KeyError as exc:
        raise ConfigError(f"profile is missing required field {exc.args[0]!r}") from None
    # dataclass construction above already range-checked env/airframe/prop;
    # check the area variants too since they bypass AirplaneConfig until used
    profile.airplane_takeoff()
    profile.airplane_cruise()
    return profile


def load_profile(name_or_path: str) -> SizingProfile:
    """Load a built-in profile by name or any profile JSON by path."""
    if name_or_path in BUILTIN_PROFILES:
        text = resources.files("uavaq.data").joinpath(f"profile_{name_or_path}.json").read_text()
    else:
        p = Path(name_or_path)
        if not p.exists():
            raise ConfigError(
                f"unknown profile {name_or_path!r}: not a built-in "
                f"({', '.join(BUILTIN_PROFILES)}) and no such file")
        text = p.read_text()
    return profile_from_dict(json.loads(text))
