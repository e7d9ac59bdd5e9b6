"""Gas, dust and climate sensor math plus the simulated sensor suite.

Covers the MQ-family resistance and calibration arithmetic, the log-log
sensitivity curves (ratio -> ppm and the inverse used to synthesize ADC
counts from a true concentration), the optical dust sensor's low-pulse
occupancy window, airflow correction, warm-up gating and the ambient
concentration limit check.

Calibration and window state belong to one suite instance; distinct suites
can be driven from different threads without sharing anything.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from typing import Iterable, Optional

ADC_MAX = 1023


class SensorError(ValueError):
    pass


class GasId(str, Enum):
    LPG = "lpg"
    CO = "co"
    SMOKE = "smoke"
    O3 = "o3"
    CO2 = "co2"


@dataclass(frozen=True)
class GasCurve:
    """Log-log sensitivity line: (p0, p1) is a point, p2 the slope.

    ppm = 10 ** ((log10(Rs/Ro) - p1) / p2 + p0)
    """

    gas_id: GasId
    p0: float
    p1: float
    p2: float

    def __post_init__(self) -> None:
        if self.p2 == 0:
            raise SensorError("curve slope p2 must be nonzero")


# Sensitivity lines of the deployed MQ sensors (datasheet log-log points).
LPG_CURVE = GasCurve(GasId.LPG, 2.3, 0.21, -0.47)
CO_CURVE = GasCurve(GasId.CO, 2.3, 0.72, -0.34)
SMOKE_CURVE = GasCurve(GasId.SMOKE, 2.3, 0.53, -0.44)
O3_CURVE = GasCurve(GasId.O3, 0.69, 0.69, -0.76)

APPENDIX_CURVES = (LPG_CURVE, CO_CURVE, SMOKE_CURVE, O3_CURVE)


@dataclass(frozen=True)
class CalibrationParams:
    """Sampling plan and board constants for MQ calibration/readout."""

    rl_kohm: float = 5.0
    clean_air_factor: float = 9.83
    sample_count: int = 50
    sample_interval_ms: int = 500
    read_sample_count: int = 5
    read_interval_ms: int = 50

    def __post_init__(self) -> None:
        if self.rl_kohm <= 0:
            raise SensorError("load resistance must be > 0")
        if self.clean_air_factor <= 0:
            raise SensorError("clean-air factor must be > 0")
        if self.sample_count < 1 or self.read_sample_count < 1:
            raise SensorError("sample counts must be >= 1")


def mq_resistance(raw_adc: int, rl_kohm: float) -> float:
    """Sensor resistance (kOhm) from a 10-bit ADC count across load RL."""
    if raw_adc == 0:
        raise SensorError("raw_adc 0 would divide by zero")
    if not 1 <= raw_adc <= ADC_MAX:
        raise SensorError(f"raw_adc {raw_adc} outside 1..{ADC_MAX}")
    return rl_kohm * (ADC_MAX - raw_adc) / raw_adc


def mq_calibrate(samples: Iterable[int], params: CalibrationParams) -> float:
    """Clean-air baseline Ro (kOhm): mean sample resistance divided by the
    clean-air factor."""
    vals = [mq_resistance(s, params.rl_kohm) for s in samples]
    if not vals:
        raise SensorError("calibration needs at least one sample")
    return (sum(vals) / len(vals)) / params.clean_air_factor


def gas_ppm(rs_ro_ratio: float, curve: GasCurve, *, ln_compat: bool = False,
            truncate: bool = False) -> float:
    """Concentration in ppm from an Rs/Ro ratio via the sensitivity line.

    ln_compat switches the ratio logarithm to natural log, mirroring the
    original microcontroller source bit-for-bit (its curve points are
    base-10 coordinates but it called ln on the ratio); truncate mirrors
    that source's integer return.
    """
    if rs_ro_ratio <= 0:
        raise SensorError("Rs/Ro ratio must be > 0")
    logr = math.log(rs_ro_ratio) if ln_compat else math.log10(rs_ro_ratio)
    ppm = 10.0 ** (((logr - curve.p1) / curve.p2) + curve.p0)
    return float(int(ppm)) if truncate else ppm


def curve_forward(ppm: float, curve: GasCurve) -> float:
    """Rs/Ro ratio a sensor would show at a true concentration (exact
    algebraic inverse of gas_ppm); the simulation direction."""
    if ppm <= 0:
        raise SensorError("ppm must be > 0")
    return 10.0 ** (curve.p1 + curve.p2 * (math.log10(ppm) - curve.p0))


def synth_adc(ppm: float, curve: GasCurve, ro_kohm: float, rl_kohm: float) -> int:
    """Synthetic ADC count a sensor at baseline Ro would output at a true
    concentration. Quantized to the 10-bit grid, clamped to readable range."""
    rs = curve_forward(ppm, curve) * ro_kohm
    raw = round(ADC_MAX * rl_kohm / (rl_kohm + rs))
    return max(1, min(ADC_MAX - 1, raw))


def mq135_co2_ppm(raw_adc: int, rzero_kohm: float, curve: GasCurve,
                  rl_kohm: float = 10.0) -> float:
    """CO2 ppm from the MQ135 channel given its calibrated RZero.

    The sensitivity coefficients are a required input; no coefficient set
    for this sensor is treated as ground truth (the shipped registry entry
    is a datasheet fit, documented as unvalidated).
    """
    if rzero_kohm <= 0:
        raise SensorError("rzero must be > 0")
    rs = mq_resistance(raw_adc, rl_kohm)
    if rs == 0:
        raise SensorError("rs = 0 at full-scale ADC; ratio undefined")
    return gas_ppm(rs / rzero_kohm, curve)


# ---------------------------------------------------------------------------
# Optical dust sensor (low pulse occupancy)

def dust_concentration(lpo_ratio_pct: float) -> float:
    """Spec-sheet cubic mapping the low-pulse occupancy percentage to
    particle concentration (pcs/0.01cf scale)."""
    r = lpo_ratio_pct
    if not 0 <= r <= 100:
        raise SensorError(f"LPO ratio {r} outside [0, 100]")
    return 1.1 * r ** 3 - 3.8 * r ** 2 + 520.0 * r + 0.62


@dataclass
class DustSampler:
    """Accumulates low-pulse time over a fixed window, emitting one
    concentration per elapsed window."""

    window_ms: float = 2000.0
    lpo_us: float = 0.0
    window_start_ms: float = 0.0

    def update(self, pulse_low_us: float, now_ms: float) -> Optional[float]:
        if pulse_low_us < 0:
            raise SensorError("pulse duration must be >= 0")
        budget = self.window_ms * 1000.0 - self.lpo_us
        self.lpo_us += min(pulse_low_us, budget)  # cannot be low longer than the window
        if now_ms - self.window_start_ms < self.window_ms:
            return None
        ratio = min(100.0, self.lpo_us / (self.window_ms * 10.0))
        self.lpo_us = 0.0
        self.window_start_ms = now_ms
        return dust_concentration(ratio)


def airflow_adjust(dust_reading: float, airspeed_ms: float, coeff: float) -> float:
    """Compensate the dust channel for ram airflow inflating the count.

    corrected = reading / (1 + coeff * airspeed); coeff 0 disables. Climate
    channels are unaffected by airflow and never pass through here.
    """
    if airspeed_ms < 0:
        raise SensorError("airspeed must be >= 0")
    return dust_reading / (1.0 + coeff * airspeed_ms)


# ---------------------------------------------------------------------------
# Ambient concentration limits

class WhoVerdict(Enum):
    OK = "ok"
    EXCEEDED = "exceeded"


@dataclass(frozen=True)
class WhoLimit:
    parameter: str           # measurement parameter name
    window: str              # averaging window token: "1h", "8h", "annual"
    limit_value: float       # ppm for gases, ug/m3 for dust
    unit: str = "ppm"

    def __post_init__(self) -> None:
        if self.limit_value <= 0:
            raise SensorError("limit must be > 0")


WINDOW_SECONDS = {"1h": 3600.0, "8h": 8 * 3600.0, "24h": 24 * 3600.0,
                  "annual": 365.0 * 24 * 3600.0}


def load_who_limits(path: str | None = None) -> tuple[WhoLimit, ...]:
    """Load the ambient limit table (the shipped file mirrors the WHO
    permitted concentration rows the monitor enforces)."""
    if path is None:
        text = resources.files("uavaq.data").joinpath("who_limits.json").read_text()
    else:
        with open(path) as fh:
            text = fh.read()
    doc = json.loads(text)
    return tuple(WhoLimit(d["parameter"], d["window"], float(d["limit_value"]),
                          d.get("unit", "ppm")) for d in doc["limits"])


def who_check(parameter: str, averaged_value: float, window: str,
              limits: Iterable[WhoLimit]) -> tuple[WhoVerdict, Optional[WhoLimit]]:
    """Compare an averaged reading against the configured limit for the
    (parameter, window) pair. Equal to the limit is still OK."""
    for lim in limits:
        if lim.parameter == parameter and lim.window == window:
            if averaged_value > lim.limit_value:
                return WhoVerdict.EXCEEDED, lim
            return WhoVerdict.OK, lim
    raise SensorError(f"no configured limit for {parameter!r} over {window!r}")


# ---------------------------------------------------------------------------
# Curve registry (file-configurable coefficients and board constants)

@dataclass(frozen=True)
class CurveRegistry:
    curves: dict[GasId, GasCurve]
    rl_kohm: dict[GasId, float]
    clean_air_factor: float
    co2_rzero_kohm: float

    def curve(self, gas: GasId) -> GasCurve:
        try:
            return self.curves[gas]
        except KeyError:
            raise SensorError(f"no curve registered for {gas.value}") from None


def load_curve_registry(path: str | None = None) -> CurveRegistry:
    if path is None:
        text = resources.files("uavaq.data").joinpath("curves.json").read_text()
    else:
        with open(path) as fh:
            text = fh.read()
    doc = json.loads(text)
    curves = {}
    rl = {}
    for key, entry in doc["curves"].items():
        gas = GasId(key)
        curves[gas] = GasCurve(gas, float(entry["p0"]), float(entry["p1"]), float(entry["p2"]))
        rl[gas] = float(entry.get("rl_kohm", 5.0))
    return CurveRegistry(curves=curves, rl_kohm=rl,
                         clean_air_factor=float(doc.get("clean_air_factor", 9.83)),
                         co2_rzero_kohm=float(doc.get("co2_rzero_kohm", 206.85)))


# ---------------------------------------------------------------------------
# Simulated sensor suite

@dataclass
class SuiteConfig:
    registry: CurveRegistry
    calibration: CalibrationParams = field(default_factory=CalibrationParams)
    mq_warmup_s: float = 30.0      # simulated-clock stand-in for the 24 h soak
    dust_warmup_s: float = 60.0    # per the dust sensor's stabilization figure
    dust_window_ms: float = 2000.0
    airflow_coeff: float = 0.0     # correction disabled by default
    airflow_sim_coeff: float = 0.02  # how strongly ram air inflates the raw dust channel
    ln_compat: bool = False
    truncate_gas: bool = False


@dataclass
class SuiteState:
    ro_kohm: dict[GasId, float]
    warm_up_remaining_s: float
    dust: DustSampler
    last_dust: float = 0.62  # window output at zero occupancy
    started_at: float = 0.0


class SensorSuite:
    """The simulated on-board sensor stack: calibrated MQ channels, the
    dust window, and climate passthrough, with warm-up gating.

    Readings taken while warm_up_remaining > 0 are flagged invalid and must
    never enter a telemetry frame unflagged.
    """

    def __init__(self, config: SuiteConfig, now_s: float = 0.0):
        self.config = config
        reg = config.registry
        # clean-air calibration against the synthetic ADC at baseline ppm
        ro = {}
        for gas in (GasId.LPG, GasId.CO, GasId.SMOKE, GasId.O3):
            ro[gas] = 10.0  # board default before calibration
        self.state = SuiteState(ro_kohm=ro,
                                warm_up_remaining_s=max(config.mq_warmup_s, config.dust_warmup_s),
                                dust=DustSampler(window_ms=config.dust_window_ms,
                                                 window_start_ms=now_s * 1000.0),
                                started_at=now_s)

    def calibrate(self, clean_air_samples: dict[GasId, list[int]]) -> None:
        """Run the clean-air calibration for each MQ channel."""
        for gas, samples in clean_air_samples.items():
            params = CalibrationParams(
                rl_kohm=self.config.registry.rl_kohm[gas],
                clean_air_factor=self.config.registry.clean_air_factor,
            )
            self.state.ro_kohm[gas] = mq_calibrate(samples, params)

    def warmed_up(self, now_s: float) -> bool:
        return now_s - self.state.started_at >= self.state.warm_up_remaining_s

    def warm_up_left(self, now_s: float) -> float:
        return max(0.0, self.state.warm_up_remaining_s - (now_s - self.state.started_at))

    def read_gas(self, gas: GasId, raw_adc: int) -> float:
        reg = self.config.registry
        if gas == GasId.CO2:
            return mq135_co2_ppm(raw_adc, reg.co2_rzero_kohm, reg.curve(gas),
                                 reg.rl_kohm.get(gas, 10.0))
        rs = mq_resistance(raw_adc, reg.rl_kohm[gas])
        return gas_ppm(rs / self.state.ro_kohm[gas], reg.curve(gas),
                       ln_compat=self.config.ln_compat,
                       truncate=self.config.truncate_gas)

    def sample(self, true_ppm: dict[GasId, float], humidity: float, temp: float,
               dust_lpo_us: float, airspeed_ms: float, now_s: float):
        """One acquisition cycle; returns the frame fields plus validity.

        true_ppm holds the ambient ground truth the synthetic ADC stage
        converts to counts; the read side then runs the normal calibrated
        path. Ram airflow inflates the raw dust channel before optional
        correction.
        """
        from .protocol import SensorFrame  # local import to keep layering one-way

        reg = self.config.registry
        readings: dict[GasId, float] = {}
        for gas in (GasId.O3, GasId.CO, GasId.LPG, GasId.SMOKE):
            ro = self.state.ro_kohm[gas] if gas != GasId.CO2 else reg.co2_rzero_kohm
            raw = synth_adc(true_ppm[gas], reg.curve(gas), ro, reg.rl_kohm[gas])
            readings[gas] = self.read_gas(gas, raw)
        raw_co2 = synth_adc(true_ppm[GasId.CO2], reg.curve(GasId.CO2),
                            reg.co2_rzero_kohm, reg.rl_kohm.get(GasId.CO2, 10.0))
        readings[GasId.CO2] = self.read_gas(GasId.CO2, raw_co2)

        inflated = dust_lpo_us * (1.0 + self.config.airflow_sim_coeff * airspeed_ms)
        out = self.state.dust.update(inflated, now_s * 1000.0)
        if out is not None:
            self.state.last_dust = airflow_adjust(out, airspeed_ms, self.config.airflow_coeff)

        valid = self.warmed_up(now_s)
        return SensorFrame(
            humidity=round(humidity, 2),
            temp=round(temp, 2),
            dust=round(self.state.last_dust, 2),
            o3=round(readings[GasId.O3], 2),
            co2=round(readings[GasId.CO2], 2),
            co=int(readings[GasId.CO]),
            lpg=int(readings[GasId.LPG]),
            smoke=int(readings[GasId.SMOKE]),
            valid=valid,
        )
