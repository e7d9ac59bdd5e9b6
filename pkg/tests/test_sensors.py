"""Sensor math: MQ resistance/calibration, curve inversion, dust window, limits."""
import math
import random

import pytest
from hypothesis import given, strategies as st

from uavaq import sensors as sn
from uavaq.sensors import (
    APPENDIX_CURVES, CO_CURVE, O3_CURVE, CalibrationParams, GasId, WhoVerdict,
)

PARAMS = CalibrationParams()


class TestMqResistance:
    def test_full_scale_is_zero(self):
        assert sn.mq_resistance(1023, 5.0) == 0.0

    def test_direct_evaluation(self):
        assert sn.mq_resistance(340, 5.0) == pytest.approx(10.044117647058824)

    def test_zero_adc_rejected(self):
        with pytest.raises(sn.SensorError):
            sn.mq_resistance(0, 5.0)

    def test_out_of_range_rejected(self):
        with pytest.raises(sn.SensorError):
            sn.mq_resistance(1024, 5.0)
        with pytest.raises(sn.SensorError):
            sn.mq_resistance(-3, 5.0)


class TestMqCalibrate:
    def test_uniform_samples(self):
        ro = sn.mq_calibrate([340] * 50, PARAMS)
        assert ro == pytest.approx(10.044117647058824 / 9.83)

    def test_identity_factor(self):
        p = CalibrationParams(clean_air_factor=1.0)
        samples = [200, 340, 512]
        expected = sum(sn.mq_resistance(s, 5.0) for s in samples) / 3
        assert sn.mq_calibrate(samples, p) == pytest.approx(expected)

    def test_against_brute_force_mean(self):
        rng = random.Random(7)
        samples = [rng.randint(1, 1023) for _ in range(50)]
        # independent oracle: accumulate then divide, as the board code does
        acc = 0.0
        for s in samples:
            acc += 5.0 * (1023 - s) / s
        oracle = (acc / 50) / 9.83
        assert sn.mq_calibrate(samples, PARAMS) == oracle

    def test_empty_rejected(self):
        with pytest.raises(sn.SensorError):
            sn.mq_calibrate([], PARAMS)


class TestGasCurves:
    def test_co_cancellation_point(self):
        # ratio 10^p1 cancels the slope term, leaving 10^p0
        assert sn.gas_ppm(10 ** 0.72, CO_CURVE) == pytest.approx(10 ** 2.3, rel=1e-9)

    def test_o3_cancellation_point(self):
        assert sn.gas_ppm(10 ** 0.69, O3_CURVE) == pytest.approx(4.897788193684462)

    def test_forward_inverse_example(self):
        assert sn.curve_forward(199.5, CO_CURVE) == pytest.approx(5.248309209109742)

    def test_anchor_point(self):
        for curve in APPENDIX_CURVES:
            assert sn.curve_forward(10 ** curve.p0, curve) == pytest.approx(
                10 ** curve.p1, rel=1e-9)

    @given(st.floats(min_value=1.0, max_value=1e4),
           st.sampled_from(range(len(APPENDIX_CURVES))))
    def test_round_trip_identity(self, ppm, idx):
        curve = APPENDIX_CURVES[idx]
        back = sn.gas_ppm(sn.curve_forward(ppm, curve), curve)
        assert abs(back - ppm) / ppm < 1e-6

    @given(st.floats(min_value=0.01, max_value=100.0),
           st.sampled_from(range(len(APPENDIX_CURVES))))
    def test_round_trip_other_direction(self, ratio, idx):
        curve = APPENDIX_CURVES[idx]
        back = sn.curve_forward(sn.gas_ppm(ratio, curve), curve)
        assert abs(back - ratio) / ratio < 1e-6

    def test_nonpositive_rejected(self):
        with pytest.raises(sn.SensorError):
            sn.gas_ppm(0.0, CO_CURVE)
        with pytest.raises(sn.SensorError):
            sn.curve_forward(-1.0, CO_CURVE)

    def test_ln_compat_matches_board_source(self):
        # bit-for-bit with pow(10, ((log(r) - p1)/p2 + p0)), C log being ln
        r = 3.7
        expected = 10.0 ** (((math.log(r) - CO_CURVE.p1) / CO_CURVE.p2) + CO_CURVE.p0)
        assert sn.gas_ppm(r, CO_CURVE, ln_compat=True) == expected
        assert sn.gas_ppm(r, CO_CURVE, ln_compat=True, truncate=True) == float(int(expected))


class TestMq135:
    REG = sn.load_curve_registry()

    def test_anchor_gives_atmospheric_co2(self):
        curve = self.REG.curve(GasId.CO2)
        rzero = self.REG.co2_rzero_kohm
        # at the curve's anchor ratio the output is the clean-air anchor ppm
        anchor_ppm = 10 ** curve.p0
        ratio = sn.curve_forward(anchor_ppm, curve)
        rs = ratio * rzero
        raw = round(1023 * 10.0 / (10.0 + rs))
        got = sn.mq135_co2_ppm(raw, rzero, curve, rl_kohm=10.0)
        # ADC quantization dominates the error here
        assert abs(got - anchor_ppm) / anchor_ppm < 0.05
        assert anchor_ppm == pytest.approx(397.13, rel=1e-6)

    def test_full_scale_rejected(self):
        with pytest.raises(sn.SensorError):
            sn.mq135_co2_ppm(1023, self.REG.co2_rzero_kohm, self.REG.curve(GasId.CO2))

    def test_monotone_higher_raw_higher_ppm(self):
        curve = self.REG.curve(GasId.CO2)
        vals = [sn.mq135_co2_ppm(raw, self.REG.co2_rzero_kohm, curve)
                for raw in (100, 300, 500, 700, 900)]
        assert all(a < b for a, b in zip(vals, vals[1:]))


class TestDust:
    def test_baseline(self):
        assert sn.dust_concentration(0.0) == 0.62

    def test_polynomial_points(self):
        assert sn.dust_concentration(1.0) == pytest.approx(517.92)
        assert sn.dust_concentration(2.0) == pytest.approx(1034.22)

    def test_out_of_range_rejected(self):
        with pytest.raises(sn.SensorError):
            sn.dust_concentration(-0.1)
        with pytest.raises(sn.SensorError):
            sn.dust_concentration(100.1)

    def test_strictly_increasing(self):
        xs = [i * 0.5 for i in range(201)]
        ys = [sn.dust_concentration(x) for x in xs]
        assert all(a < b for a, b in zip(ys, ys[1:]))

    def test_window_no_pulses(self):
        s = sn.DustSampler(window_ms=2000)
        assert s.update(0.0, 1000.0) is None
        assert s.update(0.0, 2000.0) == pytest.approx(0.62)

    def test_window_ratio_one(self):
        s = sn.DustSampler(window_ms=2000)
        s.update(20_000.0, 1000.0)
        out = s.update(0.0, 2000.0)
        assert out == pytest.approx(517.92)

    def test_saturated_window_caps_at_100(self):
        s = sn.DustSampler(window_ms=2000)
        s.update(2000 * 1000.0, 500.0)   # low the entire window
        s.update(2000 * 1000.0, 1000.0)  # excess cannot push past the window
        assert s.lpo_us <= 2000 * 1000.0
        out = s.update(0.0, 2000.0)
        assert out == pytest.approx(sn.dust_concentration(100.0))

    def test_accumulator_resets(self):
        s = sn.DustSampler(window_ms=2000)
        s.update(20_000.0, 2000.0)
        assert s.lpo_us == 0.0


class TestAirflow:
    def test_identity_at_rest(self):
        assert sn.airflow_adjust(100.0, 0.0, 0.05) == 100.0

    def test_identity_with_zero_coeff(self):
        assert sn.airflow_adjust(100.0, 30.0, 0.0) == 100.0

    def test_halving(self):
        assert sn.airflow_adjust(100.0, 20.0, 0.05) == pytest.approx(50.0)

    def test_negative_speed_rejected(self):
        with pytest.raises(sn.SensorError):
            sn.airflow_adjust(100.0, -1.0, 0.05)


class TestWhoCheck:
    LIMITS = sn.load_who_limits()

    def test_co_one_hour_exceeded(self):
        verdict, lim = sn.who_check("co", 36.0, "1h", self.LIMITS)
        assert verdict is WhoVerdict.EXCEEDED
        assert lim.limit_value == 35

    def test_boundary_is_ok(self):
        verdict, _ = sn.who_check("co", 9.0, "8h", self.LIMITS)
        assert verdict is WhoVerdict.OK

    def test_co2_exceeded(self):
        verdict, lim = sn.who_check("co2", 5500.0, "8h", self.LIMITS)
        assert verdict is WhoVerdict.EXCEEDED
        assert lim.limit_value == 5000

    def test_unknown_pair_rejected(self):
        with pytest.raises(sn.SensorError):
            sn.who_check("co", 1.0, "annual", self.LIMITS)

    def test_monotone_in_value(self):
        for lim in self.LIMITS:
            trigger = lim.limit_value * 1.01
            v1, _ = sn.who_check(lim.parameter, trigger, lim.window, self.LIMITS)
            assert v1 is WhoVerdict.EXCEEDED
            for factor in (1.5, 3.0, 10.0):
                v2, _ = sn.who_check(lim.parameter, trigger * factor, lim.window, self.LIMITS)
                assert v2 is WhoVerdict.EXCEEDED


class TestSuiteWarmup:
    def make_suite(self):
        cfg = sn.SuiteConfig(registry=sn.load_curve_registry(),
                             mq_warmup_s=30.0, dust_warmup_s=60.0)
        return sn.SensorSuite(cfg, now_s=0.0)

    TRUE_PPM = {GasId.LPG: 5.0, GasId.CO: 3.0, GasId.SMOKE: 4.0,
                GasId.O3: 0.03, GasId.CO2: 450.0}

    def test_frames_invalid_during_warmup(self):
        suite = self.make_suite()
        frame = suite.sample(self.TRUE_PPM, 41.4, 23.4, 0.0, 0.0, now_s=5.0)
        assert not frame.valid
        assert suite.warm_up_left(5.0) == pytest.approx(55.0)

    def test_frames_valid_after_warmup(self):
        suite = self.make_suite()
        frame = suite.sample(self.TRUE_PPM, 41.4, 23.4, 0.0, 0.0, now_s=61.0)
        assert frame.valid
        assert suite.warm_up_left(61.0) == 0.0

    def test_no_unflagged_frame_during_warmup(self):
        suite = self.make_suite()
        for t in range(0, 60, 7):
            frame = suite.sample(self.TRUE_PPM, 41.4, 23.4, 0.0, 0.0, now_s=float(t))
            assert frame.valid == suite.warmed_up(float(t))

    def test_readback_tracks_truth(self):
        suite = self.make_suite()
        frame = suite.sample(self.TRUE_PPM, 41.4, 23.4, 0.0, 0.0, now_s=120.0)
        # CO2 round trips through the synthetic ADC within quantization error
        assert abs(frame.co2 - 450.0) / 450.0 < 0.1

    def test_uncorrected_dust_rises_with_airspeed(self):
        readings = []
        for speed in (0.0, 10.0, 20.0, 30.0):
            suite = self.make_suite()
            suite.sample(self.TRUE_PPM, 41.4, 23.4, 15_000.0, speed, now_s=1.0)
            frame = suite.sample(self.TRUE_PPM, 41.4, 23.4, 0.0, speed, now_s=2.5)
            readings.append(frame.dust)
        assert all(a < b for a, b in zip(readings, readings[1:]))

    def test_airflow_correction_flattens_dust(self):
        cfg = sn.SuiteConfig(registry=sn.load_curve_registry(), airflow_coeff=0.02,
                             airflow_sim_coeff=0.02, mq_warmup_s=1.0, dust_warmup_s=1.0)
        readings = []
        for speed in (0.0, 15.0, 30.0):
            suite = sn.SensorSuite(cfg, now_s=0.0)
            suite.sample(self.TRUE_PPM, 41.4, 23.4, 15_000.0, speed, now_s=1.0)
            frame = suite.sample(self.TRUE_PPM, 41.4, 23.4, 0.0, speed, now_s=2.5)
            readings.append(frame.dust)
        assert max(readings) - min(readings) < 0.05 * max(readings)
