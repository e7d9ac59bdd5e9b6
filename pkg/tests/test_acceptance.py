"""Acceptance suite: one test per release criterion, at its stated tolerance.

Run with `pytest tests/test_acceptance.py -v -s` to get the one-line
PASS/FAIL verdicts on stdout alongside the pytest report.
"""
import math
import random
import statistics
import sys
import time

import pytest

from uavaq import flightdyn as fd
from uavaq import mission as ms
from uavaq import nmea
from uavaq import protocol as pt
from uavaq import sensors as sn
from uavaq.linksim import LinkConfig, LinkSimulator
from uavaq.mission import MissionPlan
from uavaq.profiles import load_profile
from uavaq.simrun import RunSpec, load_mission, run
from uavaq.store import Measurement, MeasurementStore, QueryFilter, to_epoch
from uavaq.uavnode import video_schedule

PROFILE = load_profile("stick60-paper")


def verdict(name: str, ok: bool) -> None:
    print(f"ACCEPTANCE {name}: {'PASS' if ok else 'FAIL'}", file=sys.stderr)
    assert ok, f"criterion failed: {name}"


def rel_err(a, b):
    return abs(a - b) / abs(b)


class TestAcceptance:
    def test_01_flight_dynamics_golden_suite(self):
        t0 = time.perf_counter()
        env = PROFILE.env
        prop = PROFILE.propulsion
        fw = PROFILE.weight_force_n
        v = fd.takeoff_velocity(PROFILE.airplane_takeoff(), env, weight_n=fw)
        re = fd.reynolds(env, v, PROFILE.chord_m)
        thrust = fd.dynamic_thrust(prop, fd.motor_rpm(prop), v)
        balance = fd.net_force_accel_power(
            PROFILE.airplane_cruise(), env, prop, v=PROFILE.power_eval_speed_ms,
            thrust_airspeed=v, drag_airspeed=PROFILE.drag_ref_speed_ms, weight_n=fw)
        elapsed = time.perf_counter() - t0
        checks = [
            abs(v - 10.1) <= 0.05,
            rel_err(re, 200_520) <= 1e-3,
            rel_err(thrust.newtons, 50.0) <= 0.01,
            rel_err(balance.drag_n, 0.81) <= 0.01,
            abs(balance.friction_n - 0.2) <= 1e-9,
            rel_err(balance.net_force_n, 49.0) <= 0.01,
            rel_err(balance.accel, 12.25) <= 0.01,
            rel_err(balance.p_elec_w, 652.0) <= 0.01,
            elapsed < 1.0,
        ]
        verdict("flight-dynamics worked values", all(checks))

    def test_02_flight_time_table(self):
        ok = (rel_err(fd.flight_time(PROFILE.propulsion, 23.3), 13.9) <= 0.02
              and rel_err(fd.flight_time(PROFILE.propulsion, 62.4), 5.2) <= 0.02)
        verdict("flight-time model vs published rows", ok)

    def test_03_sensor_curve_round_trip(self):
        rng = random.Random(0)
        worst = 0.0
        for curve in sn.APPENDIX_CURVES:
            for _ in range(2000):
                ppm = 10 ** rng.uniform(0.0, 4.0)  # [1, 10^4]
                back = sn.gas_ppm(sn.curve_forward(ppm, curve), curve)
                worst = max(worst, abs(back - ppm) / ppm)
        ok = worst < 1e-6 and sn.dust_concentration(0.0) == 0.62
        verdict("gas curve inversion + dust baseline", ok)

    def test_04_who_boundary_grid(self):
        limits = sn.load_who_limits()
        ok = len(limits) >= 6
        for lim in limits:
            at_limit, _ = sn.who_check(lim.parameter, lim.limit_value, lim.window, limits)
            eps = max(lim.limit_value * 1e-9, 1e-12)
            above, _ = sn.who_check(lim.parameter, lim.limit_value + eps, lim.window, limits)
            ok = ok and at_limit is sn.WhoVerdict.OK and above is sn.WhoVerdict.EXCEEDED
        verdict(f"ambient limit boundary grid ({len(limits)} rows)", ok)

    def test_05_mission_scenario(self):
        t0 = time.perf_counter()
        result = run(RunSpec(plan=load_mission(None), profile=PROFILE,
                             duration_s=300.0, seed=42, figures=False))
        elapsed = time.perf_counter() - t0
        reached = [d for _, k, d in result.events if k == "waypoint-reached"]
        modes = result.summary["mode_sequence"]
        plan = load_mission(None)
        too_close = MissionPlan(plan.home, (ms.offset_point(plan.home, 0, 50, alt=120),
                                            plan.waypoints[1]), 20.0, 120.0)
        rejected_first = any(v.code == "first-waypoint-too-close"
                             for v in ms.validate_mission(too_close))
        short_last = MissionPlan(plan.home, (plan.waypoints[0],
                                             ms.offset_point(plan.home, 90, 150, alt=120)),
                                 20.0, 120.0)
        rejected_last = any(v.code == "last-waypoint-too-close"
                            for v in ms.validate_mission(short_last))
        checks = [
            result.exit_code == 0,
            modes[:4] == ["AUTO_TAKEOFF", "AUTO_MISSION", "RETURN_TO_BASE", "LOITER"],
            len(reached) == len(plan.waypoints),
            all(d["distance_m"] <= 30.0 for d in reached),
            rejected_first, rejected_last,
            elapsed < 30.0,
        ]
        verdict("demo mission scenario (seed 42)", all(checks))

    def test_06_comm_loss_failsafe(self):
        long_out = run(RunSpec(plan=load_mission(None), profile=PROFILE,
                               duration_s=120.0, seed=42, figures=False,
                               outages=((40.0, 80.0),)))
        failsafe = [(t, d) for t, k, d in long_out.events
                    if k == "mode-change" and d.get("reason") == "comm-loss-failsafe"]
        timeout = ms.FailsafeConfig().comm_loss_timeout
        within_one_step = (len(failsafe) == 1
                           and failsafe[0][0] <= 40.0 + timeout + 0.1 + 1e-9)
        short_out = run(RunSpec(plan=load_mission(None), profile=PROFILE,
                                duration_s=120.0, seed=42, figures=False,
                                outages=((40.0, 44.0),)))
        untouched = not any(k == "mode-change" and d.get("reason") == "comm-loss-failsafe"
                            for _, k, d in short_out.events)
        verdict("comm-loss failsafe timing", within_one_step and untouched)

    def test_07_link_statistics(self):
        sim = LinkSimulator(LinkConfig(seed=7))
        deliveries = sim.schedule(list(range(10_000)), [i * 0.1 for i in range(10_000)])
        delays_ms = [d.delay_s * 1000 for d in deliveries]
        mean = statistics.fmean(delays_ms)
        sigma_mean = statistics.stdev(delays_ms) / math.sqrt(len(delays_ms))
        spikes = [d for d in deliveries if d.spiked]
        lossless = LinkSimulator(LinkConfig(seed=8, loss_rate=0.0))
        dl = lossless.schedule(list(range(10_000)), [i * 0.05 for i in range(10_000)])
        order = [d.deliver_at for d in dl if not d.dropped]
        checks = [
            10.0 - 3 * sigma_mean <= mean <= 50.0 + 3 * sigma_mean,
            len(spikes) > 0 and max(delays_ms) >= 1700.0,
            len(order) == 10_000,
            all(a <= b for a, b in zip(order, order[1:])),
        ]
        verdict("link delay statistics (10^4 payloads)", all(checks))

    def test_08_protocol_fuzz(self):
        rng = random.Random(123)
        q2 = lambda x: float(f"{x:.2f}")
        q7 = lambda x: float(f"{x:.7f}")
        failures = 0
        from datetime import datetime, timezone
        for _ in range(100_000):
            frame = pt.SensorFrame(
                humidity=q2(rng.uniform(0, 100)), temp=q2(rng.uniform(-40, 60)),
                dust=q2(rng.uniform(0, 50000)), o3=q2(rng.uniform(0, 100)),
                co2=q2(rng.uniform(0, 20000)), co=rng.randint(-50000, 50000),
                lpg=rng.randint(0, 50000), smoke=rng.randint(0, 50000))
            lat, lon = q7(rng.uniform(-90, 90)), q7(rng.uniform(-180, 180))
            alt = q2(rng.uniform(0, 5000))
            ts = datetime(2026, rng.randint(1, 12), rng.randint(1, 28),
                          rng.randint(0, 23), rng.randint(0, 59), rng.randint(0, 59),
                          rng.randint(0, 999999), tzinfo=timezone.utc)
            rec = pt.decode_frame(pt.encode_frame(frame, lat, lon, alt, ts))
            if (rec.frame != frame or rec.lat != lat or rec.lon != lon
                    or rec.alt != alt or rec.timestamp != ts):
                failures += 1
        sentence = nmea.build_gga(25.68, 51.22, 120.0, "101112")
        rejected = trials = 0
        for _ in range(2000):
            pos = rng.randrange(1, len(sentence))
            orig = sentence[pos]
            repl = chr(rng.randint(33, 126))
            if repl == orig or orig in "$*" or repl in "$*":
                continue
            trials += 1
            try:
                nmea.parse_nmea(sentence[:pos] + repl + sentence[pos + 1:])
            except nmea.NmeaError:
                rejected += 1
        verdict(f"protocol fuzz (1e5 frames, {trials} NMEA mutations)",
                failures == 0 and rejected == trials)

    def test_09_query_vs_scan_oracle(self):
        from datetime import datetime, timedelta, timezone
        T0 = datetime(2026, 1, 1, tzinfo=timezone.utc)
        rng = random.Random(77)
        store = MeasurementStore()
        params = ("humidity", "temp", "dust", "o3", "co2", "co", "lpg", "smoke")
        data = []
        for i in range(1000):
            m = Measurement(rng.choice(["a", "b", "c"]),
                            T0 + timedelta(seconds=rng.uniform(0, 7200)),
                            rng.uniform(25, 26), rng.uniform(51, 52),
                            rng.uniform(0, 500), rng.choice(params),
                            rng.uniform(0, 100), rng.random() > 0.1)
            if store.ingest([m]):
                data.append(m)
        mismatches = 0
        for _ in range(100):
            flt = QueryFilter(
                time_from=(T0 + timedelta(seconds=rng.uniform(0, 3600))) if rng.random() < 0.6 else None,
                time_to=(T0 + timedelta(seconds=rng.uniform(3600, 7200))) if rng.random() < 0.6 else None,
                bbox=(25.0, 51.0, rng.uniform(25.3, 26.0), rng.uniform(51.3, 52.0)) if rng.random() < 0.5 else None,
                parameters=frozenset(rng.sample(params, rng.randint(1, 5))) if rng.random() < 0.5 else None,
                uav_id=rng.choice(["a", "b", "c", None]))
            got = [(m.uav_id, to_epoch(m.timestamp), m.parameter, m.value)
                   for m in store.query(flt)]
            want = []
            for m in data:
                e = to_epoch(m.timestamp)
                if flt.time_from and e < to_epoch(flt.time_from):
                    continue
                if flt.time_to and e > to_epoch(flt.time_to):
                    continue
                if flt.bbox and not (flt.bbox[0] <= m.lat <= flt.bbox[2]
                                     and flt.bbox[1] <= m.lon <= flt.bbox[3]):
                    continue
                if flt.parameters is not None and m.parameter not in flt.parameters:
                    continue
                if flt.uav_id is not None and m.uav_id != flt.uav_id:
                    continue
                want.append((m.uav_id, e, m.parameter, m.value))
            want.sort(key=lambda r: (r[1], r[0], r[2]))
            if got != want:
                mismatches += 1
        verdict("query equals brute-force scan (10^3 rows x 10^2 filters)",
                mismatches == 0)

    def test_10_video_latency(self):
        deliveries = video_schedule(LinkConfig(seed=5), pipeline_delay=3.5,
                                    n_frames=120, period=0.5, start=0.0)
        latencies = [d.deliver_at - d.sent_at for d in deliveries if not d.dropped]
        spiked = [d for d in deliveries if d.spiked]
        plain = [d.deliver_at - d.sent_at for d in deliveries if not d.spiked]
        jitter = 0.05  # configured base delay band
        in_band = all(3.0 <= lat <= 4.0 + jitter for lat in plain)
        spikes_explained = all(
            3.0 <= (d.deliver_at - d.sent_at) <= 4.0 + jitter + 1.7 for d in spiked)
        ideal = video_schedule(LinkConfig(base_delay_ms=(0, 0), spike_probability=0),
                               pipeline_delay=0.0, n_frames=10, period=0.5, start=0.0)
        zero = all(abs(d.deliver_at - d.sent_at) < 1e-9 for d in ideal)
        verdict("video latency in the observed 3-4 s band",
                bool(latencies) and in_band and spikes_explained and zero)
