"""Measurement store: ingest/idempotency, query oracle, averages, alerts, export."""
import csv
import io
import random
from datetime import datetime, timedelta, timezone

import numpy as np
import pytest

from uavaq.sensors import WINDOW_SECONDS, load_who_limits
from uavaq.store import (
    Alert, AlertMonitor, Measurement, MeasurementStore, PARAMETERS, QueryFilter,
    StoreError, to_epoch,
)

T0 = datetime(2026, 1, 1, tzinfo=timezone.utc)


def mk(uav="a", t=0.0, lat=25.0, lon=51.0, alt=100.0, param="co", value=1.0, valid=True):
    return Measurement(uav, T0 + timedelta(seconds=t), lat, lon, alt, param, value,
                       valid, received=T0 + timedelta(seconds=t + 0.05))


def random_measurement(rng, i):
    return mk(uav=rng.choice(["a", "b", "c"]), t=rng.uniform(0, 3600),
              lat=rng.uniform(25.0, 26.0), lon=rng.uniform(51.0, 52.0),
              alt=rng.uniform(0, 300), param=rng.choice(PARAMETERS),
              value=rng.uniform(0, 100), valid=rng.random() > 0.1)


def matches(m, flt):
    """Brute-force filter predicate, the query oracle."""
    if flt.time_from and to_epoch(m.timestamp) < to_epoch(flt.time_from):
        return False
    if flt.time_to and to_epoch(m.timestamp) > to_epoch(flt.time_to):
        return False
    if flt.bbox:
        minlat, minlon, maxlat, maxlon = flt.bbox
        if not (minlat <= m.lat <= maxlat and minlon <= m.lon <= maxlon):
            return False
    if flt.parameters is not None and m.parameter not in flt.parameters:
        return False
    if flt.uav_id is not None and m.uav_id != flt.uav_id:
        return False
    return True


class TestIngest:
    def test_fanout_count(self):
        store = MeasurementStore()
        batch = [mk(param=p, value=i) for i, p in enumerate(PARAMETERS)]
        assert store.ingest(batch) == 8
        assert store.count() == 8

    def test_duplicate_deduped(self):
        store = MeasurementStore()
        batch = [mk(param=p) for p in PARAMETERS]
        assert store.ingest(batch) == 8
        assert store.ingest(batch) == 0
        assert store.count() == 8

    def test_totals_conserved(self):
        store = MeasurementStore()
        rng = random.Random(1)
        offered, duplicates = [], 0
        for i in range(1000):
            m = random_measurement(rng, i)
            offered.append(m)
            if rng.random() < 0.1:
                offered.append(m)
                duplicates += 1
        stored = store.ingest(offered)
        assert stored == len(offered) - duplicates
        assert len(store.query(QueryFilter())) == stored

    def test_invalid_rows_stored_flagged(self):
        store = MeasurementStore()
        store.ingest([mk(valid=False)])
        rows = store.query(QueryFilter())
        assert len(rows) == 1 and rows[0].valid is False


class TestQueryOracle:
    def test_empty_store(self):
        assert MeasurementStore().query(QueryFilter()) == []

    def test_excluding_bbox(self):
        store = MeasurementStore()
        store.ingest([mk()])
        assert store.query(QueryFilter(bbox=(0.0, 0.0, 1.0, 1.0))) == []

    def test_randomized_against_scan(self):
        rng = random.Random(99)
        store = MeasurementStore()
        data = []
        for i in range(1000):
            m = random_measurement(rng, i)
            if store.ingest([m]):
                data.append(m)
        for _ in range(100):
            flt = QueryFilter(
                time_from=(T0 + timedelta(seconds=rng.uniform(0, 1800))) if rng.random() < 0.5 else None,
                time_to=(T0 + timedelta(seconds=rng.uniform(1800, 3600))) if rng.random() < 0.5 else None,
                bbox=(25.0, 51.0, rng.uniform(25.2, 26.0), rng.uniform(51.2, 52.0)) if rng.random() < 0.5 else None,
                parameters=frozenset(rng.sample(PARAMETERS, rng.randint(1, 4))) if rng.random() < 0.5 else None,
                uav_id=rng.choice(["a", "b", None]))
            got = store.query(flt)
            expected = sorted((m for m in data if matches(m, flt)),
                              key=lambda m: (to_epoch(m.timestamp), m.uav_id, m.parameter))
            assert [(m.uav_id, m.timestamp, m.parameter, m.value) for m in got] == \
                   [(m.uav_id, m.timestamp, m.parameter, m.value) for m in expected]
            ts = [to_epoch(m.timestamp) for m in got]
            assert ts == sorted(ts)

    def test_malformed_filters_rejected(self):
        with pytest.raises(StoreError):
            QueryFilter(time_from=T0, time_to=T0 - timedelta(seconds=1))
        with pytest.raises(StoreError):
            QueryFilter(bbox=(2.0, 0.0, 1.0, 1.0))
        with pytest.raises(StoreError):
            QueryFilter(parameters=frozenset({"sulfur"}))


class TestRollingAverage:
    def test_single_point(self):
        store = MeasurementStore()
        store.ingest([mk(t=10, value=7.0)])
        avg = store.rolling_average("co", 3600, T0 + timedelta(seconds=20))
        assert avg == pytest.approx(7.0)

    def test_two_segments(self):
        store = MeasurementStore()
        store.ingest([mk(t=0, value=10.0), mk(t=100, value=20.0)])
        avg = store.rolling_average("co", 3600, T0 + timedelta(seconds=100))
        assert avg == pytest.approx(15.0)

    def test_irregular_against_trapezoid_oracle(self):
        rng = random.Random(4)
        store = MeasurementStore()
        times = sorted(rng.uniform(0, 3000) for _ in range(40))
        values = [rng.uniform(0, 50) for _ in times]
        store.ingest([mk(t=t, value=v) for t, v in zip(times, values)])
        avg = store.rolling_average("co", 3600, T0 + timedelta(seconds=3000))
        # integrate over the same microsecond-quantized instants the store holds
        stored_t = [to_epoch(T0 + timedelta(seconds=t)) for t in times]
        oracle = np.trapezoid(values, stored_t) / (stored_t[-1] - stored_t[0])
        assert avg == pytest.approx(oracle, abs=1e-9)

    def test_window_excludes_old_and_invalid(self):
        store = MeasurementStore()
        store.ingest([mk(t=0, value=1000.0), mk(t=3500, value=5.0),
                      mk(t=3550, value=5.0),
                      mk(t=3560, value=999.0, valid=False)])
        avg = store.rolling_average("co", 600, T0 + timedelta(seconds=3600))
        assert avg == pytest.approx(5.0)

    def test_no_data_is_none(self):
        store = MeasurementStore()
        assert store.rolling_average("co", 3600, T0) is None

    def test_bad_window_rejected(self):
        with pytest.raises(StoreError):
            MeasurementStore().rolling_average("co", 0, T0)


class TestAlerts:
    LIMITS = load_who_limits()

    def test_co_exceedance_raises_once_per_episode(self):
        store = MeasurementStore()
        monitor = AlertMonitor(store, self.LIMITS, WINDOW_SECONDS)
        for i in range(10):
            store.ingest([mk(t=i * 60, value=36.0)])
        first = monitor.scan(T0 + timedelta(seconds=600))
        # 36 ppm trips both CO rows: the 1h limit (35) and the 8h limit (9)
        assert {(a.parameter, a.window, a.limit_value) for a in first} == {
            ("co", "1h", 35.0), ("co", "8h", 9.0)}
        # sustained exceedance across later scans: no duplicate alerts
        for k in range(3):
            store.ingest([mk(t=660 + k * 60, value=36.0)])
            assert monitor.scan(T0 + timedelta(seconds=660 + k * 60)) == []
        assert len(store.alerts()) == 2

    def test_recovery_then_new_episode(self):
        store = MeasurementStore()
        monitor = AlertMonitor(store, self.LIMITS, WINDOW_SECONDS)
        # 20 ppm stays under the 1h limit (35) but exceeds the 8h limit (9)
        store.ingest([mk(t=0, value=20.0), mk(t=60, value=20.0)])
        alerts = monitor.scan(T0 + timedelta(seconds=60))
        assert [(a.parameter, a.window) for a in alerts] == [("co", "8h")]
        # recovery: the 8h window slides past the hot samples
        later = 60 + 8 * 3600 + 600
        store.ingest([mk(t=later, value=1.0), mk(t=later + 60, value=1.0)])
        assert monitor.scan(T0 + timedelta(seconds=later + 60)) == []
        hot2 = later + 8 * 3600 + 600
        store.ingest([mk(t=hot2, value=20.0), mk(t=hot2 + 60, value=20.0)])
        assert len(monitor.scan(T0 + timedelta(seconds=hot2 + 60))) == 1
        assert len(store.alerts()) == 2

    def test_below_limits_no_alerts(self):
        store = MeasurementStore()
        monitor = AlertMonitor(store, self.LIMITS, WINDOW_SECONDS)
        for i, p in enumerate(PARAMETERS):
            store.ingest([mk(t=i, param=p, value=0.001)])
        assert monitor.scan(T0 + timedelta(seconds=100)) == []

    def test_alert_location_is_latest_sample(self):
        store = MeasurementStore()
        monitor = AlertMonitor(store, self.LIMITS, WINDOW_SECONDS)
        store.ingest([mk(t=0, value=40.0, lat=25.1, lon=51.1),
                      mk(t=60, value=40.0, lat=25.9, lon=51.9)])
        alerts = monitor.scan(T0 + timedelta(seconds=60))
        assert alerts[0].lat == pytest.approx(25.9)


class TestExportCsv:
    def test_empty_is_header_only(self):
        out = MeasurementStore().export_csv(QueryFilter())
        assert out.strip().splitlines() == [
            "uav_id,timestamp,lat,lon,alt,parameter,value,valid"]

    def test_parse_back_equals_query(self):
        rng = random.Random(8)
        store = MeasurementStore()
        for i in range(200):
            store.ingest([random_measurement(rng, i)])
        flt = QueryFilter(parameters=frozenset({"co", "dust"}))
        text = store.export_csv(flt)
        rows = list(csv.DictReader(io.StringIO(text)))
        expected = store.query(flt)
        assert len(rows) == len(expected)
        for row, m in zip(rows, expected):
            assert row["uav_id"] == m.uav_id
            assert float(row["lat"]) == m.lat          # full precision round trip
            assert float(row["value"]) == m.value
            assert row["parameter"] == m.parameter
            assert (row["valid"] == "true") == m.valid

    def test_grid_aggregation(self):
        store = MeasurementStore()
        store.ingest([mk(t=1, lat=25.1, lon=51.1, value=10.0),
                      mk(t=2, lat=25.1, lon=51.15, value=20.0),
                      mk(t=3, lat=25.9, lon=51.9, value=50.0)])
        cells = store.grid("co", (25.0, 51.0, 26.0, 52.0), cols=2, rows=2)
        assert cells[0][0] == pytest.approx(15.0)
        assert cells[1][1] == pytest.approx(50.0)
        assert cells[0][1] is None and cells[1][0] is None


class TestDeterminism:
    def test_identical_queries_identical_bytes(self):
        rng = random.Random(2)
        store = MeasurementStore()
        for i in range(300):
            store.ingest([random_measurement(rng, i)])
        flt = QueryFilter(parameters=frozenset({"co2", "o3", "temp"}))
        assert store.export_csv(flt).encode() == store.export_csv(flt).encode()
