"""HTTP API surface against a ground station with a seeded store."""
import json
from datetime import datetime, timedelta, timezone

import pytest
from fastapi.testclient import TestClient

from uavaq import protocol as pt
from uavaq.groundstation import GroundStation, create_app
from uavaq.store import Measurement, MeasurementStore

T0 = datetime(2026, 1, 1, tzinfo=timezone.utc)


@pytest.fixture
def gs():
    return GroundStation(MeasurementStore())


@pytest.fixture
def client(gs):
    return TestClient(create_app(gs))


def feed_frames(gs, n=10, uav="uav-1", co=3.0, warmed=True):
    """Push n telemetry lines through the same path the relay leg uses."""
    for i in range(n):
        ts = T0 + timedelta(seconds=i)
        status = pt.StatusRecord(ts, "AUTO_MISSION", 25.68 + i * 1e-4, 51.22, 120.0,
                                 90.0, 20.0, 5000.0, 70.0,
                                 0.0 if warmed else 30.0, True)
        gs.on_line(uav, pt.encode_status(status), ts)
        frame = pt.SensorFrame(41.4, 23.4, 6.0, 0.01, 420.0, int(co), 5, 8)
        line = pt.encode_frame(frame, 25.68 + i * 1e-4, 51.22, 120.0, ts)
        gs.on_line(uav, line, ts)


class TestMeasurementsEndpoint:
    def test_empty(self, client):
        r = client.get("/api/measurements")
        assert r.status_code == 200
        assert r.json() == {"measurements": []}

    def test_fanout_and_filters(self, gs, client):
        feed_frames(gs, n=5)
        r = client.get("/api/measurements")
        assert len(r.json()["measurements"]) == 40
        r = client.get("/api/measurements", params={"param": "co", "uav": "uav-1"})
        rows = r.json()["measurements"]
        assert len(rows) == 5
        assert all(m["parameter"] == "co" for m in rows)
        r = client.get("/api/measurements", params={"param": "co,dust"})
        assert len(r.json()["measurements"]) == 10

    def test_bbox_and_time_filters(self, gs, client):
        feed_frames(gs, n=5)
        r = client.get("/api/measurements",
                       params={"bbox": "0,0,1,1"})
        assert r.json()["measurements"] == []
        r = client.get("/api/measurements",
                       params={"from": "2026-01-01T00:00:03Z", "param": "co"})
        assert len(r.json()["measurements"]) == 2

    def test_malformed_filter_rejected(self, client):
        assert client.get("/api/measurements", params={"bbox": "2,0,1,1"}).status_code == 422
        assert client.get("/api/measurements", params={"param": "plutonium"}).status_code == 422

    def test_deterministic_bytes(self, gs, client):
        feed_frames(gs, n=5)
        a = client.get("/api/measurements", params={"param": "co"}).content
        b = client.get("/api/measurements", params={"param": "co"}).content
        assert a == b


class TestAverageAndAlerts:
    def test_average_endpoint(self, gs, client):
        feed_frames(gs, n=5, co=7.0)
        r = client.get("/api/average", params={
            "param": "co", "window": "1h", "at": "2026-01-01T00:01:00Z"})
        assert r.status_code == 200
        assert r.json()["value"] == pytest.approx(7.0)

    def test_average_absent_data_is_null(self, client):
        r = client.get("/api/average", params={
            "param": "o3", "window": "8h", "at": "2026-01-01T00:01:00Z"})
        assert r.json()["value"] is None

    def test_unknown_window_rejected(self, client):
        assert client.get("/api/average",
                          params={"param": "co", "window": "5min"}).status_code == 422

    def test_alert_raised_and_listed(self, gs, client):
        feed_frames(gs, n=5, co=40.0)  # exceeds both CO rows
        r = client.get("/api/alerts")
        alerts = r.json()["alerts"]
        assert {(a["parameter"], a["window"]) for a in alerts} >= {("co", "1h"), ("co", "8h")}

    def test_warmup_frames_do_not_alert(self, gs, client):
        feed_frames(gs, n=5, co=40.0, warmed=False)
        assert client.get("/api/alerts").json()["alerts"] == []
        rows = client.get("/api/measurements", params={"param": "co"}).json()["measurements"]
        assert rows and all(m["valid"] is False for m in rows)


class TestExportAndGrid:
    def test_export_matches_query(self, gs, client):
        feed_frames(gs, n=4)
        csv_text = client.get("/api/export.csv", params={"param": "co"}).text
        lines = csv_text.strip().splitlines()
        assert lines[0] == "uav_id,timestamp,lat,lon,alt,parameter,value,valid"
        assert len(lines) == 5
        rows = client.get("/api/measurements", params={"param": "co"}).json()["measurements"]
        assert len(rows) == len(lines) - 1

    def test_grid_endpoint(self, gs, client):
        feed_frames(gs, n=5)
        r = client.get("/api/grid", params={
            "param": "co", "bbox": "25.6,51.1,25.8,51.3", "cols": 4, "rows": 4})
        body = r.json()
        assert body["cols"] == 4 and len(body["cells"]) == 4
        flat = [c for row in body["cells"] for c in row if c is not None]
        assert flat and all(v == pytest.approx(3.0) for v in flat)

    def test_series_bucketing(self, gs, client):
        feed_frames(gs, n=10)  # one frame per second
        r = client.get("/api/series", params={"param": "co", "bucket_s": 5})
        body = r.json()
        assert len(body["buckets"]) == 2
        assert all(b["count"] == 5 for b in body["buckets"])
        assert all(b["mean"] == pytest.approx(3.0) for b in body["buckets"])
        assert client.get("/api/series", params={
            "param": "co", "bucket_s": 0}).status_code == 422
        assert client.get("/api/series", params={
            "param": "co", "bucket_s": 5, "mode": "sideways"}).status_code == 422

    def test_limits_endpoint(self, client):
        body = client.get("/api/limits").json()
        assert len(body["limits"]) >= 6
        assert body["dust_conversion"] == 1.0
        rows = {(l["parameter"], l["window"]) for l in body["limits"]}
        assert ("co", "1h") in rows and ("o3", "8h") in rows


class TestStateAndCommands:
    def test_state_present_after_status_line(self, gs, client):
        feed_frames(gs, n=1)
        r = client.get("/api/uav/uav-1/state")
        assert r.status_code == 200
        body = r.json()
        assert body["mode"] == "AUTO_MISSION"
        assert body["battery_mah"] == 5000.0

    def test_unknown_uav_state_404(self, client):
        assert client.get("/api/uav/ghost/state").status_code == 404

    def test_command_without_relay_not_connected(self, client):
        r = client.post("/api/uav/uav-1/command", json={"kind": "RTB"})
        assert r.status_code == 404
        assert r.json()["status"] == "not-connected"

    def test_bad_command_kind(self, client):
        r = client.post("/api/uav/uav-1/command", json={"kind": "WARP"})
        assert r.status_code == 422


class TestMissions:
    GOOD = {"home": {"lat": 25.68, "lon": 51.22, "alt": 0},
            "waypoints": [{"lat": 25.684, "lon": 51.22, "alt": 120}],
            "cruise_speed": 20.0, "cruise_alt": 120.0}

    def test_valid_mission_stored(self, client):
        r = client.post("/api/missions", json=self.GOOD)
        assert r.status_code == 200
        assert r.json()["violations"] == []
        assert len(client.get("/api/missions").json()["missions"]) == 1

    def test_invalid_mission_rejected_verbatim_codes(self, client):
        bad = dict(self.GOOD, waypoints=[{"lat": 25.6801, "lon": 51.22, "alt": 120}])
        r = client.post("/api/missions", json=bad)
        assert r.status_code == 422
        codes = [v["code"] for v in r.json()["violations"]]
        assert "first-waypoint-too-close" in codes
        assert client.get("/api/missions").json()["missions"] == []

    def test_malformed_mission_rejected(self, client):
        r = client.post("/api/missions", json={"home": {}})
        assert r.status_code == 422


class TestLiveChannel:
    def test_events_stream_over_sse(self, gs, http_server):
        import urllib.request

        srv = http_server(create_app(gs))
        resp = urllib.request.urlopen(f"{srv.base_url}/api/live", timeout=10)
        assert resp.readline().decode().startswith(": connected")
        feed_frames(gs, n=1)
        got = []
        import time as _time
        deadline = _time.monotonic() + 8
        while len(got) < 2 and _time.monotonic() < deadline:
            line = resp.readline().decode()
            if line.startswith("data: "):
                got.append(json.loads(line[6:]))
        resp.close()
        types = {e["type"] for e in got}
        assert "state" in types and "data" in types
        data = next(e for e in got if e["type"] == "data")
        assert data["frame"]["co"] == 3.0
        assert "pushed_at" in data
