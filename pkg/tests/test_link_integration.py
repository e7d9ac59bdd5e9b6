"""End-to-end socket tests: relay, UAV session, ground station, command path."""
import socket
import time

import pytest

from uavaq import protocol as pt
from uavaq.groundstation import GroundStation
from uavaq.linksim import LinkConfig
from uavaq.mission import MissionPlan, Waypoint, offset_point
from uavaq.profiles import load_profile
from uavaq.relay import RelayServer
from uavaq.store import MeasurementStore, QueryFilter
from uavaq.uavnode import NodeConfig, UavNode
from uavaq.vehicle import VehicleSim

PROFILE = load_profile("stick60-paper")
HOME = Waypoint(25.68, 51.22, 0.0)

FAST_LINK = LinkConfig(base_delay_ms=(0.0, 1.0), spike_probability=0.0, loss_rate=0.0)


def demo_plan():
    wps = tuple(offset_point(HOME, b, d, alt=120.0)
                for b, d in ((0, 400), (90, 600), (180, 500)))
    return MissionPlan(HOME, wps, 20.0, 120.0)


def fast_node(relay_port, uav_id="uav-1", link=FAST_LINK, **overrides):
    cfg = NodeConfig(uav_id=uav_id, relay_port=relay_port,
                     telemetry_period=0.1, status_period=0.1, heartbeat_period=0.1,
                     hb_grace=1.0, sensor_period=0.05, gps_period=0.05,
                     sim_dt=0.05, time_scale=4.0, video_period=0.1,
                     video_pipeline_delay=0.3, reconnect_base=0.05, link=link)
    for k, v in overrides.items():
        setattr(cfg, k, v)
    sim = VehicleSim(PROFILE, plan=demo_plan(), seed=42)
    return UavNode(sim, cfg)


def wait_until(predicate, timeout=6.0, step=0.02):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        if predicate():
            return True
        time.sleep(step)
    return False


@pytest.fixture
def stack():
    relay = RelayServer()
    host, port = relay.start()
    store = MeasurementStore()
    gs = GroundStation(store)
    gs.connect_relay(host, port, heartbeat_period=0.1)
    nodes = []

    def add_node(**kw):
        node = fast_node(port, **kw)
        nodes.append(node)
        node.start()
        assert node.wait_registered(5.0)
        return node

    yield relay, gs, store, add_node, port
    for node in nodes:
        node.stop()
    gs.stop()
    relay.stop()
    time.sleep(0.05)


class TestSessionBasics:
    def test_state_appears_at_ground(self, stack):
        _, gs, _, add_node, _ = stack
        add_node()
        assert wait_until(lambda: gs.uav_state("uav-1") is not None
                          and gs.uav_state("uav-1")["mode"] is not None)
        state = gs.uav_state("uav-1")
        assert state["mode"] == "MANUAL"
        assert state["battery_mah"] > 0

    def test_command_ack_loopback(self, stack):
        _, gs, _, add_node, _ = stack
        add_node()
        result = gs.dispatch_command("uav-1", "SET_MODE", mode="MANUAL")
        assert result["status"] == "ack"
        assert result["ack"] == "ok"
        assert result["seq"] >= 1

    def test_unknown_uav_not_connected(self, stack):
        _, gs, _, add_node, _ = stack
        add_node()
        result = gs.dispatch_command("ghost", "SET_MODE", mode="MANUAL", timeout=3.0)
        assert result["status"] == "not-connected"

    def test_invalid_mission_upload_rejected_by_vehicle(self, stack):
        _, gs, _, add_node, _ = stack
        add_node()
        bad = {"home": {"lat": 25.68, "lon": 51.22},
               "waypoints": [{"lat": 25.6801, "lon": 51.22, "alt": 120}],  # ~11 m away
               "cruise_speed": 20.0, "cruise_alt": 120.0}
        result = gs.dispatch_command("uav-1", "UPLOAD_MISSION", mission=bad)
        assert result["status"] == "ack"
        assert result["ack"] == "error"
        assert "first-waypoint-too-close" in result["detail"]


class TestDataStream:
    def test_start_then_stop(self, stack):
        _, gs, store, add_node, _ = stack
        add_node()
        assert gs.dispatch_command("uav-1", "START_DATA")["ack"] == "ok"
        assert wait_until(lambda: store.count() >= 24)  # three frames fanned out
        assert gs.dispatch_command("uav-1", "STOP_DATA")["ack"] == "ok"
        time.sleep(0.3)
        settled = store.count()
        time.sleep(0.25)  # two telemetry periods
        assert store.count() == settled
        rows = store.query(QueryFilter())
        assert {m.uav_id for m in rows} == {"uav-1"}

    def test_two_uavs_multiplex_without_crosstalk(self, stack):
        _, gs, store, add_node, _ = stack
        add_node(uav_id="alpha")
        add_node(uav_id="bravo")
        for uid in ("alpha", "bravo"):
            assert gs.dispatch_command(uid, "START_DATA")["ack"] == "ok"
        assert wait_until(lambda: all(
            len(store.query(QueryFilter(uav_id=u))) >= 8 for u in ("alpha", "bravo")))
        for uid in ("alpha", "bravo"):
            rows = store.query(QueryFilter(uav_id=uid))
            assert rows and all(m.uav_id == uid for m in rows)
        assert wait_until(lambda: gs.uav_state("alpha") and gs.uav_state("bravo"))

    def test_video_latency_measured_and_stop_ceases(self, stack):
        _, gs, _, add_node, _ = stack
        node = add_node()
        assert gs.dispatch_command("uav-1", "START_VIDEO")["ack"] == "ok"
        assert wait_until(lambda: gs.uavs["uav-1"].video_latency_s is not None)
        latency = gs.uavs["uav-1"].video_latency_s
        assert 0.25 <= latency <= 1.5  # pipeline delay 0.3 plus link and scheduling
        assert gs.dispatch_command("uav-1", "STOP_VIDEO")["ack"] == "ok"
        time.sleep(node.cfg.video_pipeline_delay + 0.2)  # the pipeline drains
        before = gs.uavs["uav-1"].video_latency_s
        time.sleep(2 * node.cfg.video_period + 0.2)
        assert gs.uavs["uav-1"].video_latency_s == before  # no frames after stop


class TestRelayEdgeCases:
    def test_duplicate_registration_rejected(self, stack):
        relay, _, _, add_node, port = stack
        add_node()
        raw = socket.create_connection(("127.0.0.1", port))
        raw.sendall(pt.encode_register_uav("uav-1", "hangar").encode())
        reply = raw.makefile("rb").readline().decode()
        assert pt.line_tag(reply) == "E"
        assert "duplicate-id" in reply
        raw.close()

    def test_bad_token_rejected(self, stack):
        _, _, _, _, port = stack
        raw = socket.create_connection(("127.0.0.1", port))
        raw.sendall(pt.encode_register_uav("x", "wrong").encode())
        reply = raw.makefile("rb").readline().decode()
        assert "auth" in reply
        raw.close()


class TestDedupe:
    def test_duplicate_seq_executes_once(self, stack):
        _, _, _, add_node, port = stack
        node = add_node()
        ground = socket.create_connection(("127.0.0.1", port))
        ground.sendall(pt.encode_register_ground("hangar").encode())
        reader = ground.makefile("rb")
        assert pt.line_tag(reader.readline()) == "A"
        before = node.commands_executed
        line = pt.encode_envelope("uav-1", pt.encode_command(
            pt.Command(pt.CommandKind.START_DATA, seq=501)))
        ground.sendall(line.encode())
        ground.sendall(line.encode())  # retry with the same seq
        acks = []

        def collect():
            while len(acks) < 2:
                raw = reader.readline()
                if not raw:
                    return
                uav_id, inner = pt.decode_envelope(raw)
                if pt.line_tag(inner) == "A":
                    seq, status, _ = pt.decode_ack(inner)
                    if seq == 501:
                        acks.append(status)

        import threading
        t = threading.Thread(target=collect, daemon=True)
        t.start()
        t.join(5.0)
        assert acks == ["ok", "ok"]  # both attempts acked
        assert node.commands_executed == before + 1  # but executed once
        ground.close()

    def test_lossy_link_forces_reconnects_and_dedupe_survives(self, stack):
        _, gs, _, add_node, _ = stack
        node = add_node(uav_id="lossy", link=LinkConfig(
            base_delay_ms=(0.0, 1.0), spike_probability=0.0, loss_rate=0.08, seed=3))
        gs.dispatch_command("lossy", "START_DATA", timeout=3.0)
        assert wait_until(lambda: node.reconnects >= 1, timeout=10.0)
        # session recovers: a later command still round-trips
        result = None
        for attempt in range(8):
            seq = result["seq"] if result and result["status"] == "delivery-unknown" else None
            result = gs.dispatch_command("lossy", "SET_MODE", mode="MANUAL",
                                         seq=seq, timeout=2.0)
            if result["status"] == "ack":
                break
            time.sleep(0.3)
        assert result["status"] == "ack"
