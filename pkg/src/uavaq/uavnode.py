"""Live UAV-side node: flight sim, payload threads and the relay session.

The client session mirrors the airborne software split: a connection
handler that dials the relay and serves commands, a sensor reader that
keeps the latest frame available, and a GPS reader that does the same for
position. Sensor and GPS threads publish into a latest-value snapshot
(atomic replace under a lock); the emitters only ever read the snapshot.

Outbound lines pass through the link simulator: each line is held for its
scheduled delay, and a "lost" line kills the connection so the session
exercises its reconnect path, as a cellular link would.
"""
from __future__ import annotations

import heapq
import itertools
import socket
import threading
import time
from collections import OrderedDict
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Optional

from . import nmea
from . import protocol as pt
from .linksim import Delivery, LinkConfig, LinkSimulator
from .relay import DEFAULT_TOKEN
from .vehicle import VehicleSim

DEDUPE_WINDOW = 64


def video_schedule(link: LinkConfig, pipeline_delay: float, n_frames: int,
                   period: float, start: float = 0.0) -> list[Delivery]:
    """Delivery schedule of a synthetic video stream against any clock.

    Each frame is stamped at its source instant; the encode+buffer pipeline
    holds it for pipeline_delay before it enters the link, so the
    receiver-side latency is pipeline_delay plus the link delay.
    """
    import dataclasses

    sim = LinkSimulator(link)
    out: list[Delivery] = []
    for i in range(n_frames):
        t = start + i * period
        d = sim.transmit(f"frame-{i}", t)
        if d.dropped:
            out.append(d)
        else:
            out.append(dataclasses.replace(d, deliver_at=d.deliver_at + pipeline_delay,
                                           delay_s=d.delay_s + pipeline_delay))
    return out


@dataclass
class NodeConfig:
    uav_id: str = "uav-1"
    relay_host: str = "127.0.0.1"
    relay_port: int = 0
    token: str = DEFAULT_TOKEN
    telemetry_period: float = 1.0
    status_period: float = 1.0
    heartbeat_period: float = 1.0
    hb_grace: float = 2.5          # wall seconds without a ground heartbeat = link down
    video_period: float = 0.5
    video_pipeline_delay: float = 3.5  # encode + buffering ahead of the link
    sensor_period: float = 0.5
    gps_period: float = 0.5
    sim_dt: float = 0.1
    time_scale: float = 1.0        # sim seconds per wall second
    reconnect_base: float = 0.2
    reconnect_cap: float = 3.0
    link: LinkConfig = field(default_factory=LinkConfig)


class UavNode:
    def __init__(self, sim: VehicleSim, config: NodeConfig):
        self.sim = sim
        self.cfg = config
        self.link = LinkSimulator(config.link)
        self._stop = threading.Event()
        self._sock: Optional[socket.socket] = None
        self._sock_lock = threading.Lock()
        self._registered = threading.Event()
        self._streaming = False
        self._video_on = False
        self._video_id = itertools.count()
        self._processed: OrderedDict[int, tuple[str, str]] = OrderedDict()
        self._snapshot_lock = threading.Lock()
        self._frame: Optional[pt.SensorFrame] = None
        self._fix: Optional[pt.GpsFix] = None
        self._last_ground_hb = 0.0
        self._outq: list[tuple[float, int, str]] = []
        self._outq_cv = threading.Condition()
        self._counter = itertools.count()
        self._threads: list[threading.Thread] = []
        self.reconnects = 0
        self.frames_sent = 0
        self.commands_executed = 0

    # -- lifecycle -----------------------------------------------------------

    def start(self) -> None:
        for name, fn in (("sim", self._sim_loop), ("sensors", self._sensor_loop),
                         ("gps", self._gps_loop), ("conn", self._conn_loop),
                         ("sender", self._sender_loop), ("emit", self._emit_loop)):
            t = threading.Thread(target=fn, name=f"{self.cfg.uav_id}-{name}", daemon=True)
            t.start()
            self._threads.append(t)

    def stop(self) -> None:
        self._stop.set()
        with self._outq_cv:
            self._outq_cv.notify_all()
        self._close_socket()

    def wait_registered(self, timeout: float = 5.0) -> bool:
        return self._registered.wait(timeout)

    # -- snapshot ------------------------------------------------------------

    def _publish_frame(self, frame: pt.SensorFrame) -> None:
        with self._snapshot_lock:
            self._frame = frame

    def _publish_fix(self, fix: pt.GpsFix) -> None:
        with self._snapshot_lock:
            self._fix = fix

    def snapshot(self) -> tuple[Optional[pt.SensorFrame], Optional[pt.GpsFix]]:
        with self._snapshot_lock:
            return self._frame, self._fix

    # -- worker loops ----------------------------------------------------------

    def _sim_loop(self) -> None:
        period = self.cfg.sim_dt / max(self.cfg.time_scale, 1e-9)
        while not self._stop.wait(period):
            link_ok = (self._registered.is_set()
                       and time.monotonic() - self._last_ground_hb < self.cfg.hb_grace)
            self.sim.set_link(link_ok)
            try:
                self.sim.step(self.cfg.sim_dt)
            except Exception:
                return  # crashed airframe; node keeps serving its last state

    def _sensor_loop(self) -> None:
        while not self._stop.wait(self.cfg.sensor_period):
            self._publish_frame(self.sim.sample_frame())

    def _gps_loop(self) -> None:
        while not self._stop.wait(self.cfg.gps_period):
            try:
                self._publish_fix(nmea.parse_nmea(self.sim.gps_sentence()))
            except nmea.NmeaError:
                continue  # a garbled sentence never updates the snapshot

    def _conn_loop(self) -> None:
        backoff = self.cfg.reconnect_base
        while not self._stop.is_set():
            try:
                sock = socket.create_connection(
                    (self.cfg.relay_host, self.cfg.relay_port), timeout=5.0)
            except OSError:
                if self._stop.wait(backoff):
                    return
                backoff = min(backoff * 2, self.cfg.reconnect_cap)
                continue
            try:
                sock.sendall(pt.encode_register_uav(self.cfg.uav_id, self.cfg.token).encode())
                reader = sock.makefile("rb")
                reply = reader.readline()
                if pt.line_tag(reply) != "A":
                    sock.close()
                    if self._stop.wait(backoff):
                        return
                    backoff = min(backoff * 2, self.cfg.reconnect_cap)
                    continue
                with self._sock_lock:
                    self._sock = sock
                self._registered.set()
                self._last_ground_hb = time.monotonic()
                backoff = self.cfg.reconnect_base
                for raw in reader:
                    self._handle_line(raw.decode("utf-8", "replace"))
                    if self._stop.is_set():
                        break
            except OSError:
                pass
            finally:
                self._registered.clear()
                self._close_socket()
            if self._stop.is_set():
                return
            self.reconnects += 1
            if self._stop.wait(backoff):
                return
            backoff = min(backoff * 2, self.cfg.reconnect_cap)

    def _handle_line(self, line: str) -> None:
        tag = pt.line_tag(line)
        if tag == "H":
            self._last_ground_hb = time.monotonic()
            return
        if tag != "C":
            return
        try:
            cmd = pt.decode_command(line)
        except pt.ProtocolError as exc:
            self._enqueue(pt.encode_error(None, "bad-command", str(exc)))
            return
        if cmd.seq in self._processed:
            status, detail = self._processed[cmd.seq]  # duplicate: re-ack only
            self._enqueue(pt.encode_ack(cmd.seq, status, detail))
            return
        status, detail = self._execute(cmd)
        self.commands_executed += 1
        self._processed[cmd.seq] = (status, detail)
        while len(self._processed) > DEDUPE_WINDOW:
            self._processed.popitem(last=False)
        self._enqueue(pt.encode_ack(cmd.seq, status, detail))

    def _execute(self, cmd: pt.Command) -> tuple[str, str]:
        kind = cmd.kind
        if kind == pt.CommandKind.START_DATA:
            self._streaming = True
            return "ok", "data-on"
        if kind == pt.CommandKind.STOP_DATA:
            self._streaming = False
            return "ok", "data-off"
        if kind == pt.CommandKind.START_VIDEO:
            self._video_on = True
            return "ok", "video-on"
        if kind == pt.CommandKind.STOP_VIDEO:
            self._video_on = False
            return "ok", "video-off"
        return self.sim.execute(cmd)

    def _emit_loop(self) -> None:
        next_hb = next_status = next_data = next_video = time.monotonic()
        tick = min(self.cfg.heartbeat_period, self.cfg.telemetry_period,
                   self.cfg.status_period, self.cfg.video_period) / 4
        while not self._stop.wait(tick):
            now = time.monotonic()
            ts = datetime.now(timezone.utc)
            if now >= next_hb:
                next_hb = now + self.cfg.heartbeat_period
                self._enqueue(pt.encode_heartbeat(ts))
            if now >= next_status:
                next_status = now + self.cfg.status_period
                self._enqueue(pt.encode_status(self.sim.status_record(ts)))
            if self._streaming and now >= next_data:
                next_data = now + self.cfg.telemetry_period
                frame, fix = self.snapshot()
                if frame is not None and fix is not None:
                    self._enqueue(pt.encode_frame(
                        frame, fix.lat, fix.lon, fix.alt or 0.0, ts))
                    self.frames_sent += 1
            if self._video_on and now >= next_video:
                next_video = now + self.cfg.video_period
                fid = next(self._video_id)
                payload = fid.to_bytes(4, "big") * 4  # opaque stand-in frame
                self._enqueue(pt.encode_video(fid, ts, payload),
                              extra_delay=self.cfg.video_pipeline_delay)

    # -- delayed sending through the link model --------------------------------

    def _enqueue(self, line: str, extra_delay: float = 0.0) -> None:
        now = time.monotonic()
        d = self.link.transmit(line, now)
        if d.dropped:
            self._close_socket()  # the link "ate" it: connection is gone
            return
        with self._outq_cv:
            heapq.heappush(self._outq, (d.deliver_at + extra_delay, next(self._counter), line))
            self._outq_cv.notify()

    def _sender_loop(self) -> None:
        while not self._stop.is_set():
            with self._outq_cv:
                while not self._outq and not self._stop.is_set():
                    self._outq_cv.wait(0.2)
                if self._stop.is_set():
                    return
                send_at, _, line = self._outq[0]
                delay = send_at - time.monotonic()
                if delay > 0:
                    self._outq_cv.wait(min(delay, 0.2))
                    continue
                heapq.heappop(self._outq)
            with self._sock_lock:
                sock = self._sock
            if sock is None:
                continue  # disconnected: stream data simply stops flowing
            try:
                sock.sendall(line.encode())
            except OSError:
                self._close_socket()

    def _close_socket(self) -> None:
        with self._sock_lock:
            sock, self._sock = self._sock, None
        if sock is not None:
            try:
                sock.shutdown(socket.SHUT_RDWR)
            except OSError:
                pass
            try:
                sock.close()
            except OSError:
                pass
