"""Ground station: relay session, measurement ingest, alerts and HTTP API.

Terminates the ground side of the relay, persists every decoded telemetry
frame as one measurement per parameter, evaluates ambient-limit alerts on
rolling averages, tracks per-vehicle state from status lines, and exposes
the query/command API the operator console and CLI consume.

Frames are flagged invalid while the sending vehicle still reports sensor
warm-up; the flag is carried by the vehicle status stream, not the data
line itself, and latches to valid once warm-up completes.
"""
from __future__ import annotations

import itertools
import json
import queue
import socket
import threading
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Optional

from fastapi import FastAPI, Query, Request
from fastapi.responses import JSONResponse, PlainTextResponse, StreamingResponse
from fastapi.staticfiles import StaticFiles

from . import mission as ms
from . import protocol as pt
from .sensors import WINDOW_SECONDS, load_who_limits
from .store import (
    Alert, AlertMonitor, Measurement, MeasurementStore, PARAMETERS, QueryFilter,
    StoreError, iso,
)

COMMAND_TIMEOUT = 5.0


@dataclass
class UavView:
    status: Optional[pt.StatusRecord] = None
    last_seen: Optional[datetime] = None
    last_heartbeat: Optional[datetime] = None
    warmed_up: bool = False
    video_latency_s: Optional[float] = None


class GroundStation:
    def __init__(self, store: MeasurementStore, token: str = "hangar",
                 limits=None, dust_conversion: float = 1.0):
        self.store = store
        self.token = token
        self.limits = limits if limits is not None else load_who_limits()
        self.monitor = AlertMonitor(store, self.limits, WINDOW_SECONDS, dust_conversion)
        self.uavs: dict[str, UavView] = {}
        self.missions: list[dict] = []
        self._uav_locks: dict[str, threading.Lock] = {}
        self._lock = threading.Lock()
        self._pending: dict[int, dict] = {}
        self._seq = itertools.count(1)
        self._subscribers: list[queue.Queue] = []
        self._sock: Optional[socket.socket] = None
        self._sock_lock = threading.Lock()
        self._stop = threading.Event()
        self._threads: list[threading.Thread] = []

    # -- relay session ----------------------------------------------------------

    def connect_relay(self, host: str, port: int, heartbeat_period: float = 1.0) -> None:
        t = threading.Thread(target=self._relay_loop, args=(host, port),
                             name="gs-relay", daemon=True)
        t.start()
        self._threads.append(t)
        hb = threading.Thread(target=self._heartbeat_loop, args=(heartbeat_period,),
                              name="gs-heartbeat", daemon=True)
        hb.start()
        self._threads.append(hb)

    def stop(self) -> None:
        self._stop.set()
        with self._sock_lock:
            sock, self._sock = self._sock, None
        if sock is not None:
            try:
                sock.close()
            except OSError:
                pass

    def _relay_loop(self, host: str, port: int) -> None:
        backoff = 0.2
        while not self._stop.is_set():
            try:
                sock = socket.create_connection((host, port), timeout=5.0)
                sock.sendall(pt.encode_register_ground(self.token).encode())
                reader = sock.makefile("rb")
                if pt.line_tag(reader.readline()) != "A":
                    sock.close()
                    raise OSError("registration refused")
                with self._sock_lock:
                    self._sock = sock
                backoff = 0.2
                for raw in reader:
                    if self._stop.is_set():
                        break
                    line = raw.decode("utf-8", "replace")
                    if pt.line_tag(line) != "X":
                        continue
                    try:
                        uav_id, inner = pt.decode_envelope(line)
                    except pt.ProtocolError:
                        continue
                    self.on_line(uav_id, inner, datetime.now(timezone.utc))
            except OSError:
                pass
            finally:
                with self._sock_lock:
                    if self._sock is not None:
                        try:
                            self._sock.close()
                        except OSError:
                            pass
                        self._sock = None
            if self._stop.wait(backoff):
                return
            backoff = min(backoff * 2, 3.0)

    def _heartbeat_loop(self, period: float) -> None:
        while not self._stop.wait(period):
            now = datetime.now(timezone.utc)
            for uav_id in list(self.uavs):
                self._send(uav_id, pt.encode_heartbeat(now))

    def _send(self, uav_id: str, inner: str) -> bool:
        with self._sock_lock:
            sock = self._sock
        if sock is None:
            return False
        try:
            sock.sendall(pt.encode_envelope(uav_id, inner).encode())
            return True
        except OSError:
            return False

    # -- inbound lines ----------------------------------------------------------

    def on_line(self, uav_id: str, inner: str, received: datetime) -> None:
        """Route one vehicle line; shared by the socket and virtual paths."""
        tag = pt.line_tag(inner)
        view = self.uavs.setdefault(uav_id, UavView())
        view.last_seen = received
        if tag == "D":
            try:
                rec = pt.decode_frame(inner)
            except pt.ProtocolError:
                return
            self.ingest_record(uav_id, rec, received, valid=view.warmed_up)
        elif tag == "S":
            try:
                status = pt.decode_status(inner)
            except pt.ProtocolError:
                return
            view.status = status
            if status.warmup_s <= 0:
                view.warmed_up = True
            else:
                view.warmed_up = False
            self.publish({"type": "state", "uav_id": uav_id,
                          "state": self._state_dict(uav_id, view)})
        elif tag == "H":
            view.last_heartbeat = received
        elif tag == "A":
            try:
                seq, status, detail = pt.decode_ack(inner)
            except pt.ProtocolError:
                return
            self._resolve(seq, {"status": "ack", "ack": status, "detail": detail,
                                "seq": seq, "uav_id": uav_id})
        elif tag == "E":
            try:
                seq, code, detail = pt.decode_error(inner)
            except pt.ProtocolError:
                return
            if seq is not None:
                self._resolve(seq, {"status": code, "seq": seq, "uav_id": uav_id,
                                    "detail": detail})
        elif tag == "V":
            try:
                fid, source_ts, _payload = pt.decode_video(inner)
            except pt.ProtocolError:
                return
            latency = (received - source_ts).total_seconds()
            view.video_latency_s = latency
            self.publish({"type": "video", "uav_id": uav_id, "frame_id": fid,
                          "source_ts": iso(source_ts), "latency_s": round(latency, 3)})

    def ingest_record(self, uav_id: str, rec: pt.DataRecord, received: datetime,
                      valid: bool) -> int:
        """Fan a decoded frame out to one measurement per parameter."""
        frame = rec.frame
        values = [frame.humidity, frame.temp, frame.dust, frame.o3, frame.co2,
                  float(frame.co), float(frame.lpg), float(frame.smoke)]
        batch = [Measurement(uav_id, rec.timestamp, rec.lat, rec.lon, rec.alt,
                             param, value, valid, received)
                 for param, value in zip(PARAMETERS, values)]
        lock = self._uav_locks.setdefault(uav_id, threading.Lock())
        with lock:
            stored = self.store.ingest(batch)
        for alert in self.monitor.scan(rec.timestamp):
            self.publish({"type": "alert", "alert": _alert_dict(alert)})
        self.publish({"type": "data", "uav_id": uav_id, "timestamp": iso(rec.timestamp),
                      "lat": rec.lat, "lon": rec.lon, "alt": rec.alt, "valid": valid,
                      "frame": {p: v for p, v in zip(PARAMETERS, values)}})
        return stored

    # -- commands ----------------------------------------------------------------

    def dispatch_command(self, uav_id: str, kind: str, mode: Optional[str] = None,
                         mission: Optional[dict] = None, seq: Optional[int] = None,
                         timeout: float = COMMAND_TIMEOUT) -> dict:
        """Forward a command and wait for its ack.

        Returns {"status": "ack" | "not-connected" | "delivery-unknown", ...}.
        Pass the seq of a delivery-unknown result to retry it; the vehicle
        deduplicates executions by seq.
        """
        try:
            cmd_kind = pt.CommandKind(kind)
        except ValueError:
            return {"status": "bad-command", "detail": f"unknown kind {kind!r}"}
        if seq is None:
            seq = next(self._seq)
        cmd = pt.Command(cmd_kind, seq, mode=mode, mission=mission)
        try:
            line = pt.encode_command(cmd)
        except pt.ProtocolError as exc:
            return {"status": "bad-command", "detail": str(exc)}
        waiter = {"event": threading.Event(), "result": None}
        with self._lock:
            self._pending[seq] = waiter
        if not self._send(uav_id, line):
            with self._lock:
                self._pending.pop(seq, None)
            return {"status": "not-connected", "seq": seq, "uav_id": uav_id,
                    "detail": "no relay session"}
        if not waiter["event"].wait(timeout):
            with self._lock:
                self._pending.pop(seq, None)
            return {"status": "delivery-unknown", "seq": seq, "uav_id": uav_id,
                    "detail": "no ack before timeout; retry with this seq"}
        return waiter["result"]

    def _resolve(self, seq: int, result: dict) -> None:
        with self._lock:
            waiter = self._pending.pop(seq, None)
        if waiter is not None:
            waiter["result"] = result
            waiter["event"].set()

    # -- live push ----------------------------------------------------------------

    def subscribe(self) -> queue.Queue:
        q: queue.Queue = queue.Queue(maxsize=1000)
        with self._lock:
            self._subscribers.append(q)
        return q

    def unsubscribe(self, q: queue.Queue) -> None:
        with self._lock:
            if q in self._subscribers:
                self._subscribers.remove(q)

    def publish(self, event: dict) -> None:
        event = dict(event)
        event["pushed_at"] = iso(datetime.now(timezone.utc))
        with self._lock:
            subs = list(self._subscribers)
        for q in subs:
            try:
                q.put_nowait(event)
            except queue.Full:
                try:
                    q.get_nowait()  # drop oldest for a slow consumer
                    q.put_nowait(event)
                except queue.Empty:
                    pass

    # -- views ----------------------------------------------------------------------

    def _state_dict(self, uav_id: str, view: UavView) -> dict:
        s = view.status
        return {
            "uav_id": uav_id,
            "mode": s.mode if s else None,
            "lat": s.lat if s else None,
            "lon": s.lon if s else None,
            "alt": s.alt if s else None,
            "heading": s.heading if s else None,
            "airspeed": s.airspeed if s else None,
            "battery_mah": s.battery_mah if s else None,
            "throttle": s.throttle if s else None,
            "warmup_s": s.warmup_s if s else None,
            "link_ok": s.link_ok if s else None,
            "last_seen": iso(view.last_seen) if view.last_seen else None,
            "video_latency_s": view.video_latency_s,
        }

    def uav_state(self, uav_id: str) -> Optional[dict]:
        view = self.uavs.get(uav_id)
        return self._state_dict(uav_id, view) if view else None

    def add_mission(self, doc: dict) -> tuple[Optional[int], list[ms.Violation]]:
        plan = ms.MissionPlan.from_dict(doc)
        violations = ms.validate_mission(plan)
        if violations:
            return None, violations
        self.missions.append(plan.to_dict())
        return len(self.missions) - 1, []


def _alert_dict(a: Alert) -> dict:
    return {"parameter": a.parameter, "window": a.window,
            "averaged_value": a.averaged_value, "limit_value": a.limit_value,
            "lat": a.lat, "lon": a.lon, "timestamp": iso(a.timestamp)}


def _measurement_dict(m: Measurement) -> dict:
    return {"uav_id": m.uav_id, "timestamp": iso(m.timestamp), "lat": m.lat,
            "lon": m.lon, "alt": m.alt, "parameter": m.parameter, "value": m.value,
            "valid": m.valid}


# ---------------------------------------------------------------------------
# HTTP API

def parse_iso(text: str) -> datetime:
    t = text.strip()
    if t.endswith("Z"):
        t = t[:-1] + "+00:00"
    dt = datetime.fromisoformat(t)
    return dt if dt.tzinfo else dt.replace(tzinfo=timezone.utc)


def _build_filter(from_: Optional[str], to: Optional[str], bbox: Optional[str],
                  params: Optional[list[str]], uav: Optional[str]) -> QueryFilter:
    box = None
    if bbox:
        parts = [float(x) for x in bbox.split(",")]
        if len(parts) != 4:
            raise StoreError("bbox needs minlat,minlon,maxlat,maxlon")
        box = (parts[0], parts[1], parts[2], parts[3])
    parameters = None
    if params:
        expanded: set[str] = set()
        for p in params:
            expanded.update(x.strip() for x in p.split(",") if x.strip())
        parameters = frozenset(expanded)
    return QueryFilter(
        time_from=parse_iso(from_) if from_ else None,
        time_to=parse_iso(to) if to else None,
        bbox=box, parameters=parameters, uav_id=uav)


def create_app(gs: GroundStation, static_dir: Optional[str] = None) -> FastAPI:
    app = FastAPI(title="uavaq ground station", docs_url=None, redoc_url=None)

    @app.exception_handler(StoreError)
    async def _store_error(_req: Request, exc: StoreError):
        return JSONResponse({"error": str(exc)}, status_code=422)

    @app.exception_handler(ValueError)
    async def _value_error(_req: Request, exc: ValueError):
        return JSONResponse({"error": str(exc)}, status_code=422)

    @app.get("/api/measurements")
    def measurements(from_: Optional[str] = Query(None, alias="from"),
                     to: Optional[str] = None, bbox: Optional[str] = None,
                     param: Optional[list[str]] = Query(None),
                     uav: Optional[str] = None):
        flt = _build_filter(from_, to, bbox, param, uav)
        return {"measurements": [_measurement_dict(m) for m in gs.store.query(flt)]}

    @app.get("/api/average")
    def average(param: str, window: str, uav: Optional[str] = None,
                at: Optional[str] = None):
        seconds = WINDOW_SECONDS.get(window)
        if seconds is None:
            raise StoreError(f"unknown window {window!r}; use one of "
                             f"{sorted(WINDOW_SECONDS)}")
        now = parse_iso(at) if at else datetime.now(timezone.utc)
        value = gs.store.rolling_average(param, seconds, now, uav)
        return {"parameter": param, "window": window, "at": iso(now), "value": value}

    @app.get("/api/alerts")
    def alerts():
        return {"alerts": [_alert_dict(a) for a in gs.store.alerts()]}

    @app.get("/api/limits")
    def limits():
        return {"limits": [{"parameter": l.parameter, "window": l.window,
                            "limit_value": l.limit_value, "unit": l.unit}
                           for l in gs.limits],
                "dust_conversion": gs.monitor.dust_conversion}

    @app.get("/api/export.csv")
    def export(from_: Optional[str] = Query(None, alias="from"),
               to: Optional[str] = None, bbox: Optional[str] = None,
               param: Optional[list[str]] = Query(None), uav: Optional[str] = None):
        flt = _build_filter(from_, to, bbox, param, uav)
        return PlainTextResponse(gs.store.export_csv(flt), media_type="text/csv")

    @app.get("/api/series")
    def series(param: str, bucket_s: float, mode: str = "date",
               from_: Optional[str] = Query(None, alias="from"),
               to: Optional[str] = None, uav: Optional[str] = None):
        if bucket_s <= 0:
            raise StoreError("bucket_s must be > 0")
        if mode not in ("date", "time"):
            raise StoreError("mode must be 'date' or 'time'")
        flt = _build_filter(from_, to, None, [param], uav)
        sums: dict[float, list[float]] = {}
        for m in gs.store.query(flt):
            if not m.valid:
                continue
            epoch = m.timestamp.timestamp()
            base = epoch if mode == "date" else epoch % 86400.0
            key = (base // bucket_s) * bucket_s
            sums.setdefault(key, []).append(m.value)
        buckets = [{"key": k, "mean": sum(v) / len(v), "count": len(v)}
                   for k, v in sorted(sums.items())]
        return {"parameter": param, "bucket_s": bucket_s, "mode": mode,
                "buckets": buckets}

    @app.get("/api/grid")
    def grid(param: str, bbox: str, cols: int = 16, rows: int = 16,
             from_: Optional[str] = Query(None, alias="from"), to: Optional[str] = None):
        flt = _build_filter(from_, to, bbox, None, None)
        assert flt.bbox is not None
        cells = gs.store.grid(param, flt.bbox, cols, rows, flt)
        return {"parameter": param, "bbox": list(flt.bbox), "cols": cols,
                "rows": rows, "cells": cells}

    @app.get("/api/uav/{uav_id}/state")
    def uav_state(uav_id: str):
        state = gs.uav_state(uav_id)
        if state is None:
            return JSONResponse({"error": f"unknown uav {uav_id!r}"}, status_code=404)
        return state

    @app.get("/api/uavs")
    def uavs():
        return {"uavs": sorted(gs.uavs)}

    @app.post("/api/uav/{uav_id}/command")
    async def command(uav_id: str, request: Request):
        body = await request.json()
        result = gs.dispatch_command(
            uav_id, body.get("kind", ""), mode=body.get("mode"),
            mission=body.get("mission"), seq=body.get("seq"),
            timeout=float(body.get("timeout", COMMAND_TIMEOUT)))
        code = {"ack": 200, "not-connected": 404, "delivery-unknown": 504,
                "bad-command": 422}.get(result["status"], 200)
        return JSONResponse(result, status_code=code)

    @app.post("/api/missions")
    async def post_mission(request: Request):
        doc = await request.json()
        try:
            mission_id, violations = gs.add_mission(doc)
        except ms.MissionError as exc:
            return JSONResponse({"status": "invalid",
                                 "violations": [{"code": "malformed", "message": str(exc)}]},
                                status_code=422)
        if violations:
            return JSONResponse(
                {"status": "invalid",
                 "violations": [{"code": v.code, "message": v.message} for v in violations]},
                status_code=422)
        return {"status": "ok", "id": mission_id, "violations": []}

    @app.get("/api/missions")
    def get_missions():
        return {"missions": gs.missions}

    @app.get("/api/live")
    async def live():
        import asyncio

        q = gs.subscribe()

        async def stream():
            # polled bridge from the thread-side queue; async so client
            # disconnects cancel it promptly
            try:
                yield ": connected\n\n"
                idle = 0.0
                while True:
                    try:
                        event = q.get_nowait()
                    except queue.Empty:
                        await asyncio.sleep(0.05)
                        idle += 0.05
                        if idle >= 15.0:
                            idle = 0.0
                            yield ": keepalive\n\n"
                        continue
                    idle = 0.0
                    yield f"data: {json.dumps(event, sort_keys=True)}\n\n"
            finally:
                gs.unsubscribe(q)

        return StreamingResponse(stream(), media_type="text/event-stream")

    if static_dir:
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="console")

    return app
