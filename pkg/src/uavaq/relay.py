"""Dial-out relay: the publicly reachable broker between UAVs and ground.

A vehicle on a cellular modem has no static address, so it dials out to
this relay and registers under its id; ground stations dial in the same
way. The relay then forwards command lines ground -> UAV and telemetry
lines UAV -> ground, tagging the ground leg with the vehicle id so several
UAVs multiplex over one ground session without cross-talk.

The routing core (RelayRouter) is transport-free and shared by the TCP
server and the in-process virtual pipeline the headless simulator uses.
"""
from __future__ import annotations

import socket
import threading
from dataclasses import dataclass, field
from typing import Callable, Optional

from . import protocol as pt

DEFAULT_TOKEN = "hangar"

SendFn = Callable[[str], None]


class RelayError(Exception):
    pass


class DuplicateUavError(RelayError):
    pass


class UnknownUavError(RelayError):
    pass


class RelayRouter:
    """Keyed registry with serialized mutation; forwarding is id-addressed."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._uavs: dict[str, SendFn] = {}
        self._grounds: dict[int, SendFn] = {}
        self._next_ground = 1

    def register_uav(self, uav_id: str, send: SendFn) -> None:
        with self._lock:
            if uav_id in self._uavs:
                raise DuplicateUavError(f"uav {uav_id!r} already registered")
            self._uavs[uav_id] = send

    def unregister_uav(self, uav_id: str) -> None:
        with self._lock:
            self._uavs.pop(uav_id, None)

    def register_ground(self, send: SendFn) -> int:
        with self._lock:
            handle = self._next_ground
            self._next_ground += 1
            self._grounds[handle] = send
        return handle

    def unregister_ground(self, handle: int) -> None:
        with self._lock:
            self._grounds.pop(handle, None)

    def connected_uavs(self) -> list[str]:
        with self._lock:
            return sorted(self._uavs)

    def from_uav(self, uav_id: str, line: str) -> None:
        """Fan a vehicle line out to every ground session, enveloped."""
        wrapped = pt.encode_envelope(uav_id, line)
        with self._lock:
            grounds = list(self._grounds.values())
        for send in grounds:
            try:
                send(wrapped)
            except Exception:
                pass  # a dying ground session is reaped by its own handler

    def to_uav(self, uav_id: str, inner: str) -> None:
        with self._lock:
            send = self._uavs.get(uav_id)
        if send is None:
            raise UnknownUavError(uav_id)
        send(inner if inner.endswith("\n") else inner + "\n")


def _seq_of(inner: str) -> Optional[int]:
    try:
        if pt.line_tag(inner) == "C":
            return pt.decode_command(inner).seq
    except pt.ProtocolError:
        pass
    return None


@dataclass
class RelayServer:
    """Line-oriented TCP front end for the router. One port, both roles;
    the first line of a connection must be a registration."""

    host: str = "127.0.0.1"
    port: int = 0
    token: str = DEFAULT_TOKEN
    router: RelayRouter = field(default_factory=RelayRouter)

    def __post_init__(self) -> None:
        self._sock: Optional[socket.socket] = None
        self._threads: list[threading.Thread] = []
        self._stop = threading.Event()

    def start(self) -> tuple[str, int]:
        self._sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._sock.bind((self.host, self.port))
        self._sock.listen(32)
        self.host, self.port = self._sock.getsockname()
        t = threading.Thread(target=self._accept_loop, name="relay-accept", daemon=True)
        t.start()
        self._threads.append(t)
        return self.host, self.port

    def stop(self) -> None:
        self._stop.set()
        if self._sock is not None:
            try:
                self._sock.close()
            except OSError:
                pass

    def _accept_loop(self) -> None:
        assert self._sock is not None
        while not self._stop.is_set():
            try:
                conn, _ = self._sock.accept()
            except OSError:
                return
            t = threading.Thread(target=self._handle, args=(conn,), daemon=True)
            t.start()
            self._threads.append(t)

    def _handle(self, conn: socket.socket) -> None:
        conn.settimeout(10.0)
        wlock = threading.Lock()

        def send(line: str) -> None:
            with wlock:
                conn.sendall(line.encode())

        reader = conn.makefile("rb")
        uav_id: Optional[str] = None
        ground_handle: Optional[int] = None
        try:
            first = reader.readline()
            if not first:
                return
            try:
                role, reg_id, token = pt.decode_register(first)
            except pt.ProtocolError:
                send(pt.encode_error(None, "bad-registration"))
                return
            if token != self.token:
                send(pt.encode_error(None, "auth", "token mismatch"))
                return
            if role == "UAV":
                assert reg_id is not None
                try:
                    self.router.register_uav(reg_id, send)
                except DuplicateUavError:
                    send(pt.encode_error(None, "duplicate-id", reg_id))
                    return
                uav_id = reg_id
            else:
                ground_handle = self.router.register_ground(send)
            send(pt.encode_ack(0, "ok"))
            conn.settimeout(None)

            for raw in reader:
                line = raw.decode("utf-8", "replace")
                if not line.strip():
                    continue
                if uav_id is not None:
                    self.router.from_uav(uav_id, line)
                else:
                    self._route_ground_line(send, line)
        except (OSError, ValueError):
            pass
        finally:
            if uav_id is not None:
                self.router.unregister_uav(uav_id)
            if ground_handle is not None:
                self.router.unregister_ground(ground_handle)
            try:
                conn.close()
            except OSError:
                pass

    def _route_ground_line(self, reply: SendFn, line: str) -> None:
        try:
            target, inner = pt.decode_envelope(line)
        except pt.ProtocolError:
            reply(pt.encode_error(None, "bad-envelope"))
            return
        try:
            self.router.to_uav(target, inner)
        except UnknownUavError:
            err = pt.encode_error(_seq_of(inner), "not-connected", target)
            reply(pt.encode_envelope(target, err))
