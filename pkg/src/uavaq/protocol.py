"""Text line protocol spoken between UAV, relay and ground station.

Every message is one newline-terminated line whose first token is a
one-letter type tag:

    D <iso-utc> <lat> <lon> <alt> <hum> <temp> <dust> <o3> <co2> <co> <lpg> <smoke>
    C <seq> <KIND> [<arg>]          command (ground -> UAV)
    A <seq> <status> [<detail>]     command acknowledgement
    H <iso-utc>                     heartbeat (both directions, 1 Hz)
    V <frame_id> <source-iso> <b64> synthetic video frame stamped at source
    S <iso-utc> <mode> <lat> <lon> <alt> <heading> <airspeed> <battery_mah>
      <throttle> <warmup_s> <link>  vehicle status
    R UAV <uav_id> <token>          registration (UAV side)
    R GND <token>                   registration (ground side)
    X <uav_id> <inner line>         relay envelope on the ground leg
    E <seq|-> <code> [<detail>]     error

Fields are space separated; UPLOAD_MISSION carries its JSON argument
base64-encoded so no escaping is ever needed. Sensor fields print exactly
like the on-board serial output: two decimals for the float channels,
bare integers for co/lpg/smoke.
"""
from __future__ import annotations

import base64
import json
import re
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum
from typing import Optional

_TOKEN = re.compile(rb"\S+")
_TS_FMT = "%Y-%m-%dT%H:%M:%S.%f"


class ProtocolError(ValueError):
    """Malformed line; carries the byte offset of the offending field."""

    def __init__(self, message: str, offset: int = 0):
        super().__init__(f"{message} (byte {offset})")
        self.offset = offset


def format_ts(ts: datetime) -> str:
    if ts.tzinfo is not None:
        ts = ts.astimezone(timezone.utc).replace(tzinfo=None)
    return ts.strftime(_TS_FMT) + "Z"


def parse_ts(text: str, offset: int = 0) -> datetime:
    raw = text[:-1] if text.endswith("Z") else text
    if "." not in raw:
        raw += ".000000"
    try:
        return datetime.strptime(raw, _TS_FMT).replace(tzinfo=timezone.utc)
    except ValueError:
        raise ProtocolError(f"bad timestamp {text!r}", offset) from None


@dataclass(frozen=True)
class SensorFrame:
    """One telemetry record in on-board print order. co/lpg/smoke are the
    integer outputs of the MQ percentage routine; the rest print with two
    decimals."""

    humidity: float
    temp: float
    dust: float
    o3: float
    co2: float
    co: int
    lpg: int
    smoke: int
    valid: bool = True

    def sensor_fields(self) -> str:
        return (f"{self.humidity:.2f} {self.temp:.2f} {self.dust:.2f} "
                f"{self.o3:.2f} {self.co2:.2f} {self.co:d} {self.lpg:d} {self.smoke:d}")


@dataclass(frozen=True)
class GpsFix:
    lat: float
    lon: float
    alt: Optional[float]       # meters; RMC sentences carry no altitude
    utc_time: str              # hhmmss(.sss) as transmitted
    fix_quality: int
    satellites: Optional[int]


class CommandKind(str, Enum):
    START_DATA = "START_DATA"
    STOP_DATA = "STOP_DATA"
    START_VIDEO = "START_VIDEO"
    STOP_VIDEO = "STOP_VIDEO"
    SET_MODE = "SET_MODE"
    UPLOAD_MISSION = "UPLOAD_MISSION"
    RTB = "RTB"


@dataclass(frozen=True)
class Command:
    kind: CommandKind
    seq: int
    mode: Optional[str] = None      # SET_MODE argument
    mission: Optional[dict] = None  # UPLOAD_MISSION argument


@dataclass(frozen=True)
class DataRecord:
    frame: SensorFrame
    lat: float
    lon: float
    alt: float
    timestamp: datetime


@dataclass(frozen=True)
class StatusRecord:
    timestamp: datetime
    mode: str
    lat: float
    lon: float
    alt: float
    heading: float
    airspeed: float
    battery_mah: float
    throttle: float
    warmup_s: float
    link_ok: bool


def _tokens(line: bytes) -> list[tuple[bytes, int]]:
    return [(m.group(0), m.start()) for m in _TOKEN.finditer(line)]


def _num(tok: bytes, off: int, kind=float):
    try:
        return kind(tok.decode("ascii"))
    except (ValueError, UnicodeDecodeError):
        raise ProtocolError(f"non-numeric field {tok!r}", off) from None


# ---------------------------------------------------------------------------
# D lines

def encode_frame(frame: SensorFrame, lat: float, lon: float, alt: float,
                 timestamp: datetime) -> str:
    """Render one telemetry data line (newline terminated)."""
    return (f"D {format_ts(timestamp)} {lat:.7f} {lon:.7f} {alt:.2f} "
            f"{frame.sensor_fields()}\n")


def decode_frame(line: str | bytes) -> DataRecord:
    """Exact inverse of encode_frame; tolerant of trailing whitespace only."""
    raw = line.encode() if isinstance(line, str) else line
    toks = _tokens(raw)
    if not toks or toks[0][0] != b"D":
        off = toks[0][1] if toks else 0
        raise ProtocolError("expected 'D' tag", off)
    if len(toks) != 13:
        raise ProtocolError(f"expected 13 fields, got {len(toks)}",
                            toks[-1][1] if toks else 0)
    ts = parse_ts(toks[1][0].decode("ascii", "replace"), toks[1][1])
    nums = [toks[i] for i in range(2, 13)]
    lat = _num(*nums[0][:2])
    lon = _num(*nums[1][:2])
    alt = _num(*nums[2][:2])
    floats = [_num(t, o) for t, o in nums[3:8]]
    ints = [_num(t, o, int) for t, o in nums[8:11]]
    frame = SensorFrame(humidity=floats[0], temp=floats[1], dust=floats[2],
                        o3=floats[3], co2=floats[4], co=ints[0], lpg=ints[1],
                        smoke=ints[2])
    return DataRecord(frame, lat, lon, alt, ts)


# ---------------------------------------------------------------------------
# Commands / acks

def encode_command(cmd: Command) -> str:
    if cmd.kind == CommandKind.SET_MODE:
        if not cmd.mode:
            raise ProtocolError("SET_MODE needs a mode argument")
        return f"C {cmd.seq} SET_MODE {cmd.mode}\n"
    if cmd.kind == CommandKind.UPLOAD_MISSION:
        if cmd.mission is None:
            raise ProtocolError("UPLOAD_MISSION needs a mission argument")
        blob = base64.b64encode(json.dumps(cmd.mission, sort_keys=True).encode()).decode()
        return f"C {cmd.seq} UPLOAD_MISSION {blob}\n"
    return f"C {cmd.seq} {cmd.kind.value}\n"


def decode_command(line: str | bytes) -> Command:
    raw = line.encode() if isinstance(line, str) else line
    toks = _tokens(raw)
    if not toks or toks[0][0] != b"C":
        raise ProtocolError("expected 'C' tag", toks[0][1] if toks else 0)
    if len(toks) < 3:
        raise ProtocolError("command line needs seq and kind", len(raw))
    seq = _num(toks[1][0], toks[1][1], int)
    kind_tok, kind_off = toks[2]
    try:
        kind = CommandKind(kind_tok.decode("ascii", "replace"))
    except ValueError:
        raise ProtocolError(f"unknown command kind {kind_tok!r}", kind_off) from None
    if kind == CommandKind.SET_MODE:
        if len(toks) != 4:
            raise ProtocolError("SET_MODE takes exactly one argument", kind_off)
        return Command(kind, seq, mode=toks[3][0].decode("ascii", "replace"))
    if kind == CommandKind.UPLOAD_MISSION:
        if len(toks) != 4:
            raise ProtocolError("UPLOAD_MISSION takes exactly one argument", kind_off)
        try:
            mission = json.loads(base64.b64decode(toks[3][0]).decode())
        except Exception:
            raise ProtocolError("undecodable mission payload", toks[3][1]) from None
        return Command(kind, seq, mission=mission)
    if len(toks) != 3:
        raise ProtocolError(f"{kind.value} takes no arguments", toks[3][1])
    return Command(kind, seq)


def encode_ack(seq: int, status: str, detail: str = "") -> str:
    if detail:
        return f"A {seq} {status} {detail}\n"
    return f"A {seq} {status}\n"


def decode_ack(line: str | bytes) -> tuple[int, str, str]:
    raw = line.encode() if isinstance(line, str) else line
    toks = _tokens(raw)
    if not toks or toks[0][0] != b"A" or len(toks) < 3:
        raise ProtocolError("malformed ack", toks[0][1] if toks else 0)
    seq = _num(toks[1][0], toks[1][1], int)
    status = toks[2][0].decode("ascii", "replace")
    detail = raw[toks[3][1]:].decode("ascii", "replace").strip() if len(toks) > 3 else ""
    return seq, status, detail


# ---------------------------------------------------------------------------
# Heartbeat / status / video / registration / envelope / error

def encode_heartbeat(ts: datetime) -> str:
    return f"H {format_ts(ts)}\n"


def decode_heartbeat(line: str | bytes) -> datetime:
    raw = line.encode() if isinstance(line, str) else line
    toks = _tokens(raw)
    if len(toks) != 2 or toks[0][0] != b"H":
        raise ProtocolError("malformed heartbeat", 0)
    return parse_ts(toks[1][0].decode("ascii", "replace"), toks[1][1])


def encode_status(s: StatusRecord) -> str:
    return (f"S {format_ts(s.timestamp)} {s.mode} {s.lat:.7f} {s.lon:.7f} "
            f"{s.alt:.2f} {s.heading:.2f} {s.airspeed:.2f} {s.battery_mah:.1f} "
            f"{s.throttle:.1f} {s.warmup_s:.1f} {1 if s.link_ok else 0}\n")


def decode_status(line: str | bytes) -> StatusRecord:
    raw = line.encode() if isinstance(line, str) else line
    toks = _tokens(raw)
    if len(toks) != 12 or toks[0][0] != b"S":
        raise ProtocolError("malformed status line", 0)
    ts = parse_ts(toks[1][0].decode("ascii", "replace"), toks[1][1])
    mode = toks[2][0].decode("ascii", "replace")
    vals = [_num(t, o) for t, o in toks[3:11]]
    link = _num(toks[11][0], toks[11][1], int)
    return StatusRecord(ts, mode, vals[0], vals[1], vals[2], vals[3], vals[4],
                        vals[5], vals[6], vals[7], bool(link))


def encode_video(frame_id: int, source_ts: datetime, payload: bytes) -> str:
    return f"V {frame_id} {format_ts(source_ts)} {base64.b64encode(payload).decode()}\n"


def decode_video(line: str | bytes) -> tuple[int, datetime, bytes]:
    raw = line.encode() if isinstance(line, str) else line
    toks = _tokens(raw)
    if len(toks) != 4 or toks[0][0] != b"V":
        raise ProtocolError("malformed video line", 0)
    fid = _num(toks[1][0], toks[1][1], int)
    ts = parse_ts(toks[2][0].decode("ascii", "replace"), toks[2][1])
    try:
        payload = base64.b64decode(toks[3][0], validate=True)
    except Exception:
        raise ProtocolError("undecodable video payload", toks[3][1]) from None
    return fid, ts, payload


def encode_register_uav(uav_id: str, token: str) -> str:
    return f"R UAV {uav_id} {token}\n"


def encode_register_ground(token: str) -> str:
    return f"R GND {token}\n"


def decode_register(line: str | bytes) -> tuple[str, Optional[str], str]:
    """Returns (role, uav_id or None, token)."""
    raw = line.encode() if isinstance(line, str) else line
    toks = _tokens(raw)
    if not toks or toks[0][0] != b"R" or len(toks) < 3:
        raise ProtocolError("malformed registration", 0)
    role = toks[1][0].decode("ascii", "replace")
    if role == "UAV":
        if len(toks) != 4:
            raise ProtocolError("UAV registration needs id and token", toks[1][1])
        return role, toks[2][0].decode("ascii", "replace"), toks[3][0].decode("ascii", "replace")
    if role == "GND":
        if len(toks) != 3:
            raise ProtocolError("GND registration needs a token", toks[1][1])
        return role, None, toks[2][0].decode("ascii", "replace")
    raise ProtocolError(f"unknown registration role {role!r}", toks[1][1])


def encode_envelope(uav_id: str, inner: str) -> str:
    return f"X {uav_id} {inner.rstrip()}\n"


def decode_envelope(line: str | bytes) -> tuple[str, str]:
    raw = line.encode() if isinstance(line, str) else line
    toks = _tokens(raw)
    if len(toks) < 3 or toks[0][0] != b"X":
        raise ProtocolError("malformed envelope", 0)
    uav_id = toks[1][0].decode("ascii", "replace")
    inner = raw[toks[2][1]:].decode("ascii", "replace").rstrip("\r\n")
    return uav_id, inner


def encode_error(seq: Optional[int], code: str, detail: str = "") -> str:
    s = "-" if seq is None else str(seq)
    if detail:
        return f"E {s} {code} {detail}\n"
    return f"E {s} {code}\n"


def decode_error(line: str | bytes) -> tuple[Optional[int], str, str]:
    raw = line.encode() if isinstance(line, str) else line
    toks = _tokens(raw)
    if len(toks) < 3 or toks[0][0] != b"E":
        raise ProtocolError("malformed error line", 0)
    seq_tok = toks[1][0].decode("ascii", "replace")
    seq = None if seq_tok == "-" else _num(toks[1][0], toks[1][1], int)
    code = toks[2][0].decode("ascii", "replace")
    detail = raw[toks[3][1]:].decode("ascii", "replace").strip() if len(toks) > 3 else ""
    return seq, code, detail


def line_tag(line: str | bytes) -> str:
    raw = line.encode() if isinstance(line, str) else line
    stripped = raw.lstrip()
    return stripped[:1].decode("ascii", "replace") if stripped else ""
