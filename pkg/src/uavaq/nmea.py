"""NMEA 0183 sentence handling for the GPS feed.

Supports GGA (fix data) and RMC (recommended minimum) from any talker,
verifies the XOR checksum between '$' and '*', and converts ddmm.mmmm
coordinates to signed decimal degrees.
"""
from __future__ import annotations

from .protocol import GpsFix


class NmeaError(ValueError):
    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code  # "checksum" | "unsupported" | "malformed"


def checksum(payload: str) -> int:
    """XOR of all characters between '$' and '*' (exclusive)."""
    c = 0
    for ch in payload:
        c ^= ord(ch)
    return c


def _split(sentence: str) -> tuple[str, int]:
    s = sentence.strip()
    if not s.startswith("$"):
        raise NmeaError("malformed", "sentence must start with '$'")
    star = s.rfind("*")
    if star == -1 or len(s) < star + 3:
        raise NmeaError("malformed", "missing checksum")
    payload = s[1:star]
    try:
        declared = int(s[star + 1:star + 3], 16)
    except ValueError:
        raise NmeaError("malformed", "checksum is not hex") from None
    return payload, declared


def _coord(value: str, hemi: str, width: int, field: str) -> float:
    """ddmm.mmmm (lat, width 2) or dddmm.mmmm (lon, width 3) to degrees."""
    if not value:
        raise NmeaError("malformed", f"empty {field}")
    try:
        degrees = float(value[:width])
        minutes = float(value[width:])
    except ValueError:
        raise NmeaError("malformed", f"bad {field} {value!r}") from None
    if minutes >= 60:
        raise NmeaError("malformed", f"{field} minutes out of range")
    out = degrees + minutes / 60.0
    if hemi in ("S", "W"):
        out = -out
    elif hemi not in ("N", "E"):
        raise NmeaError("malformed", f"bad hemisphere {hemi!r} for {field}")
    return out


def parse_nmea(sentence: str) -> GpsFix:
    """Parse a GGA or RMC sentence into a fix; raises NmeaError otherwise."""
    payload, declared = _split(sentence)
    actual = checksum(payload)
    if actual != declared:
        raise NmeaError("checksum", f"declared {declared:02X}, computed {actual:02X}")
    fields = payload.split(",")
    kind = fields[0][-3:]
    if kind == "GGA":
        if len(fields) < 10:
            raise NmeaError("malformed", "GGA needs at least 10 fields")
        lat = _coord(fields[2], fields[3], 2, "latitude")
        lon = _coord(fields[4], fields[5], 3, "longitude")
        try:
            quality = int(fields[6]) if fields[6] else 0
            sats = int(fields[7]) if fields[7] else None
            alt = float(fields[9]) if fields[9] else None
        except ValueError:
            raise NmeaError("malformed", "bad numeric field in GGA") from None
        return GpsFix(lat=lat, lon=lon, alt=alt, utc_time=fields[1],
                      fix_quality=quality, satellites=sats)
    if kind == "RMC":
        if len(fields) < 7:
            raise NmeaError("malformed", "RMC needs at least 7 fields")
        status = fields[2]
        if status not in ("A", "V"):
            raise NmeaError("malformed", f"bad RMC status {status!r}")
        lat = _coord(fields[3], fields[4], 2, "latitude")
        lon = _coord(fields[5], fields[6], 3, "longitude")
        return GpsFix(lat=lat, lon=lon, alt=None, utc_time=fields[1],
                      fix_quality=1 if status == "A" else 0, satellites=None)
    raise NmeaError("unsupported", f"sentence type {fields[0]!r}")


def _deg_to_ddmm(deg: float, is_lat: bool) -> tuple[str, str]:
    hems = ("N", "S") if is_lat else ("E", "W")
    hemi = hems[0] if deg >= 0 else hems[1]
    mag = abs(deg)
    d = int(mag)
    minutes = (mag - d) * 60.0
    width = 2 if is_lat else 3
    return f"{d:0{width}d}{minutes:07.4f}", hemi


def build_gga(lat: float, lon: float, alt_m: float, utc_hhmmss: str,
              satellites: int = 8, fix_quality: int = 1) -> str:
    """Render a checksummed GGA sentence (simulation-side GPS source)."""
    lat_s, ns = _deg_to_ddmm(lat, True)
    lon_s, ew = _deg_to_ddmm(lon, False)
    payload = (f"GPGGA,{utc_hhmmss},{lat_s},{ns},{lon_s},{ew},{fix_quality},"
               f"{satellites:02d},0.9,{alt_m:.1f},M,0.0,M,,")
    return f"${payload}*{checksum(payload):02X}"
