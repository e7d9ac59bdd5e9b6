"""Geostamped measurement persistence and the exceedance monitor.

Backed by a single SQLite file in WAL mode (write-ahead durability,
snapshot-consistent readers during writes). The vehicle clock is
authoritative for measurement time; the receipt time is stored alongside.
Duplicate deliveries of the same (uav, timestamp, parameter) row are
ignored, which makes ingestion idempotent under retries.
"""
from __future__ import annotations

import csv
import io
import sqlite3
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Iterable, Optional, Sequence

from .sensors import WhoLimit, WhoVerdict, who_check

PARAMETERS = ("humidity", "temp", "dust", "o3", "co2", "co", "lpg", "smoke")


class StoreError(ValueError):
    pass


def to_epoch(ts: datetime) -> float:
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.timestamp()


def from_epoch(epoch: float) -> datetime:
    return datetime.fromtimestamp(epoch, tz=timezone.utc)


def iso(ts: datetime) -> str:
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%S.%fZ")


@dataclass(frozen=True)
class Measurement:
    uav_id: str
    timestamp: datetime
    lat: float
    lon: float
    alt: float
    parameter: str
    value: float
    valid: bool
    received: Optional[datetime] = None

    def row(self) -> tuple:
        return (self.uav_id, to_epoch(self.timestamp),
                to_epoch(self.received) if self.received else None,
                self.lat, self.lon, self.alt, self.parameter, self.value,
                1 if self.valid else 0)


@dataclass(frozen=True)
class QueryFilter:
    time_from: Optional[datetime] = None
    time_to: Optional[datetime] = None
    bbox: Optional[tuple[float, float, float, float]] = None  # minlat, minlon, maxlat, maxlon
    parameters: Optional[frozenset[str]] = None
    uav_id: Optional[str] = None

    def __post_init__(self) -> None:
        if self.time_from and self.time_to and to_epoch(self.time_from) > to_epoch(self.time_to):
            raise StoreError("time_from must not be after time_to")
        if self.bbox is not None:
            minlat, minlon, maxlat, maxlon = self.bbox
            if minlat > maxlat or minlon > maxlon:
                raise StoreError("bbox must be (minlat, minlon, maxlat, maxlon), well ordered")
        if self.parameters is not None:
            unknown = set(self.parameters) - set(PARAMETERS)
            if unknown:
                raise StoreError(f"unknown parameters: {sorted(unknown)}")


@dataclass(frozen=True)
class Alert:
    parameter: str
    window: str
    averaged_value: float
    limit_value: float
    lat: float
    lon: float
    timestamp: datetime


_SCHEMA = """
CREATE TABLE IF NOT EXISTS measurements (
    id INTEGER PRIMARY KEY,
    uav_id TEXT NOT NULL,
    ts REAL NOT NULL,
    received_ts REAL,
    lat REAL NOT NULL,
    lon REAL NOT NULL,
    alt REAL NOT NULL,
    parameter TEXT NOT NULL,
    value REAL NOT NULL,
    valid INTEGER NOT NULL,
    UNIQUE(uav_id, ts, parameter)
);
CREATE INDEX IF NOT EXISTS idx_meas_ts ON measurements(ts);
CREATE INDEX IF NOT EXISTS idx_meas_param_ts ON measurements(parameter, ts);
CREATE TABLE IF NOT EXISTS alerts (
    id INTEGER PRIMARY KEY,
    parameter TEXT NOT NULL,
    window TEXT NOT NULL,
    averaged_value REAL NOT NULL,
    limit_value REAL NOT NULL,
    lat REAL NOT NULL,
    lon REAL NOT NULL,
    ts REAL NOT NULL
);
"""


class MeasurementStore:
    def __init__(self, path: str = ":memory:"):
        self.path = path
        self._conn = sqlite3.connect(path, check_same_thread=False)
        self._lock = threading.RLock()
        with self._lock:
            self._conn.execute("PRAGMA journal_mode=WAL")
            self._conn.execute("PRAGMA synchronous=NORMAL")
            self._conn.executescript(_SCHEMA)
            self._conn.commit()

    def close(self) -> None:
        with self._lock:
            self._conn.close()

    # -- ingestion -----------------------------------------------------------

    def ingest(self, batch: Sequence[Measurement]) -> int:
        """Insert a batch; returns how many rows were actually new."""
        with self._lock:
            before = self._conn.execute("SELECT COUNT(*) FROM measurements").fetchone()[0]
            try:
                self._conn.executemany(
                    "INSERT OR IGNORE INTO measurements "
                    "(uav_id, ts, received_ts, lat, lon, alt, parameter, value, valid) "
                    "VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?)",
                    [m.row() for m in batch])
                self._conn.commit()
            except sqlite3.OperationalError as exc:
                self._conn.rollback()
                raise StoreError(f"storage failure (retriable): {exc}") from exc
            after = self._conn.execute("SELECT COUNT(*) FROM measurements").fetchone()[0]
            return after - before

    # -- queries ---------------------------------------------------------------

    def query(self, flt: QueryFilter) -> list[Measurement]:
        """All and only the rows matching every filter clause, time ordered."""
        clauses, args = ["1=1"], []
        if flt.time_from is not None:
            clauses.append("ts >= ?")
            args.append(to_epoch(flt.time_from))
        if flt.time_to is not None:
            clauses.append("ts <= ?")
            args.append(to_epoch(flt.time_to))
        if flt.bbox is not None:
            clauses.append("lat >= ? AND lat <= ? AND lon >= ? AND lon <= ?")
            args.extend([flt.bbox[0], flt.bbox[2], flt.bbox[1], flt.bbox[3]])
        if flt.parameters is not None:
            if not flt.parameters:
                return []
            marks = ",".join("?" * len(flt.parameters))
            clauses.append(f"parameter IN ({marks})")
            args.extend(sorted(flt.parameters))
        if flt.uav_id is not None:
            clauses.append("uav_id = ?")
            args.append(flt.uav_id)
        sql = ("SELECT uav_id, ts, received_ts, lat, lon, alt, parameter, value, valid "
               f"FROM measurements WHERE {' AND '.join(clauses)} "
               "ORDER BY ts, uav_id, parameter, id")
        with self._lock:
            rows = self._conn.execute(sql, args).fetchall()
        return [Measurement(r[0], from_epoch(r[1]), r[3], r[4], r[5], r[6], r[7],
                            bool(r[8]), from_epoch(r[2]) if r[2] is not None else None)
                for r in rows]

    def count(self) -> int:
        with self._lock:
            return self._conn.execute("SELECT COUNT(*) FROM measurements").fetchone()[0]

    # -- rolling averages --------------------------------------------------------

    def rolling_average(self, parameter: str, window_s: float, now: datetime,
                        uav_id: Optional[str] = None) -> Optional[float]:
        """Time-weighted mean of valid readings in (now - window, now].

        Consecutive samples are integrated trapezoidally over the span they
        cover; a single sample is its own average; no samples means None.
        """
        if window_s <= 0:
            raise StoreError("window must be > 0")
        t1 = to_epoch(now)
        t0 = t1 - window_s
        sql = ("SELECT ts, value FROM measurements WHERE parameter = ? AND valid = 1 "
               "AND ts > ? AND ts <= ?")
        args: list = [parameter, t0, t1]
        if uav_id is not None:
            sql += " AND uav_id = ?"
            args.append(uav_id)
        sql += " ORDER BY ts, id"
        with self._lock:
            rows = self._conn.execute(sql, args).fetchall()
        if not rows:
            return None
        if len(rows) == 1 or rows[-1][0] == rows[0][0]:
            return sum(v for _, v in rows) / len(rows)
        area = 0.0
        for (ta, va), (tb, vb) in zip(rows, rows[1:]):
            area += 0.5 * (va + vb) * (tb - ta)
        return area / (rows[-1][0] - rows[0][0])

    # -- alerts ---------------------------------------------------------------

    def record_alert(self, alert: Alert) -> None:
        with self._lock:
            self._conn.execute(
                "INSERT INTO alerts (parameter, window, averaged_value, limit_value, "
                "lat, lon, ts) VALUES (?, ?, ?, ?, ?, ?, ?)",
                (alert.parameter, alert.window, alert.averaged_value, alert.limit_value,
                 alert.lat, alert.lon, to_epoch(alert.timestamp)))
            self._conn.commit()

    def alerts(self) -> list[Alert]:
        with self._lock:
            rows = self._conn.execute(
                "SELECT parameter, window, averaged_value, limit_value, lat, lon, ts "
                "FROM alerts ORDER BY ts, id").fetchall()
        return [Alert(r[0], r[1], r[2], r[3], r[4], r[5], from_epoch(r[6])) for r in rows]

    def last_position(self, parameter: str, now: datetime) -> tuple[float, float]:
        with self._lock:
            row = self._conn.execute(
                "SELECT lat, lon FROM measurements WHERE parameter = ? AND ts <= ? "
                "ORDER BY ts DESC, id DESC LIMIT 1", (parameter, to_epoch(now))).fetchone()
        return (row[0], row[1]) if row else (0.0, 0.0)

    # -- export ---------------------------------------------------------------

    def export_csv(self, flt: QueryFilter) -> str:
        """RFC-4180-style CSV of a query result; row order equals query order."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\r\n")
        writer.writerow(["uav_id", "timestamp", "lat", "lon", "alt",
                         "parameter", "value", "valid"])
        for m in self.query(flt):
            writer.writerow([m.uav_id, iso(m.timestamp), repr(m.lat), repr(m.lon),
                             repr(m.alt), m.parameter, repr(m.value),
                             "true" if m.valid else "false"])
        return buf.getvalue()

    # -- grid aggregation (heat-map backend) -----------------------------------

    def grid(self, parameter: str, bbox: tuple[float, float, float, float],
             cols: int, rows: int, flt: Optional[QueryFilter] = None) -> list[list[Optional[float]]]:
        """Mean value per cell over a lat/lon grid; None for empty cells."""
        if cols < 1 or rows < 1:
            raise StoreError("grid needs at least 1x1 cells")
        minlat, minlon, maxlat, maxlon = bbox
        base = flt or QueryFilter()
        measurements = self.query(QueryFilter(
            time_from=base.time_from, time_to=base.time_to, bbox=bbox,
            parameters=frozenset({parameter}), uav_id=base.uav_id))
        sums = [[0.0] * cols for _ in range(rows)]
        counts = [[0] * cols for _ in range(rows)]
        dlat = (maxlat - minlat) / rows or 1e-12
        dlon = (maxlon - minlon) / cols or 1e-12
        for m in measurements:
            if not m.valid:
                continue
            r = min(rows - 1, int((m.lat - minlat) / dlat))
            c = min(cols - 1, int((m.lon - minlon) / dlon))
            sums[r][c] += m.value
            counts[r][c] += 1
        return [[(sums[r][c] / counts[r][c]) if counts[r][c] else None
                 for c in range(cols)] for r in range(rows)]


class AlertMonitor:
    """Evaluates limits on rolling averages, one alert per exceedance episode."""

    def __init__(self, store: MeasurementStore, limits: Iterable[WhoLimit],
                 window_seconds: dict[str, float], dust_conversion: float = 1.0):
        self.store = store
        self.limits = tuple(limits)
        self.window_seconds = window_seconds
        self.dust_conversion = dust_conversion
        self._in_episode: dict[tuple[str, str], bool] = {}

    def scan(self, now: datetime) -> list[Alert]:
        """Check every configured (parameter, window); returns only alerts
        newly raised on this scan (episode deduplication)."""
        new: list[Alert] = []
        for lim in self.limits:
            seconds = self.window_seconds.get(lim.window)
            if seconds is None:
                continue
            avg = self.store.rolling_average(lim.parameter, seconds, now)
            key = (lim.parameter, lim.window)
            if avg is None:
                continue
            compare = avg * self.dust_conversion if lim.parameter == "dust" else avg
            verdict, _ = who_check(lim.parameter, compare, lim.window, self.limits)
            if verdict is WhoVerdict.EXCEEDED:
                if not self._in_episode.get(key, False):
                    self._in_episode[key] = True
                    lat, lon = self.store.last_position(lim.parameter, now)
                    alert = Alert(lim.parameter, lim.window, compare, lim.limit_value,
                                  lat, lon, now)
                    self.store.record_alert(alert)
                    new.append(alert)
            else:
                self._in_episode[key] = False
        return new
