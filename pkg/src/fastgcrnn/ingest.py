"""GPS records to per-road flow series, and flow series to forecast windows.

Records arrive already map-matched: each row says car ``car_id`` was on road
``road_id`` at ``time``. Counting follows the usual taxi-flow recipe: bucket the
timestamp, collapse repeated (car, road, bucket) sightings, count what is left.
"""

from __future__ import annotations

import csv
import logging
import math
import os
import re
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import EmptyDatasetError, InputError, OutOfRangeError

log = logging.getLogger(__name__)

TIME_FORMAT = "%Y-%m-%d %H:%M:%S"
DEFAULT_BEGIN = datetime(2015, 1, 1)
DEFAULT_INTERVAL = timedelta(minutes=5)


@dataclass(frozen=True)
class GpsRecord:
    road_id: str
    car_id: str
    time: datetime


@dataclass
class IngestSummary:
    records_read: int = 0
    malformed: int = 0
    unknown_road: int = 0
    before_begin: int = 0
    out_of_horizon: int = 0
    duplicates: int = 0
    counted: int = 0

    @property
    def skipped(self) -> int:
        return self.malformed + self.unknown_road + self.before_begin + self.out_of_horizon

    def line(self) -> str:
        return (
            f"records read={self.records_read} counted={self.counted} skipped={self.skipped} "
            f"(malformed={self.malformed} unknown_road={self.unknown_road} "
            f"before_begin={self.before_begin} out_of_horizon={self.out_of_horizon}) "
            f"duplicates={self.duplicates}"
        )


@dataclass(frozen=True)
class FlowMatrix:
    values: np.ndarray = field(repr=False)
    road_ids: tuple[str, ...]
    begin_time: datetime = DEFAULT_BEGIN
    interval: timedelta = DEFAULT_INTERVAL

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def T(self) -> int:
        return self.values.shape[1]

    @property
    def road_index(self) -> dict[str, int]:
        return {rid: i for i, rid in enumerate(self.road_ids)}


@dataclass(frozen=True)
class ForecastWindow:
    x: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)
    t0: int


def parse_time(text: str) -> datetime:
    return datetime.strptime(text.strip(), TIME_FORMAT)


_DURATION = re.compile(r"^\s*(\d+)\s*([smh]?)\s*$")


def parse_duration(text: str | int | timedelta) -> timedelta:
    """Accept ``300``, ``300s``, ``5m``, ``30m`` or ``1h``; bare numbers are seconds."""
    if isinstance(text, timedelta):
        return text
    if isinstance(text, int):
        return timedelta(seconds=text)
    m = _DURATION.match(str(text))
    if not m:
        raise InputError(f"bad duration {text!r}; use e.g. 5m, 30m, 300s")
    value, unit = int(m.group(1)), m.group(2) or "s"
    unit_name = {"s": "seconds", "m": "minutes", "h": "hours"}[unit]
    td = timedelta(**{unit_name: value})
    if td.total_seconds() <= 0:
        raise InputError("duration must be positive")
    return td


def bucketize(t: datetime, begin_time: datetime, interval: timedelta) -> int:
    if interval.total_seconds() <= 0:
        raise InputError("interval must be positive")
    if t < begin_time:
        raise OutOfRangeError(f"time {t} precedes begin time {begin_time}")
    return (t - begin_time) // interval


def read_gps_records(path: str | os.PathLike, summary: IngestSummary) -> Iterator[GpsRecord]:
    """Stream records from a ``road_id,car_id,time`` CSV, counting malformed rows."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["road_id", "car_id", "time"]:
            raise InputError(f"{path}: header must be 'road_id,car_id,time'")
        for lineno, row in enumerate(reader, 2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            summary.records_read += 1
            try:
                if len(row) != 3:
                    raise ValueError(f"expected 3 fields, got {len(row)}")
                road, car, ts = (c.strip() for c in row)
                if not road or not car:
                    raise ValueError("empty road_id or car_id")
                yield GpsRecord(road, car, parse_time(ts))
            except ValueError as exc:
                summary.malformed += 1
                log.debug("%s:%d skipped: %s", path, lineno, exc)


def build_flow_matrix(
    records: Iterable[GpsRecord],
    roads: Sequence[str] | set[str],
    begin_time: datetime = DEFAULT_BEGIN,
    interval: timedelta = DEFAULT_INTERVAL,
    T: int | None = None,
    summary: IngestSummary | None = None,
) -> tuple[FlowMatrix, IngestSummary]:
    """Count distinct cars per road and time bucket.

    ``roads`` given as a set is sorted; a sequence keeps its order (use the graph's
    node order). With ``T=None`` the horizon ends at the last populated bucket.
    Records landing in bucket ``>= T`` are dropped and counted.
    """
    if summary is None:
        summary = IngestSummary()
    road_ids = tuple(sorted(roads)) if isinstance(roads, (set, frozenset)) else tuple(roads)
    index = {rid: i for i, rid in enumerate(road_ids)}
    triples = set()
    valid = 0
    for rec in records:
        if rec.road_id not in index:
            summary.unknown_road += 1
            continue
        try:
            b = bucketize(rec.time, begin_time, interval)
        except OutOfRangeError:
            summary.before_begin += 1
            continue
        if T is not None and b >= T:
            summary.out_of_horizon += 1
            continue
        valid += 1
        triples.add((rec.car_id, index[rec.road_id], b))
    summary.duplicates += valid - len(triples)
    summary.counted += len(triples)
    if T is None:
        T = 1 + max((b for _, _, b in triples), default=-1)
    values = np.zeros((len(road_ids), T), dtype=np.float64)
    for _, i, b in triples:
        values[i, b] += 1.0
    return FlowMatrix(values, road_ids, begin_time, interval), summary


def horizon_buckets(begin_time: datetime, end_time: datetime, interval: timedelta) -> int:
    return math.ceil((end_time - begin_time) / interval)


def write_flow_matrix(fm: FlowMatrix, path: str | os.PathLike) -> None:
    from .io import atomic_write_text

    lines = [f"#begin={fm.begin_time.strftime(TIME_FORMAT)} interval_s={int(fm.interval.total_seconds())}"]
    for rid, row in zip(fm.road_ids, fm.values):
        lines.append(",".join([rid] + [_fmt_count(v) for v in row]))
    atomic_write_text(path, "\n".join(lines) + "\n")


def _fmt_count(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def read_flow_matrix(path: str | os.PathLike) -> FlowMatrix:
    begin, interval = DEFAULT_BEGIN, DEFAULT_INTERVAL
    ids, rows = [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                m = re.match(r"#begin=(.+?)\s+interval_s=(\d+)\s*$", line)
                if m:
                    begin = parse_time(m.group(1))
                    interval = timedelta(seconds=int(m.group(2)))
                continue
            parts = line.split(",")
            try:
                rows.append([float(v) for v in parts[1:]])
            except ValueError as exc:
                raise InputError(f"{path}:{lineno}: non-numeric count") from exc
            ids.append(parts[0].strip())
    if not rows:
        raise InputError(f"{path}: no flow rows")
    if len({len(r) for r in rows}) != 1:
        raise InputError(f"{path}: rows have differing lengths")
    return FlowMatrix(np.array(rows, dtype=np.float64), tuple(ids), begin, interval)


def align_to_graph(fm: FlowMatrix, node_ids: Sequence[str]) -> FlowMatrix:
    """Reorder rows to the graph's node order; node sets must match exactly."""
    if set(fm.road_ids) != set(node_ids) or len(fm.road_ids) != len(node_ids):
        raise InputError("flow matrix roads and graph nodes differ")
    idx = fm.road_index
    order = [idx[r] for r in node_ids]
    return FlowMatrix(fm.values[order], tuple(node_ids), fm.begin_time, fm.interval)


def make_windows(fm: FlowMatrix | np.ndarray, d_in: int, d_out: int, stride: int = 1) -> list[ForecastWindow]:
    values = fm.values if isinstance(fm, FlowMatrix) else np.asarray(fm, dtype=np.float64)
    if min(d_in, d_out, stride) < 1:
        raise InputError("d_in, d_out and stride must all be >= 1")
    T = values.shape[1]
    if d_in + d_out > T:
        raise EmptyDatasetError(f"need at least d_in+d_out={d_in + d_out} buckets, have {T}")
    return [
        ForecastWindow(values[:, t0:t0 + d_in].copy(), values[:, t0 + d_in:t0 + d_in + d_out].copy(), t0)
        for t0 in range(0, T - d_in - d_out + 1, stride)
    ]


def window_arrays(values: np.ndarray, d_in: int, d_out: int, stride: int = 1) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Stacked windows as arrays: X (N, n, d_in), Y (N, n, d_out), t0 (N,)."""
    wins = make_windows(values, d_in, d_out, stride)
    X = np.stack([w.x for w in wins])
    Y = np.stack([w.y for w in wins])
    return X, Y, np.array([w.t0 for w in wins])


def chronological_split(T: int, fractions=(0.7, 0.1, 0.2)) -> tuple[slice, slice, slice]:
    a = int(round(T * fractions[0]))
    b = int(round(T * (fractions[0] + fractions[1])))
    return slice(0, a), slice(a, b), slice(b, T)


@dataclass(frozen=True)
class FlowScaler:
    """Per-node z-score; ``std`` is floored so constant series stay finite."""

    mean: np.ndarray
    std: np.ndarray

    def transform(self, x: np.ndarray) -> np.ndarray:
        return (x - self.mean[:, None]) / self.std[:, None]

    def inverse(self, z: np.ndarray) -> np.ndarray:
        return z * self.std[:, None] + self.mean[:, None]

    @classmethod
    def identity(cls, n: int) -> "FlowScaler":
        return cls(np.zeros(n), np.ones(n))

    @classmethod
    def fit(cls, values: np.ndarray, floor: float = 1e-8) -> "FlowScaler":
        values = np.asarray(values, dtype=np.float64)
        return cls(values.mean(axis=1), np.maximum(values.std(axis=1), floor))


def normalize_flows(train: Sequence[ForecastWindow] | np.ndarray) -> FlowScaler:
    """Fit the scaler on training data (a list of windows or an n x T block)."""
    if isinstance(train, np.ndarray):
        block = train
    else:
        if not train:
            raise EmptyDatasetError("cannot fit a scaler on zero windows")
        block = np.concatenate([np.concatenate([w.x, w.y], axis=1) for w in train], axis=1)
    if block.size == 0:
        raise EmptyDatasetError("cannot fit a scaler on an empty block")
    return FlowScaler.fit(block)
