"""Presence records: parsing, spatial/temporal aggregation and normalization."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone

import numpy as np

from .flow import FlowMatrix
from .geometry import ZoneSet
from .polytope import Marginals

EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)


class PresenceParseError(ValueError):
    def __init__(self, lineno, message):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {message}")


@dataclass(frozen=True)
class PresenceRecord:
    zone_id: str
    interval_end: datetime
    event_count: int

    def __post_init__(self):
        if self.event_count < 0:
            raise ValueError("event_count must be nonnegative")


@dataclass(frozen=True)
class Reject:
    lineno: int
    zone_id: str
    reason: str


@dataclass
class ParsedPresence:
    records: list[PresenceRecord] = field(default_factory=list)
    rejects: list[Reject] = field(default_factory=list)


@dataclass(frozen=True, eq=False)
class PresenceSnapshot:
    interval_end: datetime
    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.ndim != 1 or (counts.size and counts.min() < 0):
            raise ValueError("snapshot counts must be a nonnegative vector")
        object.__setattr__(self, "counts", counts)


@dataclass(eq=False)
class SnapshotSeries:
    """Equally spaced snapshots. ``gaps`` lists zero-filled bucket ends."""

    snapshots: list[PresenceSnapshot]
    period: timedelta
    gaps: list[datetime] = field(default_factory=list)

    def __post_init__(self):
        if self.period <= timedelta(0):
            raise ValueError("period must be positive")
        ends = [s.interval_end for s in self.snapshots]
        for a, b in zip(ends, ends[1:]):
            if b - a != self.period:
                raise ValueError(f"snapshots at {a} and {b} are not {self.period} apart")

    def __len__(self):
        return len(self.snapshots)


def parse_timestamp(text: str) -> datetime:
    """ISO-8601 timestamp as an aware UTC datetime; naive input is taken as UTC."""
    text = text.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    ts = datetime.fromisoformat(text)
    if ts.tzinfo is None:
        return ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def format_timestamp(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def parse_presence(stream, zs: ZoneSet) -> ParsedPresence:
    """Read ``zone_id,interval_end,count`` lines.

    An optional header whose first field is ``zone_id`` is skipped, as are
    blank lines. Records for zones missing from ``zs`` go to ``rejects``.
    """
    out = ParsedPresence()
    for lineno, row in enumerate(csv.reader(stream), start=1):
        if not row or all(not f.strip() for f in row):
            continue
        if lineno == 1 and row[0].strip().lower() == "zone_id":
            continue
        if len(row) != 3:
            raise PresenceParseError(lineno, f"expected 3 fields, got {len(row)}")
        zid, ts_text, count_text = (f.strip() for f in row)
        try:
            ts = parse_timestamp(ts_text)
        except ValueError:
            raise PresenceParseError(lineno, f"bad timestamp {ts_text!r}") from None
        try:
            count = int(count_text)
        except ValueError:
            raise PresenceParseError(lineno, f"bad count {count_text!r}") from None
        if count < 0:
            raise PresenceParseError(lineno, f"negative count {count}")
        if zid not in zs:
            out.rejects.append(Reject(lineno, zid, "unknown zone"))
            continue
        out.records.append(PresenceRecord(zid, ts, count))
    return out


def bucket_end(ts: datetime, bucket: timedelta) -> datetime:
    """Round ``ts`` up onto the bucket grid anchored at the Unix epoch."""
    step = int(bucket.total_seconds() * 1_000_000)
    offset = (ts - EPOCH) // timedelta(microseconds=1)
    return EPOCH + timedelta(microseconds=-(-offset // step) * step)


def aggregate(records, zs: ZoneSet, bucket: timedelta) -> SnapshotSeries:
    """Sum counts per zone per time bucket, zero-filling missing buckets."""
    if bucket <= timedelta(0):
        raise ValueError("bucket must be positive")
    sums: dict[datetime, np.ndarray] = {}
    n = len(zs)
    for r in records:
        key = bucket_end(r.interval_end, bucket)
        vec = sums.get(key)
        if vec is None:
            vec = sums[key] = np.zeros(n, dtype=np.int64)
        vec[zs.index(r.zone_id)] += r.event_count
    if not sums:
        return SnapshotSeries([], bucket)
    first, last = min(sums), max(sums)
    snaps, gaps = [], []
    t = first
    while t <= last:
        vec = sums.get(t)
        if vec is None:
            vec = np.zeros(n, dtype=np.int64)
            gaps.append(t)
        snaps.append(PresenceSnapshot(t, vec))
        t += bucket
    return SnapshotSeries(snaps, bucket, gaps)


def largest_remainder(counts, total: int) -> np.ndarray:
    """Scale ``counts`` to integers summing exactly to ``total``.

    Floors the exact quotients, then hands the shortfall out one unit at a
    time to the largest remainders; equal remainders go to the lower index.
    """
    counts = [int(v) for v in np.asarray(counts).tolist()]
    if any(v < 0 for v in counts):
        raise ValueError("counts must be nonnegative")
    denom = sum(counts)
    if denom == 0:
        raise ValueError("cannot scale an all-zero vector")
    total = int(total)
    scaled = [v * total for v in counts]
    base = [s // denom for s in scaled]
    rem = [s % denom for s in scaled]
    short = total - sum(base)
    order = sorted(range(len(counts)), key=lambda i: (-rem[i], i))
    for i in order[:short]:
        base[i] += 1
    return np.array(base, dtype=np.int64)


def normalize_pair(e1, e2, target_total: int) -> Marginals:
    """Rescale two snapshots to a common integer total."""
    if target_total < 1:
        raise ValueError("target_total must be positive")
    v1 = e1.counts if isinstance(e1, PresenceSnapshot) else np.asarray(e1)
    v2 = e2.counts if isinstance(e2, PresenceSnapshot) else np.asarray(e2)
    if np.sum(v1) == 0 or np.sum(v2) == 0:
        raise ValueError("snapshot has zero total; cannot normalize")
    return Marginals(largest_remainder(v1, target_total), largest_remainder(v2, target_total))


def pair_stream(series: SnapshotSeries) -> list[tuple[PresenceSnapshot, PresenceSnapshot]]:
    snaps = series.snapshots
    if len(snaps) < 2:
        raise ValueError(f"need at least 2 snapshots, got {len(snaps)}")
    return list(zip(snaps, snaps[1:]))


def sum_flows(flows) -> np.ndarray:
    """Elementwise integer sum of equally shaped flows."""
    flows = list(flows)
    if not flows:
        raise ValueError("no flows to average")
    shape = flows[0].shape
    acc = np.zeros(shape, dtype=np.int64)
    for f in flows:
        if f.shape != shape:
            raise ValueError(f"dimension mismatch: {f.shape} vs {shape}")
        if isinstance(f, FlowMatrix):
            np.add.at(acc, (f.rows, f.cols), f.values)
        else:
            acc += np.asarray(f, dtype=np.int64)
    return acc


def average_flows(flows) -> np.ndarray:
    """Elementwise mean of integral flows as a float matrix."""
    flows = list(flows)
    return sum_flows(flows) / len(flows)


# writers


def write_snapshots_csv(fh, series: SnapshotSeries, zone_ids):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["interval_end", "zone_id", "count"])
    for s in series.snapshots:
        stamp = format_timestamp(s.interval_end)
        for zid, v in zip(zone_ids, s.counts.tolist()):
            w.writerow([stamp, zid, v])


def write_marginals_csv(fh, m: Marginals, zone_ids):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["zone_id", "gamma", "eta"])
    for zid, g, e in zip(zone_ids, m.gamma.tolist(), m.eta.tolist()):
        w.writerow([zid, g, e])


def read_marginals_csv(fh) -> tuple[list[str], Marginals]:
    rows = list(csv.reader(fh))
    if not rows or [c.strip() for c in rows[0]] != ["zone_id", "gamma", "eta"]:
        raise ValueError("marginals CSV must start with header zone_id,gamma,eta")
    ids, g, e = [], [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        try:
            ids.append(row[0].strip())
            g.append(int(row[1]))
            e.append(int(row[2]))
        except (IndexError, ValueError):
            raise ValueError(f"line {lineno}: malformed marginals row {row!r}") from None
    return ids, Marginals(g, e)


def _seconds(td: timedelta) -> float:
    return td.total_seconds()


def parse_duration(text: str) -> timedelta:
    """``15m``, ``900s``, ``1h``, ``00:15:00`` or a bare number of minutes."""
    text = text.strip().lower()
    if ":" in text:
        parts = [float(p) for p in text.split(":")]
        while len(parts) < 3:
            parts.insert(0, 0.0)
        h, m, s = parts
        td = timedelta(hours=h, minutes=m, seconds=s)
    else:
        units = {"s": 1, "m": 60, "min": 60, "h": 3600}
        for suffix in ("min", "s", "m", "h"):
            if text.endswith(suffix):
                td = timedelta(seconds=float(text[: -len(suffix)]) * units[suffix])
                break
        else:
            td = timedelta(minutes=float(text))
    if td <= timedelta(0) or not math.isfinite(_seconds(td)):
        raise ValueError(f"duration must be positive: {text!r}")
    return td
