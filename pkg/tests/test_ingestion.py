import io
from datetime import datetime, timedelta, timezone

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from presence_od import FlowMatrix, check_feasible
from presence_od.geometry import ZonePolygon, ZoneSet
from presence_od.ingestion import (
    PresenceParseError,
    PresenceRecord,
    PresenceSnapshot,
    SnapshotSeries,
    aggregate,
    average_flows,
    bucket_end,
    largest_remainder,
    normalize_pair,
    pair_stream,
    parse_duration,
    parse_presence,
    read_marginals_csv,
    write_marginals_csv,
    write_snapshots_csv,
)

SQ = [(0, 0), (1, 0), (1, 1), (0, 1)]
ZS = ZoneSet([ZonePolygon(z, SQ) for z in ("A", "B", "C")])
Q = timedelta(minutes=15)


def utc(h, m, s=0):
    return datetime(2017, 3, 6, h, m, s, tzinfo=timezone.utc)


def test_parse_basic():
    out = parse_presence(io.StringIO("A,2017-03-06T08:15:00Z,42\n"), ZS)
    assert out.records == [PresenceRecord("A", utc(8, 15), 42)]
    assert out.rejects == []


def test_parse_header_blank_and_offset():
    text = "zone_id,interval_end,count\n\nB,2017-03-06T10:15:00+02:00,1\n"
    out = parse_presence(io.StringIO(text), ZS)
    assert out.records == [PresenceRecord("B", utc(8, 15), 1)]


def test_parse_rejects_and_empty():
    out = parse_presence(io.StringIO("Q,2017-03-06T08:15:00Z,1\nA,2017-03-06T08:15:00Z,2\n"), ZS)
    assert [r.zone_id for r in out.records] == ["A"]
    assert len(out.rejects) == 1 and out.rejects[0].lineno == 1 and out.rejects[0].zone_id == "Q"
    empty = parse_presence(io.StringIO(""), ZS)
    assert empty.records == [] and empty.rejects == []


@pytest.mark.parametrize(
    "line",
    ["A,2017-03-06T08:15:00Z", "A,yesterday,3", "A,2017-03-06T08:15:00Z,x", "A,2017-03-06T08:15:00Z,-2"],
)
def test_parse_errors_report_line(line):
    with pytest.raises(PresenceParseError) as err:
        parse_presence(io.StringIO("A,2017-03-06T08:00:00Z,1\n" + line + "\n"), ZS)
    assert err.value.lineno == 2
    assert "line 2" in str(err.value)


def test_bucket_end_rounds_up():
    assert bucket_end(utc(8, 15), Q) == utc(8, 15)
    assert bucket_end(utc(8, 15, 1), Q) == utc(8, 30)
    assert bucket_end(utc(8, 1), Q) == utc(8, 15)


def test_aggregate_sum_and_window():
    recs = [PresenceRecord("A", utc(8, 10), 3), PresenceRecord("A", utc(8, 14), 4)]
    series = aggregate(recs, ZS, Q)
    assert len(series) == 1 and series.snapshots[0].counts.tolist() == [7, 0, 0]

    recs = [PresenceRecord("B", utc(8, 15) + i * Q, i + 1) for i in range(6)]
    series = aggregate(recs, ZS, Q)
    assert len(series) == 6
    assert series.snapshots[0].interval_end == utc(8, 15)
    assert series.snapshots[-1].interval_end == utc(9, 30)
    assert len(pair_stream(series)) == 5
    assert aggregate([], ZS, Q).snapshots == []


def test_aggregate_gap_flagged():
    recs = [PresenceRecord("A", utc(8, 15), 1), PresenceRecord("C", utc(9, 0), 2)]
    series = aggregate(recs, ZS, Q)
    assert [s.interval_end for s in series.snapshots] == [utc(8, 15), utc(8, 30), utc(8, 45), utc(9, 0)]
    assert series.gaps == [utc(8, 30), utc(8, 45)]
    assert series.snapshots[1].counts.tolist() == [0, 0, 0]


@given(st.lists(st.tuples(st.sampled_from(["A", "B", "C"]), st.integers(0, 500), st.integers(0, 1000)), max_size=60))
@settings(max_examples=80, deadline=None)
def test_aggregate_conserves_total(rows):
    recs = [PresenceRecord(z, utc(8, 0) + timedelta(minutes=m), c) for z, m, c in rows]
    series = aggregate(recs, ZS, Q)
    assert sum(int(s.counts.sum()) for s in series.snapshots) == sum(c for _, _, c in rows)


def test_series_validation():
    with pytest.raises(ValueError):
        SnapshotSeries([PresenceSnapshot(utc(8, 15), [1]), PresenceSnapshot(utc(8, 45), [1])], Q)
    with pytest.raises(ValueError):
        PresenceSnapshot(utc(8, 15), [1, -1])


def test_normalize_examples():
    m = normalize_pair([1, 1, 2], [1, 1, 2], 8)
    assert m.gamma.tolist() == [2, 2, 4]
    assert largest_remainder([1, 1, 1], 10).tolist() == [4, 3, 3]
    m = normalize_pair([5, 3], [2, 6], 8)
    assert m.gamma.tolist() == [5, 3] and m.eta.tolist() == [2, 6]
    with pytest.raises(ValueError):
        normalize_pair([0, 0], [1, 1], 5)


@given(
    st.lists(st.integers(0, 10**6), min_size=1, max_size=30).filter(lambda v: sum(v) > 0),
    st.integers(1, 10**7),
)
@settings(max_examples=200, deadline=None)
def test_largest_remainder_properties(counts, total):
    out = largest_remainder(counts, total)
    assert int(out.sum()) == total
    s = sum(counts)
    # |counts_i * total / s - out_i| < 1, checked in exact integers
    assert all(abs(c * total - int(o) * s) < s for c, o in zip(counts, out))
    m = normalize_pair(counts, counts[::-1], total)
    check_feasible(m.gamma, m.eta)
    assert m.k == total


def test_pair_stream_errors_and_labels():
    one = SnapshotSeries([PresenceSnapshot(utc(8, 15), [1, 2, 3])], Q)
    with pytest.raises(ValueError):
        pair_stream(one)
    two = SnapshotSeries([PresenceSnapshot(utc(8, 15), [1, 2, 3]), PresenceSnapshot(utc(8, 30), [3, 2, 1])], Q)
    (a, b), = pair_stream(two)
    assert a.interval_end == utc(8, 15) and b.interval_end == utc(8, 30)


def test_average_flows():
    f1 = FlowMatrix.from_dense([[2, 0], [0, 0]])
    f2 = FlowMatrix.from_dense([[0, 2], [0, 0]])
    assert average_flows([f1, f2]).tolist() == [[1, 1], [0, 0]]
    assert average_flows([f1, f1]).tolist() == f1.to_dense().tolist()
    with pytest.raises(ValueError):
        average_flows([])
    with pytest.raises(ValueError):
        average_flows([f1, FlowMatrix.from_dense(np.eye(3, dtype=int))])


def test_average_flows_shared_marginals():
    # permuted copies of one flow with symmetric marginals keep those marginals
    base = np.array([[3, 1, 0], [1, 2, 1], [0, 1, 3]])
    flows = [base, base.T, base[::-1, ::-1], base[::-1, ::-1].T]
    avg = average_flows([FlowMatrix.from_dense(f) for f in flows])
    np.testing.assert_array_equal(avg.sum(axis=1), base.sum(axis=1))
    np.testing.assert_array_equal(avg.sum(axis=0), base.sum(axis=0))


def test_writers_round_trip():
    recs = [PresenceRecord("A", utc(8, 15), 3), PresenceRecord("C", utc(8, 30), 1)]
    buf = io.StringIO()
    write_snapshots_csv(buf, aggregate(recs, ZS, Q), ZS.ids)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "interval_end,zone_id,count"
    assert lines[1] == "2017-03-06T08:15:00Z,A,3"
    assert len(lines) == 7

    m = normalize_pair([3, 1, 0], [2, 1, 1], 4)
    buf = io.StringIO()
    write_marginals_csv(buf, m, ZS.ids)
    ids, back = read_marginals_csv(io.StringIO(buf.getvalue()))
    assert ids == list(ZS.ids) and back == m


def test_parse_duration():
    assert parse_duration("15m") == Q
    assert parse_duration("900s") == Q
    assert parse_duration("00:15:00") == Q
    assert parse_duration("15") == Q
    assert parse_duration("1h") == timedelta(hours=1)
    with pytest.raises(ValueError):
        parse_duration("0m")
