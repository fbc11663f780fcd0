from datetime import datetime, timedelta

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fastgcrnn.errors import EmptyDatasetError, InputError, OutOfRangeError
from fastgcrnn.ingest import (DEFAULT_BEGIN, FlowMatrix, FlowScaler, GpsRecord, IngestSummary, align_to_graph,
                              build_flow_matrix, bucketize, chronological_split, make_windows, normalize_flows,
                              parse_duration, parse_time, read_flow_matrix, read_gps_records, window_arrays,
                              write_flow_matrix)

FIVE = timedelta(minutes=5)


def rec(road, car, hhmmss, day="2015-01-01"):
    return GpsRecord(road, car, parse_time(f"{day} {hhmmss}"))


def test_bucketize_record_schema_examples():
    assert bucketize(parse_time("2015-01-01 00:03:46"), DEFAULT_BEGIN, FIVE) == 0
    assert bucketize(parse_time("2015-01-02 06:23:12"), DEFAULT_BEGIN, FIVE) == 364


def test_bucketize_half_hour_boundary():
    half = timedelta(minutes=30)
    assert bucketize(parse_time("2015-01-01 00:30:00"), DEFAULT_BEGIN, half) == 1
    assert bucketize(parse_time("2015-01-01 00:29:59"), DEFAULT_BEGIN, half) == 0


def test_bucketize_errors():
    with pytest.raises(OutOfRangeError):
        bucketize(datetime(2014, 12, 31, 23, 59), DEFAULT_BEGIN, FIVE)
    with pytest.raises(InputError):
        bucketize(DEFAULT_BEGIN, DEFAULT_BEGIN, timedelta(0))


@pytest.mark.parametrize("text,seconds", [("5m", 300), ("30m", 1800), ("300s", 300), ("1h", 3600), ("60", 60)])
def test_parse_duration(text, seconds):
    assert parse_duration(text) == timedelta(seconds=seconds)


def test_parse_duration_rejects_garbage():
    for bad in ("", "5x", "-5m", "0m"):
        with pytest.raises(InputError):
            parse_duration(bad)


def test_single_record_and_dedup():
    fm, s = build_flow_matrix([rec("a", "c1", "00:01:00")], ["a", "b"], DEFAULT_BEGIN, FIVE, T=3)
    assert fm.values.sum() == 1 and fm.values[0, 0] == 1
    fm, s = build_flow_matrix([rec("a", "c1", "00:01:00"), rec("a", "c1", "00:04:00")], ["a"], DEFAULT_BEGIN, FIVE)
    assert fm.values[0, 0] == 1 and s.duplicates == 1
    fm, _ = build_flow_matrix([rec("a", "c1", "00:01:00"), rec("a", "c2", "00:04:00")], ["a"], DEFAULT_BEGIN, FIVE)
    assert fm.values[0, 0] == 2


def test_unknown_road_and_before_begin_are_counted():
    recs = [rec("zz", "c1", "00:01:00"), rec("a", "c1", "23:00:00", day="2014-12-31"), rec("a", "c1", "00:01:00")]
    fm, s = build_flow_matrix(recs, {"a"}, DEFAULT_BEGIN, FIVE)
    assert (s.unknown_road, s.before_begin, s.counted) == (1, 1, 1)
    assert fm.T == 1


def test_fixture_file_matches_hand_matrix(fixtures_dir):
    summary = IngestSummary()
    fm, summary = build_flow_matrix(read_gps_records(fixtures_dir / "records.csv", summary),
                                    ["R1", "R2", "R3"], DEFAULT_BEGIN, FIVE, T=4, summary=summary)
    expected = np.array([[2, 0, 1, 1], [0, 2, 0, 1], [0, 1, 2, 0]])
    assert np.array_equal(fm.values.astype(int), expected)
    assert (summary.records_read, summary.duplicates, summary.out_of_horizon, summary.counted) == (12, 1, 1, 10)


def test_malformed_lines_skip_and_count(tmp_path):
    p = tmp_path / "r.csv"
    p.write_text("road_id,car_id,time\na,c1,2015-01-01 00:00:01\na,,2015-01-01 00:00:02\nb,c2,not a time\nonly\n")
    s = IngestSummary()
    rows = list(read_gps_records(p, s))
    assert len(rows) == 1 and s.malformed == 3


def test_bad_header_rejected(tmp_path):
    p = tmp_path / "r.csv"
    p.write_text("road,car,when\n")
    with pytest.raises(InputError):
        list(read_gps_records(p, IngestSummary()))


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(st.sampled_from("abc"), st.sampled_from(["c1", "c2", "c3"]), st.integers(0, 3000)),
                max_size=40), st.randoms())
def test_flow_matrix_order_invariant_and_bounded(raw, rnd):
    recs = [GpsRecord(r, c, DEFAULT_BEGIN + timedelta(seconds=s)) for r, c, s in raw]
    shuffled = list(recs)
    rnd.shuffle(shuffled)
    fm1, s1 = build_flow_matrix(recs, ["a", "b", "c"], DEFAULT_BEGIN, FIVE, T=11)
    fm2, _ = build_flow_matrix(shuffled, ["a", "b", "c"], DEFAULT_BEGIN, FIVE, T=11)
    assert np.array_equal(fm1.values, fm2.values)
    triples = {(r.car_id, r.road_id, bucketize(r.time, DEFAULT_BEGIN, FIVE)) for r in recs}
    assert fm1.values.sum() == len(triples)
    assert fm1.values.max(initial=0) <= len({r.car_id for r in recs})


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.integers(0, 10**6))
def test_bucketize_monotone(a, b):
    ta, tb = DEFAULT_BEGIN + timedelta(seconds=a), DEFAULT_BEGIN + timedelta(seconds=b)
    if a <= b:
        assert bucketize(ta, DEFAULT_BEGIN, FIVE) <= bucketize(tb, DEFAULT_BEGIN, FIVE)


def test_flow_matrix_file_round_trip(tmp_path):
    fm = FlowMatrix(np.array([[1.0, 0.0, 3.0], [2.0, 2.0, 0.0]]), ("x", "y"), DEFAULT_BEGIN, FIVE)
    write_flow_matrix(fm, tmp_path / "f.csv")
    assert (tmp_path / "f.csv").read_text().startswith("#begin=2015-01-01 00:00:00 interval_s=300\nx,1,0,3\n")
    back = read_flow_matrix(tmp_path / "f.csv")
    assert np.array_equal(back.values, fm.values) and back.road_ids == fm.road_ids and back.interval == FIVE


def test_align_to_graph():
    fm = FlowMatrix(np.array([[1.0], [2.0]]), ("b", "a"), DEFAULT_BEGIN, FIVE)
    assert np.array_equal(align_to_graph(fm, ["a", "b"]).values, [[2.0], [1.0]])
    with pytest.raises(InputError):
        align_to_graph(fm, ["a", "c"])


def test_window_counts():
    assert [w.t0 for w in make_windows(np.zeros((2, 24)), 12, 12)] == [0]
    assert [w.t0 for w in make_windows(np.zeros((2, 25)), 12, 12)] == [0, 1]
    with pytest.raises(EmptyDatasetError):
        make_windows(np.zeros((2, 10)), 12, 12)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 60), st.integers(1, 5), st.integers(1, 5), st.integers(1, 4))
def test_windows_are_exact_slices(T, d_in, d_out, stride):
    values = np.arange(3 * T, dtype=float).reshape(3, T)
    if d_in + d_out > T:
        return
    ws = make_windows(values, d_in, d_out, stride)
    assert len(ws) == (T - d_in - d_out) // stride + 1
    for w in ws:
        assert np.array_equal(w.x, values[:, w.t0:w.t0 + d_in])
        assert np.array_equal(w.y, values[:, w.t0 + d_in:w.t0 + d_in + d_out])
    X, Y, t0 = window_arrays(values, d_in, d_out, stride)
    assert X.shape == (len(ws), 3, d_in) and np.array_equal(t0, [w.t0 for w in ws])
    # reassemble from non-overlapping input blocks
    tiles = make_windows(values, d_in, d_out, d_in)
    rebuilt = np.concatenate([w.x for w in tiles], axis=1)
    assert np.array_equal(rebuilt, values[:, :rebuilt.shape[1]])


def test_chronological_split():
    tr, va, te = chronological_split(100)
    assert (tr, va, te) == (slice(0, 70), slice(70, 80), slice(80, 100))


def test_scaler_examples():
    s = FlowScaler.fit(np.array([[5.0, 5.0, 5.0], [0.0, 2.0, 0.0]]))
    z = s.transform(np.array([[5.0, 5.0], [0.0, 2.0]]))
    assert np.allclose(z[0], 0.0)
    s2 = normalize_flows(np.array([[0.0, 2.0]]))
    assert s2.mean[0] == 1.0 and s2.std[0] == 1.0
    assert np.array_equal(s2.transform(np.array([[0.0, 2.0]])), [[-1.0, 1.0]])
    assert np.allclose(s.inverse(z), [[5.0, 5.0], [0.0, 2.0]])


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 5), st.integers(2, 30), st.integers(0, 10_000))
def test_scaler_round_trip(n, T, seed):
    x = np.random.default_rng(seed).normal(20, 7, size=(n, T))
    s = FlowScaler.fit(x)
    assert np.max(np.abs(s.inverse(s.transform(x)) - x)) <= 1e-10
