"""Profiler: interval brackets, counters, dumps, aggregation math."""

import random
import statistics
import threading

import pytest

from tuplespaces import ParseError
from tuplespaces.profiler import (
    Collector,
    DUMP_HEADER,
    KIND_COUNTER,
    KIND_INTERVAL,
    aggregate,
    parse_dump,
    stats_of,
    write_stats,
)


def test_begin_end_single_interval(tmp_path):
    c = Collector("p")
    c.begin("x")
    c.end("x")
    path = tmp_path / "d.csv"
    c.dump(path)
    records = parse_dump(path)
    assert len(records) == 1
    r = records[0]
    assert r.label == "x" and r.kind == KIND_INTERVAL and r.value >= 0


def test_nested_distinct_labels(tmp_path):
    c = Collector("p")
    c.begin("a")
    c.begin("b")
    c.end("b")
    c.end("a")
    path = tmp_path / "d.csv"
    c.dump(path)
    by_label = {r.label: r for r in parse_dump(path)}
    assert set(by_label) == {"a", "b"}
    assert by_label["b"].value <= by_label["a"].value  # inner interval nests


def test_same_label_nests_lifo(tmp_path):
    c = Collector("p")
    c.begin("l")
    c.begin("l")
    c.end("l")
    c.end("l")
    path = tmp_path / "d.csv"
    c.dump(path)
    vals = [r.value for r in parse_dump(path)]
    assert len(vals) == 2
    assert vals[0] <= vals[1]  # inner one closed first


def test_unmatched_end_is_diagnostic_not_crash(tmp_path):
    c = Collector("p")
    c.end("y")
    assert any("unmatched" in d for d in c.diagnostics)
    path = tmp_path / "d.csv"
    c.dump(path)
    assert parse_dump(path) == []


def test_discard_suppresses_record(tmp_path):
    c = Collector("p")
    c.begin("z")
    c.discard("z")
    path = tmp_path / "d.csv"
    c.dump(path)
    assert parse_dump(path) == []


def test_counter_flush(tmp_path):
    c = Collector("p")
    for _ in range(3):
        c.inc_counter("nodeVisited")
    path = tmp_path / "d.csv"
    c.dump(path)
    records = parse_dump(path)
    assert len(records) == 1
    assert records[0].kind == KIND_COUNTER and records[0].value == 3
    # flushed: a second dump holds nothing
    c.dump(path)
    assert parse_dump(path) == []


def test_counter_zero_increments_no_record(tmp_path):
    c = Collector("p")
    c.begin("t")
    c.end("t")
    path = tmp_path / "d.csv"
    c.dump(path)
    assert all(r.kind != KIND_COUNTER for r in parse_dump(path))


def test_counters_attributed_per_thread(tmp_path):
    c = Collector("p")

    def bump(n):
        for _ in range(n):
            c.inc_counter("visits")

    t1 = threading.Thread(target=bump, args=(4,), name="w1")
    t2 = threading.Thread(target=bump, args=(6,), name="w2")
    t1.start(); t2.start(); t1.join(); t2.join()
    path = tmp_path / "d.csv"
    c.dump(path)
    counter_records = [r for r in parse_dump(path) if r.kind == KIND_COUNTER]
    assert len(counter_records) == 2
    assert sorted(r.value for r in counter_records) == [4, 6]
    assert {r.thread for r in counter_records} == {"w1", "w2"}
    assert sum(r.value for r in counter_records) == 10


def test_sequential_threads_attributed_separately(tmp_path):
    """A thread started after another died (ident likely reused) must not
    inherit the dead thread's counters."""
    c = Collector("p")

    def bump(n):
        for _ in range(n):
            c.inc_counter("visits")

    t1 = threading.Thread(target=bump, args=(4,), name="w1")
    t1.start()
    t1.join()
    t2 = threading.Thread(target=bump, args=(6,), name="w2")
    t2.start()
    t2.join()
    path = tmp_path / "d.csv"
    c.dump(path)
    counters = {r.thread: r.value for r in parse_dump(path) if r.kind == KIND_COUNTER}
    assert counters == {"w1": 4, "w2": 6}


def test_dump_empty_header_only(tmp_path):
    c = Collector("p")
    path = tmp_path / "empty.csv"
    c.dump(path)
    text = path.read_text().splitlines()
    assert text == [",".join(DUMP_HEADER)]


def test_dump_one_record_two_lines_roundtrip(tmp_path):
    c = Collector("proc7")
    c.begin("m")
    c.end("m")
    path = tmp_path / "one.csv"
    c.dump(path)
    lines = path.read_text().splitlines()
    assert len(lines) == 2
    (r,) = parse_dump(path)
    assert r.process == "proc7" and r.seq == 0


def test_dump_roundtrip_multiset(tmp_path):
    c = Collector("p")
    for i in range(50):
        c.begin("a")
        c.end("a")
        c.inc_counter("k", 2)
    path = tmp_path / "r.csv"
    c.dump(path)
    records = parse_dump(path)
    intervals = [r for r in records if r.kind == KIND_INTERVAL]
    counters = [r for r in records if r.kind == KIND_COUNTER]
    assert len(intervals) == 50
    assert len(counters) == 1 and counters[0].value == 100


def test_seq_strictly_increasing_across_dumps(tmp_path):
    c = Collector("p")
    c.begin("a"); c.end("a")
    c.dump(tmp_path / "1.csv")
    c.begin("a"); c.end("a")
    c.dump(tmp_path / "2.csv")
    first = parse_dump(tmp_path / "1.csv")[0].seq
    second = parse_dump(tmp_path / "2.csv")[0].seq
    assert second > first


def _write_dump(path, rows):
    with open(path, "w") as fh:
        fh.write(",".join(DUMP_HEADER) + "\n")
        for label, kind, value in rows:
            fh.write(f"{label},{kind},{value},p,t,0\n")


def test_aggregate_hand_computed(tmp_path):
    path = tmp_path / "v.csv"
    _write_dump(path, [("lab", "interval", v) for v in (1, 2, 3, 4)])
    stats = aggregate([path])["lab"]
    assert stats.n == 4
    assert stats.mean == pytest.approx(2.5, rel=1e-12)
    assert stats.stddev == pytest.approx(1.2909944487358056, abs=1e-9)
    assert (stats.min, stats.max) == (1.0, 4.0)


def test_aggregate_single_value_stddev_zero(tmp_path):
    path = tmp_path / "s.csv"
    _write_dump(path, [("one", "interval", 7)])
    stats = aggregate([path])["one"]
    assert stats.n == 1 and stats.mean == 7.0 and stats.stddev == 0.0


def test_aggregate_two_files_constant(tmp_path):
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    _write_dump(p1, [("c", "interval", 5)])
    _write_dump(p2, [("c", "interval", 5)])
    stats = aggregate([p1, p2])["c"]
    assert stats.n == 2 and stats.mean == 5.0 and stats.stddev == 0.0


def test_aggregate_permutation_invariant(tmp_path):
    rng = random.Random(3)
    rows = [("m", "interval", rng.randrange(10**9)) for _ in range(200)]
    p1, p2 = tmp_path / "x.csv", tmp_path / "y.csv"
    _write_dump(p1, rows[:120])
    _write_dump(p2, rows[120:])
    a = aggregate([p1, p2])["m"]
    b = aggregate([p2, p1])["m"]
    shuffled = rows[:]
    rng.shuffle(shuffled)
    p3 = tmp_path / "z.csv"
    _write_dump(p3, shuffled)
    c = aggregate([p3])["m"]
    assert a == b == c


def test_aggregate_matches_statistics_module(tmp_path):
    rng = random.Random(11)
    values = [rng.randrange(1, 10**12) for _ in range(500)]
    path = tmp_path / "big.csv"
    _write_dump(path, [("z", "interval", v) for v in values])
    stats = aggregate([path])["z"]
    assert stats.mean == pytest.approx(statistics.mean(values), rel=1e-12)
    assert stats.stddev == pytest.approx(statistics.stdev(values), rel=1e-9)


def test_stats_of_rejects_empty():
    with pytest.raises(ValueError):
        stats_of("none", [])


def test_parse_error_bad_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("wrong,header\n")
    with pytest.raises(ParseError) as exc:
        parse_dump(path)
    assert exc.value.line_no == 1


def test_parse_error_bad_row(tmp_path):
    path = tmp_path / "bad2.csv"
    path.write_text(",".join(DUMP_HEADER) + "\nlab,interval,notanumber,p,t,0\n")
    with pytest.raises(ParseError) as exc:
        parse_dump(path)
    assert exc.value.line_no == 2


def test_intervals_never_negative():
    c = Collector("p")
    for _ in range(200):
        c.begin("fast")
        c.end("fast")
    st = c._state()
    assert all(r.value >= 0 for r in st.records)


def test_dump_concurrent_with_recording(tmp_path):
    """Records emitted after a dump starts land in that dump or the next one."""
    c = Collector("p")
    stop = threading.Event()

    def recorder():
        while not stop.is_set():
            c.begin("busy")
            c.end("busy")
            c.inc_counter("n")

    th = threading.Thread(target=recorder, name="rec")
    th.start()
    paths = []
    try:
        for i in range(5):
            p = tmp_path / f"d{i}.csv"
            c.dump(p)
            paths.append(p)
    finally:
        stop.set()
        th.join(5)
    final = tmp_path / "final.csv"
    c.dump(final)
    paths.append(final)
    records = [r for p in paths for r in parse_dump(p)]
    intervals = [r for r in records if r.kind == KIND_INTERVAL]
    counted = sum(r.value for r in records if r.kind == KIND_COUNTER)
    assert counted == len(intervals)  # nothing lost, nothing duplicated
    seqs = [r.seq for r in records if r.thread == "rec"]
    assert seqs == sorted(seqs) and len(set(seqs)) == len(seqs)


def test_write_stats_schema(tmp_path):
    path = tmp_path / "v.csv"
    _write_dump(path, [("lab", "interval", v) for v in (1, 2, 3, 4)])
    stats = aggregate([path])
    out = tmp_path / "stats.csv"
    write_stats(out, stats)
    lines = out.read_text().splitlines()
    assert lines[0].startswith("#") and "n-1" in lines[0]
    assert lines[1] == "label,n,mean,stddev,min,max"
    row = lines[2].split(",")
    assert row[0] == "lab" and int(row[1]) == 4
    assert float(row[2]) == 2.5
    assert float(row[3]) == pytest.approx(1.2909944487358056, abs=1e-9)
