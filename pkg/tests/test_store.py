"""LocalSpace semantics: FIFO, multiset, blocking, atomicity, index oracle."""

import threading
import time

import pytest

from tuplespaces import (
    ANY,
    INT,
    LocalSpace,
    SpaceTimeout,
    WaiterCancelled,
    make_tuple,
    template,
    template_of,
    wildcard,
)
from tuplespaces.rng import SplitMix64

from util import ShadowSpace, random_tuple, template_from_tuple


def test_out_then_probe_roundtrip():
    sp = LocalSpace()
    sp.out(make_tuple("hashSet", "h", "p"))
    got = sp.rdp(template("hashSet", "h", ANY))
    assert got == make_tuple("hashSet", "h", "p")
    assert sp.size() == 1  # rdp leaves the store unchanged


def test_multiset_semantics():
    sp = LocalSpace()
    t = make_tuple("dup", 1)
    sp.out(t)
    sp.out(t)
    assert sp.count(template_of(t)) == 2


def test_rdp_fifo_and_miss():
    sp = LocalSpace()
    assert sp.rdp(template("a", ANY)) is None
    sp.out(make_tuple("a", 1))
    sp.out(make_tuple("a", 2))
    assert sp.rdp(template("a", ANY)) == make_tuple("a", 1)
    assert sp.rdp(template("b", ANY)) is None


def test_inp_fifo_removal():
    sp = LocalSpace()
    t = make_tuple("x", 5)
    sp.out(t)
    assert sp.inp(template_of(t)) == t
    assert sp.inp(template_of(t)) is None

    sp.out(make_tuple("a", 1))
    sp.out(make_tuple("a", 2))
    assert sp.inp(template("a", ANY)) == make_tuple("a", 1)
    assert sp.snapshot() == [make_tuple("a", 2)]


def test_fifo_across_buckets():
    # Same arity, different head buckets; global stamp order must win.
    sp = LocalSpace()
    sp.out(make_tuple(7, "first"))     # bucket (2, None)
    sp.out(make_tuple("s", "second"))  # bucket (2, "s")
    assert sp.rdp(template(ANY, ANY)) == make_tuple(7, "first")
    sp.out(make_tuple(8, "third"))
    assert sp.inp(template(ANY, ANY)) == make_tuple(7, "first")
    assert sp.inp(template(ANY, ANY)) == make_tuple("s", "second")


def test_rd_immediate_and_later():
    sp = LocalSpace()
    t = make_tuple("t", 0)
    sp.out(t)
    assert sp.rd(template_of(t), timeout=None) == t
    assert sp.size() == 1

    got = []
    th = threading.Thread(target=lambda: got.append(sp.rd(template("later"), timeout=5)))
    th.start()
    time.sleep(0.05)
    sp.out(make_tuple("later"))
    th.join(2)
    assert got == [make_tuple("later")]


def test_rd_timeout():
    sp = LocalSpace()
    t0 = time.perf_counter()
    with pytest.raises(SpaceTimeout):
        sp.rd(template("never"), timeout=0.05)
    assert time.perf_counter() - t0 < 2.0


def test_in_blocking_take_and_timeout():
    sp = LocalSpace()
    t = make_tuple("gone")
    sp.out(t)
    assert sp.in_(template_of(t), timeout=None) == t
    assert sp.size() == 0
    with pytest.raises(SpaceTimeout):
        sp.in_(template_of(t), timeout=0.05)


def test_single_out_wakes_one_taker():
    sp = LocalSpace()
    tpl = template("job", ANY)
    results = []

    def taker():
        try:
            results.append(sp.in_(tpl, timeout=0.5))
        except SpaceTimeout:
            results.append(None)

    threads = [threading.Thread(target=taker) for _ in range(2)]
    for th in threads:
        th.start()
    time.sleep(0.05)
    sp.out(make_tuple("job", 1))
    for th in threads:
        th.join(3)
    wins = [r for r in results if r is not None]
    assert len(wins) == 1 and wins[0] == make_tuple("job", 1)
    assert sp.size() == 0


@pytest.mark.parametrize("rd_first", [True, False])
def test_out_satisfies_readers_then_one_taker(rd_first):
    """Both waiter registration orders: the reader sees the tuple, the taker
    consumes it, and the store ends up empty."""
    sp = LocalSpace()
    tpl = template("w", ANY)
    seen = {}

    def reader():
        seen["rd"] = sp.rd(tpl, timeout=5)

    def taker():
        seen["in"] = sp.in_(tpl, timeout=5)

    first, second = (reader, taker) if rd_first else (taker, reader)
    t1 = threading.Thread(target=first)
    t1.start()
    time.sleep(0.05)
    t2 = threading.Thread(target=second)
    t2.start()
    time.sleep(0.05)
    sp.out(make_tuple("w", 9))
    t1.join(3)
    t2.join(3)
    assert seen["rd"] == make_tuple("w", 9)
    assert seen["in"] == make_tuple("w", 9)
    assert sp.size() == 0
    assert sp.pending_waiter_count() == 0


def test_concurrent_inp_all_distinct():
    sp = LocalSpace()
    n = 16
    for i in range(n):
        sp.out(make_tuple("item", i))
    tpl = template("item", ANY)
    got = []
    lock = threading.Lock()

    def prober():
        r = sp.inp(tpl)
        with lock:
            got.append(r)

    threads = [threading.Thread(target=prober) for _ in range(n)]
    for th in threads:
        th.start()
    for th in threads:
        th.join(3)
    assert all(r is not None for r in got)
    assert len({r.fields[1].data for r in got}) == n
    assert sp.size() == 0


def test_atomic_take_k_racers_m_extra():
    """K matching tuples, K+m blocking takers: exactly K succeed."""
    sp = LocalSpace()
    k, m = 24, 8
    tpl = template("race", ANY)
    outcomes = []
    lock = threading.Lock()

    def taker():
        try:
            r = sp.in_(tpl, timeout=1.0)
        except SpaceTimeout:
            r = None
        with lock:
            outcomes.append(r)

    threads = [threading.Thread(target=taker) for _ in range(k + m)]
    for th in threads:
        th.start()
    time.sleep(0.05)
    for i in range(k):
        sp.out(make_tuple("race", i))
    for th in threads:
        th.join(5)
    wins = [r for r in outcomes if r is not None]
    assert len(wins) == k
    assert len({r.fields[1].data for r in wins}) == k
    assert sp.size() == 0


def test_no_lost_wakeup_hammer():
    sp = LocalSpace()
    tpl = template("ping", ANY)
    hits = []

    def waiter(i):
        hits.append(sp.in_(tpl, timeout=10))

    threads = [threading.Thread(target=waiter, args=(i,)) for i in range(32)]
    for th in threads:
        th.start()
    for i in range(32):
        sp.out(make_tuple("ping", i))
        if i % 7 == 0:
            time.sleep(0.001)
    for th in threads:
        th.join(10)
    assert len(hits) == 32
    assert sp.size() == 0
    assert sp.check_wakeup_completeness()


def test_waiter_cancel():
    sp = LocalSpace()
    w = sp.register_waiter(template("nope"), destructive=False)
    assert not w.satisfied
    assert w.cancel() is True
    assert w.cancel() is False
    assert sp.pending_waiter_count() == 0
    # cancel of an already-satisfied waiter reports too-late
    sp.out(make_tuple("yes"))
    w2 = sp.register_waiter(template("yes"), destructive=True)
    assert w2.satisfied
    assert w2.cancel() is False
    assert sp.size() == 0  # the destructive registration consumed it


def test_cancelled_blocking_call_raises():
    sp = LocalSpace()
    tpl = template("cancel-me")
    errs = []

    def blocked():
        try:
            sp.rd(tpl, timeout=None)
        except WaiterCancelled:
            errs.append("cancelled")

    th = threading.Thread(target=blocked)
    th.start()
    deadline = time.time() + 2
    while sp.pending_waiter_count() == 0 and time.time() < deadline:
        time.sleep(0.005)
    with sp._lock:
        waiter = sp._waiters[0]
    assert sp.cancel_waiter(waiter)
    th.join(2)
    assert errs == ["cancelled"]


def test_count_matches_scan_oracle():
    rng = SplitMix64(99)
    sp = LocalSpace()
    shadow = ShadowSpace()
    for _ in range(300):
        t = random_tuple(rng, max_arity=3)
        sp.out(t)
        shadow.out(t)
    for _ in range(200):
        tpl = template_from_tuple(rng, random_tuple(rng, max_arity=3))
        assert sp.count(tpl) == shadow.count(tpl)


def _script_universe(rng):
    """A small, collision-heavy universe of tuples."""
    heads = ["a", "b", 1, 2.5]
    tuples = []
    for h in heads:
        for x in range(3):
            tuples.append(make_tuple(h, x))
            tuples.append(make_tuple(h, x, "pad"))
    tuples.append(make_tuple(0))
    return tuples


def test_index_transparency_scripts():
    """Randomized op scripts: indexed store == brute-force flat multiset."""
    rng = SplitMix64(7)
    universe = _script_universe(rng)
    templates = [template_from_tuple(rng, t) for t in universe for _ in range(2)]
    templates += [template(ANY, ANY), template("a", ANY), template(wildcard(INT), ANY)]
    for script in range(60):
        sp = LocalSpace()
        shadow = ShadowSpace()
        for _ in range(120):
            op = rng.below(4)
            if op == 0:
                t = universe[rng.below(len(universe))]
                sp.out(t)
                shadow.out(t)
            elif op == 1:
                tpl = templates[rng.below(len(templates))]
                assert sp.rdp(tpl) == shadow.rdp(tpl)
            elif op == 2:
                tpl = templates[rng.below(len(templates))]
                assert sp.inp(tpl) == shadow.inp(tpl)
            else:
                tpl = templates[rng.below(len(templates))]
                assert sp.count(tpl) == shadow.count(tpl)
        assert sp.snapshot() == shadow.snapshot()


def test_conservation_serial():
    """count == matching outs - successful matching takes, serially."""
    rng = SplitMix64(21)
    sp = LocalSpace()
    tpl = template("c", ANY)
    outs = takes = 0
    for _ in range(500):
        if rng.below(2):
            sp.out(make_tuple("c", rng.below(5)))
            outs += 1
        else:
            if sp.inp(tpl) is not None:
                takes += 1
    assert sp.count(tpl) == outs - takes


def test_probe_wait_free_wrt_blocked_waiters():
    """Probes and count proceed while blocking waiters are parked."""
    sp = LocalSpace()

    def parked():
        try:
            sp.rd(template("block"), 0.4)
        except SpaceTimeout:
            pass

    blocker = threading.Thread(target=parked)
    blocker.start()
    time.sleep(0.05)
    sp.out(make_tuple("other", 1))
    t0 = time.perf_counter()
    assert sp.rdp(template("other", ANY)) is not None
    assert sp.count(template("other", ANY)) == 1
    assert time.perf_counter() - t0 < 0.2
    blocker.join(2)
