import random
import threading

import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import brute_force_window, random_spec, random_stream, random_triple
from rsplug.errors import OutOfOrderItem
from rsplug.query import WindowSpec
from rsplug.rdf import Iri, RdfStream, TimestampedTriple, Triple
from rsplug.windowing import (
    WindowBuffer,
    align_origin,
    materialize,
    window_bounds,
    windows_covering,
)

FIVE = WindowSpec(5000, 5000)


def _item(t, n=0):
    return TimestampedTriple(Triple(Iri("http://t/s"), Iri("http://t/p"), Iri(f"http://t/o{n}")), t)


# -- window_bounds ----------------------------------------------------------------------

def test_bounds_first_window():
    assert window_bounds(FIVE, 0, 0) == (0, 5000)


def test_bounds_third_window():
    assert window_bounds(FIVE, 0, 2) == (10_000, 15_000)


def test_overlapping_bounds_against_filter():
    spec = WindowSpec(10_000, 5_000)
    assert window_bounds(spec, 0, 1) == (5_000, 15_000)
    rng = random.Random(3)
    stream = random_stream(rng, 2000, 30_000)
    w = materialize(stream, spec, 0, 1)
    assert set(w.graph) == brute_force_window(stream, 5_000, 15_000)
    # the 5s shared with window 0 is in both
    shared = brute_force_window(stream, 5_000, 10_000)
    assert shared <= set(materialize(stream, spec, 0, 0).graph) and shared <= set(w.graph)


def test_bounds_negative_index():
    with pytest.raises(ValueError):
        window_bounds(FIVE, 0, -1)


# -- materialize ----------------------------------------------------------------------

def test_empty_stream():
    w = materialize(RdfStream(), FIVE, 0, 3)
    assert len(w.graph) == 0 and (w.open_t, w.close_t, w.index) == (15_000, 20_000, 3)


def test_inclusive_close():
    stream = RdfStream([_item(5000)])
    assert len(materialize(stream, FIVE, 0, 0).graph) == 1
    assert len(materialize(stream, FIVE, 0, 1).graph) == 0


def test_random_stream_against_filter():
    rng = random.Random(11)
    stream = random_stream(rng, 10_000, 60_000)
    for index in range(12):
        w = materialize(stream, FIVE, 0, index)
        assert set(w.graph) == brute_force_window(stream, w.open_t, w.close_t)
        assert w.close_t - w.open_t == FIVE.range_ms


def test_duplicates_collapse_within_window():
    stream = RdfStream([_item(1), _item(2), _item(3, 1)])
    assert len(materialize(stream, FIVE, 0, 0).graph) == 2


# -- windows_covering --------------------------------------------------------------------

def _count_complete(end, spec, t0):
    n = 0
    while t0 + n * spec.step_ms + spec.range_ms <= end:
        n += 1
    return n


@pytest.mark.parametrize(
    "end, spec, expected",
    [(60_000, FIVE, 12), (4_999, FIVE, 0), (15_000, WindowSpec(10_000, 5_000), 2)],
)
def test_windows_covering_examples(end, spec, expected):
    assert windows_covering(end, spec, 0) == expected == _count_complete(end, spec, 0)


@given(
    st.integers(0, 10**6),
    st.integers(1, 10**4),
    st.integers(1, 10**4),
    st.integers(0, 10**5),
)
def test_windows_covering_matches_enumeration(length, range_ms, step_ms, t0):
    spec = WindowSpec(range_ms, step_ms)
    assert windows_covering(t0 + length, spec, t0) == _count_complete(t0 + length, spec, t0)


# -- properties ----------------------------------------------------------------------

def test_tumbling_partition():
    for seed in range(50):
        rng = random.Random(seed)
        stream = random_stream(rng, rng.randint(1, 400), rng.randint(1, 40_000), start=rng.randint(0, 1000))
        step = rng.choice([100, 1000, 5000])
        spec = WindowSpec(step, step)
        t0 = align_origin(stream.first_timestamp, step)
        n = windows_covering(stream.last_timestamp, spec, t0)
        last_close = window_bounds(spec, t0, n - 1)[1] if n else t0
        membership = {}
        for i in range(n):
            lo, hi = window_bounds(spec, t0, i)
            for pos, it in enumerate(stream):
                if lo < it.timestamp <= hi:
                    membership.setdefault(pos, []).append(i)
        in_range = [pos for pos, it in enumerate(stream) if t0 < it.timestamp <= last_close]
        assert sorted(membership) == in_range
        assert all(len(v) == 1 for v in membership.values())


@given(st.integers(1, 10**4), st.integers(1, 10**4), st.integers(0, 10**5), st.integers(0, 200))
def test_monotone_windows(range_ms, step_ms, t0, index):
    spec = WindowSpec(range_ms, step_ms)
    o1, c1 = window_bounds(spec, t0, index)
    o2, c2 = window_bounds(spec, t0, index + 1)
    assert c2 > c1 and o2 > o1 and c1 - o1 == range_ms


def test_superset_monotonicity():
    rng = random.Random(5)
    stream = random_stream(rng, 3000, 50_000)
    for _ in range(50):
        close = rng.randint(0, 50_000)
        small, big = sorted(rng.sample(range(1, 20_000), 2))
        # same close time, larger range
        a = materialize(stream, WindowSpec(small, 1), close - small, 0)
        b = materialize(stream, WindowSpec(big, 1), close - big, 0)
        assert a.close_t == b.close_t == close
        assert set(a.graph) <= set(b.graph)


def test_random_specs_against_filter():
    for seed in range(100):
        rng = random.Random(seed)
        stream = random_stream(rng, rng.randint(0, 300), 20_000)
        spec = random_spec(rng)
        t0 = rng.randint(0, 3000)
        for index in range(rng.randint(1, 8)):
            w = materialize(stream, spec, t0, index)
            assert set(w.graph) == brute_force_window(stream, w.open_t, w.close_t)


# -- origin alignment --------------------------------------------------------------------

@pytest.mark.parametrize("first, expected", [(1000, 0), (5000, 0), (5001, 5000), (0, -5000), (12_345, 10_000)])
def test_align_origin(first, expected):
    t0 = align_origin(first, 5000)
    assert t0 == expected
    assert t0 < first <= t0 + 5000


def test_align_origin_zero_mode():
    assert align_origin(12_345, 5000, "zero") == 0


# -- buffer ------------------------------------------------------------------------------

def test_buffer_snapshot_and_evict():
    buf = WindowBuffer([_item(t, t) for t in (1, 2, 5, 7, 10)])
    assert len(buf.snapshot(1, 7)) == 3
    assert buf.evict_through(5) == 3
    assert len(buf) == 2
    assert buf.snapshot(0, 100) == (_item(7, 7).triple, _item(10, 10).triple)


def test_buffer_rejects_out_of_order():
    buf = WindowBuffer([_item(10)])
    with pytest.raises(OutOfOrderItem):
        buf.append(_item(9))


def test_buffer_single_producer_single_consumer():
    buf = WindowBuffer()
    n = 20_000
    done = threading.Event()
    seen = []

    def produce():
        for t in range(1, n + 1):
            buf.append(TimestampedTriple(random_triple(random.Random(t)), t))
        done.set()

    def consume():
        hi = 0
        while not done.is_set() or hi < n:
            last = buf.last_timestamp or 0
            if last > hi:
                seen.extend(buf.snapshot(hi, last))
                buf.evict_through(last)
                hi = last

    threads = [threading.Thread(target=produce), threading.Thread(target=consume)]
    for th in threads:
        th.start()
    for th in threads:
        th.join(timeout=60)
    assert len(seen) == n and len(buf) == 0
