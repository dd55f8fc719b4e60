import io
import random

import pytest

from oracles import (
    brute_force_rows,
    brute_force_window,
    random_connected_query,
    random_spec,
    random_stream,
    random_wide_stream,
)
from rsplug.engines import OracleEngine, ReferenceEngine, SolutionSet
from rsplug.engines.base import EnginePlugin
from rsplug.errors import DuplicateRegistration, MissingStaticGraph, OutOfOrderItem
from rsplug.query import WindowSpec, assemble, parse_csparql
from rsplug.rdf import Iri, Literal, RdfStream, TimestampedTriple, Triple, graph_from
from rsplug.runtime import MetricsCsvSink, Runtime, TsvResultSink, replay
from rsplug.windowing import materialize, windows_covering

EX = "http://ex/"
OBS_PROP, AIR = Iri(EX + "observedProperty"), Iri(EX + "AirTemperature")


def obs(t, n):
    return TimestampedTriple(Triple(Iri(f"{EX}obs{n}"), OBS_PROP, AIR), t)


def register(text, engine=None, **kw):
    return Runtime(**kw).register(text, engine or ReferenceEngine())


def oracle_solutions(graph, query):
    engine = OracleEngine()
    engine.load(graph)
    return engine.execute(query)


# -- register ------------------------------------------------------------------------

def test_register_textbook(test_query_text):
    rq = register(test_query_text)
    assert rq.name == "TestQuery"
    assert rq.bindings == ((Iri(EX + "streams"), WindowSpec(5000, 5000)),)


def test_duplicate_registration(test_query_text):
    rt = Runtime()
    rt.register(test_query_text, ReferenceEngine())
    with pytest.raises(DuplicateRegistration):
        rt.register(test_query_text, ReferenceEngine())


def test_empty_stream(test_query_text):
    assert replay(register(test_query_text), []) == []
    assert replay(register(test_query_text), [], flush=True) == []


# -- feed ------------------------------------------------------------------------------

def test_feed_past_close_triggers_window(test_query_text):
    rq = register(test_query_text, keep_graphs=True)
    assert rq.feed(obs(1000, 1)) == []
    assert rq.feed(obs(2000, 2)) == []
    [result] = rq.feed(obs(6000, 3))
    assert (result.window.open_t, result.window.close_t) == (0, 5000)
    assert len(result.window.graph) == 2
    assert result.solutions.counter() == {(Iri(EX + "obs1"),): 1, (Iri(EX + "obs2"),): 1}


def test_item_on_close_stays_in_window(test_query_text):
    rq = register(test_query_text)
    rq.feed(obs(1000, 1))
    assert rq.feed(obs(5000, 2)) == []
    [result] = rq.finish()
    assert result.metrics.result_count == 2


def test_out_of_order(test_query_text):
    rq = register(test_query_text)
    rq.feed(obs(3000, 1))
    with pytest.raises(OutOfOrderItem):
        rq.feed(obs(2999, 2))


def test_sixty_second_stream_matches_oracle():
    text = "REGISTER QUERY Q AS SELECT ?a ?b FROM STREAM <http://s> [RANGE 5s STEP 5s] WHERE { ?a <http://w/p1> ?b }"
    rng = random.Random(1)
    stream = random_wide_stream(rng, 6000, 59_999, start=1)
    stream = RdfStream(list(stream) + [TimestampedTriple(stream[0].triple, 60_000)])
    rq = register(text)
    results = replay(rq, stream)
    assert rq.origin == 0 and len(results) == 12
    for r in results:
        w = materialize(stream, WindowSpec(5000, 5000), 0, r.window.index)
        assert r.solutions == oracle_solutions(w.graph, rq.sparql)


# -- finish -----------------------------------------------------------------------------

def test_finish_on_boundary_keeps_last_window(test_query_text):
    rq = register(test_query_text)
    results = replay(rq, [obs(1000, 1), obs(7000, 2), obs(10_000, 3)])
    assert [r.window.index for r in results] == [0, 1]


def test_finish_mid_window_drops_partial(test_query_text):
    rq = register(test_query_text)
    results = replay(rq, [obs(1000, 1), obs(7000, 2)])
    assert [r.window.index for r in results] == [0]


def test_flush_evaluates_truncated_window():
    text = "REGISTER QUERY Q AS SELECT * FROM STREAM <http://s> [RANGE 10s STEP 5s] WHERE { ?a <http://w/p1> ?b }"
    rng = random.Random(8)
    stream = random_wide_stream(rng, 3000, 23_000, start=1)
    rq = register(text, keep_graphs=True)
    results = replay(rq, stream, flush=True)
    last = results[-1]
    assert last.window.partial and not any(r.window.partial for r in results[:-1])
    assert len(results) == windows_covering(stream.last_timestamp, WindowSpec(10_000, 5_000), rq.origin) + 1
    truncated = graph_from(brute_force_window(stream, last.window.open_t, stream.last_timestamp))
    assert last.window.graph == truncated
    assert last.solutions == oracle_solutions(truncated, rq.sparql)


# -- properties --------------------------------------------------------------------------

def test_windows_match_brute_force():
    for seed in range(40):
        rng = random.Random(seed)
        stream = random_stream(rng, rng.randint(0, 300), 20_000, start=rng.randint(0, 3000))
        spec = random_spec(rng)
        query = random_connected_query(rng, 3)
        rq = Runtime(keep_graphs=True).register(assemble("P", query, ((Iri("http://s"), spec),)), ReferenceEngine())
        results = replay(rq, stream)
        expected_count = windows_covering(stream.last_timestamp, spec, rq.origin) if len(stream) else 0
        assert len(results) == expected_count
        for r in results:
            window = brute_force_window(stream, r.window.open_t, r.window.close_t)
            assert set(r.window.graph) == window
            assert r.solutions.counter() == brute_force_rows(window, query)


def test_chunked_and_single_feed_agree():
    rng = random.Random(21)
    stream = random_wide_stream(rng, 2000, 40_000)
    text = "REGISTER QUERY Q AS SELECT * FROM STREAM <http://s> [RANGE 4s STEP 2s] WHERE { ?a <http://w/p2> ?b . ?b ?p ?c }"

    single = replay(register(text), stream)
    rq = register(text)
    chunked = []
    items = list(stream)
    pos = 0
    while pos < len(items):
        size = rng.randint(1, 300)
        for it in items[pos:pos + size]:
            chunked.extend(rq.feed(it))
        pos += size
    chunked.extend(rq.finish())
    assert [(r.window, r.solutions.rows) for r in single] == [(r.window, r.solutions.rows) for r in chunked]


def test_metric_invariants():
    rng = random.Random(5)
    stream = random_wide_stream(rng, 3000, 30_000)
    text = "REGISTER QUERY Q AS SELECT ?a FROM STREAM <http://s> [RANGE 5s STEP 5s] WHERE { ?a <http://w/p0> ?b }"
    for r in replay(register(text), stream):
        m = r.metrics
        assert m.et_ms >= m.lt_ms + m.rt_ms
        assert min(m.lt_ms, m.rt_ms, m.et_ms) >= 0
        assert m.result_count == len(r.solutions)


class Exploding(EnginePlugin):
    name = "exploding"

    def __init__(self):
        self.calls = 0

    def load(self, graph):
        pass

    def execute(self, query):
        self.calls += 1
        if self.calls == 1:
            raise RuntimeError("engine crashed")
        return SolutionSet(query.variables)

    def reset(self):
        pass


def test_engine_error_does_not_abort_stream(test_query_text):
    results = replay(register(test_query_text, Exploding()), [obs(1000, 1), obs(6000, 2), obs(11_000, 3)])
    assert results[0].error and "engine crashed" in results[0].error
    assert results[1].error is None and len(results) == 2


# -- multiple streams and static data ---------------------------------------------------------------

def test_two_streams_union_into_one_graph():
    text = (
        "REGISTER QUERY J AS SELECT ?a ?c FROM STREAM <http://s1> [RANGE 4s STEP 2s] "
        "FROM STREAM <http://s2> [RANGE 2s STEP 2s] WHERE { ?a <http://w/p0> ?b . ?b <http://w/p1> ?c }"
    )
    rng = random.Random(12)
    s1 = random_wide_stream(rng, 1500, 20_000)
    s2 = random_wide_stream(rng, 1500, 20_000)
    merged = sorted([(Iri("http://s1"), it) for it in s1] + [(Iri("http://s2"), it) for it in s2], key=lambda p: p[1].timestamp)
    rq = Runtime(origin=0).register(text, ReferenceEngine())
    results = replay(rq, merged)
    last = merged[-1][1].timestamp
    assert len(results) == min(windows_covering(last, spec, 0) for spec in (WindowSpec(4000, 2000), WindowSpec(2000, 2000)))
    query = parse_csparql(text).sparql
    for r in results:
        i = r.window.index
        g = brute_force_window(s1, 2000 * i, 2000 * i + 4000) | brute_force_window(s2, 2000 * i, 2000 * i + 2000)
        assert r.solutions.counter() == brute_force_rows(g, query)


def test_static_graph_joined_into_every_window(test_query_text):
    static = graph_from([Triple(Iri(EX + "obs1"), Iri(EX + "unit"), Literal("C"))])
    text = test_query_text.replace("SELECT ?obs", "SELECT ?obs ?u").replace(
        "WHERE {", "FROM <http://ex/units> WHERE { ?obs unit ?u ."
    )
    rq = Runtime(static_graphs={Iri(EX + "units"): static}).register(text, ReferenceEngine())
    [result] = replay(rq, [obs(1000, 1), obs(2000, 2), obs(5000, 3)])
    assert result.solutions.rows == ((Iri(EX + "obs1"), Literal("C")),)


def test_missing_static_graph(test_query_text):
    with pytest.raises(MissingStaticGraph):
        register(test_query_text.replace("WHERE", "FROM <http://ex/nowhere> WHERE"))


# -- sinks ----------------------------------------------------------------------------------

def test_sinks(test_query_text):
    tsv, csv_out = io.StringIO(), io.StringIO()
    replay(register(test_query_text), [obs(1000, 1), obs(6000, 2)], [TsvResultSink(tsv), MetricsCsvSink(csv_out)])
    assert tsv.getvalue() == f"# window 0 0 5000\nobs\n<{EX}obs1>\n"
    lines = csv_out.getvalue().splitlines()
    assert lines[0] == "window_index,open_t,close_t,lt_ms,rt_ms,et_ms,result_count"
    assert lines[1].startswith("0,0,5000,") and lines[1].endswith(",1")
