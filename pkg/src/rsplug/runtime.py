"""Continuous query execution.

A :class:`Runtime` registers continuous queries; each registration owns one
engine instance and one buffer per bound stream. Items are fed in timestamp
order. Window ``i`` is evaluated as soon as an item arrives with a timestamp
past its close, or by :meth:`RegisteredQuery.finish` at stream end. For every
window the engine is reset, loaded with the window graph (timed as LT) and
asked to execute the rewritten SPARQL query (timed as RT); ET spans the whole
per-window handling, from close detection to the emitted result.
"""

from __future__ import annotations

import csv
import logging
import time
from dataclasses import dataclass
from typing import Iterable, Mapping, Protocol, TextIO

from .engines.base import EnginePlugin, SolutionSet
from .errors import DuplicateRegistration, MissingStaticGraph, OutOfOrderItem
from .query import DEFAULT_BASE, ContinuousQuery, WindowSpec, parse_csparql, rewrite
from .rdf import Graph, Iri, TimestampedTriple
from .windowing import ORIGIN_FIRST_ITEM, WindowBuffer, WindowInstance, align_origin, window_bounds, windows_covering

log = logging.getLogger(__name__)

METRICS_COLUMNS = ("window_index", "open_t", "close_t", "lt_ms", "rt_ms", "et_ms", "result_count")


@dataclass(frozen=True, slots=True)
class WindowMetrics:
    window_index: int
    lt_ms: float
    rt_ms: float
    et_ms: float
    result_count: int


@dataclass(frozen=True, slots=True)
class WindowResult:
    window: WindowInstance
    solutions: SolutionSet
    metrics: WindowMetrics
    error: str | None = None


class ResultSink(Protocol):
    def emit(self, result: WindowResult) -> None:
        ...


class RegisteredQuery:
    """Handle for one registered continuous query and its window state."""

    def __init__(
        self,
        query: ContinuousQuery,
        engine: EnginePlugin,
        static_graph: Graph | None = None,
        origin: int | str = ORIGIN_FIRST_ITEM,
        keep_graphs: bool = False,
    ) -> None:
        self.query = query
        self.engine = engine
        self.sparql, self.bindings = rewrite(query)
        self.static_graph = static_graph or Graph()
        self.keep_graphs = keep_graphs
        self.buffers = {iri: WindowBuffer() for iri, _ in self.bindings}
        self._origin_mode = origin
        self.origin: int | None = origin if isinstance(origin, int) else None
        self.next_index = 0
        self.last_t: int | None = None
        self.finished = False

    @property
    def name(self) -> str:
        return self.query.name

    # -- window geometry across all bound streams

    def bounds(self, index: int) -> list[tuple[Iri, WindowSpec, int, int]]:
        return [(iri, spec, *window_bounds(spec, self.origin, index)) for iri, spec in self.bindings]

    def close_of(self, index: int) -> int:
        return max(close for *_, close in self.bounds(index))

    def complete_windows(self) -> int:
        if self.last_t is None:
            return 0
        return min(windows_covering(self.last_t, spec, self.origin) for _, spec in self.bindings)

    # -- ingestion

    def _stream_for(self, stream: Iri | None) -> Iri:
        if stream is None:
            if len(self.bindings) != 1:
                raise ValueError(f"query {self.name!r} reads several streams; name the stream of each item")
            return self.bindings[0][0]
        if stream not in self.buffers:
            raise ValueError(f"query {self.name!r} does not read stream {stream.n3()}")
        return stream

    def feed(self, item: TimestampedTriple, stream: Iri | None = None) -> list[WindowResult]:
        if self.finished:
            raise RuntimeError(f"query {self.name!r} already finished")
        iri = self._stream_for(stream)
        t = item.timestamp
        if self.last_t is not None and t < self.last_t:
            raise OutOfOrderItem(f"timestamp {t} arrived after {self.last_t}")
        if self.origin is None:
            self.origin = align_origin(t, self.bindings[0][1].step_ms, self._origin_mode)
        results = []
        while self.close_of(self.next_index) < t:
            results.append(self._evaluate(self.next_index))
            self.next_index += 1
        self.buffers[iri].append(item)
        self.last_t = t
        return results

    def finish(self, flush: bool = False) -> list[WindowResult]:
        """Evaluate the remaining complete windows.

        With ``flush`` the first incomplete window is evaluated too, if any
        data can fall into it, and reported with ``partial=True``.
        """
        self.finished = True
        if self.last_t is None:
            return []
        results = []
        while self.next_index < self.complete_windows():
            results.append(self._evaluate(self.next_index))
            self.next_index += 1
        if flush and min(open_t for *_, open_t, _ in self.bounds(self.next_index)) < self.last_t:
            results.append(self._evaluate(self.next_index, partial=True))
            self.next_index += 1
        return results

    # -- evaluation

    def _evaluate(self, index: int, partial: bool = False) -> WindowResult:
        started = time.perf_counter_ns()
        spans = self.bounds(index)
        triples = []
        for iri, _, open_t, close_t in spans:
            triples.extend(self.buffers[iri].snapshot(open_t, close_t))
        graph = Graph(triples)
        if len(self.static_graph):
            graph = graph.union(self.static_graph)
        window = WindowInstance(
            min(s[2] for s in spans), max(s[3] for s in spans), index, graph, partial
        )

        error = None
        lt_ns = rt_ns = 0
        try:
            self.engine.reset()
            t0 = time.perf_counter_ns()
            self.engine.load(graph)
            t1 = time.perf_counter_ns()
            solutions = self.engine.execute(self.sparql)
            t2 = time.perf_counter_ns()
            lt_ns, rt_ns = t1 - t0, t2 - t1
        except Exception as exc:  # engine failures are per window
            log.warning("query %s window %d: engine %s failed: %s", self.name, index, self.engine.name, exc)
            error = f"{type(exc).__name__}: {exc}"
            solutions = SolutionSet(self.sparql.variables)

        for iri, spec, _, _ in spans:
            next_open, _ = window_bounds(spec, self.origin, index + 1)
            self.buffers[iri].evict_through(next_open)
        if not self.keep_graphs:
            window = WindowInstance(window.open_t, window.close_t, index, None, partial)
        et_ns = time.perf_counter_ns() - started
        metrics = WindowMetrics(index, lt_ns / 1e6, rt_ns / 1e6, et_ns / 1e6, len(solutions))
        return WindowResult(window, solutions, metrics, error)


class Runtime:
    """Registry of continuous queries.

    ``static_graphs`` maps the IRIs of ``FROM <iri>`` clauses to graphs; a
    ``file:`` IRI with no entry is read from disk as N-Triples.
    """

    def __init__(
        self,
        static_graphs: Mapping[Iri, Graph] | None = None,
        origin: int | str = ORIGIN_FIRST_ITEM,
        keep_graphs: bool = False,
        base: str = DEFAULT_BASE,
    ) -> None:
        self.static_graphs = dict(static_graphs or {})
        self.origin = origin
        self.keep_graphs = keep_graphs
        self.base = base
        self.queries: dict[str, RegisteredQuery] = {}

    def resolve_static_graph(self, iris: Iterable[Iri]) -> Graph:
        graph = Graph()
        for iri in iris:
            if iri in self.static_graphs:
                graph = graph.union(self.static_graphs[iri])
            elif iri.value.startswith("file://"):
                graph = graph.union(Graph.read(iri.value[len("file://"):]))
            else:
                raise MissingStaticGraph(f"no graph supplied for FROM {iri.n3()}")
        return graph

    def register(self, query: str | ContinuousQuery, engine: EnginePlugin) -> RegisteredQuery:
        if isinstance(query, str):
            query = parse_csparql(query, self.base)
        if query.name in self.queries:
            raise DuplicateRegistration(f"a query named {query.name!r} is already registered")
        rq = RegisteredQuery(
            query, engine, self.resolve_static_graph(query.sparql.dataset), self.origin, self.keep_graphs
        )
        self.queries[query.name] = rq
        return rq

    def feed(self, rq: RegisteredQuery, item: TimestampedTriple, stream: Iri | None = None) -> list[WindowResult]:
        return rq.feed(item, stream)

    def finish(self, rq: RegisteredQuery, flush: bool = False) -> list[WindowResult]:
        return rq.finish(flush)


def replay(
    rq: RegisteredQuery,
    items: Iterable[TimestampedTriple] | Iterable[tuple[Iri, TimestampedTriple]],
    sinks: Iterable[ResultSink] = (),
    flush: bool = False,
) -> list[WindowResult]:
    """Feed a whole stream, then finish. Items may be ``(stream_iri, item)`` pairs."""
    sinks = list(sinks)
    results = []

    def emit(batch: list[WindowResult]) -> None:
        for r in batch:
            for sink in sinks:
                sink.emit(r)
        results.extend(batch)

    for entry in items:
        if isinstance(entry, tuple):
            emit(rq.feed(entry[1], entry[0]))
        else:
            emit(rq.feed(entry))
    emit(rq.finish(flush))
    return results


# -- sinks ----------------------------------------------------------------------

class TsvResultSink:
    """Per window: ``# window <index> <open> <close>`` then the result TSV."""

    def __init__(self, out: TextIO) -> None:
        self.out = out

    def emit(self, result: WindowResult) -> None:
        w = result.window
        self.out.write(f"# window {w.index} {w.open_t} {w.close_t}\n")
        if result.error:
            self.out.write(f"# error {result.error}\n")
        self.out.write(result.solutions.to_tsv())


def metrics_row(result: WindowResult) -> list:
    m, w = result.metrics, result.window
    return [m.window_index, w.open_t, w.close_t, f"{m.lt_ms:.6f}", f"{m.rt_ms:.6f}", f"{m.et_ms:.6f}", m.result_count]


class MetricsCsvSink:
    def __init__(self, out: TextIO) -> None:
        self.writer = csv.writer(out, lineterminator="\n")
        self.writer.writerow(METRICS_COLUMNS)

    def emit(self, result: WindowResult) -> None:
        self.writer.writerow(metrics_row(result))
