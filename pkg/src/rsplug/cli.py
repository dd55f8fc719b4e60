"""Command-line interface: ``run``, ``generate``, ``bench`` and ``oracle``.

Exit codes: 0 success, 1 failed bench runs or unexpected errors, 2 query or
argument errors, 3 stream format errors, 4 oracle budget exceeded. Errors are
reported on stderr as one line ``error: <code>: <detail>``.
"""

from __future__ import annotations

import argparse
import heapq
import logging
import sys
from contextlib import ExitStack
from pathlib import Path
from typing import Iterator, Sequence

from . import bench
from .engines import DEFAULT_BUDGET, OracleEngine, make_engine
from .errors import MissingStaticGraph, OracleTooLarge, QueryError, RspError, StreamFormatError
from .query import DEFAULT_BASE, ContinuousQuery, parse_csparql, parse_duration
from .rdf import Graph, Iri, RdfStream, TimestampedTriple, iter_tnt
from .runtime import MetricsCsvSink, Runtime, TsvResultSink, replay
from .windowing import ORIGIN_FIRST_ITEM, ORIGIN_ZERO, align_origin, materialize, windows_covering

log = logging.getLogger("rsplug")

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_STREAM, EXIT_ORACLE = 0, 1, 2, 3, 4


class CliError(Exception):
    def __init__(self, code: str, detail: str, exit_code: int = EXIT_USAGE) -> None:
        super().__init__(detail)
        self.code = code
        self.exit_code = exit_code


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # noqa: D401 - argparse hook
        raise CliError("usage", message)


def _duration(text: str) -> int:
    try:
        ms = parse_duration(text)
    except QueryError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None
    if ms <= 0:
        raise argparse.ArgumentTypeError(f"duration must be positive: {text!r}")
    return ms


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value <= 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {value}")
    return value


def _int_list(text: str) -> list[int]:
    return [_positive_int(p) for p in text.split(",") if p.strip()]


def _split_assignment(text: str) -> tuple[str | None, str]:
    """``IRI=path``, ``<IRI>=path`` or plain ``path``."""
    if text.startswith("<") and ">=" in text:
        iri, path = text[1:].split(">=", 1)
        return iri, path
    if "=" in text and not Path(text).exists():
        iri, path = text.split("=", 1)
        return iri, path
    return None, text


# -- shared plumbing ----------------------------------------------------------------

def _load_query(path: str, base: str) -> ContinuousQuery:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError("io", f"{path}: {exc.strerror}") from None
    return parse_csparql(text, base)


def _static_graphs(specs: Sequence[str]) -> dict[Iri, Graph]:
    graphs = {}
    for spec in specs:
        iri, path = _split_assignment(spec)
        if iri is None:
            raise CliError("usage", f"--static expects IRI=PATH, got {spec!r}")
        graphs[Iri(iri)] = Graph.read(path)
    return graphs


def _stream_sources(query: ContinuousQuery, specs: Sequence[str]) -> list[tuple[Iri, str]]:
    iris = [b.stream_iri for b in query.streams]
    sources = []
    for spec in specs:
        iri, path = _split_assignment(spec)
        if iri is None:
            if len(iris) != 1:
                raise CliError("usage", "query reads several streams; use --stream IRI=PATH")
            sources.append((iris[0], path))
        else:
            if Iri(iri) not in iris:
                raise CliError("usage", f"query has no FROM STREAM <{iri}>")
            sources.append((Iri(iri), path))
    return sources


def _merged_items(stack: ExitStack, sources: list[tuple[Iri, str]]) -> Iterator[tuple[Iri, TimestampedTriple]]:
    """Interleave several TNT files by timestamp, stable in file order."""
    def one(iri: Iri, path: str):
        try:
            fh = stack.enter_context(open(path, encoding="utf-8", newline=""))
        except OSError as exc:
            raise CliError("io", f"{path}: {exc.strerror}", EXIT_STREAM) from None
        for item in iter_tnt(fh):
            yield iri, item

    streams = [one(iri, path) for iri, path in sources]
    if len(streams) == 1:
        return streams[0]
    return heapq.merge(*streams, key=lambda pair: pair[1].timestamp)


def _scenario(args) -> bench.Scenario:
    return bench.Scenario(args.sensors, args.duration, args.period, args.seed)


# -- commands -----------------------------------------------------------------------

def cmd_run(args) -> int:
    query = _load_query(args.query, args.base)
    runtime = Runtime(_static_graphs(args.static), origin=args.origin, base=args.base)
    engine = make_engine(args.engine, args.budget)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    with ExitStack() as stack:
        stack.callback(engine.close)
        rq = runtime.register(query, engine)
        if args.stream:
            items = _merged_items(stack, _stream_sources(query, args.stream))
        elif args.sensors:
            iri = query.streams[0].stream_iri
            items = ((iri, it) for it in bench.generate_stream(_scenario(args)))
        else:
            raise CliError("usage", "give --stream PATH or --sensors N")
        metrics_fh = stack.enter_context(open(out_dir / "metrics.csv", "w", newline=""))
        sinks = [TsvResultSink(sys.stdout), MetricsCsvSink(metrics_fh)]
        results = replay(rq, items, sinks, flush=args.flush)
    failed = [r for r in results if r.error]
    for r in failed:
        print(f"error: engine_error: window {r.window.index}: {r.error}", file=sys.stderr)
    log.info("%d windows evaluated, metrics in %s", len(results), out_dir / "metrics.csv")
    return EXIT_FAIL if failed else EXIT_OK


def cmd_generate(args) -> int:
    stream = bench.generate_stream(_scenario(args))
    if args.out == "-":
        stream.write(sys.stdout)
    else:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            stream.write(fh)
    return EXIT_OK


def cmd_bench(args) -> int:
    if args.query:
        queries = [_load_query(p, args.base) for p in args.query]
    else:
        queries = list(bench.fixture_queries())
    scenarios = [bench.Scenario(s, args.duration, args.period, args.seed) for s in args.sensors]
    engines = [e.strip() for e in args.engines.split(",") if e.strip()]
    for sel in engines:
        make_engine(sel).close()  # fail fast on bad selectors
    summaries = bench.run_benchmark(scenarios, queries, engines, args.out, args.jobs, args.budget)
    for s in summaries:
        print(
            f"{s.engine:<12} {s.query:<8} s={s.sensors:<4} windows={s.windows:<3} "
            f"LT={s.mean_lt_ms:9.3f} RT={s.mean_rt_ms:9.3f} ET={s.mean_et_ms:9.3f} ms "
            f"P={s.precision:.3f} R={s.recall:.3f} {s.status}"
        )
    for w in bench.rt_growth_warnings(summaries):
        print(f"warning: rt_not_monotone: {w}", file=sys.stderr)
    failed = [s for s in summaries if not s.ok]
    for s in failed:
        print(f"error: run_failed: {s.engine}/{s.query}/s={s.sensors}: {s.status}", file=sys.stderr)
    return EXIT_FAIL if failed else EXIT_OK


def cmd_oracle(args) -> int:
    query = _load_query(args.query, args.base)
    static = Runtime(_static_graphs(args.static), base=args.base).resolve_static_graph(query.sparql.dataset)
    with ExitStack() as stack:
        by_iri: dict[Iri, list[TimestampedTriple]] = {b.stream_iri: [] for b in query.streams}
        for iri, item in _merged_items(stack, _stream_sources(query, args.stream)):
            by_iri[iri].append(item)
    streams = {iri: RdfStream(items) for iri, items in by_iri.items()}
    stamps = [s.first_timestamp for s in streams.values() if len(s)]
    if not stamps:
        raise CliError("window_out_of_range", "stream is empty")
    first_spec = query.streams[0].window
    origin = align_origin(min(stamps), first_spec.step_ms, args.origin)
    last = max(s.last_timestamp for s in streams.values() if len(s))
    available = min(windows_covering(last, b.window, origin) for b in query.streams)
    if not 0 <= args.window < available:
        raise CliError("window_out_of_range", f"window {args.window} not in [0, {available})")
    graph = static
    for b in query.streams:
        graph = graph.union(materialize(streams[b.stream_iri], b.window, origin, args.window).graph)
    engine = OracleEngine(args.budget)
    engine.load(graph)
    sys.stdout.write(engine.execute(query.sparql).to_tsv())
    return EXIT_OK


# -- argument parsing ---------------------------------------------------------------

def _add_scenario_flags(p: argparse.ArgumentParser, sensors_required: bool) -> None:
    p.add_argument("--sensors", type=_positive_int, required=sensors_required, help="number of sensors")
    p.add_argument("--duration", type=_duration, default=60_000, help="stream length, e.g. 60s")
    p.add_argument("--period", type=_duration, default=1_000, help="emission period, e.g. 1s")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rsplug", description="Continuous C-SPARQL queries over timestamped RDF streams.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    common = _Parser(add_help=False)
    common.add_argument("--base", default=DEFAULT_BASE, help="base IRI for bare names in queries")
    common.add_argument("--budget", type=_positive_int, default=DEFAULT_BUDGET, help="oracle candidate-check budget")
    common.add_argument("--static", action="append", default=[], metavar="IRI=PATH",
                        help="N-Triples file for a FROM <IRI> graph")

    p = sub.add_parser("run", parents=[common], help="evaluate a continuous query over a stream")
    p.add_argument("--query", required=True)
    p.add_argument("--stream", action="append", default=[], metavar="[IRI=]PATH")
    p.add_argument("--engine", default="reference", help="reference | oracle | mock | external:<cmd>")
    p.add_argument("--out", default=".", help="directory for metrics.csv")
    p.add_argument("--flush", action="store_true", help="also evaluate the trailing partial window")
    p.add_argument("--origin", choices=(ORIGIN_FIRST_ITEM, ORIGIN_ZERO), default=ORIGIN_FIRST_ITEM)
    _add_scenario_flags(p, sensors_required=False)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("generate", help="write a synthetic sensor stream as TNT")
    _add_scenario_flags(p, sensors_required=True)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("bench", parents=[common], help="run the load-scenario benchmark")
    p.add_argument("--sensors", type=_int_list, default=list(bench.LOAD_SENSORS), help="e.g. 100,200,300")
    p.add_argument("--duration", type=_duration, default=60_000)
    p.add_argument("--period", type=_duration, default=1_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--query", action="append", default=[], help="query file (default: Q1 and Q1prime)")
    p.add_argument("--engines", default="reference")
    p.add_argument("--out", default="bench-out")
    p.add_argument("--jobs", type=_positive_int, default=1)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("oracle", parents=[common], help="print oracle results for one window")
    p.add_argument("--query", required=True)
    p.add_argument("--stream", action="append", default=[], required=True, metavar="[IRI=]PATH")
    p.add_argument("--window", type=int, required=True)
    p.add_argument("--origin", choices=(ORIGIN_FIRST_ITEM, ORIGIN_ZERO), default=ORIGIN_FIRST_ITEM)
    p.set_defaults(func=cmd_oracle)
    return parser


def _fail(code: str, detail: str, exit_code: int) -> int:
    detail = " ".join(str(detail).split())
    print(f"error: {code}: {detail}", file=sys.stderr)
    return exit_code


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except CliError as exc:
        return _fail(exc.code, str(exc), exc.exit_code)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        return _fail(exc.code, str(exc), exc.exit_code)
    except OracleTooLarge as exc:
        return _fail(exc.code, str(exc), EXIT_ORACLE)
    except StreamFormatError as exc:
        return _fail(exc.code, str(exc), EXIT_STREAM)
    except (QueryError, MissingStaticGraph) as exc:
        return _fail(exc.code, str(exc), EXIT_USAGE)
    except (RspError, ValueError) as exc:
        return _fail(getattr(exc, "code", "invalid"), str(exc), EXIT_USAGE)
    except OSError as exc:
        return _fail("io", f"{exc.filename}: {exc.strerror}", EXIT_FAIL)


if __name__ == "__main__":
    sys.exit(main())
