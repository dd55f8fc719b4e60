"""C-SPARQL continuous queries: model, parser, rewriting and serialization.

Supported surface::

    REGISTER QUERY <name> AS
    SELECT [DISTINCT] ?v ... | *
    FROM STREAM <iri> [RANGE <dur> STEP <dur>]     (one or more)
    FROM STREAM <iri> [RANGE <dur> TUMBLING]
    FROM <iri>                                      (static graph, optional)
    WHERE { <pattern> . <pattern> . }

Durations are ``<integer><unit>`` with unit one of ``ms``, ``s``, ``m``, ``h``.
Keywords are case-insensitive. IRIs are written in angle brackets; a bare
name in an IRI position is resolved by appending it to a base IRI, so the
textbook example ``?obs observedProperty AirTemperature`` parses.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, NamedTuple, Sequence, Union

from .errors import (
    DuplicateStream,
    InvalidTerm,
    NoStreamClause,
    QueryError,
    QuerySyntaxError,
    UnboundProjection,
    UnknownTimeUnit,
    ZeroDuration,
)
from .rdf import BlankNode, Iri, Literal, Term, parse_term

DEFAULT_BASE = "http://ex/"

UNIT_MS = {"ms": 1, "s": 1000, "m": 60_000, "h": 3_600_000}

_VAR_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


@dataclass(frozen=True, slots=True)
class Variable:
    name: str

    def __post_init__(self) -> None:
        if not isinstance(self.name, str) or not _VAR_NAME.fullmatch(self.name):
            raise QueryError(f"bad variable name: {self.name!r}")

    def n3(self) -> str:
        return f"?{self.name}"

    def __str__(self) -> str:
        return self.n3()


PatternTerm = Union[Term, Variable]


@dataclass(frozen=True, slots=True)
class TriplePattern:
    subject: PatternTerm
    predicate: PatternTerm
    object: PatternTerm

    def __post_init__(self) -> None:
        if any(isinstance(t, BlankNode) for t in (self.subject, self.predicate, self.object)):
            raise QueryError("blank nodes are not supported in query patterns; use a variable")
        if isinstance(self.subject, Literal):
            raise QueryError("a literal cannot be a subject")
        if not isinstance(self.predicate, (Iri, Variable)):
            raise QueryError("a predicate must be an IRI or a variable")

    def __iter__(self) -> Iterator[PatternTerm]:
        return iter((self.subject, self.predicate, self.object))

    def variables(self) -> list[Variable]:
        return [t for t in self if isinstance(t, Variable)]

    def n3(self) -> str:
        return f"{self.subject.n3()} {self.predicate.n3()} {self.object.n3()}"


@dataclass(frozen=True, slots=True)
class Bgp:
    patterns: tuple[TriplePattern, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "patterns", tuple(self.patterns))

    def __len__(self) -> int:
        return len(self.patterns)

    def __iter__(self) -> Iterator[TriplePattern]:
        return iter(self.patterns)

    def variables(self) -> tuple[Variable, ...]:
        """Variables in order of first appearance."""
        seen: dict[Variable, None] = {}
        for pattern in self.patterns:
            for v in pattern.variables():
                seen.setdefault(v, None)
        return tuple(seen)


@dataclass(frozen=True, slots=True)
class SparqlQuery:
    """A SELECT over a basic graph pattern.

    ``projection`` is ``None`` for ``SELECT *``. ``dataset`` holds the IRIs of
    ``FROM <iri>`` static graphs.
    """

    projection: tuple[Variable, ...] | None
    bgp: Bgp
    distinct: bool = False
    dataset: tuple[Iri, ...] = ()

    def __post_init__(self) -> None:
        if self.projection is not None:
            object.__setattr__(self, "projection", tuple(self.projection))
            bound = set(self.bgp.variables())
            for v in self.projection:
                if v not in bound:
                    raise UnboundProjection(f"{v.n3()} does not occur in the WHERE clause")
        object.__setattr__(self, "dataset", tuple(self.dataset))

    @property
    def variables(self) -> tuple[Variable, ...]:
        """The effective projection (``*`` expanded)."""
        return self.bgp.variables() if self.projection is None else self.projection


@dataclass(frozen=True, slots=True)
class WindowSpec:
    range_ms: int
    step_ms: int

    def __post_init__(self) -> None:
        if self.range_ms <= 0 or self.step_ms <= 0:
            raise ZeroDuration(f"window range and step must be positive: {self}")

    @property
    def tumbling(self) -> bool:
        return self.range_ms == self.step_ms


@dataclass(frozen=True, slots=True)
class StreamBinding:
    stream_iri: Iri
    window: WindowSpec


@dataclass(frozen=True, slots=True)
class ContinuousQuery:
    name: str
    streams: tuple[StreamBinding, ...]
    sparql: SparqlQuery

    def __post_init__(self) -> None:
        object.__setattr__(self, "streams", tuple(self.streams))
        if not self.name:
            raise QueryError("query name must be non-empty")
        if not self.streams:
            raise NoStreamClause("a continuous query needs at least one FROM STREAM clause")
        iris = [b.stream_iri for b in self.streams]
        if len(set(iris)) != len(iris):
            raise DuplicateStream("stream IRIs must be pairwise distinct")


# -- rewriting ----------------------------------------------------------------

WindowBindings = tuple[tuple[Iri, WindowSpec], ...]


def rewrite(query: ContinuousQuery) -> tuple[SparqlQuery, WindowBindings]:
    """Split a continuous query into a plain SPARQL query and window operators."""
    return query.sparql, tuple((b.stream_iri, b.window) for b in query.streams)


def assemble(name: str, sparql: SparqlQuery, bindings: Sequence[tuple[Iri, WindowSpec]]) -> ContinuousQuery:
    """Inverse of :func:`rewrite`."""
    return ContinuousQuery(name, tuple(StreamBinding(i, w) for i, w in bindings), sparql)


# -- serialization ------------------------------------------------------------

def format_duration(ms: int) -> str:
    for unit in ("h", "m", "s"):
        if ms % UNIT_MS[unit] == 0:
            return f"{ms // UNIT_MS[unit]}{unit}"
    return f"{ms}ms"


def _select_head(q: SparqlQuery) -> str:
    head = "SELECT DISTINCT" if q.distinct else "SELECT"
    if q.projection is None:
        return f"{head} *"
    return f"{head} " + " ".join(v.n3() for v in q.projection)


def _where(q: SparqlQuery) -> str:
    return "WHERE { " + " ".join(f"{p.n3()} ." for p in q.bgp) + " }"


def serialize_sparql(q: SparqlQuery) -> str:
    parts = [_select_head(q)]
    parts += [f"FROM {g.n3()}" for g in q.dataset]
    parts.append(_where(q))
    return " ".join(parts)


def serialize_csparql(q: ContinuousQuery) -> str:
    lines = [f"REGISTER QUERY {q.name} AS", _select_head(q.sparql)]
    for b in q.streams:
        w = b.window
        lines.append(
            f"FROM STREAM {b.stream_iri.n3()} "
            f"[RANGE {format_duration(w.range_ms)} STEP {format_duration(w.step_ms)}]"
        )
    lines += [f"FROM {g.n3()}" for g in q.sparql.dataset]
    lines.append(_where(q.sparql))
    return "\n".join(lines) + "\n"


# -- tokenizer ----------------------------------------------------------------

class Token(NamedTuple):
    kind: str
    text: str
    pos: int


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+|\#[^\n]*)
  | (?P<iri><[^<>"{}|^`\\\x00-\x20]*>)
  | (?P<var>[?$][A-Za-z_][A-Za-z0-9_]*)
  | (?P<string>"(?:[^"\\\n\r]|\\.)*"(?:\^\^<[^<>"{}|^`\\\x00-\x20]*>|@[A-Za-z]+(?:-[A-Za-z0-9]+)*)?)
  | (?P<bnode>_:[A-Za-z0-9]+)
  | (?P<number>[0-9]+[A-Za-z]*)
  | (?P<name>[A-Za-z_][A-Za-z0-9_\-]*)
  | (?P<punct>[\[\]{}.*])
    """,
    re.VERBOSE,
)


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise QuerySyntaxError(pos, "a token", text[pos:pos + 10])
        if m.lastgroup != "ws":
            tokens.append(Token(m.lastgroup, m.group(), pos))
        pos = m.end()
    tokens.append(Token("eof", "", len(text)))
    return tokens


def parse_duration(text: str, pos: int = 0) -> int:
    """``"5s"`` -> 5000. Shared by the query grammar and CLI flags."""
    m = re.fullmatch(r"([0-9]+)([A-Za-z]*)", text.strip())
    if m is None:
        raise QuerySyntaxError(pos, "a duration such as 5s", text)
    amount, unit = m.groups()
    if not unit:
        raise QuerySyntaxError(pos, "a time unit (ms, s, m, h)", text)
    if unit.lower() not in UNIT_MS:
        raise UnknownTimeUnit(f"at offset {pos}: unknown time unit {unit!r} in {text!r}")
    return int(amount) * UNIT_MS[unit.lower()]


# -- parser -------------------------------------------------------------------

class _Parser:
    def __init__(self, text: str, base: str) -> None:
        self.tokens = tokenize(text)
        self.i = 0
        self.base = base

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def advance(self) -> Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, expected: str) -> QuerySyntaxError:
        return QuerySyntaxError(self.tok.pos, expected, self.tok.text or "end of input")

    def at_keyword(self, word: str) -> bool:
        return self.tok.kind == "name" and self.tok.text.upper() == word

    def keyword(self, word: str) -> Token:
        if not self.at_keyword(word):
            raise self.error(repr(word))
        return self.advance()

    def punct(self, ch: str) -> Token:
        if self.tok.kind != "punct" or self.tok.text != ch:
            raise self.error(repr(ch))
        return self.advance()

    def at_punct(self, ch: str) -> bool:
        return self.tok.kind == "punct" and self.tok.text == ch

    # -- pieces

    def iri(self) -> Iri:
        tok = self.tok
        try:
            if tok.kind == "iri":
                self.advance()
                return Iri(tok.text[1:-1])
            if tok.kind == "name":
                self.advance()
                return Iri(self.base + tok.text)
        except InvalidTerm:
            raise QuerySyntaxError(tok.pos, "an absolute IRI", tok.text) from None
        raise self.error("an IRI")

    def duration(self) -> int:
        tok = self.tok
        if tok.kind != "number":
            raise self.error("a duration such as 5s")
        self.advance()
        ms = parse_duration(tok.text, tok.pos)
        if ms == 0:
            raise ZeroDuration(f"at offset {tok.pos}: duration {tok.text!r} is zero")
        return ms

    def pattern_term(self, allow_literal: bool) -> PatternTerm:
        tok = self.tok
        if tok.kind == "var":
            self.advance()
            return Variable(tok.text[1:])
        if tok.kind == "string" and allow_literal:
            self.advance()
            try:
                return parse_term(tok.text)
            except InvalidTerm:
                raise QuerySyntaxError(tok.pos, "a literal", tok.text) from None
        if tok.kind in ("iri", "name"):
            return self.iri()
        raise self.error("a variable, IRI or literal" if allow_literal else "a variable or IRI")

    def pattern(self) -> TriplePattern:
        s = self.pattern_term(allow_literal=False)
        p = self.pattern_term(allow_literal=False)
        o = self.pattern_term(allow_literal=True)
        return TriplePattern(s, p, o)

    # -- clauses

    def select(self) -> tuple[tuple[Variable, ...] | None, bool, int]:
        self.keyword("SELECT")
        distinct = False
        if self.at_keyword("DISTINCT"):
            self.advance()
            distinct = True
        pos = self.tok.pos
        if self.at_punct("*"):
            self.advance()
            return None, distinct, pos
        names = []
        while self.tok.kind == "var":
            names.append(Variable(self.advance().text[1:]))
        if not names:
            raise self.error("a variable or '*'")
        return tuple(names), distinct, pos

    def stream_window(self) -> WindowSpec:
        self.punct("[")
        self.keyword("RANGE")
        range_ms = self.duration()
        if self.at_keyword("TUMBLING"):
            self.advance()
            step_ms = range_ms
        elif self.at_keyword("STEP"):
            self.advance()
            step_ms = self.duration()
        else:
            raise self.error("'STEP' or 'TUMBLING'")
        self.punct("]")
        return WindowSpec(range_ms, step_ms)

    def where(self) -> Bgp:
        self.keyword("WHERE")
        self.punct("{")
        patterns = [self.pattern()]
        while self.at_punct("."):
            self.advance()
            if self.at_punct("}"):
                break
            patterns.append(self.pattern())
        self.punct("}")
        return Bgp(tuple(patterns))

    def end(self) -> None:
        if self.tok.kind != "eof":
            raise self.error("end of query")

    def build_select(self, head, dataset, bgp) -> SparqlQuery:
        projection, distinct, pos = head
        try:
            return SparqlQuery(projection, bgp, distinct, tuple(dataset))
        except UnboundProjection as exc:
            raise UnboundProjection(f"at offset {pos}: {exc}") from None

    def continuous_query(self) -> ContinuousQuery:
        self.keyword("REGISTER")
        self.keyword("QUERY")
        if self.tok.kind != "name":
            raise self.error("a query name")
        name = self.advance().text
        self.keyword("AS")
        head = self.select()
        streams: list[StreamBinding] = []
        dataset: list[Iri] = []
        while self.at_keyword("FROM"):
            self.advance()
            if self.at_keyword("STREAM"):
                self.advance()
                pos = self.tok.pos
                iri = self.iri()
                if any(b.stream_iri == iri for b in streams):
                    raise DuplicateStream(f"at offset {pos}: stream {iri.n3()} bound twice")
                streams.append(StreamBinding(iri, self.stream_window()))
            else:
                dataset.append(self.iri())
        if not streams:
            raise NoStreamClause(f"at offset {self.tok.pos}: expected at least one FROM STREAM clause")
        bgp = self.where()
        self.end()
        return ContinuousQuery(name, tuple(streams), self.build_select(head, dataset, bgp))

    def sparql_query(self) -> SparqlQuery:
        head = self.select()
        dataset = []
        while self.at_keyword("FROM"):
            self.advance()
            dataset.append(self.iri())
        bgp = self.where()
        self.end()
        return self.build_select(head, dataset, bgp)


def parse_csparql(text: str, base: str = DEFAULT_BASE) -> ContinuousQuery:
    return _Parser(text, base).continuous_query()


def parse_sparql(text: str, base: str = DEFAULT_BASE) -> SparqlQuery:
    """Parse the plain SELECT subset emitted by :func:`serialize_sparql`."""
    return _Parser(text, base).sparql_query()


__all__ = [
    "Bgp",
    "ContinuousQuery",
    "StreamBinding",
    "SparqlQuery",
    "TriplePattern",
    "Variable",
    "WindowSpec",
    "assemble",
    "format_duration",
    "parse_csparql",
    "parse_duration",
    "parse_sparql",
    "rewrite",
    "serialize_csparql",
    "serialize_sparql",
]
