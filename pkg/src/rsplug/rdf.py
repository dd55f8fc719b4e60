"""RDF terms, triples, timestamped streams and the TNT line format.

A TNT ("timestamped N-Triples") record is one line::

    <timestamp_ms> TAB <N-Triples statement ending in " .">

Only the N-Triples subset needed for sensor streams is supported: absolute
IRIs, plain / datatyped / language-tagged literals and blank nodes. Literal
comparison is purely lexical.
"""

from __future__ import annotations

import bisect
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence, TextIO, Union

from .errors import (
    InvalidTerm,
    MalformedTimestamp,
    MalformedTriple,
    MissingTab,
    OutOfOrderItem,
)

XSD = "http://www.w3.org/2001/XMLSchema#"
RDF_TYPE = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type"

_IRI_CHAR = r'[^<>"{}|^`\\\x00-\x20]'
_IRI_VALID = re.compile(rf"[A-Za-z][A-Za-z0-9+.\-]*:{_IRI_CHAR}*")
_BNODE_LABEL = re.compile(r"[A-Za-z][A-Za-z0-9]*")
_LANG_TAG = re.compile(r"[A-Za-z]+(?:-[A-Za-z0-9]+)*")


@dataclass(frozen=True, slots=True)
class Iri:
    value: str

    def __post_init__(self) -> None:
        if not isinstance(self.value, str) or not _IRI_VALID.fullmatch(self.value):
            raise InvalidTerm(f"not an absolute IRI: {self.value!r}")

    def n3(self) -> str:
        return f"<{self.value}>"

    def __str__(self) -> str:
        return self.n3()


@dataclass(frozen=True, slots=True)
class Literal:
    lexical: str
    datatype: str | None = None
    language: str | None = None

    def __post_init__(self) -> None:
        if self.datatype is not None and self.language is not None:
            raise InvalidTerm("a literal carries either a datatype or a language tag, not both")
        if self.datatype is not None and not _IRI_VALID.fullmatch(self.datatype):
            raise InvalidTerm(f"bad datatype IRI: {self.datatype!r}")
        if self.language is not None and not _LANG_TAG.fullmatch(self.language):
            raise InvalidTerm(f"bad language tag: {self.language!r}")

    def n3(self) -> str:
        body = f'"{_escape(self.lexical)}"'
        if self.datatype is not None:
            return f"{body}^^<{self.datatype}>"
        if self.language is not None:
            return f"{body}@{self.language}"
        return body

    def __str__(self) -> str:
        return self.n3()


@dataclass(frozen=True, slots=True)
class BlankNode:
    label: str

    def __post_init__(self) -> None:
        if not isinstance(self.label, str) or not _BNODE_LABEL.fullmatch(self.label):
            raise InvalidTerm(f"bad blank node label: {self.label!r}")

    def n3(self) -> str:
        return f"_:{self.label}"

    def __str__(self) -> str:
        return self.n3()


Term = Union[Iri, Literal, BlankNode]


@dataclass(frozen=True, slots=True)
class Triple:
    subject: Iri | BlankNode
    predicate: Iri
    object: Term

    def __post_init__(self) -> None:
        if not isinstance(self.subject, (Iri, BlankNode)):
            raise InvalidTerm(f"subject must be an IRI or blank node: {self.subject!r}")
        if not isinstance(self.predicate, Iri):
            raise InvalidTerm(f"predicate must be an IRI: {self.predicate!r}")
        if not isinstance(self.object, (Iri, Literal, BlankNode)):
            raise InvalidTerm(f"object must be an RDF term: {self.object!r}")

    def n3(self) -> str:
        return f"{self.subject.n3()} {self.predicate.n3()} {self.object.n3()} ."


@dataclass(frozen=True, slots=True)
class TimestampedTriple:
    triple: Triple
    timestamp: int

    def __post_init__(self) -> None:
        if isinstance(self.timestamp, bool) or not isinstance(self.timestamp, int):
            raise MalformedTimestamp(f"timestamp must be an integer: {self.timestamp!r}")
        if self.timestamp < 0:
            raise MalformedTimestamp(f"timestamp must be >= 0: {self.timestamp}")


# -- N-Triples escaping -------------------------------------------------------

_ESCAPES = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\r": "\\r", "\t": "\\t"}
_ESCAPE_RE = re.compile(r'[\\"\n\r\t]')
_UNESCAPES = {"t": "\t", "b": "\b", "n": "\n", "r": "\r", "f": "\f", '"': '"', "'": "'", "\\": "\\"}
_UNESCAPE_RE = re.compile(r"\\(?:u([0-9A-Fa-f]{4})|U([0-9A-Fa-f]{8})|(.))", re.S)


def _escape(text: str) -> str:
    return _ESCAPE_RE.sub(lambda m: _ESCAPES[m.group()], text)


def _unescape(text: str) -> str:
    def repl(m: re.Match[str]) -> str:
        code = m.group(1) or m.group(2)
        if code:
            return chr(int(code, 16))
        ch = m.group(3)
        if ch not in _UNESCAPES:
            raise ValueError(f"invalid escape \\{ch}")
        return _UNESCAPES[ch]

    return _UNESCAPE_RE.sub(repl, text)


# -- N-Triples parsing --------------------------------------------------------

_IRI_TOK = rf"<({_IRI_CHAR}*)>"
_BNODE_TOK = r"_:([A-Za-z][A-Za-z0-9]*)"
_LIT_TOK = rf'"((?:[^"\\\n\r]|\\.)*)"(?:\^\^<({_IRI_CHAR}*)>|@([A-Za-z]+(?:-[A-Za-z0-9]+)*))?'
_TERM_TOK = f"(?:{_IRI_TOK}|{_BNODE_TOK}|{_LIT_TOK})"
_TERM_RE = re.compile(_TERM_TOK)
_STATEMENT_RE = re.compile(
    rf"[ \t]*(?:{_IRI_TOK}|{_BNODE_TOK})[ \t]+{_IRI_TOK}[ \t]+{_TERM_TOK}[ \t]*\.[ \t]*(?:#.*)?"
)


def _make_term(iri, bnode, lex, dtype, lang) -> Term:
    if iri is not None:
        return Iri(iri)
    if bnode is not None:
        return BlankNode(bnode)
    return Literal(_unescape(lex), dtype, lang)


def parse_term(text: str) -> Term:
    """Parse a single term written in N-Triples syntax."""
    m = _TERM_RE.fullmatch(text.strip())
    if m is None:
        raise InvalidTerm(f"not an N-Triples term: {text!r}")
    try:
        return _make_term(*m.groups())
    except ValueError as exc:
        raise InvalidTerm(str(exc)) from exc


def parse_ntriples_line(line: str) -> Triple:
    m = _STATEMENT_RE.fullmatch(line.rstrip("\r\n"))
    if m is None:
        raise MalformedTriple(f"not an N-Triples statement: {line.strip()!r}")
    s_iri, s_bnode, p_iri, *obj = m.groups()
    try:
        subject = Iri(s_iri) if s_iri is not None else BlankNode(s_bnode)
        return Triple(subject, Iri(p_iri), _make_term(*obj))
    except ValueError as exc:
        raise MalformedTriple(str(exc)) from exc


def iter_ntriples(lines: Iterable[str]) -> Iterator[Triple]:
    for no, line in enumerate(lines, 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        try:
            yield parse_ntriples_line(line)
        except MalformedTriple as exc:
            raise MalformedTriple(str(exc), no) from None


# -- TNT records --------------------------------------------------------------

_TIMESTAMP_RE = re.compile(r"[0-9]+")


def parse_tnt_line(line: str) -> TimestampedTriple:
    """Parse ``<timestamp_ms>\\t<statement>`` into a timestamped triple."""
    stamp, tab, statement = line.rstrip("\r\n").partition("\t")
    if not tab:
        raise MissingTab("expected a TAB between timestamp and statement")
    if not _TIMESTAMP_RE.fullmatch(stamp):
        raise MalformedTimestamp(f"timestamp must be a non-negative integer: {stamp!r}")
    return TimestampedTriple(parse_ntriples_line(statement), int(stamp))


def serialize_tnt(item: TimestampedTriple) -> str:
    return f"{item.timestamp}\t{item.triple.n3()}"


def iter_tnt(lines: Iterable[str]) -> Iterator[TimestampedTriple]:
    """Parse TNT records, skipping blank and ``#`` lines.

    Order is not checked here; :class:`RdfStream` and the runtime enforce it.
    """
    for no, line in enumerate(lines, 1):
        if not line.strip() or line.startswith("#"):
            continue
        try:
            yield parse_tnt_line(line)
        except (MissingTab, MalformedTimestamp, MalformedTriple) as exc:
            raise type(exc)(str(exc), no) from None


# -- streams and graphs -------------------------------------------------------

class RdfStream(Sequence[TimestampedTriple]):
    """Immutable, timestamp-ordered sequence of timestamped triples.

    Out-of-order input is rejected with :class:`OutOfOrderItem`; equal
    timestamps are allowed.
    """

    __slots__ = ("_items", "_stamps")

    def __init__(self, items: Iterable[TimestampedTriple] = ()) -> None:
        self._items = tuple(items)
        self._stamps = [it.timestamp for it in self._items]
        for i in range(1, len(self._stamps)):
            if self._stamps[i] < self._stamps[i - 1]:
                raise OutOfOrderItem(
                    f"item {i} has timestamp {self._stamps[i]} < {self._stamps[i - 1]}"
                )

    def __len__(self) -> int:
        return len(self._items)

    def __getitem__(self, index):
        return self._items[index]

    def __iter__(self) -> Iterator[TimestampedTriple]:
        return iter(self._items)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RdfStream):
            return NotImplemented
        return self._items == other._items

    def __repr__(self) -> str:
        return f"RdfStream(<{len(self)} items>)"

    @property
    def first_timestamp(self) -> int | None:
        return self._stamps[0] if self._stamps else None

    @property
    def last_timestamp(self) -> int | None:
        return self._stamps[-1] if self._stamps else None

    def between(self, open_t: int, close_t: int) -> tuple[TimestampedTriple, ...]:
        """Items with ``open_t < timestamp <= close_t``."""
        lo = bisect.bisect_right(self._stamps, open_t)
        hi = bisect.bisect_right(self._stamps, close_t)
        return self._items[lo:hi]

    @classmethod
    def from_tnt(cls, lines: Iterable[str]) -> RdfStream:
        return cls(iter_tnt(lines))

    @classmethod
    def read(cls, path: str | Path) -> RdfStream:
        with open(path, encoding="utf-8", newline="") as fh:
            return cls.from_tnt(fh)

    def write(self, out: TextIO) -> None:
        for item in self._items:
            out.write(serialize_tnt(item))
            out.write("\n")


class Graph:
    """A set of triples. Adding a triple twice is a no-op."""

    __slots__ = ("_triples",)

    def __init__(self, triples: Iterable[Triple] = ()) -> None:
        self._triples = frozenset(triples)

    def __len__(self) -> int:
        return len(self._triples)

    def __iter__(self) -> Iterator[Triple]:
        return iter(self._triples)

    def __contains__(self, triple: object) -> bool:
        return triple in self._triples

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self._triples == other._triples

    def __hash__(self) -> int:
        return hash(self._triples)

    def __repr__(self) -> str:
        return f"Graph(<{len(self)} triples>)"

    @property
    def triples(self) -> frozenset[Triple]:
        return self._triples

    def union(self, *others: Graph) -> Graph:
        return Graph(self._triples.union(*(o._triples for o in others)))

    def sorted_triples(self) -> list[Triple]:
        return sorted(self._triples, key=Triple.n3)

    def to_ntriples(self, sort: bool = True) -> str:
        triples = self.sorted_triples() if sort else self._triples
        return "".join(t.n3() + "\n" for t in triples)

    @classmethod
    def read(cls, path: str | Path) -> Graph:
        with open(path, encoding="utf-8", newline="") as fh:
            return cls(iter_ntriples(fh))


def graph_from(items: Iterable[Triple]) -> Graph:
    return Graph(items)
