"""Solution sets, BGP evaluation and the engine plugin interface."""

from __future__ import annotations

import abc
from collections import Counter
from typing import Dict, Iterable, Optional, Sequence

from ..errors import InvalidTerm
from ..query import Bgp, SparqlQuery, TriplePattern, Variable
from ..rdf import Graph, Term, Triple, parse_term

SolutionMapping = Dict[Variable, Term]
Row = tuple  # tuple[Term | None, ...], aligned with SolutionSet.variables


def _cell(term: Optional[Term]) -> str:
    return "" if term is None else term.n3()


def row_key(row: Row) -> tuple[str, ...]:
    return tuple(_cell(t) for t in row)


class SolutionSet:
    """A bag of projected rows.

    Equality is bag equality: same variables, same rows with the same
    multiplicities, in any order.
    """

    __slots__ = ("variables", "rows")

    def __init__(self, variables: Sequence[Variable], rows: Iterable[Row] = ()) -> None:
        self.variables = tuple(variables)
        self.rows = tuple(tuple(r) for r in rows)
        for r in self.rows:
            if len(r) != len(self.variables):
                raise ValueError(f"row width {len(r)} != {len(self.variables)} variables")

    def __len__(self) -> int:
        return len(self.rows)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SolutionSet):
            return NotImplemented
        return self.variables == other.variables and self.counter() == other.counter()

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        names = " ".join(v.n3() for v in self.variables)
        return f"SolutionSet([{names}], <{len(self)} rows>)"

    def counter(self) -> Counter:
        return Counter(self.rows)

    def sorted_rows(self) -> list[Row]:
        return sorted(self.rows, key=row_key)

    def to_tsv(self) -> str:
        """Header of variable names, then one row per solution, LF-terminated."""
        lines = ["\t".join(v.name for v in self.variables)]
        lines += ["\t".join(row_key(r)) for r in self.sorted_rows()]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_tsv(cls, text: str) -> SolutionSet:
        lines = text.split("\n")
        if lines and lines[-1] == "":
            lines.pop()
        if not lines:
            raise ValueError("result TSV is missing its header line")
        header = lines[0]
        variables = [Variable(n) for n in header.split("\t")] if header else []
        rows = []
        for no, line in enumerate(lines[1:], 2):
            cells = line.split("\t") if variables else []
            if len(cells) != len(variables) or (not variables and line):
                raise ValueError(f"result TSV line {no}: expected {len(variables)} cells")
            try:
                rows.append(tuple(parse_term(c) if c else None for c in cells))
            except InvalidTerm as exc:
                raise ValueError(f"result TSV line {no}: {exc}") from None
        return cls(variables, rows)


# -- BGP evaluation -----------------------------------------------------------

def _match(pattern: TriplePattern, triple: Triple) -> Optional[SolutionMapping]:
    mu: SolutionMapping = {}
    for want, have in zip(pattern, (triple.subject, triple.predicate, triple.object)):
        if isinstance(want, Variable):
            prev = mu.get(want)
            if prev is None:
                mu[want] = have
            elif prev != have:
                return None
        elif want != have:
            return None
    return mu


def _join(left: list[SolutionMapping], right: list[SolutionMapping]) -> list[SolutionMapping]:
    if not left or not right:
        return []
    shared = sorted(set(left[0]) & set(right[0]), key=lambda v: v.name)
    table: dict[tuple, list[SolutionMapping]] = {}
    for mu in right:
        table.setdefault(tuple(mu[v] for v in shared), []).append(mu)
    out = []
    for mu in left:
        for nu in table.get(tuple(mu[v] for v in shared), ()):
            out.append({**mu, **nu})
    return out


def eval_bgp(graph: Graph, bgp: Bgp) -> list[SolutionMapping]:
    """All mappings whose substitution into every pattern yields a graph triple.

    Each pattern's match set is computed by a scan, then the sets are hash
    joined left to right on their shared variables.
    """
    result: list[SolutionMapping] = [{}]
    for pattern in bgp:
        matches = [mu for mu in map(lambda t: _match(pattern, t), graph) if mu is not None]
        result = _join(result, matches)
        if not result:
            break
    return result


def project(rows: Iterable[SolutionMapping], variables: Sequence[Variable], distinct: bool = False) -> SolutionSet:
    projected = [tuple(mu.get(v) for v in variables) for mu in rows]
    if distinct:
        projected = list(dict.fromkeys(projected))
    return SolutionSet(variables, projected)


def evaluate(graph: Graph, query: SparqlQuery) -> SolutionSet:
    return project(eval_bgp(graph, query.bgp), query.variables, query.distinct)


# -- plugin interface ---------------------------------------------------------

class EnginePlugin(abc.ABC):
    """A SPARQL engine used as a black box, one window graph at a time.

    The runtime calls ``reset()``, then ``load(graph)``, then
    ``execute(query)`` for every window. After a reset, results must depend
    only on the next loaded graph and the query.
    """

    name: str = "engine"

    @abc.abstractmethod
    def load(self, graph: Graph) -> None:
        ...

    @abc.abstractmethod
    def execute(self, query: SparqlQuery) -> SolutionSet:
        ...

    @abc.abstractmethod
    def reset(self) -> None:
        ...

    def close(self) -> None:
        """Release external resources; default is a reset."""
        self.reset()
