"""Exhaustive oracle engine.

Enumerates assignments of the query's patterns, in written order, to graph
triples and keeps every consistent one. There are no indexes and no join
reordering; the only shortcut is that a pattern's candidate triples are
bucketed by the values of the variables it shares with earlier patterns, so
inconsistent prefixes are never extended. Used as ground truth for grading.
"""

from __future__ import annotations

from ..errors import EngineNotLoaded, OracleTooLarge
from ..query import SparqlQuery, TriplePattern, Variable
from ..rdf import Graph, Triple
from .base import EnginePlugin, SolutionMapping, SolutionSet, project

DEFAULT_BUDGET = 10**9


def _positions(pattern: TriplePattern) -> dict[Variable, int]:
    pos: dict[Variable, int] = {}
    for i, term in enumerate(pattern):
        if isinstance(term, Variable):
            pos.setdefault(term, i)
    return pos


def _fits(pattern: TriplePattern, triple: Triple) -> bool:
    """Constants equal and repeated variables agree."""
    values = (triple.subject, triple.predicate, triple.object)
    seen: dict[Variable, object] = {}
    for want, have in zip(pattern, values):
        if isinstance(want, Variable):
            if seen.setdefault(want, have) != have:
                return False
        elif want != have:
            return False
    return True


class OracleEngine(EnginePlugin):
    name = "oracle"

    def __init__(self, budget: int = DEFAULT_BUDGET) -> None:
        self.budget = budget
        self._triples: list[Triple] | None = None

    def reset(self) -> None:
        self._triples = None

    def load(self, graph: Graph) -> None:
        self._triples = list(graph)

    def search_bound(self, levels) -> int:
        """Upper bound on candidate checks for the enumeration below."""
        total = len(levels) * len(self._triples)
        partial = 1
        for _, _, _, buckets in levels:
            partial *= max((len(b) for b in buckets.values()), default=0)
            total += partial
        return total

    def solutions(self, patterns: tuple[TriplePattern, ...]) -> list[SolutionMapping]:
        if self._triples is None:
            raise EngineNotLoaded("execute() called before load()")
        levels = []
        earlier: set[Variable] = set()
        for pattern in patterns:
            pos = _positions(pattern)
            shared = tuple(v for v in pos if v in earlier)
            buckets: dict[tuple, list[Triple]] = {}
            for t in self._triples:
                if _fits(pattern, t):
                    values = (t.subject, t.predicate, t.object)
                    buckets.setdefault(tuple(values[pos[v]] for v in shared), []).append(t)
            levels.append((pos, shared, pattern, buckets))
            earlier.update(pos)

        bound = self.search_bound(levels)
        if bound > self.budget:
            raise OracleTooLarge(f"search needs up to {bound} candidate checks, budget is {self.budget}")

        out: list[SolutionMapping] = []
        mu: SolutionMapping = {}

        def descend(depth: int) -> None:
            if depth == len(levels):
                out.append(dict(mu))
                return
            pos, shared, _, buckets = levels[depth]
            for t in buckets.get(tuple(mu[v] for v in shared), ()):
                values = (t.subject, t.predicate, t.object)
                fresh = []
                consistent = True
                for v, i in pos.items():
                    if v in mu:
                        consistent = mu[v] == values[i]
                        if not consistent:
                            break
                    else:
                        mu[v] = values[i]
                        fresh.append(v)
                if consistent:
                    descend(depth + 1)
                for v in fresh:
                    del mu[v]

        descend(0)
        return out

    def execute(self, query: SparqlQuery) -> SolutionSet:
        return project(self.solutions(query.bgp.patterns), query.variables, query.distinct)
