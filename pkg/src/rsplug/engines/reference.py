"""In-memory reference engine: term indexes plus greedy index nested-loop joins."""

from __future__ import annotations

from collections import defaultdict
from typing import Optional

from ..errors import EngineNotLoaded
from ..query import SparqlQuery, TriplePattern, Variable
from ..rdf import Graph, Term, Triple
from .base import EnginePlugin, SolutionMapping, SolutionSet, project


class ReferenceEngine(EnginePlugin):
    name = "reference"

    def __init__(self) -> None:
        self._loaded = False
        self.reset()

    def reset(self) -> None:
        self._loaded = False
        self._all: list[Triple] = []
        self._s: dict[Term, list[Triple]] = {}
        self._p: dict[Term, list[Triple]] = {}
        self._o: dict[Term, list[Triple]] = {}
        self._sp: dict[tuple, list[Triple]] = {}
        self._po: dict[tuple, list[Triple]] = {}
        self._so: dict[tuple, list[Triple]] = {}

    def load(self, graph: Graph) -> None:
        self.reset()
        s_idx, p_idx, o_idx = defaultdict(list), defaultdict(list), defaultdict(list)
        sp_idx, po_idx, so_idx = defaultdict(list), defaultdict(list), defaultdict(list)
        for t in graph:
            s, p, o = t.subject, t.predicate, t.object
            s_idx[s].append(t)
            p_idx[p].append(t)
            o_idx[o].append(t)
            sp_idx[s, p].append(t)
            po_idx[p, o].append(t)
            so_idx[s, o].append(t)
        self._all = list(graph)
        self._s, self._p, self._o = dict(s_idx), dict(p_idx), dict(o_idx)
        self._sp, self._po, self._so = dict(sp_idx), dict(po_idx), dict(so_idx)
        self._loaded = True

    # -- access paths

    def _lookup(self, s: Optional[Term], p: Optional[Term], o: Optional[Term]) -> list[Triple]:
        if s is not None and p is not None and o is not None:
            # bound values need not form a valid Triple (a literal may land in subject position)
            for t in self._sp.get((s, p), ()):
                if t.object == o:
                    return [t]
            return []
        if s is not None and p is not None:
            return self._sp.get((s, p), [])
        if p is not None and o is not None:
            return self._po.get((p, o), [])
        if s is not None and o is not None:
            return self._so.get((s, o), [])
        if s is not None:
            return self._s.get(s, [])
        if p is not None:
            return self._p.get(p, [])
        if o is not None:
            return self._o.get(o, [])
        return self._all

    def estimate(self, pattern: TriplePattern) -> int:
        """Cardinality of the pattern with its variables treated as wildcards."""
        s, p, o = (None if isinstance(t, Variable) else t for t in pattern)
        return len(self._lookup(s, p, o))

    def plan(self, patterns: tuple[TriplePattern, ...]) -> list[TriplePattern]:
        """Greedy join order.

        Prefer patterns connected to already-bound variables, then the
        smallest estimate, then the earliest position.
        """
        remaining = list(enumerate(patterns))
        bound: set[Variable] = set()
        order = []
        while remaining:
            def key(item):
                pos, pat = item
                connected = not bound or any(v in bound for v in pat.variables())
                return (not connected, self.estimate(pat), pos)

            best = min(remaining, key=key)
            remaining.remove(best)
            order.append(best[1])
            bound.update(best[1].variables())
        return order

    # -- evaluation

    def solutions(self, patterns: tuple[TriplePattern, ...]) -> list[SolutionMapping]:
        results: list[SolutionMapping] = [{}]
        for pattern in self.plan(patterns):
            extended = []
            for mu in results:
                s, p, o = (mu.get(t) if isinstance(t, Variable) else t for t in pattern)
                for triple in self._lookup(s, p, o):
                    nu = _extend(mu, pattern, triple)
                    if nu is not None:
                        extended.append(nu)
            results = extended
            if not results:
                break
        return results

    def execute(self, query: SparqlQuery) -> SolutionSet:
        if not self._loaded:
            raise EngineNotLoaded("execute() called before load()")
        return project(self.solutions(query.bgp.patterns), query.variables, query.distinct)


def _extend(mu: SolutionMapping, pattern: TriplePattern, triple: Triple) -> Optional[SolutionMapping]:
    nu = None
    for want, have in zip(pattern, (triple.subject, triple.predicate, triple.object)):
        if not isinstance(want, Variable):
            continue
        current = (mu if nu is None else nu).get(want)
        if current is None:
            if nu is None:
                nu = dict(mu)
            nu[want] = have
        elif current != have:
            return None
    return nu if nu is not None else mu
