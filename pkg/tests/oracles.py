"""Independent test oracles and random instance generators.

Nothing here imports the evaluation or windowing code under test.
"""

from __future__ import annotations

import random
from collections import Counter

from rsplug.query import Bgp, SparqlQuery, TriplePattern, Variable, WindowSpec
from rsplug.rdf import BlankNode, Iri, Literal, RdfStream, TimestampedTriple, Triple

SUBJECTS = [Iri(f"http://t/s{i}") for i in range(6)] + [BlankNode("b0"), BlankNode("b1")]
PREDICATES = [Iri(f"http://t/p{i}") for i in range(3)]
LITERALS = [Literal("1"), Literal("x", language="en"), Literal("2.5", "http://www.w3.org/2001/XMLSchema#double")]
OBJECTS = SUBJECTS + LITERALS
VARIABLES = [Variable(n) for n in "abcd"]


def random_triple(rng: random.Random) -> Triple:
    return Triple(rng.choice(SUBJECTS), rng.choice(PREDICATES), rng.choice(OBJECTS))


def random_graph_triples(rng: random.Random, max_size: int = 50) -> list[Triple]:
    return [random_triple(rng) for _ in range(rng.randint(0, max_size))]


def random_pattern(rng: random.Random, p_var: float = 0.55) -> TriplePattern:
    def pick(pool):
        return rng.choice(VARIABLES) if rng.random() < p_var else rng.choice(pool)

    subject_pool = [s for s in SUBJECTS if isinstance(s, Iri)]
    object_pool = [o for o in OBJECTS if not isinstance(o, BlankNode)]
    return TriplePattern(pick(subject_pool), pick(PREDICATES), pick(object_pool))


def random_bgp(rng: random.Random, max_patterns: int = 4) -> Bgp:
    return Bgp(tuple(random_pattern(rng) for _ in range(rng.randint(1, max_patterns))))


def random_query(rng: random.Random, max_patterns: int = 4) -> SparqlQuery:
    bgp = random_bgp(rng, max_patterns)
    variables = list(bgp.variables())
    if not variables or rng.random() < 0.3:
        return SparqlQuery(None, bgp, rng.random() < 0.3)
    rng.shuffle(variables)
    return SparqlQuery(tuple(variables[: rng.randint(1, len(variables))]), bgp, rng.random() < 0.3)


def random_stream(rng: random.Random, n_items: int, span_ms: int, start: int = 0) -> RdfStream:
    stamps = sorted(rng.randint(start, start + span_ms) for _ in range(n_items))
    return RdfStream(TimestampedTriple(random_triple(rng), t) for t in stamps)


# A wider vocabulary so window graphs of a few thousand items stay mostly distinct.
WIDE_NODES = [Iri(f"http://w/n{i}") for i in range(300)]
WIDE_PREDICATES = [Iri(f"http://w/p{i}") for i in range(6)]
WIDE_LITERALS = [Literal(str(i)) for i in range(50)]


def random_wide_stream(rng: random.Random, n_items: int, span_ms: int, start: int = 0) -> RdfStream:
    stamps = sorted(rng.randint(start, start + span_ms) for _ in range(n_items))
    objects = WIDE_NODES + WIDE_LITERALS
    return RdfStream(
        TimestampedTriple(Triple(rng.choice(WIDE_NODES), rng.choice(WIDE_PREDICATES), rng.choice(objects)), t)
        for t in stamps
    )


def random_connected_query(rng: random.Random, max_patterns: int = 4) -> SparqlQuery:
    """A BGP where every pattern after the first shares a variable with an earlier one."""
    names = iter(Variable(n) for n in "abcdefghijkl")
    seen = [next(names)]
    patterns = []
    for _ in range(rng.randint(1, max_patterns)):
        anchor = rng.choice(seen)
        other = next(names) if rng.random() < 0.7 else rng.choice(WIDE_NODES + WIDE_LITERALS[:5])
        if isinstance(other, Variable):
            seen.append(other)
        pred = rng.choice(WIDE_PREDICATES) if rng.random() < 0.85 else next(names)
        if isinstance(pred, Variable):
            seen.append(pred)
        if isinstance(other, Literal) or rng.random() < 0.5:
            patterns.append(TriplePattern(anchor, pred, other))
        else:
            patterns.append(TriplePattern(other, pred, anchor))
    bgp = Bgp(tuple(patterns))
    variables = list(bgp.variables())
    if rng.random() < 0.3:
        return SparqlQuery(None, bgp, rng.random() < 0.3)
    rng.shuffle(variables)
    return SparqlQuery(tuple(variables[: rng.randint(1, len(variables))]), bgp, rng.random() < 0.3)


def random_spec(rng: random.Random) -> WindowSpec:
    step = rng.choice([500, 1000, 2000, 5000])
    return WindowSpec(step * rng.choice([1, 2]), step)


# -- oracles ------------------------------------------------------------------------

def brute_force_bgp(triples, patterns) -> list[dict]:
    """Every assignment of patterns to triples, kept when consistent.

    Walks the |G|^k assignment tree depth first; a prefix that is already
    inconsistent cannot become consistent, so its subtree is skipped.
    """
    triples = list(triples)
    out = []

    def walk(depth: int, mu: dict) -> None:
        if depth == len(patterns):
            out.append(dict(mu))
            return
        for t in triples:
            nu = dict(mu)
            ok = True
            for want, have in zip(patterns[depth], (t.subject, t.predicate, t.object)):
                if isinstance(want, Variable):
                    if nu.setdefault(want, have) != have:
                        ok = False
                        break
                elif want != have:
                    ok = False
                    break
            if ok:
                walk(depth + 1, nu)

    walk(0, {})
    return out


def brute_force_rows(triples, query: SparqlQuery) -> Counter:
    """Projected rows of ``query`` as a bag, computed by :func:`brute_force_bgp`."""
    variables = query.bgp.variables() if query.projection is None else query.projection
    rows = [tuple(mu.get(v) for v in variables) for mu in brute_force_bgp(triples, list(query.bgp.patterns))]
    if query.distinct:
        rows = list(dict.fromkeys(rows))
    return Counter(rows)


def brute_force_window(stream, open_t: int, close_t: int) -> set[Triple]:
    return {it.triple for it in stream if open_t < it.timestamp <= close_t}
