"""Stand-in external engine speaking the command adapter protocol.

Evaluates with the oracle engine. Run as ``python -m rsplug.engines.mock
--graph window.nt --query query.rq``.
"""

from __future__ import annotations

import argparse
import sys

from ..errors import OracleTooLarge, RspError
from ..query import parse_sparql
from ..rdf import Graph
from .oracle import DEFAULT_BUDGET, OracleEngine


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="rsplug-mock-engine")
    parser.add_argument("--graph", required=True)
    parser.add_argument("--query", required=True)
    parser.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    args = parser.parse_args(argv)
    try:
        with open(args.query, encoding="utf-8") as fh:
            query = parse_sparql(fh.read())
        engine = OracleEngine(args.budget)
        engine.load(Graph.read(args.graph))
        result = engine.execute(query)
    except OracleTooLarge as exc:
        print(f"error: {exc.code}: {exc}", file=sys.stderr)
        return 4
    except (RspError, OSError) as exc:
        print(f"error: {getattr(exc, 'code', 'io')}: {exc}", file=sys.stderr)
        return 2
    sys.stdout.write(result.to_tsv())
    return 0


if __name__ == "__main__":
    sys.exit(main())
