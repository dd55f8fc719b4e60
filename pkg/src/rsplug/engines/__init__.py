"""Engine plugins and the selector syntax used by the CLI and bench.

Selectors: ``reference``, ``oracle``, ``mock`` (the bundled external mock) and
``external:<command>``.
"""

from __future__ import annotations

import shlex
import sys

from .base import EnginePlugin, SolutionMapping, SolutionSet, eval_bgp, evaluate, project
from .external import ExternalCommandEngine
from .oracle import DEFAULT_BUDGET, OracleEngine
from .reference import ReferenceEngine

MOCK_COMMAND = f"{shlex.quote(sys.executable)} -m rsplug.engines.mock"


def make_engine(selector: str, oracle_budget: int = DEFAULT_BUDGET) -> EnginePlugin:
    if selector == "reference":
        return ReferenceEngine()
    if selector == "oracle":
        return OracleEngine(oracle_budget)
    if selector == "mock":
        return ExternalCommandEngine(f"{MOCK_COMMAND} --budget {oracle_budget}", name="mock")
    if selector.startswith("external:") and selector[len("external:"):].strip():
        return ExternalCommandEngine(selector[len("external:"):], name=selector)
    raise ValueError(f"unknown engine selector {selector!r} (reference | oracle | mock | external:<cmd>)")


__all__ = [
    "DEFAULT_BUDGET",
    "EnginePlugin",
    "ExternalCommandEngine",
    "OracleEngine",
    "ReferenceEngine",
    "SolutionMapping",
    "SolutionSet",
    "eval_bgp",
    "evaluate",
    "make_engine",
    "project",
]
