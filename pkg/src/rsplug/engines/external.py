"""Adapter for engines that live in another process.

Per window the adapter writes the graph as N-Triples and the query as SPARQL
text, then runs::

    <cmd> --graph <ntriples-file> --query <sparql-file>

The command prints a TSV result: a header of variable names (no ``?``), then
one row per solution with terms in N-Triples syntax, LF-terminated.
"""

from __future__ import annotations

import shlex
import shutil
import subprocess
import tempfile
from pathlib import Path
from typing import Sequence

from ..errors import EngineError, EngineNotLoaded
from ..query import SparqlQuery, serialize_sparql
from ..rdf import Graph
from .base import EnginePlugin, SolutionSet


class ExternalCommandEngine(EnginePlugin):
    def __init__(self, command: str | Sequence[str], name: str | None = None, timeout: float | None = 300.0) -> None:
        self.argv = shlex.split(command) if isinstance(command, str) else list(command)
        if not self.argv:
            raise ValueError("empty external engine command")
        self.name = name or "external:" + " ".join(self.argv)
        self.timeout = timeout
        self._dir: Path | None = None
        self._graph_path: Path | None = None

    def _workdir(self) -> Path:
        if self._dir is None:
            self._dir = Path(tempfile.mkdtemp(prefix="rsplug-engine-"))
        return self._dir

    def reset(self) -> None:
        if self._graph_path is not None:
            self._graph_path.unlink(missing_ok=True)
            self._graph_path = None

    def close(self) -> None:
        self.reset()
        if self._dir is not None:
            shutil.rmtree(self._dir, ignore_errors=True)
            self._dir = None

    def __del__(self) -> None:
        try:
            self.close()
        except Exception:
            pass

    def load(self, graph: Graph) -> None:
        path = self._workdir() / "window.nt"
        path.write_text(graph.to_ntriples(sort=False), encoding="utf-8")
        self._graph_path = path

    def execute(self, query: SparqlQuery) -> SolutionSet:
        if self._graph_path is None:
            raise EngineNotLoaded("execute() called before load()")
        query_path = self._workdir() / "query.rq"
        query_path.write_text(serialize_sparql(query) + "\n", encoding="utf-8")
        cmd = [*self.argv, "--graph", str(self._graph_path), "--query", str(query_path)]
        try:
            proc = subprocess.run(cmd, capture_output=True, text=True, timeout=self.timeout)
        except (OSError, subprocess.TimeoutExpired) as exc:
            raise EngineError(f"{self.name}: {exc}") from exc
        if proc.returncode != 0:
            tail = proc.stderr.strip().splitlines()[-1:] or [f"exit status {proc.returncode}"]
            raise EngineError(f"{self.name}: {tail[0]}")
        try:
            result = SolutionSet.from_tsv(proc.stdout)
        except ValueError as exc:
            raise EngineError(f"{self.name}: bad result TSV: {exc}") from exc
        if result.variables != query.variables:
            raise EngineError(
                f"{self.name}: result header {[v.name for v in result.variables]} "
                f"does not match projection {[v.name for v in query.variables]}"
            )
        return result
