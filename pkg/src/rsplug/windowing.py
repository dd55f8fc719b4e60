"""Time-based sliding windows over timestamped RDF streams.

Windows are left-open, right-closed intervals ``(open_t, close_t]``. Window
``index`` of a spec closes at ``origin + index * step + range``, so a spec with
``range == step`` partitions the time line.
"""

from __future__ import annotations

import threading
from collections import deque
from dataclasses import dataclass
from typing import Iterable

from .errors import OutOfOrderItem
from .query import WindowSpec
from .rdf import Graph, RdfStream, TimestampedTriple, Triple

ORIGIN_FIRST_ITEM = "first-item"
ORIGIN_ZERO = "zero"


@dataclass(frozen=True, slots=True)
class WindowInstance:
    open_t: int
    close_t: int
    index: int
    graph: Graph | None
    partial: bool = False

    def contains(self, timestamp: int) -> bool:
        return self.open_t < timestamp <= self.close_t


def window_bounds(spec: WindowSpec, origin: int, index: int) -> tuple[int, int]:
    if index < 0:
        raise ValueError(f"window index must be >= 0, got {index}")
    close_t = origin + index * spec.step_ms + spec.range_ms
    return close_t - spec.range_ms, close_t


def materialize(stream: RdfStream, spec: WindowSpec, origin: int, index: int) -> WindowInstance:
    open_t, close_t = window_bounds(spec, origin, index)
    graph = Graph(it.triple for it in stream.between(open_t, close_t))
    return WindowInstance(open_t, close_t, index, graph)


def windows_covering(stream_end_t: int, spec: WindowSpec, origin: int) -> int:
    """Number of complete windows, i.e. those with ``close_t <= stream_end_t``."""
    if stream_end_t - origin < spec.range_ms:
        return 0
    return (stream_end_t - origin - spec.range_ms) // spec.step_ms + 1


def align_origin(first_t: int, step_ms: int, mode: str = ORIGIN_FIRST_ITEM) -> int:
    """Window origin for a stream whose first item arrives at ``first_t``.

    In ``first-item`` mode the origin is the largest multiple of ``step_ms``
    strictly below ``first_t``, so the first item always lands in window 0.
    """
    if mode == ORIGIN_ZERO:
        return 0
    if mode != ORIGIN_FIRST_ITEM:
        raise ValueError(f"unknown origin mode: {mode!r}")
    return ((first_t - 1) // step_ms) * step_ms


class WindowBuffer:
    """Timestamp-ordered buffer shared by one producer and one consumer.

    The producer calls :meth:`append`; the consumer takes snapshots of a
    window's range and evicts items no live window can still need.
    """

    def __init__(self, items: Iterable[TimestampedTriple] = ()) -> None:
        self._items: deque[TimestampedTriple] = deque()
        self._lock = threading.Lock()
        self._last_t: int | None = None
        for item in items:
            self.append(item)

    def __len__(self) -> int:
        return len(self._items)

    @property
    def last_timestamp(self) -> int | None:
        return self._last_t

    def append(self, item: TimestampedTriple) -> None:
        with self._lock:
            if self._last_t is not None and item.timestamp < self._last_t:
                raise OutOfOrderItem(f"timestamp {item.timestamp} arrived after {self._last_t}")
            self._items.append(item)
            self._last_t = item.timestamp

    def snapshot(self, open_t: int, close_t: int) -> tuple[Triple, ...]:
        """Triples with ``open_t < timestamp <= close_t``, in arrival order."""
        out = []
        with self._lock:
            for item in self._items:
                if item.timestamp > close_t:
                    break
                if item.timestamp > open_t:
                    out.append(item.triple)
        return tuple(out)

    def evict_through(self, t: int) -> int:
        """Drop items with ``timestamp <= t``; returns how many were dropped."""
        dropped = 0
        with self._lock:
            while self._items and self._items[0].timestamp <= t:
                self._items.popleft()
                dropped += 1
        return dropped
