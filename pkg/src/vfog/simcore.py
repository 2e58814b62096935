"""Discrete-event kernel: clock, time-ordered event queue and named RNG streams."""

from __future__ import annotations

import enum
import hashlib
import heapq
from dataclasses import dataclass, field
from typing import Any

import numpy as np


class EventKind(enum.IntEnum):
    TASK_ARRIVAL = 0
    TRANSMISSION_DONE = 1
    PROCESSING_DONE = 2
    VEHICLE_HANDOVER = 3
    DECISION_EPOCH = 4
    METRICS_SAMPLE = 5


@dataclass(eq=False)
class Event:
    fire_time: float
    kind: EventKind
    payload: Any = None
    sequence_number: int = -1

    def sort_key(self) -> tuple[float, int]:
        return (self.fire_time, self.sequence_number)


class SchedulingError(RuntimeError):
    """An event was scheduled in the past; this is always a logic bug."""


class Kernel:
    """Simulation clock plus a (fire_time, sequence_number) ordered heap.

    Events later than ``horizon`` stay queued but are never returned by
    :meth:`pop_next`.
    """

    def __init__(self, horizon: float = float("inf")):
        self.horizon = horizon
        self._now = 0.0
        self._seq = 0
        self._heap: list[tuple[float, int, Event]] = []
        self.popped = 0

    def now(self) -> float:
        return self._now

    def __len__(self) -> int:
        return len(self._heap)

    def schedule(self, event: Event) -> Event:
        if event.fire_time < self._now:
            raise SchedulingError(
                f"event {event.kind.name} at t={event.fire_time!r} precedes clock t={self._now!r}"
            )
        if event.sequence_number < 0:
            event.sequence_number = self._seq
            self._seq += 1
        else:
            self._seq = max(self._seq, event.sequence_number + 1)
        heapq.heappush(self._heap, (event.fire_time, event.sequence_number, event))
        return event

    def at(self, fire_time: float, kind: EventKind, payload: Any = None) -> Event:
        return self.schedule(Event(fire_time, kind, payload))

    def pop_next(self) -> Event | None:
        if not self._heap or self._heap[0][0] > self.horizon:
            return None
        t, _, event = heapq.heappop(self._heap)
        self._now = t
        self.popped += 1
        return event

    def pending(self) -> list[Event]:
        return [e for _, _, e in sorted(self._heap)]


def _stream_entropy(master_seed: int, name: str) -> list[int]:
    digest = hashlib.sha256(name.encode("utf-8")).digest()
    return [int(master_seed) & 0xFFFFFFFFFFFFFFFF, int.from_bytes(digest[:8], "little")]


@dataclass
class RngStream:
    """A named generator seeded from ``(master_seed, name)`` only."""

    master_seed: int
    name: str
    generator: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.generator = np.random.default_rng(
            np.random.SeedSequence(_stream_entropy(self.master_seed, self.name))
        )

    def uniform(self, low: float = 0.0, high: float = 1.0) -> float:
        return low + (high - low) * float(self.generator.random())

    def exponential(self, rate: float) -> float:
        # inverse CDF so a given uniform draw maps to a known gap
        return -np.log1p(-float(self.generator.random())) / rate

    def integers(self, low: int, high: int) -> int:
        return int(self.generator.integers(low, high))

    def choice(self, seq):
        return seq[int(self.generator.integers(0, len(seq)))]


def rng_uniform(stream: RngStream) -> float:
    return float(stream.generator.random())


class RngStreams:
    """Registry of independent streams under one master seed.

    ``prefix`` namespaces a family of streams (e.g. one training episode)
    without touching streams outside it.
    """

    def __init__(self, master_seed: int, prefix: str = ""):
        self.master_seed = int(master_seed)
        self.prefix = prefix
        self._streams: dict[str, RngStream] = {}

    def __getitem__(self, name: str) -> RngStream:
        full = f"{self.prefix}/{name}" if self.prefix else name
        stream = self._streams.get(full)
        if stream is None:
            stream = self._streams[full] = RngStream(self.master_seed, full)
        return stream

    def child(self, prefix: str) -> "RngStreams":
        full = f"{self.prefix}/{prefix}" if self.prefix else prefix
        return RngStreams(self.master_seed, full)
