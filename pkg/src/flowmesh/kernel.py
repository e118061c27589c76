"""Deterministic discrete-event kernel: clock, future-event queue, dispatch loop.

The kernel is pure mechanism. It knows nothing about networks, tasks, or VMs;
it delivers timestamped events to registered entities in (time, seq) order,
where seq is the insertion counter, so equal-time events dispatch FIFO.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

from .errors import AlreadyRunningError, PastEventError, UnknownEntityError

SimTime = float
EntityId = int


@dataclass
class SimEvent:
    """Timestamped message between simulation entities."""

    time: SimTime
    source: EntityId
    destination: EntityId
    tag: str
    payload: Any = None
    seq: int = field(default=-1, compare=False)
    cancelled: bool = field(default=False, compare=False)


class Entity:
    """Base class for event handlers owned by a :class:`Simulator`.

    Subclasses implement :meth:`handle`; :meth:`startup` runs once when the
    simulation starts, before any event is dispatched.
    """

    def __init__(self, name: str = ""):
        self.name = name
        self.entity_id: EntityId = -1
        self.sim: Simulator | None = None

    def startup(self) -> None:
        pass

    def handle(self, event: SimEvent) -> None:
        raise NotImplementedError

    def send(self, destination: EntityId, delay: SimTime, tag: str,
             payload: Any = None) -> SimEvent:
        assert self.sim is not None, "entity not registered"
        return self.sim.send(self.entity_id, destination, delay, tag, payload)

    @property
    def now(self) -> SimTime:
        assert self.sim is not None
        return self.sim.clock


class Simulator:
    """Single-threaded event loop owning a clock, a queue, and its entities."""

    def __init__(self) -> None:
        self._queue: list[tuple[SimTime, int, SimEvent]] = []
        self._entities: list[Entity] = []
        self._clock: SimTime = 0.0
        self._seq = 0
        self._running = False
        self._started = False
        self.dispatched_count = 0
        self.scheduled_count = 0
        # Optional observer called with each event just before dispatch.
        self.on_dispatch: Optional[Callable[[SimEvent], None]] = None

    @property
    def clock(self) -> SimTime:
        return self._clock

    @property
    def queue_length(self) -> int:
        return sum(1 for _, _, ev in self._queue if not ev.cancelled)

    def register_entity(self, entity: Entity) -> EntityId:
        if self._running:
            raise AlreadyRunningError("cannot register entities while running")
        entity_id = len(self._entities)
        entity.entity_id = entity_id
        entity.sim = self
        if not entity.name:
            entity.name = f"entity:{entity_id}"
        self._entities.append(entity)
        return entity_id

    def entity(self, entity_id: EntityId) -> Entity:
        return self._entities[entity_id]

    def schedule(self, event: SimEvent) -> SimEvent:
        if event.time < self._clock:
            raise PastEventError(
                f"event time {event.time} precedes clock {self._clock}")
        if not 0 <= event.destination < len(self._entities):
            raise UnknownEntityError(f"unknown destination {event.destination}")
        event.seq = self._seq
        self._seq += 1
        self.scheduled_count += 1
        heapq.heappush(self._queue, (event.time, event.seq, event))
        return event

    def send(self, source: EntityId, destination: EntityId, delay: SimTime,
             tag: str, payload: Any = None) -> SimEvent:
        return self.schedule(
            SimEvent(self._clock + delay, source, destination, tag, payload))

    def cancel(self, event: SimEvent) -> None:
        """Tombstone a scheduled event; it will be skipped, not dispatched."""
        event.cancelled = True

    def run(self, until: SimTime | None = None) -> SimTime:
        """Dispatch events in (time, seq) order; return the final clock value.

        With ``until`` set, events timestamped after it stay in the queue and
        the clock stops at the last dispatched event.
        """
        self._running = True
        try:
            if not self._started:
                self._started = True
                for entity in self._entities:
                    entity.startup()
            while self._queue and (until is None or self._queue[0][0] <= until):
                _, _, event = heapq.heappop(self._queue)
                if event.cancelled:
                    continue
                self._clock = event.time
                self.dispatched_count += 1
                if self.on_dispatch is not None:
                    self.on_dispatch(event)
                self._entities[event.destination].handle(event)
        finally:
            self._running = False
        return self._clock
