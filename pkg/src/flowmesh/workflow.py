"""Workflow application model: tasks, files, dependencies, ensembles.

Dependencies are derived from producer/consumer file relationships and merged
with explicit parent lists when present; the two views must agree. After
validation a workflow is immutable as far as the simulator is concerned and
can be shared read-only across simulation instances.
"""

from __future__ import annotations

import hashlib
import logging
import random
from dataclasses import dataclass, field
from typing import Optional

from .errors import (
    CycleDetectedError,
    DanglingReferenceError,
    OrphanInputError,
    ValidationError,
)

logger = logging.getLogger(__name__)

EMIT_ALL = "all"
FRACTIONAL = "fractional"

SINGLE_SHOT = "single-shot"
PERIODIC = "periodic"


@dataclass(frozen=True)
class DataFile:
    name: str
    size_mb: float


@dataclass(frozen=True)
class Selectivity:
    """Rule deciding which declared outputs a completed task actually emits."""

    kind: str = EMIT_ALL
    probability: float = 1.0


@dataclass(frozen=True)
class Execution:
    """Rule deciding whether a task re-executes after completing.

    Periodic tasks restart ``interval`` seconds after each completion;
    ``repetitions`` bounds the number of restarts (None = unbounded, capped
    only by the simulation horizon).
    """

    kind: str = SINGLE_SHOT
    interval: Optional[float] = None
    repetitions: Optional[int] = None


@dataclass
class Task:
    id: int
    workflow_id: str
    runtime_mi: float
    inputs: tuple[DataFile, ...] = ()
    outputs: tuple[DataFile, ...] = ()
    parents: frozenset[int] = frozenset()
    children: frozenset[int] = frozenset()
    entry_time: float = 0.0
    deadline: Optional[float] = None
    selectivity: Selectivity = Selectivity()
    execution: Execution = Execution()
    explicit_parents: Optional[frozenset[int]] = None

    @property
    def is_periodic(self) -> bool:
        return self.execution.kind == PERIODIC


@dataclass
class Workflow:
    workflow_id: str
    tasks: list[Task]
    deadline: Optional[float] = None
    budget: Optional[float] = None
    _by_id: dict[int, Task] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        self._by_id = {task.id: task for task in self.tasks}

    def task(self, task_id: int) -> Task:
        return self._by_id[task_id]

    def task_ids(self) -> list[int]:
        return sorted(self._by_id)

    def producer_of(self, file_name: str) -> Optional[int]:
        for task in self.tasks:
            if any(f.name == file_name for f in task.outputs):
                return task.id
        return None


@dataclass
class Ensemble:
    """Workflow group whose QoS objective counts completed member workflows."""

    ensemble_id: str
    workflow_ids: list[str]
    deadline: Optional[float] = None
    budget: Optional[float] = None


def validate(workflow: Workflow, strict_orphans: bool = True) -> list[int]:
    """Check structure, resolve the effective edge set, return a topo order.

    Edges are the union of file-derived producer/consumer pairs and explicit
    parent lists. A file-derived parent missing from a task's explicit list is
    an OrphanInputError in strict mode and a silent union otherwise. Rewrites
    ``parents``/``children`` on the tasks to the effective sets.
    """
    seen: set[int] = set()
    for task in workflow.tasks:
        if task.id in seen:
            raise ValidationError(
                f"workflow '{workflow.workflow_id}': duplicate task id {task.id}")
        seen.add(task.id)
        if task.runtime_mi <= 0:
            raise ValidationError(
                f"workflow '{workflow.workflow_id}' task {task.id}: "
                f"runtime must be positive")

    producers: dict[str, int] = {}
    for task in workflow.tasks:
        names = set()
        for data_file in list(task.inputs) + list(task.outputs):
            if data_file.name in names:
                raise ValidationError(
                    f"workflow '{workflow.workflow_id}' task {task.id}: "
                    f"duplicate file '{data_file.name}'")
            names.add(data_file.name)
        for data_file in task.outputs:
            if data_file.name in producers:
                raise ValidationError(
                    f"workflow '{workflow.workflow_id}': file "
                    f"'{data_file.name}' produced by tasks "
                    f"{producers[data_file.name]} and {task.id}")
            producers[data_file.name] = task.id

    parents: dict[int, set[int]] = {task.id: set() for task in workflow.tasks}
    for task in workflow.tasks:
        for data_file in task.inputs:
            producer = producers.get(data_file.name)
            if producer is None:
                continue  # external/source file, resident at the consumer
            if producer == task.id:
                raise ValidationError(
                    f"workflow '{workflow.workflow_id}' task {task.id}: "
                    f"consumes its own output '{data_file.name}'")
            if (task.explicit_parents is not None
                    and producer not in task.explicit_parents):
                message = (f"workflow '{workflow.workflow_id}' task {task.id}: "
                           f"input '{data_file.name}' is produced by task "
                           f"{producer}, absent from its declared parents")
                if strict_orphans:
                    raise OrphanInputError(message)
                logger.warning("%s (edge added anyway)", message)
            parents[task.id].add(producer)
        if task.explicit_parents is not None:
            for parent in task.explicit_parents:
                if parent not in parents:
                    raise DanglingReferenceError(
                        f"workflow '{workflow.workflow_id}' task {task.id}: "
                        f"unknown parent {parent}")
                if parent == task.id:
                    raise ValidationError(
                        f"workflow '{workflow.workflow_id}' task {task.id}: "
                        f"lists itself as parent")
                parents[task.id].add(parent)

    children: dict[int, set[int]] = {task.id: set() for task in workflow.tasks}
    for task_id, parent_ids in parents.items():
        for parent in parent_ids:
            children[parent].add(task_id)
    for task in workflow.tasks:
        task.parents = frozenset(parents[task.id])
        task.children = frozenset(children[task.id])

    order = _topological_order(workflow)
    return order


def _topological_order(workflow: Workflow) -> list[int]:
    indegree = {task.id: len(task.parents) for task in workflow.tasks}
    ready = sorted(tid for tid, deg in indegree.items() if deg == 0)
    order: list[int] = []
    while ready:
        current = ready.pop(0)
        order.append(current)
        added = sorted(workflow.task(current).children)
        for child in added:
            indegree[child] -= 1
            if indegree[child] == 0:
                ready.append(child)
        ready.sort()
    if len(order) != len(workflow.tasks):
        raise CycleDetectedError(workflow.workflow_id, _cycle_witness(workflow, set(order)))
    return order


def _cycle_witness(workflow: Workflow, acyclic: set[int]) -> list[int]:
    """Walk parent edges among the non-topologically-sorted tasks."""
    stuck = sorted(t.id for t in workflow.tasks if t.id not in acyclic)
    current = stuck[0]
    seen: list[int] = []
    while current not in seen:
        seen.append(current)
        current = min(p for p in workflow.task(current).parents if p not in acyclic)
    return seen[seen.index(current):]


def ready_set(workflow: Workflow, completed: set[int], released: set[int],
              dispatched: Optional[set[int]] = None) -> set[int]:
    """Released, not yet dispatched tasks whose parents are all completed."""
    dispatched = completed if dispatched is None else dispatched
    return {
        task.id
        for task in workflow.tasks
        if task.id in released
        and task.id not in dispatched
        and task.parents <= completed
    }


def selectivity_stream(seed: int, workflow_id: str, task_id: int,
                       execution_index: int) -> random.Random:
    """Counter-based substream: reproducible and order-independent."""
    key = f"{seed}:{workflow_id}:{task_id}:{execution_index}".encode()
    digest = hashlib.sha256(key).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def apply_selectivity(task: Task, rng: random.Random) -> list[DataFile]:
    """Outputs actually emitted by one completed execution of ``task``."""
    if task.selectivity.kind == EMIT_ALL:
        return list(task.outputs)
    p = task.selectivity.probability
    return [data_file for data_file in task.outputs if rng.random() < p]


def next_activation(task: Task, finished_at: float,
                    completed_executions: int) -> Optional[float]:
    """Restart time after a completion, or None when the task is done.

    ``completed_executions`` counts completions so far, including the one at
    ``finished_at``; a periodic task with ``repetitions`` k restarts k times.
    """
    if task.execution.kind != PERIODIC:
        return None
    repetitions = task.execution.repetitions
    if repetitions is not None and completed_executions > repetitions:
        return None
    return finished_at + task.execution.interval
