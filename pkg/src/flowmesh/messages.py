"""Event tags and payload types exchanged between simulation entities."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, NamedTuple, Optional

from .compute import VmSpec


class RoundKey(NamedTuple):
    """Identity of one execution round of one task."""

    workflow_id: str
    task_id: int
    round: int

    def label(self) -> str:
        return f"{self.workflow_id}:{self.task_id}:{self.round}"


# TaskManager -> WorkflowEngine
TASK_RELEASE = "task-release"
# WorkflowEngine -> Broker
ROUND_RELEASED = "round-released"
TASK_READY = "task-ready"
# Broker -> WorkflowEngine
TASK_COMPLETED = "task-completed"
MARK_DEAD = "mark-dead"
# WorkflowEngine self
ACTIVATION_TIMER = "activation-timer"
# Broker self
SCHEDULE_CYCLE = "schedule-cycle"
DEADLINE_CHECK = "deadline-check"
CYCLE_TIMER = "cycle-timer"
TRANSFER_ARRIVED = "transfer-arrived"
# Broker -> Device
SEND_PACKET = "send-packet"
EXECUTE_TASK = "execute-task"
KILL_TASK = "kill-task"
VM_CREATE = "vm-create"
VM_DESTROY = "vm-destroy"
# Device -> Device
PACKET = "packet"
VM_COMPLETION = "vm-completion"
# Device -> Broker
TASK_STARTED = "task-started"
TASK_FINISHED = "task-finished"
VM_CREATED = "vm-created"
VM_CREATE_FAILED = "vm-create-failed"
VM_DESTROYED = "vm-destroyed"
VM_DESTROY_FAILED = "vm-destroy-failed"


@dataclass(frozen=True)
class ReleaseMsg:
    workflow_id: str
    task_id: int


@dataclass(frozen=True)
class CompletionMsg:
    key: RoundKey
    dropped_files: tuple[str, ...]


@dataclass(frozen=True)
class DeadMsg:
    workflow_id: str
    task_id: int
    from_round: int
    reason: str
    # cascade to children (a starved task can never feed its descendants);
    # deadline kills mark only the task itself
    propagate: bool = True


@dataclass(frozen=True)
class ExecuteMsg:
    vm_id: int
    key: RoundKey
    length_mi: float = 0.0


@dataclass(frozen=True)
class VmCompletionMsg:
    vm_id: int
    version: int


@dataclass(frozen=True)
class VmLifecycleMsg:
    vm_id: int
    detail: str = ""
    killed: tuple[RoundKey, ...] = ()


@dataclass(frozen=True)
class DestroyMsg:
    vm_id: int
    force: bool = False


@dataclass(frozen=True)
class Delivery:
    """Carried by a packet: event to schedule at the final destination."""

    entity: int
    tag: str
    body: Any = None
