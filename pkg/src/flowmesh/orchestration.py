"""Coordinating entities: task release, dependency resolution, brokering.

Three entities drive a run. The TaskManager releases every task at its entry
time, knowing nothing about dependencies. The WorkflowEngine holds released
tasks until their parents complete, tracking each workflow separately, and
owns the round bookkeeping for periodic re-executions. The Broker maps ready
tasks to VMs through a pluggable policy, stages input files over the network,
tracks every task round's lifecycle, and enforces deadlines.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

from . import messages as msg
from . import policies
from .compute import VmSpec
from .errors import DanglingReferenceError
from .kernel import Entity, SimEvent
from .messages import RoundKey
from .network import NetworkFabric
from .trace import TraceSink
from .workflow import (
    Ensemble,
    Workflow,
    apply_selectivity,
    selectivity_stream,
)

logger = logging.getLogger(__name__)

# task round lifecycle states
PENDING = "pending"
READY = "ready"
SCHEDULED = "scheduled"
TRANSFERRING = "transferring"
EXECUTING = "executing"
COMPLETED = "completed"
DEADLINE_MISSED = "deadline-missed"
KILLED = "killed"

TERMINAL = frozenset({COMPLETED, DEADLINE_MISSED, KILLED})

# deadline reactions
KILL_TASK = "kill"
CONTINUE_AND_FLAG = "continue"
DROP_DESCENDANTS = "drop-descendants"

DEADLINE_POLICIES = (KILL_TASK, CONTINUE_AND_FLAG, DROP_DESCENDANTS)

REASON_DEADLINE = "deadline"
REASON_ANCESTOR_DEADLINE = "ancestor-deadline"
REASON_MISSING_INPUT = "missing-input"
REASON_VM_DESTROYED = "vm-destroyed"


@dataclass
class TaskRecord:
    """Lifecycle trace of one execution round of one task."""

    key: RoundKey
    release_time: Optional[float] = None
    ready_time: Optional[float] = None
    schedule_time: Optional[float] = None
    assigned_vm: Optional[int] = None
    exec_device: Optional[int] = None
    input_transfer_spans: list[list] = field(default_factory=list)
    exec_start: Optional[float] = None
    exec_end: Optional[float] = None
    status: str = PENDING
    deadline: Optional[float] = None
    deadline_violation: bool = False
    kill_reason: Optional[str] = None

    @property
    def terminal(self) -> bool:
        return self.status in TERMINAL


class TaskManager(Entity):
    """Releases every task at its entry time, ignoring dependencies."""

    def __init__(self, workflows: list[Workflow]):
        super().__init__(name="manager")
        self.workflows = workflows
        self.engine_eid = -1

    def startup(self) -> None:
        for workflow in self.workflows:
            for task in workflow.tasks:
                self.send(self.engine_eid, task.entry_time, msg.TASK_RELEASE,
                          msg.ReleaseMsg(workflow.workflow_id, task.id))

    def handle(self, event: SimEvent) -> None:
        logger.warning("manager ignores tag %s", event.tag)


class WorkflowEngine(Entity):
    """Resolves dependencies: forwards a round to the broker when eligible.

    Round 0 of a task needs its release plus every parent's first completion.
    Round r >= 1 exists only for periodic tasks (self-timer) or tasks with at
    least one periodic parent (fresh data), requires the task's own round r-1,
    every periodic parent's round r, and the self-timer when periodic.
    """

    def __init__(self, workflows: list[Workflow], horizon: Optional[float]):
        super().__init__(name="engine")
        self.workflows = {w.workflow_id: w for w in workflows}
        self.horizon = horizon
        self.broker_eid = -1
        self._released0: set[tuple[str, int]] = set()
        self._completions: dict[tuple[str, int], int] = {}
        self._created: set[RoundKey] = set()
        self._forwarded: set[RoundKey] = set()
        self._timer_ok: set[RoundKey] = set()
        # (workflow, task) -> (first dead round, reason)
        self.dead_from: dict[tuple[str, int], tuple[int, str]] = {}

    # -- queries used by reporting/finalization --------------------------------

    def is_dead(self, key: RoundKey) -> Optional[str]:
        entry = self.dead_from.get((key.workflow_id, key.task_id))
        if entry is not None and key.round >= entry[0]:
            return entry[1]
        return None

    def completions(self, workflow_id: str, task_id: int) -> int:
        return self._completions.get((workflow_id, task_id), 0)

    # -- event handling ----------------------------------------------------------

    def handle(self, event: SimEvent) -> None:
        if event.tag == msg.TASK_RELEASE:
            self._on_release(event.payload)
        elif event.tag == msg.TASK_COMPLETED:
            self._on_completed(event.payload)
        elif event.tag == msg.ACTIVATION_TIMER:
            self._on_timer(event.payload)
        elif event.tag == msg.MARK_DEAD:
            self._on_mark_dead(event.payload)
        else:
            logger.warning("engine ignores tag %s", event.tag)

    def _on_release(self, message: msg.ReleaseMsg) -> None:
        if message.workflow_id not in self.workflows:
            raise DanglingReferenceError(
                f"released task for unknown workflow '{message.workflow_id}'")
        self._released0.add((message.workflow_id, message.task_id))
        self._create_round(RoundKey(message.workflow_id, message.task_id, 0))

    def _create_round(self, key: RoundKey) -> None:
        if key in self._created:
            return
        self._created.add(key)
        self.send(self.broker_eid, 0.0, msg.ROUND_RELEASED, key)
        self._evaluate(key)

    def _on_completed(self, message: msg.CompletionMsg) -> None:
        key = message.key
        workflow = self.workflows[key.workflow_id]
        task = workflow.task(key.task_id)
        self._completions[(key.workflow_id, key.task_id)] = key.round + 1

        for name in message.dropped_files:
            for consumer in sorted(task.children):
                consumes = any(f.name == name
                               for f in workflow.task(consumer).inputs)
                if consumes:
                    starved = key.round if task.is_periodic else 0
                    self._mark_dead(key.workflow_id, consumer, starved,
                                    REASON_MISSING_INPUT)

        self._spawn_next_round(workflow, task, key)

        for child in sorted(task.children):
            self._evaluate(RoundKey(key.workflow_id, child, key.round))
            if key.round != 0:
                self._evaluate(RoundKey(key.workflow_id, child, 0))
        # A periodic parent's completion may also unblock the next self-round.
        self._evaluate(RoundKey(key.workflow_id, key.task_id, key.round + 1))

    def _spawn_next_round(self, workflow: Workflow, task, key: RoundKey) -> None:
        next_round = key.round + 1
        periodic_parents = [p for p in sorted(task.parents)
                            if workflow.task(p).is_periodic]
        if not task.is_periodic and not periodic_parents:
            return
        if task.is_periodic and self._exceeds_budget(task, next_round):
            return
        for parent_id in periodic_parents:
            if self._exceeds_budget(workflow.task(parent_id), next_round):
                return
        if task.is_periodic:
            activation = self.now + task.execution.interval
            if self.horizon is not None and activation > self.horizon:
                return
            self.send(self.entity_id, task.execution.interval,
                      msg.ACTIVATION_TIMER,
                      RoundKey(key.workflow_id, key.task_id, next_round))
        self._create_round(RoundKey(key.workflow_id, key.task_id, next_round))

    @staticmethod
    def _exceeds_budget(task, round_index: int) -> bool:
        """Whether a periodic task's repetition budget forbids this round."""
        repetitions = task.execution.repetitions
        return repetitions is not None and round_index > repetitions

    def _on_timer(self, key: RoundKey) -> None:
        self._timer_ok.add(key)
        self._evaluate(key)

    def _on_mark_dead(self, message: msg.DeadMsg) -> None:
        self._mark_dead(message.workflow_id, message.task_id,
                        message.from_round, message.reason, message.propagate)

    def _mark_dead(self, workflow_id: str, task_id: int, from_round: int,
                   reason: str, propagate: bool = True) -> None:
        current = self.dead_from.get((workflow_id, task_id))
        if current is not None and current[0] <= from_round:
            return
        self.dead_from[(workflow_id, task_id)] = (from_round, reason)
        if not propagate:
            return
        task = self.workflows[workflow_id].task(task_id)
        for child in sorted(task.children):
            if task.is_periodic:
                self._mark_dead(workflow_id, child, from_round, reason)
            elif from_round == 0:
                self._mark_dead(workflow_id, child, 0, reason)

    def _evaluate(self, key: RoundKey) -> None:
        if key not in self._created or key in self._forwarded:
            return
        if self.is_dead(key) is not None:
            return
        workflow = self.workflows[key.workflow_id]
        task = workflow.task(key.task_id)
        if key.round == 0 and (key.workflow_id, key.task_id) not in self._released0:
            return
        if key.round > 0 and task.is_periodic and key not in self._timer_ok:
            return
        for parent_id in sorted(task.parents):
            need = key.round + 1 if workflow.task(parent_id).is_periodic else 1
            if self.completions(key.workflow_id, parent_id) < need:
                return
        self._forwarded.add(key)
        self.send(self.broker_eid, 0.0, msg.TASK_READY, key)


# file instance: (workflow, producer task id, producer round, file name);
# producer -1 marks an external file staged from the data-origin device.
FileInstance = tuple[str, int, int, str]


@dataclass
class VmInfo:
    spec: VmSpec
    device_id: int
    status: str = "running"  # creating | running | destroying | destroyed
    assigned: set = field(default_factory=set)


class Broker(Entity):
    """Maps ready rounds to VMs, stages inputs, tracks lifecycles."""

    def __init__(self, workflows: list[Workflow], ensembles: list[Ensemble],
                 fabric: NetworkFabric, sink: TraceSink, config) -> None:
        super().__init__(name="broker")
        self.workflows = {w.workflow_id: w for w in workflows}
        self.ensembles = ensembles
        self.fabric = fabric
        self.sink = sink
        self.config = config
        self.scheduler: policies.SchedulingPolicy = policies.make_scheduler(
            config.scheduler_name, config.scheduler_params)
        self.provisioner: policies.ProvisioningPolicy = policies.make_provisioner(
            config.provisioner_name, config.provisioner_params)
        self.engine_eid = -1
        self.device_entities: dict[int, int] = {}

        self.records: dict[RoundKey, TaskRecord] = {}
        self.vm_table: dict[int, VmInfo] = {}
        self.ready_queue: list[RoundKey] = []
        self._cycle_pending = False
        self._expected_round0 = sum(len(w.tasks) for w in workflows)

        self._file_site: dict[FileInstance, int] = {}
        self._resident: set[tuple[FileInstance, int]] = set()
        self._in_flight: dict[tuple[FileInstance, int], list[RoundKey]] = {}
        self._pending_inputs: dict[RoundKey, int] = {}
        self._transfers: dict[int, tuple[FileInstance, int]] = {}
        self._transfer_seq = 0

    # -- wiring -----------------------------------------------------------------

    def add_initial_vm(self, spec, device_id: int) -> None:
        self.vm_table[spec.id] = VmInfo(spec, device_id, status="running")

    def startup(self) -> None:
        if self.config.scheduler_timer_s is not None:
            self.send(self.entity_id, self.config.scheduler_timer_s,
                      msg.CYCLE_TIMER)

    # -- helpers ----------------------------------------------------------------

    def workflow_of(self, key: RoundKey) -> Workflow:
        return self.workflows[key.workflow_id]

    def task_of(self, key: RoundKey):
        return self.workflows[key.workflow_id].task(key.task_id)

    def effective_deadline(self, workflow_id: str, task) -> Optional[float]:
        if task.deadline is not None:
            return task.deadline
        workflow = self.workflows[workflow_id]
        if workflow.deadline is not None:
            return workflow.deadline
        for ensemble in self.ensembles:
            if workflow_id in ensemble.workflow_ids:
                return ensemble.deadline
        return None

    def control_send(self, device_id: int, tag: str, payload) -> None:
        """Directive to a device: direct, or routed when the broker is placed."""
        broker_device = self.config.broker_device_id
        if broker_device is None or broker_device == device_id:
            self.send(self.device_entities[device_id], 0.0, tag, payload)
        else:
            packet = self.fabric.new_packet(
                broker_device, device_id, self.config.control_message_mb,
                msg.Delivery(self.device_entities[device_id], tag, payload))
            self.send(self.device_entities[broker_device], 0.0,
                      msg.SEND_PACKET, packet)

    def _emit(self, kind: str, key: RoundKey, detail: str = "") -> None:
        self.sink.emit(self.now, self.name, kind, key.label(), detail)

    def _request_cycle(self) -> None:
        if not self._cycle_pending:
            self._cycle_pending = True
            self.send(self.entity_id, 0.0, msg.SCHEDULE_CYCLE)

    # -- event handling ------------------------------------------------------------

    def handle(self, event: SimEvent) -> None:
        tag, payload = event.tag, event.payload
        if tag == msg.ROUND_RELEASED:
            self._on_round_released(payload)
        elif tag == msg.TASK_READY:
            self._on_task_ready(payload)
        elif tag == msg.SCHEDULE_CYCLE:
            self._cycle_pending = False
            self._run_cycle()
        elif tag == msg.TRANSFER_ARRIVED:
            self._on_transfer_arrived(payload)
        elif tag == msg.TASK_STARTED:
            self._on_task_started(payload)
        elif tag == msg.TASK_FINISHED:
            self._on_task_finished(payload)
        elif tag == msg.DEADLINE_CHECK:
            self._on_deadline_check(payload)
        elif tag == msg.CYCLE_TIMER:
            self._on_cycle_timer()
        elif tag == msg.VM_CREATED:
            self._on_vm_created(payload)
        elif tag == msg.VM_CREATE_FAILED:
            self._on_vm_create_failed(payload)
        elif tag == msg.VM_DESTROYED:
            self._on_vm_destroyed(payload)
        elif tag == msg.VM_DESTROY_FAILED:
            logger.warning("vm destroy rejected: %s", payload.detail)
        else:
            logger.warning("broker ignores tag %s", tag)

    # -- release / readiness ---------------------------------------------------------

    def _on_round_released(self, key: RoundKey) -> None:
        record = TaskRecord(key, release_time=self.now)
        self.records[key] = record
        if key.round == 0:
            deadline = self.effective_deadline(key.workflow_id, self.task_of(key))
            if deadline is not None:
                record.deadline = deadline
                self.send(self.entity_id, max(0.0, deadline - self.now),
                          msg.DEADLINE_CHECK, key)
        self._emit("released", key)

    def _on_task_ready(self, key: RoundKey) -> None:
        record = self.records[key]
        if record.terminal:
            return
        record.ready_time = self.now
        record.status = READY
        self.ready_queue.append(key)
        self._emit("ready", key)
        self._request_cycle()

    # -- scheduling cycle ----------------------------------------------------------------

    def _vm_views(self) -> list[policies.VmView]:
        views = []
        for vm_id in sorted(self.vm_table):
            info = self.vm_table[vm_id]
            if info.status != "running":
                continue
            pending = sum(self.task_of(k).runtime_mi for k in info.assigned)
            views.append(policies.VmView(
                vm_id=vm_id, device_id=info.device_id, mips=info.spec.mips,
                pes=info.spec.pes, scheduler=info.spec.scheduler,
                assigned_count=len(info.assigned), pending_mi=pending))
        return views

    def _ready_views(self) -> list[policies.ReadyView]:
        views = []
        for key in self.ready_queue:
            record = self.records[key]
            if record.status != READY:
                continue
            task = self.task_of(key)
            inputs = []
            for data_file in task.inputs:
                instance, source = self._locate_input(key, data_file.name)
                inputs.append((data_file.name, data_file.size_mb, source))
            views.append(policies.ReadyView(
                key=key, length_mi=task.runtime_mi,
                ready_time=record.ready_time, inputs=tuple(inputs)))
        return views

    def _locate_input(self, key: RoundKey,
                      name: str) -> tuple[Optional[FileInstance], Optional[int]]:
        """Resolve a file name to its instance and current source device."""
        workflow = self.workflow_of(key)
        producer = workflow.producer_of(name)
        if producer is None:
            origin = self.config.data_origin_device_id
            if origin is None:
                return None, None  # resident wherever the task runs
            return (key.workflow_id, -1, 0, name), origin
        producer_round = key.round if workflow.task(producer).is_periodic else 0
        instance = (key.workflow_id, producer, producer_round, name)
        return instance, self._file_site[instance]

    def _run_cycle(self) -> None:
        self._run_provisioner()
        ready_views = self._ready_views()
        if not ready_views:
            return
        vm_views = self._vm_views()
        ctx = policies.PolicyContext(
            clock=self.now, topology=self.fabric.topology,
            routing=self.fabric.routing, params=self.config.scheduler_params)
        try:
            assignments = self.scheduler.decide(ready_views, vm_views, ctx)
        except Exception as exc:  # a buggy plugin must not kill the run
            logger.error("scheduling policy raised: %s", exc)
            return
        running = {view.vm_id for view in vm_views}
        seen: set[RoundKey] = set()
        for key, vm_id in assignments:
            record = self.records.get(key)
            if (record is None or record.status != READY or key in seen
                    or vm_id not in running):
                self._emit("policy-error", key if record else RoundKey("?", -1, -1),
                           f"invalid assignment vm={vm_id}")
                logger.warning("dropping invalid assignment %s -> vm %s",
                               key, vm_id)
                continue
            seen.add(key)
            self._apply_assignment(key, vm_id)

    def _run_provisioner(self) -> None:
        ready_count = sum(1 for k in self.ready_queue
                          if self.records[k].status == READY)
        ctx = policies.ProvisionContext(
            clock=self.now, ready_count=ready_count, vms=self._vm_views(),
            device_ids=self.fabric.topology.device_ids(),
            next_vm_id=max(self.vm_table, default=-1) + 1,
            params=self.config.provisioner_params)
        try:
            directives = self.provisioner.decide(ctx)
        except Exception as exc:
            logger.error("provisioning policy raised: %s", exc)
            return
        for directive in directives:
            if isinstance(directive, policies.CreateVm):
                self._create_vm(directive)
            elif isinstance(directive, policies.DestroyVm):
                self._destroy_vm(directive)

    def _create_vm(self, directive: policies.CreateVm) -> None:
        spec = directive.spec
        if spec.id in self.vm_table:
            logger.warning("vm id %d already exists; create dropped", spec.id)
            return
        if directive.device_id not in self.device_entities:
            logger.warning("unknown device %d; create dropped",
                           directive.device_id)
            return
        self.vm_table[spec.id] = VmInfo(spec, directive.device_id,
                                        status="creating")
        self.control_send(directive.device_id, msg.VM_CREATE, spec)

    def _destroy_vm(self, directive: policies.DestroyVm) -> None:
        info = self.vm_table.get(directive.vm_id)
        if info is None or info.status != "running":
            return
        if info.assigned and not directive.force:
            logger.warning("vm %d busy; destroy dropped", directive.vm_id)
            return
        info.status = "destroying"
        self.control_send(info.device_id, msg.VM_DESTROY,
                          msg.DestroyMsg(directive.vm_id, directive.force))

    def _on_vm_created(self, message: msg.VmLifecycleMsg) -> None:
        info = self.vm_table[message.vm_id]
        info.status = "running"
        self.sink.emit(self.now, self.name, "vm-running",
                       f"vm:{message.vm_id}", f"device={info.device_id}")
        self._request_cycle()

    def _on_vm_create_failed(self, message: msg.VmLifecycleMsg) -> None:
        self.vm_table.pop(message.vm_id, None)
        logger.warning("vm %d creation failed: %s", message.vm_id, message.detail)

    def _on_vm_destroyed(self, message: msg.VmLifecycleMsg) -> None:
        info = self.vm_table[message.vm_id]
        info.status = "destroyed"
        self.sink.emit(self.now, self.name, "vm-destroyed",
                       f"vm:{message.vm_id}", "")
        for key in message.killed:
            self._kill_round(key, KILLED, REASON_VM_DESTROYED)

    # -- assignment and staging ---------------------------------------------------------

    def _apply_assignment(self, key: RoundKey, vm_id: int) -> None:
        record = self.records[key]
        record.status = SCHEDULED
        record.schedule_time = self.now
        record.assigned_vm = vm_id
        record.exec_device = self.vm_table[vm_id].device_id
        self.vm_table[vm_id].assigned.add(key)
        self.ready_queue.remove(key)
        self._emit("scheduled", key, f"vm={vm_id}")
        self._stage_inputs(key)

    def _stage_inputs(self, key: RoundKey) -> None:
        record = self.records[key]
        task = self.task_of(key)
        destination = record.exec_device
        pending = 0
        for data_file in task.inputs:
            instance, source = self._locate_input(key, data_file.name)
            if instance is None or source == destination \
                    or (instance, destination) in self._resident:
                record.input_transfer_spans.append(
                    [data_file.name, self.now, self.now])
                continue
            pending += 1
            record.input_transfer_spans.append([data_file.name, self.now, None])
            flight_key = (instance, destination)
            if flight_key in self._in_flight:
                self._in_flight[flight_key].append(key)
                continue
            self._in_flight[flight_key] = [key]
            transfer_id = self._transfer_seq
            self._transfer_seq += 1
            self._transfers[transfer_id] = flight_key
            packet = self.fabric.new_packet(
                source, destination, data_file.size_mb,
                msg.Delivery(self.entity_id, msg.TRANSFER_ARRIVED, transfer_id))
            self._emit("transfer-start", key,
                       f"file={data_file.name};from={source};to={destination};"
                       f"size={data_file.size_mb!r}")
            self.control_send(source, msg.SEND_PACKET, packet)
        if pending:
            record.status = TRANSFERRING
            self._pending_inputs[key] = pending
        else:
            self._submit_execution(key)

    def _on_transfer_arrived(self, transfer_id: int) -> None:
        instance, destination = self._transfers.pop(transfer_id)
        self._resident.add((instance, destination))
        waiters = self._in_flight.pop((instance, destination), [])
        file_name = instance[3]
        for key in waiters:
            record = self.records[key]
            if record.terminal:
                continue
            for span in record.input_transfer_spans:
                if span[0] == file_name and span[2] is None:
                    span[2] = self.now
                    break
            self._emit("transfer-arrived", key,
                       f"file={file_name};device={destination}")
            self._pending_inputs[key] -= 1
            if self._pending_inputs[key] == 0:
                del self._pending_inputs[key]
                self._submit_execution(key)

    def _submit_execution(self, key: RoundKey) -> None:
        record = self.records[key]
        vm_id = record.assigned_vm
        info = self.vm_table.get(vm_id)
        if info is None or info.status != "running":
            # the VM vanished between assignment and staging; requeue
            record.status = READY
            record.assigned_vm = None
            self.ready_queue.append(key)
            self._request_cycle()
            return
        task = self.task_of(key)
        self.control_send(info.device_id, msg.EXECUTE_TASK,
                          msg.ExecuteMsg(vm_id, key, task.runtime_mi))

    # -- execution lifecycle -----------------------------------------------------------

    def _on_task_started(self, message: msg.ExecuteMsg) -> None:
        record = self.records[message.key]
        if record.terminal:
            return
        record.exec_start = self.now
        record.status = EXECUTING
        self._emit("executing", message.key, f"vm={message.vm_id}")

    def _on_task_finished(self, message: msg.ExecuteMsg) -> None:
        key = message.key
        record = self.records[key]
        if record.terminal:
            return
        record.exec_end = self.now
        record.status = COMPLETED
        if record.deadline is not None and self.now > record.deadline:
            record.deadline_violation = True
        info = self.vm_table.get(message.vm_id)
        if info is not None:
            info.assigned.discard(key)

        task = self.task_of(key)
        rng = selectivity_stream(self.config.seed, key.workflow_id,
                                 key.task_id, key.round)
        emitted = apply_selectivity(task, rng)
        emitted_names = {f.name for f in emitted}
        dropped = tuple(f.name for f in task.outputs
                        if f.name not in emitted_names)
        device_id = record.exec_device
        for data_file in emitted:
            instance = (key.workflow_id, key.task_id, key.round, data_file.name)
            self._file_site[instance] = device_id
            self._resident.add((instance, device_id))
        self._emit("completed", key,
                   f"vm={message.vm_id};emitted={len(emitted)};"
                   f"dropped={len(dropped)}")
        self.send(self.engine_eid, 0.0, msg.TASK_COMPLETED,
                  msg.CompletionMsg(key, dropped))
        self._request_cycle()

    # -- deadlines ---------------------------------------------------------------------

    def _on_deadline_check(self, key: RoundKey) -> None:
        record = self.records[key]
        if record.terminal:
            return
        policy = self.config.deadline_policy
        if policy == CONTINUE_AND_FLAG:
            record.deadline_violation = True
            self._emit("deadline-flagged", key)
            return
        self._kill_round(key, DEADLINE_MISSED, REASON_DEADLINE)
        self.send(self.engine_eid, 0.0, msg.MARK_DEAD,
                  msg.DeadMsg(key.workflow_id, key.task_id, key.round,
                              REASON_DEADLINE, propagate=False))
        if policy == DROP_DESCENDANTS:
            workflow = self.workflow_of(key)
            for descendant in sorted(self._descendants(workflow, key.task_id)):
                self.send(self.engine_eid, 0.0, msg.MARK_DEAD,
                          msg.DeadMsg(key.workflow_id, descendant, 0,
                                      REASON_ANCESTOR_DEADLINE,
                                      propagate=False))
                for other_key, other in list(self.records.items()):
                    if (other_key.workflow_id == key.workflow_id
                            and other_key.task_id == descendant
                            and not other.terminal):
                        self._kill_round(other_key, KILLED,
                                         REASON_ANCESTOR_DEADLINE)

    @staticmethod
    def _descendants(workflow: Workflow, task_id: int) -> set[int]:
        out: set[int] = set()
        frontier = [task_id]
        while frontier:
            current = frontier.pop()
            for child in workflow.task(current).children:
                if child not in out:
                    out.add(child)
                    frontier.append(child)
        return out

    def _kill_round(self, key: RoundKey, status: str, reason: str) -> None:
        record = self.records[key]
        if record.terminal:
            return
        previous = record.status
        record.status = status
        record.kill_reason = reason
        self._emit(status, key, f"reason={reason}")
        if previous == READY and key in self.ready_queue:
            self.ready_queue.remove(key)
        if previous in (SCHEDULED, TRANSFERRING, EXECUTING):
            vm_id = record.assigned_vm
            info = self.vm_table.get(vm_id)
            if info is not None:
                info.assigned.discard(key)
                if info.status == "running":
                    self.control_send(info.device_id, msg.KILL_TASK,
                                      msg.ExecuteMsg(vm_id, key))
        self._pending_inputs.pop(key, None)
        for waiters in self._in_flight.values():
            if key in waiters:
                waiters.remove(key)

    # -- periodic scheduling timer -------------------------------------------------------

    def _on_cycle_timer(self) -> None:
        self._request_cycle()
        terminal_round0 = sum(1 for k, r in self.records.items()
                              if k.round == 0 and r.terminal)
        outstanding = any(not r.terminal for r in self.records.values())
        if outstanding or terminal_round0 < self._expected_round0:
            self.send(self.entity_id, self.config.scheduler_timer_s,
                      msg.CYCLE_TIMER)
