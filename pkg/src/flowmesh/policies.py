"""Pluggable task-scheduling and VM-provisioning policies.

Policies are pure functions of their inputs plus their own private state, so
identical runs make identical decisions. Decentralized schemes are expressed
by restricting the view a policy consults (e.g. only VMs on devices adjacent
to a task's data) rather than by new entity types.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

from .compute import TIME_SHARED, VmSpec
from .errors import PolicyError
from .messages import RoundKey
from .network import RoutingTable, Topology


@dataclass(frozen=True)
class ReadyView:
    """One schedulable task round as shown to a scheduling policy."""

    key: RoundKey
    length_mi: float
    ready_time: float
    # (file name, size MB, source device id or None when already local/external)
    inputs: tuple[tuple[str, float, Optional[int]], ...] = ()


@dataclass(frozen=True)
class VmView:
    """One running VM as shown to a policy."""

    vm_id: int
    device_id: int
    mips: float
    pes: int
    scheduler: str
    assigned_count: int
    pending_mi: float

    @property
    def total_mips(self) -> float:
        return self.mips * self.pes


@dataclass(frozen=True)
class PolicyContext:
    clock: float
    topology: Topology
    routing: RoutingTable
    params: dict

    def transfer_estimate(self, source: int, destination: int,
                          size_mb: float) -> float:
        """Queue-free routed transfer time estimate over the device graph."""
        if source == destination:
            return 0.0
        total = 0.0
        current = source
        for hop in self.routing.path(source, destination):
            link = self.topology.link_between(current, hop)
            total += size_mb / link.bandwidth_mbps + link.latency_s
            current = hop
        return total


Assignment = tuple[RoundKey, int]


class SchedulingPolicy:
    """Maps ready task rounds to running VMs; may defer by assigning nothing."""

    name = "abstract"

    def decide(self, ready: list[ReadyView], vms: list[VmView],
               ctx: PolicyContext) -> list[Assignment]:
        raise NotImplementedError


class RoundRobinPolicy(SchedulingPolicy):
    """Cycle through VMs in ascending id order, one task per step."""

    name = "round-robin"

    def __init__(self) -> None:
        self._cursor = 0

    def decide(self, ready, vms, ctx):
        if not vms:
            return []
        ordered = sorted(vms, key=lambda v: v.vm_id)
        assignments = []
        for view in ready:
            vm = ordered[self._cursor % len(ordered)]
            self._cursor += 1
            assignments.append((view.key, vm.vm_id))
        return assignments


def _estimated_finish(view: ReadyView, vm: VmView, extra_mi: float,
                      ctx: PolicyContext) -> float:
    """Coarse earliest-finish estimate: staging bound plus serialized backlog."""
    staging = 0.0
    for _, size_mb, source in view.inputs:
        if source is not None and source != vm.device_id:
            staging = max(staging,
                          ctx.transfer_estimate(source, vm.device_id, size_mb))
    backlog = vm.pending_mi + extra_mi
    return ctx.clock + staging + (backlog + view.length_mi) / vm.total_mips


class GreedyEarliestFinishPolicy(SchedulingPolicy):
    """Assign each ready task to the VM minimizing its estimated finish time."""

    name = "greedy-eft"

    def decide(self, ready, vms, ctx):
        if not vms:
            return []
        ordered = sorted(vms, key=lambda v: v.vm_id)
        extra = {vm.vm_id: 0.0 for vm in ordered}
        assignments = []
        for view in ready:
            best = min(ordered, key=lambda vm: (
                _estimated_finish(view, vm, extra[vm.vm_id], ctx), vm.vm_id))
            extra[best.vm_id] += view.length_mi
            assignments.append((view.key, best.vm_id))
        return assignments


class MinMinPolicy(SchedulingPolicy):
    """Classic min-min over the current ready batch."""

    name = "min-min"

    def decide(self, ready, vms, ctx):
        if not vms:
            return []
        ordered = sorted(vms, key=lambda v: v.vm_id)
        extra = {vm.vm_id: 0.0 for vm in ordered}
        remaining = list(ready)
        assignments = []
        while remaining:
            best_task = None
            best_vm = None
            best_finish = None
            for view in remaining:
                for vm in ordered:
                    finish = _estimated_finish(view, vm, extra[vm.vm_id], ctx)
                    if best_finish is None or finish < best_finish:
                        best_task, best_vm, best_finish = view, vm, finish
            assignments.append((best_task.key, best_vm.vm_id))
            extra[best_vm.vm_id] += best_task.length_mi
            remaining.remove(best_task)
        return assignments


# -- provisioning -------------------------------------------------------------


@dataclass(frozen=True)
class CreateVm:
    spec: VmSpec
    device_id: int


@dataclass(frozen=True)
class DestroyVm:
    vm_id: int
    force: bool = False


@dataclass(frozen=True)
class ProvisionContext:
    clock: float
    ready_count: int
    vms: list[VmView]
    device_ids: list[int]
    next_vm_id: int
    params: dict


class ProvisioningPolicy:
    """Issues VM create/destroy directives; consulted every schedule cycle."""

    name = "abstract"

    def initial_placement_order(self, spec: VmSpec,
                                device_ids: list[int]) -> list[int]:
        """Preference order of devices for a VM with no pinned device."""
        if spec.device_id is not None:
            return [spec.device_id]
        return list(device_ids)

    def decide(self, ctx: ProvisionContext) -> list[CreateVm | DestroyVm]:
        return []


class StaticProvisioning(ProvisioningPolicy):
    """No dynamic activity: the VM fleet is exactly what the topology lists."""

    name = "static"


class BacklogProvisioning(ProvisioningPolicy):
    """Grow the fleet when the ready backlog outruns it; reap idle extras.

    Params: ``template`` (VmSpec fields for new VMs), ``backlog_per_vm``
    (default 2), ``max_dynamic`` (default 4).
    """

    name = "backlog"

    def __init__(self, template: dict, backlog_per_vm: int = 2,
                 max_dynamic: int = 4):
        self.template = template
        self.backlog_per_vm = backlog_per_vm
        self.max_dynamic = max_dynamic
        self._created: list[int] = []
        self._device_cursor = 0

    def decide(self, ctx: ProvisionContext) -> list[CreateVm | DestroyVm]:
        directives: list[CreateVm | DestroyVm] = []
        alive = {vm.vm_id: vm for vm in ctx.vms}
        self._created = [vm_id for vm_id in self._created if vm_id in alive]
        fleet = max(len(ctx.vms), 1)
        if (ctx.ready_count > self.backlog_per_vm * fleet
                and len(self._created) < self.max_dynamic):
            device = ctx.device_ids[self._device_cursor % len(ctx.device_ids)]
            self._device_cursor += 1
            template = self.template
            spec = VmSpec(
                id=ctx.next_vm_id, device_id=device,
                mips=float(template["mips"]),
                pes=int(template.get("pes", 1)),
                ram_mb=float(template.get("ram", 0.0)),
                bw_mbps=float(template.get("bw", 0.0)),
                image_size_mb=float(template.get("size", 0.0)),
                scheduler=template.get("scheduler", TIME_SHARED))
            self._created.append(spec.id)
            directives.append(CreateVm(spec, device))
        elif ctx.ready_count == 0:
            for vm_id in self._created:
                if alive[vm_id].assigned_count == 0:
                    directives.append(DestroyVm(vm_id))
        return directives


_SCHEDULERS: dict[str, Callable[..., SchedulingPolicy]] = {
    RoundRobinPolicy.name: RoundRobinPolicy,
    GreedyEarliestFinishPolicy.name: GreedyEarliestFinishPolicy,
    MinMinPolicy.name: MinMinPolicy,
}

_PROVISIONERS: dict[str, Callable[..., ProvisioningPolicy]] = {
    StaticProvisioning.name: StaticProvisioning,
    BacklogProvisioning.name: BacklogProvisioning,
}


def register_scheduler(name: str,
                       factory: Callable[..., SchedulingPolicy]) -> None:
    """Plug in a custom scheduling policy, selectable by name from Config."""
    _SCHEDULERS[name] = factory


def register_provisioner(name: str,
                         factory: Callable[..., ProvisioningPolicy]) -> None:
    """Plug in a custom provisioning policy, selectable by name from Config."""
    _PROVISIONERS[name] = factory


def make_scheduler(name: str, params: dict | None = None) -> SchedulingPolicy:
    if name not in _SCHEDULERS:
        raise PolicyError(f"unknown scheduling policy '{name}'")
    return _SCHEDULERS[name](**(params or {}))


def make_provisioner(name: str, params: dict | None = None) -> ProvisioningPolicy:
    if name not in _PROVISIONERS:
        raise PolicyError(f"unknown provisioning policy '{name}'")
    return _PROVISIONERS[name](**(params or {}))
