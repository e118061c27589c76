"""Hosts, processing elements, VMs, provisioning, and task execution.

Task executions are modeled as fluid workloads measured in million
instructions (MI). A time-shared VM divides its capacity equally among the
active set (each single-PE task capped at one PE's speed); a space-shared VM
runs one task per PE at full speed and queues the rest FCFS.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Hashable, Optional

from .errors import InsufficientCapacityError, VmBusyError, VmNotRunningError

TIME_SHARED = "time-shared"
SPACE_SHARED = "space-shared"

ExecKey = Hashable


@dataclass(frozen=True)
class HostSpec:
    """Static description of one physical host inside a device."""

    id: int
    pes: int
    mips_per_pe: float
    ram_mb: float
    bw_mbps: float
    storage_mb: float
    pe_provisioner: str = "simple"
    ram_provisioner: str = "simple"
    bw_provisioner: str = "simple"


@dataclass(frozen=True)
class VmSpec:
    """Requested VM shape; ``mips`` is per requested PE, CloudSim-style."""

    id: int
    mips: float
    pes: int
    ram_mb: float
    bw_mbps: float
    image_size_mb: float
    device_id: Optional[int] = None
    scheduler: str = TIME_SHARED

    @property
    def total_mips(self) -> float:
        return self.mips * self.pes


class Provisioner:
    """Simple capacity tracker: grant iff remaining capacity suffices."""

    kind = "simple"

    def __init__(self, capacity: float):
        self.capacity = capacity
        self.allocated = 0.0

    @property
    def available(self) -> float:
        return self.capacity - self.allocated

    def allocate(self, amount: float) -> bool:
        if amount > self.available:
            return False
        self.allocated += amount
        return True

    def release(self, amount: float) -> None:
        self.allocated = max(0.0, self.allocated - amount)


class Host:
    """Runtime state of a host: capacity trackers plus the VMs placed on it."""

    def __init__(self, spec: HostSpec):
        self.spec = spec
        self.pe_prov = Provisioner(spec.pes)
        self.ram_prov = Provisioner(spec.ram_mb)
        self.bw_prov = Provisioner(spec.bw_mbps)
        self.storage_prov = Provisioner(spec.storage_mb)
        self.vm_ids: list[int] = []

    def failing_resource(self, vm: VmSpec) -> Optional[str]:
        """Name the first resource that cannot satisfy ``vm``, or None."""
        if vm.pes > self.pe_prov.available:
            return "PE"
        if vm.mips > self.spec.mips_per_pe:
            return "MIPS"
        if vm.ram_mb > self.ram_prov.available:
            return "RAM"
        if vm.bw_mbps > self.bw_prov.available:
            return "bandwidth"
        if vm.image_size_mb > self.storage_prov.available:
            return "storage"
        return None

    def allocate(self, vm: VmSpec) -> bool:
        if self.failing_resource(vm) is not None:
            return False
        self.pe_prov.allocate(vm.pes)
        self.ram_prov.allocate(vm.ram_mb)
        self.bw_prov.allocate(vm.bw_mbps)
        self.storage_prov.allocate(vm.image_size_mb)
        self.vm_ids.append(vm.id)
        return True

    def release(self, vm: VmSpec) -> None:
        if vm.id in self.vm_ids:
            self.vm_ids.remove(vm.id)
            self.pe_prov.release(vm.pes)
            self.ram_prov.release(vm.ram_mb)
            self.bw_prov.release(vm.bw_mbps)
            self.storage_prov.release(vm.image_size_mb)


def allocate_vm(vm: VmSpec, hosts: list[Host]) -> Host:
    """First-fit VM placement over ``hosts`` in ascending host id order.

    Raises InsufficientCapacityError naming the first failing resource of the
    lowest-id host when no host fits.
    """
    ordered = sorted(hosts, key=lambda h: h.spec.id)
    if not ordered:
        raise InsufficientCapacityError("host", "device has no hosts")
    for host in ordered:
        if host.allocate(vm):
            return host
    failing = ordered[0].failing_resource(vm) or "capacity"
    raise InsufficientCapacityError(failing, f"vm {vm.id} fits no host")


@dataclass
class _Execution:
    key: ExecKey
    length_mi: float
    remaining_mi: float
    started_at: Optional[float] = None


class VmRuntime:
    """Executes fluid task workloads under time-shared or space-shared rules.

    The owner drives it event-style: after every mutation it asks
    :meth:`next_completion` and schedules one completion event carrying the
    returned version; stale versions are rejected by :meth:`pop_finished`.
    """

    def __init__(self, spec: VmSpec, device_id: int):
        self.spec = spec
        self.device_id = device_id
        self.running = True
        self.version = 0
        self._last_update = 0.0
        self._active: dict[ExecKey, _Execution] = {}
        self._wait_queue: deque[_Execution] = deque()
        self._projected: Optional[tuple[float, list[ExecKey]]] = None

    # -- capacity ----------------------------------------------------------

    @property
    def total_mips(self) -> float:
        return self.spec.total_mips

    def share_per_task(self, n_active: int) -> float:
        """Fluid MIPS share for each of ``n_active`` single-PE tasks."""
        if n_active <= 0:
            return 0.0
        return self.spec.mips * min(1.0, self.spec.pes / n_active)

    @property
    def active_count(self) -> int:
        return len(self._active) + len(self._wait_queue)

    @property
    def is_idle(self) -> bool:
        return self.active_count == 0

    def current_shares(self) -> dict[ExecKey, float]:
        share = self.share_per_task(len(self._active))
        return {key: share for key in self._active}

    # -- state advancement ---------------------------------------------------

    def _advance(self, now: float) -> None:
        if self.spec.scheduler == TIME_SHARED and self._active:
            share = self.share_per_task(len(self._active))
            dt = now - self._last_update
            if dt > 0:
                for execution in self._active.values():
                    execution.remaining_mi = max(
                        0.0, execution.remaining_mi - share * dt)
        self._last_update = now

    def submit(self, key: ExecKey, length_mi: float, now: float) -> bool:
        """Add a task execution; returns True if it starts immediately."""
        if not self.running:
            raise VmNotRunningError(f"vm {self.spec.id} is not running")
        self._advance(now)
        self.version += 1
        execution = _Execution(key, length_mi, length_mi)
        if self.spec.scheduler == SPACE_SHARED and len(self._active) >= self.spec.pes:
            self._wait_queue.append(execution)
            return False
        execution.started_at = now
        self._active[key] = execution
        return True

    def cancel(self, key: ExecKey, now: float) -> tuple[bool, list[ExecKey]]:
        """Remove an execution; returns (removed, keys started off the queue)."""
        self._advance(now)
        if key in self._active:
            self.version += 1
            del self._active[key]
            return True, self._fill_pes(now)
        for execution in self._wait_queue:
            if execution.key == key:
                self.version += 1
                self._wait_queue.remove(execution)
                return True, []
        return False, []

    def _fill_pes(self, now: float) -> list[ExecKey]:
        started = []
        while self._wait_queue and len(self._active) < self.spec.pes:
            execution = self._wait_queue.popleft()
            execution.started_at = now
            self._active[execution.key] = execution
            started.append(execution.key)
        return started

    # -- completion protocol -------------------------------------------------

    def next_completion(self) -> Optional[tuple[float, int]]:
        """Projected (time, version) of the next finisher, or None if idle."""
        if not self._active:
            self._projected = None
            return None
        if self.spec.scheduler == TIME_SHARED:
            share = self.share_per_task(len(self._active))
            finish_times = {
                key: self._last_update + execution.remaining_mi / share
                for key, execution in self._active.items()
            }
        else:
            speed = self.spec.mips
            finish_times = {
                key: execution.started_at + execution.remaining_mi / speed
                for key, execution in self._active.items()
            }
        earliest = min(finish_times.values())
        finishers = [key for key, t in finish_times.items() if t == earliest]
        self._projected = (earliest, finishers)
        return earliest, self.version

    def pop_finished(self, version: int, now: float
                     ) -> Optional[tuple[list[ExecKey], list[ExecKey]]]:
        """Resolve a completion event: (finished keys, newly started keys).

        Returns None when ``version`` is stale (the active set changed after
        the event was scheduled).
        """
        if version != self.version or self._projected is None:
            return None
        projected_time, finishers = self._projected
        assert projected_time == now, "completion event fired off schedule"
        self._advance(now)
        self.version += 1
        for key in finishers:
            self._active[key].remaining_mi = 0.0
            del self._active[key]
        started = self._fill_pes(now)
        return finishers, started

    # -- lifecycle -----------------------------------------------------------

    def destroy(self, force: bool = False) -> list[ExecKey]:
        """Stop the VM; returns the keys of any executions it killed."""
        if self.active_count and not force:
            raise VmBusyError(
                f"vm {self.spec.id} has {self.active_count} active executions")
        killed = list(self._active) + [e.key for e in self._wait_queue]
        self._active.clear()
        self._wait_queue.clear()
        self.version += 1
        self.running = False
        return killed
