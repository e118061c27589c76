"""Fog device entity: hop-by-hop packet forwarding plus local VM execution.

A device owns its hosts and the VMs placed on them. Packets arriving for the
device itself are delivered (their payload event is scheduled); anything else
is forwarded along the routing table. The network and compute planes are
independent: relaying traffic never interferes with task execution.
"""

from __future__ import annotations

import logging

from . import messages as msg
from .compute import Host, VmRuntime, VmSpec, allocate_vm
from .errors import InsufficientCapacityError, VmBusyError
from .kernel import Entity, SimEvent
from .network import NetworkFabric, Packet
from .trace import TraceSink

logger = logging.getLogger(__name__)

_VM_BOOT_DONE = "vm-boot-done"


def _label(key) -> str:
    return key.label() if isinstance(key, msg.RoundKey) else str(key)


class Device(Entity):
    def __init__(self, device_id: int, hosts: list[Host], fabric: NetworkFabric,
                 sink: TraceSink):
        super().__init__(name=f"device:{device_id}")
        self.device_id = device_id
        self.hosts = hosts
        self.fabric = fabric
        self.sink = sink
        self.vms: dict[int, VmRuntime] = {}
        # wired by the scenario builder
        self.broker_eid = -1
        self.device_entities: dict[int, int] = {}
        self.broker_device_id: int | None = None
        self.control_size_mb = 0.0
        self.vm_boot_delay_s = 0.0

    # -- construction-time API ------------------------------------------------

    def create_vm(self, spec: VmSpec) -> VmRuntime:
        """Allocate a VM on the first fitting host (ascending host id)."""
        allocate_vm(spec, self.hosts)
        vm = VmRuntime(spec, self.device_id)
        self.vms[spec.id] = vm
        return vm

    # -- event handling --------------------------------------------------------

    def handle(self, event: SimEvent) -> None:
        payload = event.payload
        if event.tag == msg.PACKET:
            self._on_packet(payload)
        elif event.tag == msg.SEND_PACKET:
            self._on_packet(payload)
        elif event.tag == msg.EXECUTE_TASK:
            self._on_execute(payload)
        elif event.tag == msg.KILL_TASK:
            self._on_kill(payload)
        elif event.tag == msg.VM_COMPLETION:
            self._on_vm_completion(payload)
        elif event.tag == msg.VM_CREATE:
            self._on_vm_create(payload)
        elif event.tag == _VM_BOOT_DONE:
            self._on_vm_boot_done(payload)
        elif event.tag == msg.VM_DESTROY:
            self._on_vm_destroy(payload)
        else:
            logger.warning("device %d: unknown tag %s", self.device_id, event.tag)

    # -- networking -------------------------------------------------------------

    def _on_packet(self, packet: Packet) -> None:
        if packet.final_destination == self.device_id:
            self._deliver(packet)
        else:
            self._forward(packet)

    def _forward(self, packet: Packet) -> None:
        next_hop = self.fabric.routing.next_hop(self.device_id,
                                                packet.final_destination)
        service_start, arrival = self.fabric.enqueue_hop(
            self.device_id, next_hop, packet.size_mb, self.now)
        self.sink.emit(
            self.now, self.name, "packet-hop", f"pkt:{packet.packet_id}",
            f"to={next_hop};size={packet.size_mb!r};service={service_start!r};"
            f"arrival={arrival!r}")
        self.send(self.device_entities[next_hop], arrival - self.now,
                  msg.PACKET, packet)

    def _deliver(self, packet: Packet) -> None:
        self.sink.emit(self.now, self.name, "packet-delivered",
                       f"pkt:{packet.packet_id}", f"origin={packet.origin}")
        delivery = packet.payload
        if isinstance(delivery, msg.Delivery):
            self.send(delivery.entity, 0.0, delivery.tag, delivery.body)

    def notify_broker(self, tag: str, payload) -> None:
        """Control message to the broker: direct unless the broker is placed
        on a device, in which case it traverses the network."""
        if (self.broker_device_id is None
                or self.broker_device_id == self.device_id):
            self.send(self.broker_eid, 0.0, tag, payload)
        else:
            packet = self.fabric.new_packet(
                self.device_id, self.broker_device_id, self.control_size_mb,
                msg.Delivery(self.broker_eid, tag, payload))
            self._on_packet(packet)

    # -- compute ------------------------------------------------------------------

    def _emit_shares(self, vm: VmRuntime) -> None:
        for key, share in vm.current_shares().items():
            self.sink.emit(self.now, self.name, "exec-share", _label(key),
                           f"vm={vm.spec.id};share={share!r}")

    def _reschedule_completion(self, vm: VmRuntime) -> None:
        projected = vm.next_completion()
        if projected is not None:
            completion_time, version = projected
            self.send(self.entity_id, completion_time - self.now,
                      msg.VM_COMPLETION, msg.VmCompletionMsg(vm.spec.id, version))

    def _on_execute(self, message: msg.ExecuteMsg) -> None:
        vm = self.vms[message.vm_id]
        started = vm.submit(message.key, message.length_mi, self.now)
        self.sink.emit(self.now, self.name, "exec-submit", _label(message.key),
                       f"vm={vm.spec.id};length={message.length_mi!r}")
        if started:
            self._mark_started(vm, message.key)
        self._emit_shares(vm)
        self._reschedule_completion(vm)

    def _mark_started(self, vm: VmRuntime, key: msg.RoundKey) -> None:
        self.sink.emit(self.now, self.name, "exec-start", _label(key),
                       f"vm={vm.spec.id}")
        self.notify_broker(msg.TASK_STARTED, msg.ExecuteMsg(vm.spec.id, key))

    def _on_kill(self, message: msg.ExecuteMsg) -> None:
        vm = self.vms.get(message.vm_id)
        if vm is None:
            return
        removed, started = vm.cancel(message.key, self.now)
        if removed:
            self.sink.emit(self.now, self.name, "exec-cancelled",
                           _label(message.key), f"vm={vm.spec.id}")
            for key in started:
                self._mark_started(vm, key)
            self._emit_shares(vm)
            self._reschedule_completion(vm)

    def _on_vm_completion(self, message: msg.VmCompletionMsg) -> None:
        vm = self.vms.get(message.vm_id)
        if vm is None:
            return
        result = vm.pop_finished(message.version, self.now)
        if result is None:
            return  # stale: the active set changed after scheduling
        finished, started = result
        for key in finished:
            self.sink.emit(self.now, self.name, "exec-finish", _label(key),
                           f"vm={vm.spec.id}")
            self.notify_broker(msg.TASK_FINISHED, msg.ExecuteMsg(vm.spec.id, key))
        for key in started:
            self._mark_started(vm, key)
        self._emit_shares(vm)
        self._reschedule_completion(vm)

    # -- VM lifecycle -----------------------------------------------------------------

    def _on_vm_create(self, spec: VmSpec) -> None:
        try:
            self.create_vm(spec)
        except InsufficientCapacityError as exc:
            self.sink.emit(self.now, self.name, "vm-create-failed",
                           f"vm:{spec.id}", str(exc))
            self.notify_broker(msg.VM_CREATE_FAILED,
                               msg.VmLifecycleMsg(spec.id, detail=str(exc)))
            return
        self.sink.emit(self.now, self.name, "vm-create", f"vm:{spec.id}", "")
        # The VM becomes usable once the broker learns of it, after boot.
        self.send(self.entity_id, self.vm_boot_delay_s, _VM_BOOT_DONE, spec.id)

    def _on_vm_boot_done(self, vm_id: int) -> None:
        self.notify_broker(msg.VM_CREATED, msg.VmLifecycleMsg(vm_id))

    def _on_vm_destroy(self, message: msg.DestroyMsg) -> None:
        vm = self.vms.get(message.vm_id)
        if vm is None:
            return
        try:
            killed = vm.destroy(force=message.force)
        except VmBusyError as exc:
            self.notify_broker(msg.VM_DESTROY_FAILED,
                               msg.VmLifecycleMsg(message.vm_id, detail=str(exc)))
            return
        for host in self.hosts:
            host.release(vm.spec)
        del self.vms[message.vm_id]
        self.sink.emit(self.now, self.name, "vm-destroy", f"vm:{message.vm_id}",
                       f"killed={len(killed)}")
        self.notify_broker(msg.VM_DESTROYED,
                           msg.VmLifecycleMsg(message.vm_id, killed=tuple(killed)))
