"""Scenario bundle: parse the three inputs, build a simulation, run it."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .compute import Host, VmSpec
from .device import Device
from .errors import InsufficientCapacityError, ValidationError
from .inputs import RunConfig, parse_config, parse_topology, parse_workflows
from .kernel import Simulator
from .network import NetworkFabric, Topology, build_routing_tables
from .orchestration import Broker, TaskManager, WorkflowEngine, KILLED
from .policies import make_provisioner, make_scheduler
from .report import RunReport, build_report
from .trace import TraceSink
from .workflow import Ensemble, Workflow, validate

logger = logging.getLogger(__name__)


@dataclass
class ScenarioBundle:
    topology: Topology
    vms: list[VmSpec]
    workflows: list[Workflow]
    ensembles: list[Ensemble]
    config: RunConfig


def load_bundle(topology_path: str | Path, workflows_path: str | Path,
                config_path: str | Path | None = None,
                seed_override: Optional[int] = None) -> ScenarioBundle:
    """Parse and cross-validate the three input files."""
    if config_path is not None:
        config = parse_config(Path(config_path).read_text(encoding="utf-8"))
    else:
        config = RunConfig()
    if seed_override is not None:
        config.seed = seed_override
    strict = config.strict_parsing
    topology, vms = parse_topology(
        Path(topology_path).read_text(encoding="utf-8"), strict=strict)
    workflows, ensembles = parse_workflows(
        Path(workflows_path).read_text(encoding="utf-8"), strict=strict)
    bundle = ScenarioBundle(topology, vms, workflows, ensembles, config)
    validate_bundle(bundle)
    return bundle


def validate_bundle(bundle: ScenarioBundle) -> None:
    """Semantic checks spanning the three documents."""
    for workflow in bundle.workflows:
        validate(workflow, strict_orphans=bundle.config.strict_parsing)
    config = bundle.config
    devices = bundle.topology.devices
    if config.broker_device_id is not None \
            and config.broker_device_id not in devices:
        raise ValidationError(
            f"config broker_device_id {config.broker_device_id} "
            f"is not a device")
    if config.data_origin_device_id is not None \
            and config.data_origin_device_id not in devices:
        raise ValidationError(
            f"config data_origin_device_id {config.data_origin_device_id} "
            f"is not a device")
    if config.horizon is None:
        for workflow in bundle.workflows:
            for task in workflow.tasks:
                if (task.is_periodic
                        and task.execution.repetitions is None):
                    raise ValidationError(
                        f"workflow '{workflow.workflow_id}' task {task.id} "
                        f"repeats forever; set a horizon in Config.json")
    # policy names must resolve before the run starts
    make_scheduler(config.scheduler_name, config.scheduler_params)
    make_provisioner(config.provisioner_name, config.provisioner_params)


@dataclass
class BuiltSimulation:
    sim: Simulator
    sink: TraceSink
    fabric: NetworkFabric
    devices: dict[int, Device]
    manager: TaskManager
    engine: WorkflowEngine
    broker: Broker
    bundle: ScenarioBundle = field(repr=False)


def build_simulation(bundle: ScenarioBundle,
                     sink: TraceSink | None = None) -> BuiltSimulation:
    """Construct and wire every entity; place the initial VM fleet."""
    sink = sink if sink is not None else TraceSink()
    config = bundle.config
    routing = build_routing_tables(bundle.topology)
    fabric = NetworkFabric(bundle.topology, routing)
    sim = Simulator()

    devices: dict[int, Device] = {}
    for device_id in bundle.topology.device_ids():
        spec = bundle.topology.devices[device_id]
        device = Device(device_id, [Host(h) for h in spec.hosts], fabric, sink)
        sim.register_entity(device)
        devices[device_id] = device

    manager = TaskManager(bundle.workflows)
    engine = WorkflowEngine(bundle.workflows, config.horizon)
    broker = Broker(bundle.workflows, bundle.ensembles, fabric, sink, config)
    sim.register_entity(manager)
    sim.register_entity(engine)
    sim.register_entity(broker)

    device_entities = {device_id: device.entity_id
                       for device_id, device in devices.items()}
    manager.engine_eid = engine.entity_id
    engine.broker_eid = broker.entity_id
    broker.engine_eid = engine.entity_id
    broker.device_entities = device_entities
    for device in devices.values():
        device.broker_eid = broker.entity_id
        device.device_entities = device_entities
        device.broker_device_id = config.broker_device_id
        device.control_size_mb = config.control_message_mb
        device.vm_boot_delay_s = config.vm_boot_delay_s

    _place_initial_vms(bundle, devices, broker)
    return BuiltSimulation(sim, sink, fabric, devices, manager, engine,
                           broker, bundle)


def _place_initial_vms(bundle: ScenarioBundle, devices: dict[int, Device],
                       broker: Broker) -> None:
    """The topology's VM fleet is part of the initial conditions: placed
    before the clock starts, pinned VMs on their device, the rest first-fit
    in the provisioning policy's preference order."""
    device_ids = bundle.topology.device_ids()
    for spec in bundle.vms:
        order = broker.provisioner.initial_placement_order(spec, device_ids)
        placed = None
        failure: InsufficientCapacityError | None = None
        for device_id in order:
            try:
                devices[device_id].create_vm(spec)
                placed = device_id
                break
            except InsufficientCapacityError as exc:
                failure = exc
        if placed is None:
            raise ValidationError(
                f"vm {spec.id} fits on no candidate device: {failure}")
        broker.add_initial_vm(spec, placed)


def run_bundle(bundle: ScenarioBundle, trace_path: str | Path | None = None
               ) -> tuple[RunReport, TraceSink]:
    """Run a validated bundle to its horizon (or exhaustion) and report."""
    built = build_simulation(bundle)
    sink = built.sink
    config = bundle.config
    sink.emit(0.0, "sim", "run-start", "",
              f"seed={config.seed};scheduler={config.scheduler_name};"
              f"deadline_policy={config.deadline_policy}")
    total_time = built.sim.run(until=config.horizon)
    _finalize(built, total_time)
    sink.emit(total_time, "sim", "run-end", "",
              f"dispatched={built.sim.dispatched_count}")
    report = build_report(built.broker.records, bundle.workflows,
                          bundle.ensembles, built.fabric, total_time)
    if trace_path is not None:
        sink.write(str(trace_path))
    return report, sink


def _finalize(built: BuiltSimulation, total_time: float) -> None:
    """Terminalize rounds that can never run (e.g. a selectivity drop starved
    them of an input); they are reported as killed, not silently pending."""
    engine = built.engine
    broker = built.broker
    for key, record in broker.records.items():
        if record.terminal:
            continue
        reason = engine.is_dead(key)
        if reason is not None:
            record.status = KILLED
            record.kill_reason = reason
            built.sink.emit(total_time, "broker", KILLED, key.label(),
                            f"reason={reason};at=finalize")
