"""flowmesh: deterministic discrete-event simulation of scientific workflows
on distributed infrastructures with arbitrary graph network topologies."""

from .compute import HostSpec, VmRuntime, VmSpec
from .errors import SimulationError
from .inputs import RunConfig, parse_config, parse_topology, parse_workflows
from .kernel import Entity, SimEvent, Simulator
from .messages import RoundKey
from .network import (
    LinkSpec,
    NetworkFabric,
    Packet,
    RoutingTable,
    Topology,
    build_routing_tables,
)
from .report import RunReport
from .scenario import ScenarioBundle, build_simulation, load_bundle, run_bundle
from .trace import TraceSink
from .workflow import DataFile, Ensemble, Task, Workflow, validate

__version__ = "0.1.0"

__all__ = [
    "DataFile",
    "Ensemble",
    "Entity",
    "HostSpec",
    "LinkSpec",
    "NetworkFabric",
    "Packet",
    "RoundKey",
    "RoutingTable",
    "RunConfig",
    "RunReport",
    "ScenarioBundle",
    "SimEvent",
    "SimulationError",
    "Simulator",
    "Task",
    "Topology",
    "TraceSink",
    "VmRuntime",
    "VmSpec",
    "Workflow",
    "build_routing_tables",
    "build_simulation",
    "load_bundle",
    "parse_config",
    "parse_topology",
    "parse_workflows",
    "run_bundle",
    "validate",
]
