"""Exception hierarchy shared across the simulator."""

from __future__ import annotations


class SimulationError(Exception):
    """Base class for every error raised by flowmesh."""


# --- kernel ---------------------------------------------------------------

class PastEventError(SimulationError):
    """An event was scheduled before the current simulation clock."""


class UnknownEntityError(SimulationError):
    """An event targets an entity id that was never registered."""


class AlreadyRunningError(SimulationError):
    """Entity registration was attempted while the event loop is active."""


# --- network --------------------------------------------------------------

class DisconnectedTopologyError(SimulationError):
    """The device graph has at least one unreachable ordered pair."""

    def __init__(self, source: int, destination: int):
        super().__init__(f"no route from device {source} to device {destination}")
        self.source = source
        self.destination = destination


class NoRouteError(SimulationError):
    """A packet was injected for a destination with no routing entry."""


# --- compute --------------------------------------------------------------

class InsufficientCapacityError(SimulationError):
    """A VM could not be placed; ``resource`` names the first failing check."""

    def __init__(self, resource: str, detail: str = ""):
        msg = f"insufficient {resource}" + (f": {detail}" if detail else "")
        super().__init__(msg)
        self.resource = resource


class VmNotRunningError(SimulationError):
    """Work was submitted to a VM that is not in the running state."""


class VmBusyError(SimulationError):
    """A non-forced destroy hit a VM with active task executions."""


# --- workflow / parsing ---------------------------------------------------

class ValidationError(SimulationError):
    """A workflow or scenario failed semantic validation."""


class CycleDetectedError(ValidationError):
    """The task dependency graph is not acyclic; ``witness`` is one cycle."""

    def __init__(self, workflow_id: str, witness: list[int]):
        path = " -> ".join(str(t) for t in witness)
        super().__init__(f"workflow '{workflow_id}' has a dependency cycle: {path}")
        self.workflow_id = workflow_id
        self.witness = witness


class DanglingReferenceError(ValidationError):
    """A parent/child/workflow reference does not resolve."""


class OrphanInputError(ValidationError):
    """An input file's producer is not among the task's declared parents."""


class SchemaError(SimulationError):
    """An input document violates the schema; ``path`` locates the field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class PolicyError(SimulationError):
    """A scheduling policy returned an invalid assignment."""
