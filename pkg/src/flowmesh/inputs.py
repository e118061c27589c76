"""Parsers and serializers for the three input documents.

Workflows.json and Topology.json follow the minimal figure-style layout and
extend it only with optional, explicitly-defaulted fields; a document using
just the core fields parses unchanged. In strict mode (the default) unknown
fields are rejected with their JSON path; otherwise they are warned about.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Any, Optional

from .compute import HostSpec, VmSpec
from .errors import SchemaError
from .network import (
    DEFAULT_LINK_BANDWIDTH_MBPS,
    DeviceSpec,
    LinkSpec,
    Topology,
)
from .workflow import (
    EMIT_ALL,
    FRACTIONAL,
    PERIODIC,
    SINGLE_SHOT,
    DataFile,
    Ensemble,
    Execution,
    Selectivity,
    Task,
    Workflow,
)

logger = logging.getLogger(__name__)


@dataclass
class RunConfig:
    """Parsed Config.json with every default made explicit."""

    seed: int = 0
    horizon: Optional[float] = None
    deadline_policy: str = "continue"
    scheduler_name: str = "round-robin"
    scheduler_params: dict = field(default_factory=dict)
    provisioner_name: str = "static"
    provisioner_params: dict = field(default_factory=dict)
    control_message_mb: float = 0.0
    vm_boot_delay_s: float = 0.0
    strict_parsing: bool = True
    broker_device_id: Optional[int] = None
    data_origin_device_id: Optional[int] = None
    scheduler_timer_s: Optional[float] = None


def _as_obj(document: str | dict, what: str) -> dict:
    if isinstance(document, str):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise SchemaError(what, f"not valid JSON: {exc}") from None
    if not isinstance(document, dict):
        raise SchemaError(what, "root must be a JSON object")
    return document


def _check_fields(obj: dict, known: set[str], path: str, strict: bool) -> None:
    for key in obj:
        if key not in known:
            if strict:
                raise SchemaError(f"{path}.{key}", "unknown field")
            logger.warning("%s.%s: unknown field ignored", path, key)


def _require(obj: dict, key: str, path: str) -> Any:
    if key not in obj:
        raise SchemaError(f"{path}.{key}", "missing required field")
    return obj[key]


def _number(value: Any, path: str, minimum: float | None = None,
            strict_min: bool = False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(path, f"expected a number, got {value!r}")
    value = float(value)
    if minimum is not None:
        if strict_min and value <= minimum:
            raise SchemaError(path, f"must be > {minimum}, got {value}")
        if not strict_min and value < minimum:
            raise SchemaError(path, f"must be >= {minimum}, got {value}")
    return value


def _integer(value: Any, path: str, minimum: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaError(path, f"expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise SchemaError(path, f"must be >= {minimum}, got {value}")
    return value


# --- Workflows.json ---------------------------------------------------------

_TASK_FIELDS = {"id", "runtime", "input_files", "output_files", "entry_time",
                "deadline", "selectivity", "execution", "parents"}
_WORKFLOW_FIELDS = {"workflow_id", "deadline", "budget", "tasks"}
_ENSEMBLE_FIELDS = {"ensemble_id", "workflow_ids", "deadline", "budget"}


def _parse_files(items: Any, path: str) -> tuple[DataFile, ...]:
    if not isinstance(items, list):
        raise SchemaError(path, "expected an array of files")
    files = []
    for index, item in enumerate(items):
        file_path = f"{path}[{index}]"
        if not isinstance(item, dict):
            raise SchemaError(file_path, "expected a file object")
        name = _require(item, "name", file_path)
        if not isinstance(name, str) or not name:
            raise SchemaError(f"{file_path}.name", "expected a non-empty string")
        size = _number(_require(item, "size", file_path),
                       f"{file_path}.size", minimum=0.0)
        files.append(DataFile(name, size))
    return tuple(files)


def _parse_selectivity(value: Any, path: str) -> Selectivity:
    if value == EMIT_ALL:
        return Selectivity(EMIT_ALL)
    if isinstance(value, dict) and set(value) == {FRACTIONAL}:
        body = value[FRACTIONAL]
        if not isinstance(body, dict):
            raise SchemaError(f"{path}.fractional", "expected an object")
        p = _number(_require(body, "probability", f"{path}.fractional"),
                    f"{path}.fractional.probability", minimum=0.0)
        if p > 1.0:
            raise SchemaError(f"{path}.fractional.probability",
                              f"must be <= 1, got {p}")
        return Selectivity(FRACTIONAL, p)
    raise SchemaError(path, f"expected 'all' or {{'fractional': ...}}, "
                            f"got {value!r}")


def _parse_execution(value: Any, path: str) -> Execution:
    if value == SINGLE_SHOT:
        return Execution(SINGLE_SHOT)
    if isinstance(value, dict) and set(value) == {PERIODIC}:
        body = value[PERIODIC]
        if not isinstance(body, dict):
            raise SchemaError(f"{path}.periodic", "expected an object")
        _check_fields(body, {"interval", "repetitions"}, f"{path}.periodic",
                      strict=True)
        interval = _number(_require(body, "interval", f"{path}.periodic"),
                           f"{path}.periodic.interval", minimum=0.0,
                           strict_min=True)
        repetitions = None
        if "repetitions" in body:
            repetitions = _integer(body["repetitions"],
                                   f"{path}.periodic.repetitions", minimum=0)
        return Execution(PERIODIC, interval, repetitions)
    raise SchemaError(path, f"expected 'single-shot' or {{'periodic': ...}}, "
                            f"got {value!r}")


def _parse_task(obj: Any, workflow_id: str, path: str, strict: bool) -> Task:
    if not isinstance(obj, dict):
        raise SchemaError(path, "expected a task object")
    _check_fields(obj, _TASK_FIELDS, path, strict)
    task_id = _integer(_require(obj, "id", path), f"{path}.id", minimum=0)
    runtime = _number(_require(obj, "runtime", path), f"{path}.runtime",
                      minimum=0.0, strict_min=True)
    inputs = _parse_files(obj.get("input_files", []), f"{path}.input_files")
    outputs = _parse_files(obj.get("output_files", []), f"{path}.output_files")
    entry_time = _number(obj.get("entry_time", 0.0), f"{path}.entry_time",
                         minimum=0.0)
    deadline = None
    if obj.get("deadline") is not None:
        deadline = _number(obj["deadline"], f"{path}.deadline", minimum=0.0)
    selectivity = _parse_selectivity(obj.get("selectivity", EMIT_ALL),
                                     f"{path}.selectivity")
    execution = _parse_execution(obj.get("execution", SINGLE_SHOT),
                                 f"{path}.execution")
    explicit_parents = None
    if "parents" in obj:
        parents_raw = obj["parents"]
        if not isinstance(parents_raw, list):
            raise SchemaError(f"{path}.parents", "expected an array of ids")
        explicit_parents = frozenset(
            _integer(p, f"{path}.parents[{i}]", minimum=0)
            for i, p in enumerate(parents_raw))
    return Task(id=task_id, workflow_id=workflow_id, runtime_mi=runtime,
                inputs=inputs, outputs=outputs, entry_time=entry_time,
                deadline=deadline, selectivity=selectivity,
                execution=execution, explicit_parents=explicit_parents)


def parse_workflows(document: str | dict, strict: bool = True
                    ) -> tuple[list[Workflow], list[Ensemble]]:
    """Parse a Workflows.json document into workflows and ensembles."""
    obj = _as_obj(document, "workflows-document")
    _check_fields(obj, {"workflows", "ensembles"}, "$", strict)
    raw_workflows = _require(obj, "workflows", "$")
    if not isinstance(raw_workflows, list):
        raise SchemaError("$.workflows", "expected an array")

    workflows = []
    seen_ids: set[str] = set()
    for index, raw in enumerate(raw_workflows):
        path = f"$.workflows[{index}]"
        if not isinstance(raw, dict):
            raise SchemaError(path, "expected a workflow object")
        _check_fields(raw, _WORKFLOW_FIELDS, path, strict)
        workflow_id = str(_require(raw, "workflow_id", path))
        if workflow_id in seen_ids:
            raise SchemaError(f"{path}.workflow_id",
                              f"duplicate workflow id '{workflow_id}'")
        seen_ids.add(workflow_id)
        deadline = None
        if raw.get("deadline") is not None:
            deadline = _number(raw["deadline"], f"{path}.deadline", minimum=0.0)
        budget = None
        if raw.get("budget") is not None:
            budget = _number(raw["budget"], f"{path}.budget", minimum=0.0)
        raw_tasks = _require(raw, "tasks", path)
        if not isinstance(raw_tasks, list):
            raise SchemaError(f"{path}.tasks", "expected an array")
        tasks = [_parse_task(t, workflow_id, f"{path}.tasks[{i}]", strict)
                 for i, t in enumerate(raw_tasks)]
        workflows.append(Workflow(workflow_id, tasks, deadline, budget))

    ensembles = []
    for index, raw in enumerate(obj.get("ensembles", [])):
        path = f"$.ensembles[{index}]"
        if not isinstance(raw, dict):
            raise SchemaError(path, "expected an ensemble object")
        _check_fields(raw, _ENSEMBLE_FIELDS, path, strict)
        ensemble_id = str(_require(raw, "ensemble_id", path))
        member_ids = _require(raw, "workflow_ids", path)
        if not isinstance(member_ids, list):
            raise SchemaError(f"{path}.workflow_ids", "expected an array")
        members = [str(m) for m in member_ids]
        if len(set(members)) != len(members):
            raise SchemaError(f"{path}.workflow_ids", "duplicate member ids")
        for member in members:
            if member not in seen_ids:
                raise SchemaError(f"{path}.workflow_ids",
                                  f"unknown workflow '{member}'")
        deadline = None
        if raw.get("deadline") is not None:
            deadline = _number(raw["deadline"], f"{path}.deadline", minimum=0.0)
        budget = None
        if raw.get("budget") is not None:
            budget = _number(raw["budget"], f"{path}.budget", minimum=0.0)
        ensembles.append(Ensemble(ensemble_id, members, deadline, budget))
    return workflows, ensembles


def workflows_to_json(workflows: list[Workflow],
                      ensembles: list[Ensemble] | None = None) -> dict:
    """Serialize back to the Workflows.json layout (defaults omitted)."""
    out_workflows = []
    for workflow in workflows:
        tasks = []
        for task in workflow.tasks:
            entry: dict[str, Any] = {
                "id": task.id,
                "runtime": task.runtime_mi,
                "input_files": [{"name": f.name, "size": f.size_mb}
                                for f in task.inputs],
                "output_files": [{"name": f.name, "size": f.size_mb}
                                 for f in task.outputs],
            }
            if task.entry_time:
                entry["entry_time"] = task.entry_time
            if task.deadline is not None:
                entry["deadline"] = task.deadline
            if task.selectivity.kind != EMIT_ALL:
                entry["selectivity"] = {
                    FRACTIONAL: {"probability": task.selectivity.probability}}
            if task.execution.kind != SINGLE_SHOT:
                periodic: dict[str, Any] = {"interval": task.execution.interval}
                if task.execution.repetitions is not None:
                    periodic["repetitions"] = task.execution.repetitions
                entry["execution"] = {PERIODIC: periodic}
            if task.explicit_parents is not None:
                entry["parents"] = sorted(task.explicit_parents)
            tasks.append(entry)
        wf_entry: dict[str, Any] = {"workflow_id": workflow.workflow_id,
                                    "tasks": tasks}
        if workflow.deadline is not None:
            wf_entry["deadline"] = workflow.deadline
        if workflow.budget is not None:
            wf_entry["budget"] = workflow.budget
        out_workflows.append(wf_entry)
    out: dict[str, Any] = {"workflows": out_workflows}
    if ensembles:
        out["ensembles"] = [
            {"ensemble_id": e.ensemble_id, "workflow_ids": list(e.workflow_ids),
             **({"deadline": e.deadline} if e.deadline is not None else {}),
             **({"budget": e.budget} if e.budget is not None else {})}
            for e in ensembles
        ]
    return out


# --- Topology.json ----------------------------------------------------------

_DEVICE_FIELDS = {"id", "neighbors", "hosts", "vm_allocation_policy"}
_NEIGHBOR_FIELDS = {"id", "bandwidth_mbps", "latency_s"}
_HOST_FIELDS = {"id", "ram", "bw", "storage", "pes",
                "pe_provisioner", "ram_provisioner", "bw_provisioner"}
_VM_FIELDS = {"id", "mips", "pes", "ram", "bw", "size", "device_id", "scheduler"}
_ROUTE_FIELDS = {"src", "dst", "next_hop"}

_PROVISIONER_KINDS = {"simple"}
_SCHEDULER_KINDS = {"time-shared", "space-shared"}


def _parse_host(obj: Any, path: str, strict: bool) -> HostSpec:
    if not isinstance(obj, dict):
        raise SchemaError(path, "expected a host object")
    _check_fields(obj, _HOST_FIELDS, path, strict)
    host_id = _integer(_require(obj, "id", path), f"{path}.id", minimum=0)
    raw_pes = _require(obj, "pes", path)
    if not isinstance(raw_pes, list) or not raw_pes:
        raise SchemaError(f"{path}.pes", "expected a non-empty array")
    mips_values = []
    for index, pe in enumerate(raw_pes):
        pe_path = f"{path}.pes[{index}]"
        if not isinstance(pe, dict):
            raise SchemaError(pe_path, "expected a processing-core object")
        _check_fields(pe, {"mips"}, pe_path, strict)
        mips_values.append(_number(_require(pe, "mips", pe_path),
                                   f"{pe_path}.mips", minimum=0.0,
                                   strict_min=True))
    if len(set(mips_values)) > 1:
        raise SchemaError(f"{path}.pes",
                          "heterogeneous core speeds within one host are "
                          "not supported")
    for prov_key in ("pe_provisioner", "ram_provisioner", "bw_provisioner"):
        kind = obj.get(prov_key, "simple")
        if kind not in _PROVISIONER_KINDS:
            raise SchemaError(f"{path}.{prov_key}",
                              f"unknown provisioner '{kind}'")
    return HostSpec(
        id=host_id, pes=len(raw_pes), mips_per_pe=mips_values[0],
        ram_mb=_number(obj.get("ram", 0.0), f"{path}.ram", minimum=0.0),
        bw_mbps=_number(obj.get("bw", 0.0), f"{path}.bw", minimum=0.0),
        storage_mb=_number(obj.get("storage", 0.0), f"{path}.storage",
                           minimum=0.0),
        pe_provisioner=obj.get("pe_provisioner", "simple"),
        ram_provisioner=obj.get("ram_provisioner", "simple"),
        bw_provisioner=obj.get("bw_provisioner", "simple"))


def parse_topology(document: str | dict, strict: bool = True
                   ) -> tuple[Topology, list[VmSpec]]:
    """Parse a Topology.json document into a device graph and a VM list."""
    obj = _as_obj(document, "topology-document")
    _check_fields(obj, {"fog_devices", "vms", "routes"}, "$", strict)
    raw_devices = _require(obj, "fog_devices", "$")
    if not isinstance(raw_devices, list):
        raise SchemaError("$.fog_devices", "expected an array")

    devices: dict[int, DeviceSpec] = {}
    neighbor_attrs: dict[tuple[int, int], tuple[Optional[float], Optional[float]]] = {}
    declared: dict[int, set[int]] = {}
    for index, raw in enumerate(raw_devices):
        path = f"$.fog_devices[{index}]"
        if not isinstance(raw, dict):
            raise SchemaError(path, "expected a device object")
        _check_fields(raw, _DEVICE_FIELDS, path, strict)
        device_id = _integer(_require(raw, "id", path), f"{path}.id", minimum=0)
        if device_id in devices:
            raise SchemaError(f"{path}.id", f"duplicate device id {device_id}")
        policy = raw.get("vm_allocation_policy", "simple")
        if policy != "simple":
            raise SchemaError(f"{path}.vm_allocation_policy",
                              f"unknown policy '{policy}'")
        hosts = []
        host_ids: set[int] = set()
        for host_index, raw_host in enumerate(raw.get("hosts", [])):
            host = _parse_host(raw_host, f"{path}.hosts[{host_index}]", strict)
            if host.id in host_ids:
                raise SchemaError(f"{path}.hosts[{host_index}].id",
                                  f"duplicate host id {host.id}")
            host_ids.add(host.id)
            hosts.append(host)
        devices[device_id] = DeviceSpec(device_id, tuple(hosts), policy)

        neighbor_ids: set[int] = set()
        for n_index, raw_neighbor in enumerate(raw.get("neighbors", [])):
            n_path = f"{path}.neighbors[{n_index}]"
            if isinstance(raw_neighbor, int) and not isinstance(raw_neighbor, bool):
                neighbor_id, bandwidth, latency = raw_neighbor, None, None
            elif isinstance(raw_neighbor, dict):
                _check_fields(raw_neighbor, _NEIGHBOR_FIELDS, n_path, strict)
                neighbor_id = _integer(_require(raw_neighbor, "id", n_path),
                                       f"{n_path}.id", minimum=0)
                bandwidth = latency = None
                if raw_neighbor.get("bandwidth_mbps") is not None:
                    bandwidth = _number(raw_neighbor["bandwidth_mbps"],
                                        f"{n_path}.bandwidth_mbps",
                                        minimum=0.0, strict_min=True)
                if raw_neighbor.get("latency_s") is not None:
                    latency = _number(raw_neighbor["latency_s"],
                                      f"{n_path}.latency_s", minimum=0.0)
            else:
                raise SchemaError(n_path, "expected a neighbor id or object")
            if neighbor_id == device_id:
                raise SchemaError(n_path, "device cannot neighbor itself")
            if neighbor_id in neighbor_ids:
                raise SchemaError(n_path, f"duplicate neighbor {neighbor_id}")
            neighbor_ids.add(neighbor_id)
            neighbor_attrs[(device_id, neighbor_id)] = (bandwidth, latency)
        declared[device_id] = neighbor_ids

    links: list[LinkSpec] = []
    for device_id in sorted(declared):
        for neighbor_id in sorted(declared[device_id]):
            if neighbor_id not in devices:
                raise SchemaError(
                    "$.fog_devices",
                    f"device {device_id} lists unknown neighbor {neighbor_id}")
            if device_id not in declared.get(neighbor_id, set()):
                raise SchemaError(
                    "$.fog_devices",
                    f"asymmetric neighbors: {device_id} lists {neighbor_id} "
                    f"but not vice versa")
            if device_id > neighbor_id:
                continue  # handle each undirected pair once, from the low end
            fwd = neighbor_attrs[(device_id, neighbor_id)]
            rev = neighbor_attrs[(neighbor_id, device_id)]
            merged = []
            for a, b, what in ((fwd[0], rev[0], "bandwidth_mbps"),
                               (fwd[1], rev[1], "latency_s")):
                if a is not None and b is not None and a != b:
                    raise SchemaError(
                        "$.fog_devices",
                        f"link {device_id}-{neighbor_id}: conflicting {what} "
                        f"({a} vs {b})")
                merged.append(a if a is not None else b)
            links.append(LinkSpec(
                device_id, neighbor_id,
                merged[0] if merged[0] is not None else DEFAULT_LINK_BANDWIDTH_MBPS,
                merged[1] if merged[1] is not None else 0.0))

    vms: list[VmSpec] = []
    seen_vm_ids: set[int] = set()
    for index, raw in enumerate(obj.get("vms", [])):
        path = f"$.vms[{index}]"
        if not isinstance(raw, dict):
            raise SchemaError(path, "expected a vm object")
        _check_fields(raw, _VM_FIELDS, path, strict)
        vm_id = _integer(_require(raw, "id", path), f"{path}.id", minimum=0)
        if vm_id in seen_vm_ids:
            raise SchemaError(f"{path}.id", f"duplicate vm id {vm_id}")
        seen_vm_ids.add(vm_id)
        device_id = None
        if raw.get("device_id") is not None:
            device_id = _integer(raw["device_id"], f"{path}.device_id",
                                 minimum=0)
            if device_id not in devices:
                raise SchemaError(f"{path}.device_id",
                                  f"unknown device {device_id}")
        scheduler = raw.get("scheduler", "time-shared")
        if scheduler not in _SCHEDULER_KINDS:
            raise SchemaError(f"{path}.scheduler",
                              f"unknown scheduler '{scheduler}'")
        vms.append(VmSpec(
            id=vm_id,
            mips=_number(_require(raw, "mips", path), f"{path}.mips",
                         minimum=0.0, strict_min=True),
            pes=_integer(raw.get("pes", 1), f"{path}.pes", minimum=1),
            ram_mb=_number(raw.get("ram", 0.0), f"{path}.ram", minimum=0.0),
            bw_mbps=_number(raw.get("bw", 0.0), f"{path}.bw", minimum=0.0),
            image_size_mb=_number(raw.get("size", 0.0), f"{path}.size",
                                  minimum=0.0),
            device_id=device_id, scheduler=scheduler))

    overrides: list[tuple[int, int, int]] = []
    for index, raw in enumerate(obj.get("routes", [])):
        path = f"$.routes[{index}]"
        if not isinstance(raw, dict):
            raise SchemaError(path, "expected a route object")
        _check_fields(raw, _ROUTE_FIELDS, path, strict)
        src = _integer(_require(raw, "src", path), f"{path}.src")
        dst = _integer(_require(raw, "dst", path), f"{path}.dst")
        hop = _integer(_require(raw, "next_hop", path), f"{path}.next_hop")
        for ref, what in ((src, "src"), (dst, "dst"), (hop, "next_hop")):
            if ref not in devices:
                raise SchemaError(f"{path}.{what}", f"unknown device {ref}")
        overrides.append((src, dst, hop))

    return Topology(devices, links, overrides), vms


def topology_to_json(topology: Topology, vms: list[VmSpec]) -> dict:
    """Serialize back to the Topology.json layout (defaults omitted)."""
    out_devices = []
    for device_id in topology.device_ids():
        device = topology.devices[device_id]
        neighbors = []
        for neighbor_id in topology.neighbors(device_id):
            link = topology.link_between(device_id, neighbor_id)
            entry: dict[str, Any] = {"id": neighbor_id,
                                     "bandwidth_mbps": link.bandwidth_mbps}
            if link.latency_s:
                entry["latency_s"] = link.latency_s
            neighbors.append(entry)
        hosts = []
        for host in device.hosts:
            hosts.append({
                "id": host.id,
                "ram": host.ram_mb,
                "bw": host.bw_mbps,
                "storage": host.storage_mb,
                "pes": [{"mips": host.mips_per_pe} for _ in range(host.pes)],
            })
        out_devices.append({"id": device_id, "neighbors": neighbors,
                            "hosts": hosts})
    out_vms = []
    for vm in vms:
        entry = {"id": vm.id, "mips": vm.mips, "pes": vm.pes, "ram": vm.ram_mb,
                 "bw": vm.bw_mbps, "size": vm.image_size_mb}
        if vm.device_id is not None:
            entry["device_id"] = vm.device_id
        if vm.scheduler != "time-shared":
            entry["scheduler"] = vm.scheduler
        out_vms.append(entry)
    out: dict[str, Any] = {"fog_devices": out_devices, "vms": out_vms}
    if topology.route_overrides:
        out["routes"] = [{"src": s, "dst": d, "next_hop": h}
                         for s, d, h in topology.route_overrides]
    return out


# --- Config.json -------------------------------------------------------------

_CONFIG_FIELDS = {"seed", "horizon", "deadline_policy", "scheduler",
                  "provisioner", "control_message_mb", "vm_boot_delay_s",
                  "strict_parsing", "broker_device_id",
                  "data_origin_device_id", "scheduler_timer_s"}

_DEADLINE_POLICIES = {"kill", "continue", "drop-descendants"}


def parse_config(document: str | dict, strict: bool = True) -> RunConfig:
    obj = _as_obj(document, "config-document")
    strict = bool(obj.get("strict_parsing", strict))
    _check_fields(obj, _CONFIG_FIELDS, "$", strict)
    config = RunConfig()
    if "seed" in obj:
        config.seed = _integer(obj["seed"], "$.seed")
    if obj.get("horizon") is not None:
        config.horizon = _number(obj["horizon"], "$.horizon", minimum=0.0)
    if "deadline_policy" in obj:
        policy = obj["deadline_policy"]
        if policy not in _DEADLINE_POLICIES:
            raise SchemaError("$.deadline_policy",
                              f"expected one of {sorted(_DEADLINE_POLICIES)}, "
                              f"got {policy!r}")
        config.deadline_policy = policy
    for section, name_attr, params_attr in (
            ("scheduler", "scheduler_name", "scheduler_params"),
            ("provisioner", "provisioner_name", "provisioner_params")):
        if section in obj:
            body = obj[section]
            if not isinstance(body, dict):
                raise SchemaError(f"$.{section}", "expected an object")
            _check_fields(body, {"name", "params"}, f"$.{section}", strict)
            setattr(config, name_attr,
                    str(_require(body, "name", f"$.{section}")))
            params = body.get("params", {})
            if not isinstance(params, dict):
                raise SchemaError(f"$.{section}.params", "expected an object")
            setattr(config, params_attr, params)
    if "control_message_mb" in obj:
        config.control_message_mb = _number(obj["control_message_mb"],
                                            "$.control_message_mb", minimum=0.0)
    if "vm_boot_delay_s" in obj:
        config.vm_boot_delay_s = _number(obj["vm_boot_delay_s"],
                                         "$.vm_boot_delay_s", minimum=0.0)
    config.strict_parsing = strict
    if obj.get("broker_device_id") is not None:
        config.broker_device_id = _integer(obj["broker_device_id"],
                                           "$.broker_device_id", minimum=0)
    if obj.get("data_origin_device_id") is not None:
        config.data_origin_device_id = _integer(obj["data_origin_device_id"],
                                                "$.data_origin_device_id",
                                                minimum=0)
    if obj.get("scheduler_timer_s") is not None:
        config.scheduler_timer_s = _number(obj["scheduler_timer_s"],
                                           "$.scheduler_timer_s", minimum=0.0,
                                           strict_min=True)
    return config
