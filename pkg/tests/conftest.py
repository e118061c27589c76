"""Shared builders for simulation test fixtures."""

from __future__ import annotations

from flowmesh.inputs import RunConfig, parse_topology, parse_workflows
from flowmesh.scenario import ScenarioBundle, validate_bundle


def host_doc(host_id=0, mips=1000.0, pes=1, ram=2048.0, bw=1024.0,
             storage=1_000_000.0):
    return {"id": host_id, "ram": ram, "bw": bw, "storage": storage,
            "pes": [{"mips": mips} for _ in range(pes)]}


def vm_doc(vm_id, device_id=None, mips=1000.0, pes=1, ram=512.0, bw=1000.0,
           size=10000.0, scheduler="time-shared"):
    doc = {"id": vm_id, "mips": mips, "pes": pes, "ram": ram, "bw": bw,
           "size": size, "scheduler": scheduler}
    if device_id is not None:
        doc["device_id"] = device_id
    return doc


def single_device_topology(n_vms=1, n_hosts=None, mips=1000.0, host_pes=1,
                           vm_pes=1, scheduler="time-shared"):
    """One device holding enough hosts for ``n_vms`` single-host VMs."""
    n_hosts = n_vms if n_hosts is None else n_hosts
    return {
        "fog_devices": [{
            "id": 0,
            "neighbors": [],
            "hosts": [host_doc(i, mips=mips, pes=host_pes)
                      for i in range(n_hosts)],
        }],
        "vms": [vm_doc(i, device_id=0, mips=mips, pes=vm_pes,
                       scheduler=scheduler) for i in range(n_vms)],
    }


def chain_topology(n_devices, bandwidth=1000.0, latency=0.0, mips=1000.0,
                   vms_per_device=1):
    devices = []
    vms = []
    vm_id = 0
    for i in range(n_devices):
        neighbors = []
        if i > 0:
            neighbors.append({"id": i - 1, "bandwidth_mbps": bandwidth,
                              "latency_s": latency})
        if i < n_devices - 1:
            neighbors.append({"id": i + 1, "bandwidth_mbps": bandwidth,
                              "latency_s": latency})
        devices.append({"id": i, "neighbors": neighbors,
                        "hosts": [host_doc(0, mips=mips, pes=vms_per_device)]})
        for _ in range(vms_per_device):
            vms.append(vm_doc(vm_id, device_id=i, mips=mips))
            vm_id += 1
    return {"fog_devices": devices, "vms": vms}


def task_doc(task_id, runtime=1000.0, inputs=(), outputs=(), **extra):
    doc = {"id": task_id, "runtime": runtime,
           "input_files": [{"name": n, "size": s} for n, s in inputs],
           "output_files": [{"name": n, "size": s} for n, s in outputs]}
    doc.update(extra)
    return doc


def diamond_workflow(workflow_id="diamond", runtime=1000.0, file_size=0.0,
                     **task_extra):
    """A -> {B, C} -> D, dependencies carried by files."""
    return {"workflow_id": workflow_id, "tasks": [
        task_doc(0, runtime, outputs=[("a", file_size)]),
        task_doc(1, runtime, inputs=[("a", file_size)],
                 outputs=[("b", file_size)], **task_extra),
        task_doc(2, runtime, inputs=[("a", file_size)],
                 outputs=[("c", file_size)]),
        task_doc(3, runtime, inputs=[("b", file_size), ("c", file_size)]),
    ]}


def make_bundle(topology_doc, workflows_doc, config=None) -> ScenarioBundle:
    topology, vms = parse_topology(topology_doc)
    workflows, ensembles = parse_workflows(workflows_doc)
    bundle = ScenarioBundle(topology, vms, workflows, ensembles,
                            config or RunConfig())
    validate_bundle(bundle)
    return bundle
