"""Acceptance suite: one test per exit criterion, each timed and printed.

Run with ``pytest tests/test_acceptance.py -s`` to see the per-criterion
pass lines.
"""

from __future__ import annotations

import json
import random
import time
from contextlib import contextmanager
from importlib.resources import files
from pathlib import Path

import pytest

from conftest import (
    host_doc,
    make_bundle,
    single_device_topology,
    task_doc,
    vm_doc,
)
from oracles import (
    bfs_distances,
    critical_path_length,
    fcfs_link_times,
    fluid_finish_times,
)
from test_compute import run_submissions

from flowmesh import messages as msg
from flowmesh import policies
from flowmesh.compute import VmSpec
from flowmesh.inputs import RunConfig, parse_topology, parse_workflows, \
    topology_to_json, workflows_to_json
from flowmesh.network import build_routing_tables
from flowmesh.orchestration import COMPLETED, DEADLINE_MISSED, KILLED, PENDING
from flowmesh.scenario import load_bundle, run_bundle
from flowmesh.workflow import validate

DATA = Path(__file__).parent / "data"


def scenario_paths(name):
    base = files("flowmesh") / "scenarios" / name
    return (str(base / "Topology.json"), str(base / "Workflows.json"),
            str(base / "Config.json"))


@contextmanager
def criterion(number: int, description: str, budget_s: float):
    start = time.perf_counter()
    yield
    elapsed = time.perf_counter() - start
    assert elapsed < budget_s, (
        f"criterion {number} took {elapsed:.2f}s, budget {budget_s}s")
    print(f"[acceptance] criterion {number:2d} PASS "
          f"({elapsed:.3f}s < {budget_s:g}s): {description}")


def test_criterion_1_table2_star_scenario_fidelity():
    with criterion(1, "star scenario parses to the published shape", 1.0):
        topology_path, workflows_path, config_path = scenario_paths(
            "table2_star")
        bundle = load_bundle(topology_path, workflows_path, config_path)
        assert len(bundle.topology.devices) == 1
        device = bundle.topology.devices[0]
        assert device.vm_allocation_policy == "simple"
        assert len(device.hosts) == 3
        for host in device.hosts:
            assert host.pes == 1
            assert host.mips_per_pe == 1000.0
            assert host.ram_mb == 512.0
            assert host.bw_mbps == 1024.0
            assert host.pe_provisioner == "simple"
            assert host.ram_provisioner == "simple"
            assert host.bw_provisioner == "simple"
        assert len(bundle.vms) == 3
        for vm in bundle.vms:
            assert vm.image_size_mb == 10000.0
            assert vm.ram_mb == 512.0
            assert vm.mips == 1000.0
            assert vm.pes == 1
            assert vm.scheduler == "time-shared"


def test_criterion_2_table3_linear_scenario_fidelity():
    with criterion(2, "linear scenario: 8 devices, 7 links, BFS routes", 1.0):
        topology_path, workflows_path, config_path = scenario_paths(
            "table3_linear")
        bundle = load_bundle(topology_path, workflows_path, config_path)
        assert len(bundle.topology.devices) == 8
        assert len(bundle.topology.links) == 7
        assert len(bundle.vms) == 8
        table = build_routing_tables(bundle.topology)
        adjacency = {d: bundle.topology.neighbors(d)
                     for d in bundle.topology.device_ids()}
        for source in range(8):
            dist_from = bfs_distances(adjacency, source)
            for destination in range(8):
                if source == destination:
                    continue
                dist_to = bfs_distances(adjacency, destination)
                best = min(n for n in adjacency[source]
                           if dist_to[n] == dist_from[destination] - 1)
                assert table.next_hop(source, destination) == best
                assert len(table.path(source, destination)) == \
                    dist_from[destination]


def test_criterion_3_fluid_scheduler_oracle():
    with criterion(3, "200 randomized schedules match the fluid oracle", 10.0):
        rng = random.Random(2024)
        for trial in range(200):
            n_vms = rng.randint(1, 4)
            specs = [VmSpec(id=vm_id,
                            mips=float(rng.choice([250, 500, 1000, 2000])),
                            pes=rng.randint(1, 3), ram_mb=1.0, bw_mbps=1.0,
                            image_size_mb=1.0)
                     for vm_id in range(n_vms)]
            submissions = [(round(rng.uniform(0, 4), 3), rng.randrange(n_vms),
                            f"{trial}:{index}",
                            round(rng.uniform(50, 4000), 3))
                           for index in range(rng.randint(1, 10))]
            harness = run_submissions(specs, submissions)
            for spec in specs:
                mine = [(t, key, length)
                        for t, vm_id, key, length in submissions
                        if vm_id == spec.id]
                for key, finish in fluid_finish_times(
                        spec.pes, spec.mips, mine).items():
                    assert harness.finished[key] == pytest.approx(
                        finish, rel=1e-9)


def _random_dag_workflow(rng, n, workflow_id="dag"):
    tasks = []
    inputs_of = {i: [] for i in range(n)}
    for i in range(1, n):
        for parent in rng.sample(range(i), rng.randint(0, min(i, 3))):
            inputs_of[i].append(f"e{parent}_{i}")
    for i in range(n):
        produced = [f"e{i}_{child}" for child in range(i + 1, n)
                    if f"e{i}_{child}" in inputs_of[child]]
        tasks.append(task_doc(i, rng.randint(100, 3000),
                              inputs=[(name, 0.0) for name in inputs_of[i]],
                              outputs=[(name, 0.0) for name in produced]))
    return {"workflow_id": workflow_id, "tasks": tasks}


def test_criterion_4_dependency_makespan_oracles():
    with criterion(4, "100 random DAGs: serialized and critical-path "
                      "makespans", 10.0):
        rng = random.Random(4096)
        for _ in range(100):
            n = rng.randint(1, 15)
            workflow_doc = _random_dag_workflow(rng, n)
            total_mi = sum(t["runtime"] for t in workflow_doc["tasks"])

            # one time-shared VM: work conservation serializes everything
            report, _ = run_bundle(make_bundle(
                single_device_topology(n_vms=1),
                {"workflows": [workflow_doc]}))
            makespan = report.workflows["dag"].makespan
            assert makespan == pytest.approx(total_mi / 1000.0, rel=1e-9)

            # one space-shared VM per task: makespan is the critical path
            topology = single_device_topology(n_vms=n, host_pes=1,
                                              scheduler="space-shared")
            report, _ = run_bundle(make_bundle(
                topology, {"workflows": [workflow_doc]}))
            lengths = {t["id"]: float(t["runtime"])
                       for t in workflow_doc["tasks"]}
            parents = {
                t["id"]: {int(f["name"].split("_")[0][1:])
                          for f in t["input_files"]}
                for t in workflow_doc["tasks"]}
            expected = critical_path_length(lengths, parents, 1000.0)
            assert report.workflows["dag"].makespan == pytest.approx(
                expected, rel=1e-9)


def test_criterion_5_fcfs_link_property():
    with criterion(5, "100 randomized packet schedules: FCFS, no idling, "
                      "oracle times", 5.0):
        from test_network import Collector, build_net, graph, send_at
        rng = random.Random(515)
        for _ in range(100):
            bandwidth = float(rng.choice([250, 500, 1000]))
            latency = rng.choice([0.0, 0.01, 0.1])
            topology = graph([(0, 1, bandwidth, latency)])
            sim, fabric, devices, collector = build_net(topology)
            sends = [(round(rng.uniform(0, 3), 3),
                      round(rng.uniform(1, 400), 3), index)
                     for index in range(rng.randint(1, 20))]
            sends.sort(key=lambda s: s[0])  # enqueue order = arrival order
            for send_time, size, index in sends:
                send_at(sim, fabric, devices, collector, 0, 1, size,
                        send_time, index)
            sim.run()
            service = {}
            for record in sim.entity(0).sink.records:
                if record.kind == "packet-hop":
                    packet_id = int(record.subject.split(":")[1])
                    detail = dict(part.split("=") for part
                                  in record.detail.split(";"))
                    service[packet_id] = float(detail["service"])
            expected = fcfs_link_times([(t, s) for t, s, _ in sends],
                                       bandwidth, latency)
            previous_end = None
            # packets were created in enqueue order, so the fabric packet id
            # equals the position in the sorted send list
            for position, ((send_time, size, index),
                           (svc, delivery)) in enumerate(zip(sends, expected)):
                engine_service = service[position]
                assert engine_service == pytest.approx(svc, rel=1e-9,
                                                       abs=1e-12)
                assert collector.deliveries[index] == pytest.approx(
                    delivery, rel=1e-9, abs=1e-12)
                # work conservation: serve the instant work is available
                floor = send_time if previous_end is None \
                    else max(send_time, previous_end)
                assert engine_service == pytest.approx(floor, rel=1e-9,
                                                       abs=1e-12)
                previous_end = engine_service + size / bandwidth
            # service order equals arrival (enqueue) order
            ordered_ids = [packet_id for packet_id, _ in
                           sorted(service.items(), key=lambda kv: (kv[1],
                                                                   kv[0]))]
            assert ordered_ids == sorted(ordered_ids)


def test_criterion_6_determinism_montage(tmp_path):
    with criterion(6, "montage x2 with seed 42: byte-identical traces", 5.0):
        topology_path, workflows_path, config_path = scenario_paths("montage")
        texts = []
        for index in range(2):
            bundle = load_bundle(topology_path, workflows_path, config_path)
            assert bundle.config.seed == 42
            assert sum(len(w.tasks) for w in bundle.workflows) >= 25
            assert any(t.selectivity.probability == 0.9
                       for w in bundle.workflows for t in w.tasks)
            trace_path = tmp_path / f"trace{index}.csv"
            run_bundle(bundle, trace_path=trace_path)
            texts.append(trace_path.read_bytes())
        assert texts[0] == texts[1]


class _PinnedPolicy(policies.SchedulingPolicy):
    """Round-robin within a fixed per-workflow VM subset."""

    name = "pinned"

    def __init__(self, mapping):
        self.mapping = {key: list(vms) for key, vms in mapping.items()}
        self._cursors = {}

    def decide(self, ready, vms, ctx):
        running = {vm.vm_id for vm in vms}
        out = []
        for view in ready:
            pool = self.mapping[view.key.workflow_id]
            cursor = self._cursors.get(view.key.workflow_id, 0)
            vm_id = pool[cursor % len(pool)]
            if vm_id in running:
                out.append((view.key, vm_id))
                self._cursors[view.key.workflow_id] = cursor + 1
        return out


def _isolation_setup():
    # hub 0 with four leaves; workflow a pinned to devices 1,2 (vms 0,1),
    # workflow b pinned to devices 3,4 (vms 2,3): disjoint link directions
    devices = [{"id": 0,
                "neighbors": [{"id": i, "bandwidth_mbps": 500,
                               "latency_s": 0.01} for i in (1, 2, 3, 4)],
                "hosts": [host_doc(0)]}]
    for i in (1, 2, 3, 4):
        devices.append({"id": i,
                        "neighbors": [{"id": 0, "bandwidth_mbps": 500,
                                       "latency_s": 0.01}],
                        "hosts": [host_doc(0)]})
    topology = {"fog_devices": devices,
                "vms": [vm_doc(0, device_id=1), vm_doc(1, device_id=2),
                        vm_doc(2, device_id=3), vm_doc(3, device_id=4)]}
    workflow_a = {"workflow_id": "a", "tasks": [
        task_doc(0, 800, outputs=[("a0", 40.0)]),
        task_doc(1, 1200, inputs=[("a0", 40.0)], outputs=[("a1", 25.0)]),
        task_doc(2, 600, inputs=[("a0", 40.0)]),
        task_doc(3, 900, inputs=[("a1", 25.0)]),
    ]}
    workflow_b = {"workflow_id": "b", "tasks": [
        task_doc(0, 1500, outputs=[("b0", 60.0)]),
        task_doc(1, 700, inputs=[("b0", 60.0)], outputs=[("b1", 10.0)]),
        task_doc(2, 400, inputs=[("b1", 10.0)]),
    ]}
    return topology, workflow_a, workflow_b


def test_criterion_7_concurrent_workflow_isolation():
    with criterion(7, "disjoint pinned workflows: joint == solo makespans",
                   5.0):
        topology, workflow_a, workflow_b = _isolation_setup()
        mapping = {"a": [0, 1], "b": [2, 3]}
        policies.register_scheduler("pinned", lambda: _PinnedPolicy(mapping))

        def makespans(workflow_docs):
            config = RunConfig(scheduler_name="pinned")
            bundle = make_bundle(topology, {"workflows": workflow_docs},
                                 config)
            report, _ = run_bundle(bundle)
            assert all(r["status"] == COMPLETED for r in report.tasks)
            return {wf_id: s.makespan
                    for wf_id, s in report.workflows.items()}

        joint = makespans([workflow_a, workflow_b])
        solo_a = makespans([workflow_a])
        solo_b = makespans([workflow_b])
        assert joint["a"] == pytest.approx(solo_a["a"], rel=1e-9)
        assert joint["b"] == pytest.approx(solo_b["b"], rel=1e-9)


def test_criterion_8_deadline_policy_matrix():
    with criterion(8, "deadline matrix on the diamond produces exact "
                      "statuses", 1.0):
        workflows = {"workflows": [{"workflow_id": "d", "tasks": [
            task_doc(0, 1000, outputs=[("a", 0.0)]),
            task_doc(1, 1000, inputs=[("a", 0.0)], outputs=[("b", 0.0)],
                     deadline=1.5),
            task_doc(2, 1000, inputs=[("a", 0.0)], outputs=[("c", 0.0)]),
            task_doc(3, 1000, inputs=[("b", 0.0), ("c", 0.0)]),
        ]}]}
        expected = {
            "kill": {0: COMPLETED, 1: DEADLINE_MISSED, 2: COMPLETED,
                     3: PENDING},
            "continue": {0: COMPLETED, 1: COMPLETED, 2: COMPLETED,
                         3: COMPLETED},
            "drop-descendants": {0: COMPLETED, 1: DEADLINE_MISSED,
                                 2: COMPLETED, 3: KILLED},
        }
        for policy, statuses in expected.items():
            bundle = make_bundle(single_device_topology(n_vms=3), workflows,
                                 RunConfig(deadline_policy=policy))
            report, _ = run_bundle(bundle)
            got = {r["task_id"]: r["status"] for r in report.tasks}
            assert got == statuses, f"policy {policy}"
            if policy == "kill":
                missed = [r for r in report.tasks if r["task_id"] == 1][0]
                assert missed["exec_end"] is None  # no completion record
            if policy == "continue":
                flagged = [r for r in report.tasks if r["task_id"] == 1][0]
                assert flagged["deadline_violation"] is True


def test_criterion_9_ensemble_completed_count():
    with criterion(9, "two-fast-one-slow ensemble counts 2 completions", 1.0):
        workflows = {
            "workflows": [
                {"workflow_id": "fast1", "tasks": [task_doc(0, 500)]},
                {"workflow_id": "fast2", "tasks": [task_doc(0, 500)]},
                {"workflow_id": "slow", "tasks": [task_doc(0, 5000)]},
            ],
            "ensembles": [{"ensemble_id": "e", "deadline": 3.0,
                           "workflow_ids": ["fast1", "fast2", "slow"]}],
        }
        bundle = make_bundle(single_device_topology(n_vms=1), workflows)
        report, _ = run_bundle(bundle)
        summary = report.ensembles[0]
        assert summary.total == 3
        assert summary.completed_count == 2
        assert summary.violations == ["slow"]


def test_criterion_10_golden_documents_round_trip():
    with criterion(10, "figure-style documents parse verbatim and "
                       "round-trip", 1.0):
        workflows_doc = json.loads(
            (DATA / "fig2_workflows.json").read_text())
        workflows, ensembles = parse_workflows(workflows_doc)
        assert len(workflows) == 1
        workflow = workflows[0]
        assert [t.id for t in workflow.tasks] == [0, 1]
        validate(workflow)
        assert workflow.task(1).parents == {0}  # task 1 depends on task 0
        reparsed, _ = parse_workflows(
            json.loads(json.dumps(workflows_to_json(workflows, ensembles))))
        fresh, _ = parse_workflows(workflows_doc)
        assert reparsed == fresh

        topology_doc = json.loads((DATA / "fig3_topology.json").read_text())
        topology, vms = parse_topology(topology_doc)
        assert topology.device_ids() == [0, 1]
        assert len(topology.links) == 1
        assert len(vms) == 2
        topology2, vms2 = parse_topology(
            json.loads(json.dumps(topology_to_json(topology, vms))))
        assert topology2 == topology
        assert vms2 == vms
