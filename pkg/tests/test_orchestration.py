"""Task release, dependency admission, brokering, deadlines, ensembles."""

from __future__ import annotations

import random

import pytest

from conftest import (
    chain_topology,
    diamond_workflow,
    host_doc,
    make_bundle,
    single_device_topology,
    task_doc,
    vm_doc,
)
from oracles import critical_path_length

from flowmesh import policies
from flowmesh.inputs import RunConfig
from flowmesh.orchestration import (
    COMPLETED,
    DEADLINE_MISSED,
    EXECUTING,
    KILLED,
    PENDING,
    READY,
)
from flowmesh.scenario import run_bundle


def records_by_task(report, workflow_id, round_index=0):
    return {r["task_id"]: r for r in report.tasks
            if r["workflow_id"] == workflow_id and r["round"] == round_index}


def run(topology_doc, workflows_doc, config=None):
    bundle = make_bundle(topology_doc, workflows_doc, config)
    return run_bundle(bundle)


# --- task manager release stream ------------------------------------------------


def test_release_times_follow_entry_times():
    workflows = {"workflows": [{"workflow_id": "w", "tasks": [
        task_doc(0, 100),
        task_doc(1, 100),
        task_doc(2, 100, entry_time=5.0),
    ]}]}
    report, sink = run(single_device_topology(n_vms=1), workflows)
    released = [r for r in sink.records if r.kind == "released"]
    assert [(r.time, r.subject) for r in released] == [
        (0.0, "w:0:0"), (0.0, "w:1:0"), (5.0, "w:2:0")]


def test_entry_time_gates_readiness_beyond_parent_completion():
    workflows = {"workflows": [{"workflow_id": "w", "tasks": [
        task_doc(0, 2000, outputs=[("f", 0.0)]),
        task_doc(1, 1000, inputs=[("f", 0.0)], entry_time=3.5),
    ]}]}
    report, _ = run(single_device_topology(n_vms=1), workflows)
    records = records_by_task(report, "w")
    assert records[0]["exec_end"] == pytest.approx(2.0)
    assert records[1]["ready_time"] == pytest.approx(3.5)
    assert records[1]["exec_start"] == pytest.approx(3.5)


# --- workflow engine admission ------------------------------------------------------


def test_dependent_task_admitted_only_after_parent_completes():
    workflows = {"workflows": [{"workflow_id": "w", "tasks": [
        task_doc(0, 1000, outputs=[("f", 0.0)]),
        task_doc(1, 1000, inputs=[("f", 0.0)]),
    ]}]}
    report, _ = run(single_device_topology(n_vms=2), workflows)
    records = records_by_task(report, "w")
    assert records[0]["ready_time"] == 0.0
    assert records[1]["ready_time"] == records[0]["exec_end"] == 1.0


def test_cross_workflow_completions_never_unblock_other_workflows():
    workflows = {"workflows": [
        {"workflow_id": "a", "tasks": [
            task_doc(0, 500, outputs=[("fa", 0.0)]),
            task_doc(1, 500, inputs=[("fa", 0.0)]),
        ]},
        {"workflow_id": "b", "tasks": [
            task_doc(0, 5000, outputs=[("fb", 0.0)]),
            task_doc(1, 500, inputs=[("fb", 0.0)]),
        ]},
    ]}
    report, _ = run(single_device_topology(n_vms=4), workflows)
    a = records_by_task(report, "a")
    b = records_by_task(report, "b")
    # a:0 completes at 0.5; b:1 must still wait for b:0 at 5.0
    assert a[1]["ready_time"] == pytest.approx(0.5)
    assert b[1]["ready_time"] == pytest.approx(5.0)


# --- broker scheduling cycle ------------------------------------------------------------


def test_single_ready_task_single_vm_assigned_immediately():
    workflows = {"workflows": [{"workflow_id": "w",
                                "tasks": [task_doc(0, 1000)]}]}
    report, _ = run(single_device_topology(n_vms=1), workflows)
    record = records_by_task(report, "w")[0]
    assert record["status"] == COMPLETED
    assert record["schedule_time"] == 0.0
    assert record["input_transfer_spans"] == []
    assert record["exec_end"] == pytest.approx(1.0)


def test_diamond_on_three_vm_star_makespan():
    report, _ = run(single_device_topology(n_vms=3),
                    {"workflows": [diamond_workflow()]})
    assert report.workflows["diamond"].makespan == pytest.approx(3.0)
    records = records_by_task(report, "diamond")
    assert {records[1]["assigned_vm"], records[2]["assigned_vm"]} == {1, 2}


def test_child_on_other_device_waits_for_transfer():
    topology = chain_topology(2, bandwidth=1000.0, latency=0.0)
    workflows = {"workflows": [{"workflow_id": "w", "tasks": [
        task_doc(0, 1000, outputs=[("x", 100.0)]),
        task_doc(1, 1000, inputs=[("x", 100.0)]),
    ]}]}
    report, _ = run(topology, workflows)
    records = records_by_task(report, "w")
    assert records[0]["exec_end"] == pytest.approx(1.0)
    assert records[1]["exec_start"] == pytest.approx(1.1)
    assert records[1]["input_transfer_spans"] == [["x", 1.0, 1.1]]


def test_same_device_inputs_cost_nothing():
    workflows = {"workflows": [{"workflow_id": "w", "tasks": [
        task_doc(0, 1000, outputs=[("x", 500.0)]),
        task_doc(1, 1000, inputs=[("x", 500.0)]),
    ]}]}
    report, _ = run(single_device_topology(n_vms=2), workflows)
    records = records_by_task(report, "w")
    assert records[1]["exec_start"] == pytest.approx(1.0)
    assert records[1]["input_transfer_spans"] == [["x", 1.0, 1.0]]


def test_shared_input_transferred_once_per_device():
    # both consumers run on device 1; the 100 MB file crosses the link once
    topology = chain_topology(2, bandwidth=1000.0, latency=0.0,
                              vms_per_device=2)
    topology["vms"] = [vm_doc(0, device_id=0, bw=100.0),
                       vm_doc(1, device_id=1, bw=100.0),
                       vm_doc(2, device_id=1, bw=100.0)]
    workflows = {"workflows": [{"workflow_id": "w", "tasks": [
        task_doc(0, 1000, outputs=[("x", 100.0)]),
        task_doc(1, 1000, inputs=[("x", 100.0)]),
        task_doc(2, 1000, inputs=[("x", 100.0)]),
    ]}]}
    report, sink = run(topology, workflows)
    hops = [r for r in sink.records if r.kind == "packet-hop"]
    assert len(hops) == 1
    records = records_by_task(report, "w")
    assert records[1]["exec_start"] == pytest.approx(1.1)
    assert records[2]["exec_start"] == pytest.approx(1.1)


def test_policy_error_assignments_are_dropped():
    class Bogus(policies.SchedulingPolicy):
        name = "bogus"

        def decide(self, ready, vms, ctx):
            return [(view.key, 999) for view in ready]  # unknown VM

    policies.register_scheduler("bogus", Bogus)
    config = RunConfig(scheduler_name="bogus")
    workflows = {"workflows": [{"workflow_id": "w",
                                "tasks": [task_doc(0, 1000)]}]}
    report, sink = run(single_device_topology(n_vms=1), workflows, config)
    record = records_by_task(report, "w")[0]
    assert record["status"] == READY  # never scheduled, never executed
    assert any(r.kind == "policy-error" for r in sink.records)


def test_round_robin_assignments_deterministic_across_runs():
    def assignments():
        report, _ = run(single_device_topology(n_vms=3),
                        {"workflows": [diamond_workflow()]})
        return [(r["task_id"], r["assigned_vm"]) for r in report.tasks]

    assert assignments() == assignments()


def test_greedy_eft_prefers_faster_vm():
    topology = single_device_topology(n_vms=0, n_hosts=2, mips=2000.0)
    topology["vms"] = [
        vm_doc(0, device_id=0, mips=500.0),
        vm_doc(1, device_id=0, mips=2000.0),
    ]
    config = RunConfig(scheduler_name="greedy-eft")
    workflows = {"workflows": [{"workflow_id": "w",
                                "tasks": [task_doc(0, 1000)]}]}
    report, _ = run(topology, workflows, config)
    assert records_by_task(report, "w")[0]["assigned_vm"] == 1


def test_min_min_runs_shorter_task_first():
    topology = single_device_topology(n_vms=1, scheduler="space-shared")
    config = RunConfig(scheduler_name="min-min")
    workflows = {"workflows": [{"workflow_id": "w", "tasks": [
        task_doc(0, 4000), task_doc(1, 500),
    ]}]}
    report, _ = run(topology, workflows, config)
    records = records_by_task(report, "w")
    assert records[1]["exec_start"] == 0.0
    assert records[0]["exec_start"] == pytest.approx(0.5)


# --- deadlines ---------------------------------------------------------------------------


def deadline_bundle(policy):
    workflows = {"workflows": [{"workflow_id": "diamond", "tasks": [
        task_doc(0, 1000, outputs=[("a", 0.0)]),
        task_doc(1, 1000, inputs=[("a", 0.0)], outputs=[("b", 0.0)],
                 deadline=1.5),
        task_doc(2, 1000, inputs=[("a", 0.0)], outputs=[("c", 0.0)]),
        task_doc(3, 1000, inputs=[("b", 0.0), ("c", 0.0)]),
    ]}]}
    return single_device_topology(n_vms=3), workflows, RunConfig(
        deadline_policy=policy)


def test_deadline_kill_cancels_task_only():
    report, _ = run(*deadline_bundle("kill"))
    records = records_by_task(report, "diamond")
    assert records[0]["status"] == COMPLETED
    assert records[1]["status"] == DEADLINE_MISSED
    assert records[1]["exec_end"] is None  # no completion record
    assert records[2]["status"] == COMPLETED
    assert records[3]["status"] == PENDING  # starved, but not cancelled


def test_deadline_continue_flags_and_finishes():
    report, _ = run(*deadline_bundle("continue"))
    records = records_by_task(report, "diamond")
    assert all(r["status"] == COMPLETED for r in records.values())
    assert records[1]["deadline_violation"] is True
    assert records[1]["exec_end"] == pytest.approx(2.0)


def test_deadline_drop_descendants_cancels_join():
    report, _ = run(*deadline_bundle("drop-descendants"))
    records = records_by_task(report, "diamond")
    assert records[1]["status"] == DEADLINE_MISSED
    assert records[3]["status"] == KILLED
    assert records[3]["kill_reason"] == "ancestor-deadline"
    assert records[2]["status"] == COMPLETED


def test_deadline_after_completion_is_noop():
    workflows = {"workflows": [{"workflow_id": "w", "tasks": [
        task_doc(0, 1000, deadline=2.0),
    ]}]}
    report, _ = run(single_device_topology(n_vms=1), workflows,
                    RunConfig(deadline_policy="kill"))
    record = records_by_task(report, "w")[0]
    assert record["status"] == COMPLETED
    assert record["deadline_violation"] is False


def test_workflow_deadline_inherited_by_tasks():
    workflows = {"workflows": [{"workflow_id": "w", "deadline": 0.5,
                                "tasks": [task_doc(0, 1000)]}]}
    report, _ = run(single_device_topology(n_vms=1), workflows,
                    RunConfig(deadline_policy="kill"))
    record = records_by_task(report, "w")[0]
    assert record["status"] == DEADLINE_MISSED
    assert record["deadline"] == 0.5


# --- selectivity-driven starvation ----------------------------------------------------------


def test_dropped_output_kills_dependents_with_missing_input():
    workflows = {"workflows": [{"workflow_id": "w", "tasks": [
        task_doc(0, 1000, outputs=[("f", 1.0)],
                 selectivity={"fractional": {"probability": 0.0}}),
        task_doc(1, 1000, inputs=[("f", 1.0)], outputs=[("g", 1.0)]),
        task_doc(2, 1000, inputs=[("g", 1.0)]),
    ]}]}
    report, _ = run(single_device_topology(n_vms=1), workflows)
    records = records_by_task(report, "w")
    assert records[0]["status"] == COMPLETED
    assert records[1]["status"] == KILLED
    assert records[1]["kill_reason"] == "missing-input"
    assert records[2]["status"] == KILLED
    assert records[2]["kill_reason"] == "missing-input"


# --- ensembles -------------------------------------------------------------------------------


def one_task_workflow(workflow_id, runtime):
    return {"workflow_id": workflow_id, "tasks": [task_doc(0, runtime)]}


def test_ensemble_two_fast_one_slow_counts_two():
    workflows = {
        "workflows": [one_task_workflow("fast1", 500),
                      one_task_workflow("fast2", 500),
                      one_task_workflow("slow", 5000)],
        "ensembles": [{"ensemble_id": "e", "deadline": 3.0,
                       "workflow_ids": ["fast1", "fast2", "slow"]}],
    }
    report, _ = run(single_device_topology(n_vms=1), workflows)
    summary = report.ensembles[0]
    assert summary.completed_count == 2
    assert summary.violations == ["slow"]


def test_ensemble_without_deadline_counts_all():
    workflows = {
        "workflows": [one_task_workflow(f"w{i}", 500) for i in range(3)],
        "ensembles": [{"ensemble_id": "e",
                       "workflow_ids": ["w0", "w1", "w2"]}],
    }
    report, _ = run(single_device_topology(n_vms=3), workflows)
    assert report.ensembles[0].completed_count == 3


def test_empty_ensemble_counts_zero():
    workflows = {
        "workflows": [one_task_workflow("w", 500)],
        "ensembles": [{"ensemble_id": "e", "workflow_ids": []}],
    }
    report, _ = run(single_device_topology(n_vms=1), workflows)
    assert report.ensembles[0].completed_count == 0


# --- periodic execution ------------------------------------------------------------------------


def test_periodic_task_restarts_and_redelivers_to_child():
    workflows = {"workflows": [{"workflow_id": "w", "tasks": [
        task_doc(0, 1000, outputs=[("f", 0.0)],
                 execution={"periodic": {"interval": 2.0, "repetitions": 2}}),
        task_doc(1, 500, inputs=[("f", 0.0)]),
    ]}]}
    report, _ = run(single_device_topology(n_vms=2), workflows)
    source = {r["round"]: r for r in report.tasks if r["task_id"] == 0}
    child = {r["round"]: r for r in report.tasks if r["task_id"] == 1}
    assert sorted(source) == [0, 1, 2]
    assert sorted(child) == [0, 1, 2]
    # completions at 1, then restart at 3 -> 4, restart at 6 -> 7
    assert source[0]["exec_end"] == pytest.approx(1.0)
    assert source[1]["exec_start"] == pytest.approx(3.0)
    assert source[2]["exec_start"] == pytest.approx(6.0)
    for round_index in (0, 1, 2):
        assert child[round_index]["status"] == COMPLETED
        assert (child[round_index]["exec_start"]
                >= source[round_index]["exec_end"])


def test_unbounded_periodic_capped_by_horizon():
    workflows = {"workflows": [{"workflow_id": "w", "tasks": [
        task_doc(0, 1000, execution={"periodic": {"interval": 2.0}}),
    ]}]}
    report, _ = run(single_device_topology(n_vms=1), workflows,
                    RunConfig(horizon=7.0))
    rounds = sorted(r["round"] for r in report.tasks)
    # runs at 0, 3, 6; the activation at 9 exceeds the horizon
    assert rounds == [0, 1, 2]
    assert all(r["status"] == COMPLETED for r in report.tasks)


# --- dynamic provisioning -----------------------------------------------------------------------


def test_backlog_provisioner_creates_and_reaps_vm():
    topology = single_device_topology(n_vms=0, n_hosts=1)
    config = RunConfig(
        provisioner_name="backlog",
        provisioner_params={
            "template": {"mips": 1000.0, "pes": 1, "ram": 512.0,
                         "bw": 100.0, "size": 100.0},
            "backlog_per_vm": 2,
        })
    workflows = {"workflows": [{"workflow_id": "w", "tasks": [
        task_doc(i, 500) for i in range(3)
    ]}]}
    report, sink = run(topology, workflows, config)
    assert all(r["status"] == COMPLETED for r in report.tasks)
    kinds = [r.kind for r in sink.records]
    assert "vm-create" in kinds
    assert "vm-destroy" in kinds


def test_vm_boot_delay_defers_usability():
    topology = single_device_topology(n_vms=0, n_hosts=1)
    config = RunConfig(
        vm_boot_delay_s=2.5,
        provisioner_name="backlog",
        provisioner_params={
            "template": {"mips": 1000.0, "pes": 1, "ram": 512.0,
                         "bw": 100.0, "size": 100.0},
            "backlog_per_vm": 2,
        })
    workflows = {"workflows": [{"workflow_id": "w", "tasks": [
        task_doc(i, 500) for i in range(3)
    ]}]}
    report, _ = run(topology, workflows, config)
    starts = [r["exec_start"] for r in report.tasks]
    assert min(starts) == pytest.approx(2.5)


# --- invariants over randomized runs --------------------------------------------------------------


def random_dag_doc(rng, n, file_size=0.0):
    tasks = []
    for i in range(n):
        inputs = []
        parent_count = rng.randint(0, min(i, 3))
        for parent in rng.sample(range(i), parent_count):
            inputs.append((f"e{parent}_{i}", file_size))
        outputs = [(f"e{i}_{child}", file_size) for child in range(i + 1, n)
                   if (f"e{i}_{child}", file_size) in []]
        tasks.append(task_doc(i, rng.randint(100, 3000), inputs=inputs))
    # outputs derived from inputs so producer/consumer names line up
    produced = {}
    for task in tasks:
        for file_entry in task["input_files"]:
            producer = int(file_entry["name"].split("_")[0][1:])
            produced.setdefault(producer, []).append(file_entry)
    for producer, files in produced.items():
        tasks[producer]["output_files"] = [dict(f) for f in files]
    return {"workflow_id": "rand", "tasks": tasks}


def test_lifecycle_timestamps_ordered_and_single_execution():
    rng = random.Random(1234)
    for _ in range(10):
        n = rng.randint(2, 12)
        workflows = {"workflows": [random_dag_doc(rng, n)]}
        report, sink = run(single_device_topology(n_vms=2), workflows)
        for record in report.tasks:
            times = [record["release_time"], record["ready_time"],
                     record["schedule_time"], record["exec_start"],
                     record["exec_end"]]
            present = [t for t in times if t is not None]
            assert present == sorted(present)
            assert record["status"] == COMPLETED
        starts = [r for r in sink.records if r.kind == "exec-start"]
        assert len(starts) == len({r.subject for r in starts})  # once each
        counts = report.counts
        assert counts["released"] == (counts["completed"] + counts["killed"]
                                      + counts["deadline_missed"]
                                      + counts["pending"])


def test_no_premature_execution_with_transfers():
    rng = random.Random(777)
    topology = chain_topology(3, bandwidth=500.0, latency=0.02,
                              vms_per_device=1)
    for _ in range(5):
        n = rng.randint(3, 10)
        workflows = {"workflows": [random_dag_doc(rng, n, file_size=20.0)]}
        report, _ = run(topology, workflows)
        records = records_by_task(report, "rand")
        for record in records.values():
            assert record["status"] == COMPLETED
            spans = record["input_transfer_spans"]
            for _, start, end in spans:
                assert end is not None and end <= record["exec_start"] + 1e-12
            task_doc_inputs = spans  # every input has a span
            producer_ends = []
            for name, _, _ in spans:
                producer = int(name.split("_")[0][1:])
                producer_ends.append(records[producer]["exec_end"])
            for end in producer_ends:
                assert record["exec_start"] >= end - 1e-12
