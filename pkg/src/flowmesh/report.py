"""Run report: a pure fold over the task records and link statistics."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Optional

from .network import NetworkFabric
from .orchestration import COMPLETED, DEADLINE_MISSED, KILLED, TaskRecord
from .workflow import Ensemble, Workflow


@dataclass
class WorkflowSummary:
    workflow_id: str
    task_count: int
    completed_tasks: int
    completed: bool
    completed_within_deadline: bool
    makespan: Optional[float]


@dataclass
class EnsembleSummary:
    ensemble_id: str
    total: int
    completed_count: int
    violations: list[str]


@dataclass
class RunReport:
    total_time: float
    counts: dict[str, int]
    tasks: list[dict]
    workflows: dict[str, WorkflowSummary]
    ensembles: list[EnsembleSummary]
    links: list[dict]

    def to_json(self) -> str:
        payload = {
            "total_time": self.total_time,
            "counts": self.counts,
            "workflows": {
                wf_id: {
                    "task_count": s.task_count,
                    "completed_tasks": s.completed_tasks,
                    "completed": s.completed,
                    "completed_within_deadline": s.completed_within_deadline,
                    "makespan": s.makespan,
                }
                for wf_id, s in self.workflows.items()
            },
            "ensembles": [
                {"ensemble_id": e.ensemble_id, "total": e.total,
                 "completed_count": e.completed_count,
                 "violations": e.violations}
                for e in self.ensembles
            ],
            "links": self.links,
            "tasks": self.tasks,
        }
        return json.dumps(payload, indent=2) + "\n"

    def tasks_csv(self) -> str:
        buffer = io.StringIO()
        columns = ["workflow_id", "task_id", "round", "status", "release_time",
                   "ready_time", "schedule_time", "assigned_vm", "exec_device",
                   "exec_start", "exec_end", "deadline", "deadline_violation",
                   "kill_reason"]
        writer = csv.DictWriter(buffer, fieldnames=columns,
                                lineterminator="\n")
        writer.writeheader()
        for task in self.tasks:
            writer.writerow({column: task.get(column) for column in columns})
        return buffer.getvalue()


def _record_dict(record: TaskRecord) -> dict:
    return {
        "workflow_id": record.key.workflow_id,
        "task_id": record.key.task_id,
        "round": record.key.round,
        "status": record.status,
        "release_time": record.release_time,
        "ready_time": record.ready_time,
        "schedule_time": record.schedule_time,
        "assigned_vm": record.assigned_vm,
        "exec_device": record.exec_device,
        "input_transfer_spans": [list(span) for span
                                 in record.input_transfer_spans],
        "exec_start": record.exec_start,
        "exec_end": record.exec_end,
        "deadline": record.deadline,
        "deadline_violation": record.deadline_violation,
        "kill_reason": record.kill_reason,
    }


def build_report(records: dict, workflows: list[Workflow],
                 ensembles: list[Ensemble], fabric: NetworkFabric,
                 total_time: float) -> RunReport:
    counts = {"released": len(records), "completed": 0,
              "deadline_missed": 0, "killed": 0, "pending": 0}
    for record in records.values():
        if record.status == COMPLETED:
            counts["completed"] += 1
        elif record.status == DEADLINE_MISSED:
            counts["deadline_missed"] += 1
        elif record.status == KILLED:
            counts["killed"] += 1
        else:
            counts["pending"] += 1

    summaries: dict[str, WorkflowSummary] = {}
    for workflow in workflows:
        wf_records = [r for r in records.values()
                      if r.key.workflow_id == workflow.workflow_id]
        round0 = {r.key.task_id: r for r in wf_records if r.key.round == 0}
        completed_tasks = sum(1 for r in round0.values()
                              if r.status == COMPLETED)
        complete = (len(round0) == len(workflow.tasks)
                    and completed_tasks == len(workflow.tasks))
        within = complete and not any(r.deadline_violation
                                      for r in round0.values())
        ends = [r.exec_end for r in wf_records if r.exec_end is not None]
        starts = [r.release_time for r in wf_records
                  if r.release_time is not None]
        makespan = max(ends) - min(starts) if ends and starts else None
        summaries[workflow.workflow_id] = WorkflowSummary(
            workflow.workflow_id, len(workflow.tasks), completed_tasks,
            complete, within, makespan)

    ensemble_summaries = []
    for ensemble in ensembles:
        violations = [wf_id for wf_id in ensemble.workflow_ids
                      if not summaries[wf_id].completed_within_deadline]
        ensemble_summaries.append(EnsembleSummary(
            ensemble.ensemble_id, len(ensemble.workflow_ids),
            len(ensemble.workflow_ids) - len(violations), violations))

    links = []
    for u, v, busy, packets in fabric.direction_stats():
        utilization = busy / total_time if total_time > 0 else 0.0
        links.append({"from": u, "to": v, "busy_s": busy,
                      "packets": packets, "utilization": utilization})

    tasks = [_record_dict(record) for record in records.values()]
    return RunReport(total_time, counts, tasks, summaries, ensemble_summaries,
                     links)
