"""Trace sink: one record per observable simulation event.

The line format is ``time,entity,event_kind,subject_id,detail`` with a stable
field order, so identical runs produce byte-identical trace files.
"""

from __future__ import annotations

from dataclasses import dataclass


def _clean(text: str) -> str:
    return text.replace(",", ";").replace("\n", " ")


@dataclass(frozen=True)
class TraceRecord:
    time: float
    entity: str
    kind: str
    subject: str
    detail: str

    def line(self) -> str:
        return (f"{self.time!r},{_clean(self.entity)},{_clean(self.kind)},"
                f"{_clean(self.subject)},{_clean(self.detail)}")


class TraceSink:
    """In-memory trace accumulator with deterministic text serialization."""

    def __init__(self) -> None:
        self.records: list[TraceRecord] = []

    def emit(self, time: float, entity: str, kind: str, subject: str = "",
             detail: str = "") -> None:
        self.records.append(TraceRecord(time, entity, kind, subject, detail))

    def lines(self) -> list[str]:
        return [record.line() for record in self.records]

    def text(self) -> str:
        return "".join(line + "\n" for line in self.lines())

    def write(self, path: str) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(self.text())
