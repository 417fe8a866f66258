"""Executability and success metrics over instruction corpora.

ER@1 is the micro-averaged ratio of executed to proposed actions and SR@1
the ratio of correct to executed actions, both summed over the whole log
before dividing. An action is correct when the evaluation right after it
shows no structural violations and, when a reference map exists, does not
reduce the minimum per-class IoU.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .agents import Session, Uninterpretable, Unsatisfiable


class MetricsError(ValueError):
    pass


class EmptyLog(MetricsError):
    pass


class NoExecutions(MetricsError):
    pass


@dataclass
class InstructionRecord:
    instruction: str
    proposed: int
    executed: int
    correct: int
    trace_ref: str = ""

    def __post_init__(self):
        if not (0 <= self.correct <= self.executed <= self.proposed):
            raise MetricsError(
                f"record violates 0 <= correct <= executed <= proposed: "
                f"{self.correct}/{self.executed}/{self.proposed}"
            )


@dataclass
class RunLog:
    records: list[InstructionRecord] = field(default_factory=list)

    def totals(self) -> tuple[int, int, int]:
        p = sum(r.proposed for r in self.records)
        e = sum(r.executed for r in self.records)
        c = sum(r.correct for r in self.records)
        return p, e, c

    def to_json(self) -> str:
        return json.dumps(
            [
                {
                    "instruction": r.instruction,
                    "proposed": r.proposed,
                    "executed": r.executed,
                    "correct": r.correct,
                    "trace_ref": r.trace_ref,
                }
                for r in self.records
            ],
            indent=2,
        )

    @staticmethod
    def from_json(text: str) -> "RunLog":
        return RunLog([InstructionRecord(**item) for item in json.loads(text)])


def er_at_1(log: RunLog) -> float:
    """Executed over proposed actions, summed across the log."""
    proposed, executed, _ = log.totals()
    if proposed <= 0:
        raise EmptyLog("no proposed actions in the log")
    return executed / proposed


def sr_at_1(log: RunLog) -> float:
    """Correct over executed actions, summed across the log."""
    _, executed, correct = log.totals()
    if executed <= 0:
        raise NoExecutions("no executed actions in the log")
    return correct / executed


def format_rates(log: RunLog) -> str:
    """Two-decimal percentage line, e.g. 'ER@1 94.00  SR@1 82.98'."""
    er = er_at_1(log) * 100.0
    try:
        sr = sr_at_1(log) * 100.0
        return f"ER@1 {er:.2f}  SR@1 {sr:.2f}"
    except NoExecutions:
        return f"ER@1 {er:.2f}  SR@1 n/a"


def run_corpus(corpus: list[str], base_session: Session, seed: int = 0) -> RunLog:
    """Run every instruction in an isolated fork of the base session.

    Per-instruction failures are recorded, never raised: an instruction the
    planner cannot interpret or satisfy contributes zero proposed actions.
    """
    if not corpus:
        raise MetricsError("corpus is empty")
    log = RunLog()
    for idx, text in enumerate(corpus):
        session = base_session.fork()
        try:
            result = session.run_instruction(text)
            record = InstructionRecord(
                text, result.proposed, result.executed, result.correct, f"corpus[{idx}]"
            )
        except (Uninterpretable, Unsatisfiable):
            record = InstructionRecord(text, 0, 0, 0, f"corpus[{idx}]")
        log.records.append(record)
    return log


def load_corpus(text: str) -> list[str]:
    """One instruction per line; blank lines and # comments skipped."""
    out = []
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            out.append(line)
    return out
