"""Multi-label metrics for failure-cause diagnoses.

Per cause, bits form a binary confusion (the cause is present or not);
precision and recall report 0.00 when their denominator is empty, while F1
stays undefined (rendered "-") whenever precision + recall is zero.  The
macro average is unweighted over the evaluated causes, skipping undefined
F1 values.  Green marks "no cause identified" and is never a scored cause.
Stick-slip is excluded by default for lack of representative data.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .errors import LengthMismatchError
from .taxonomy import FailureCause

#: All diagnosable causes, in report column order.
ALL_EVAL_CAUSES: tuple[FailureCause, ...] = (
    FailureCause.SMOOTH_WEAR,
    FailureCause.THERMAL_WEAR,
    FailureCause.CORE_OUT,
    FailureCause.HARD_FORMATION_TRANSITION,
    FailureCause.SOFT_FORMATION_TRANSITION,
    FailureCause.STICK_SLIP,
    FailureCause.AXIAL,
    FailureCause.WHIRL,
)

#: Default evaluation set: everything but stick-slip.
DEFAULT_EVAL_CAUSES: tuple[FailureCause, ...] = tuple(
    c for c in ALL_EVAL_CAUSES if c is not FailureCause.STICK_SLIP
)


@dataclass(frozen=True)
class CauseMetrics:
    """Binary confusion and derived metrics for one cause."""

    cause: FailureCause
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    @property
    def accuracy(self) -> float:
        return (self.tp + self.tn) / self.n

    @property
    def precision(self) -> float:
        denom = self.tp + self.fp
        return self.tp / denom if denom else 0.0

    @property
    def recall(self) -> float:
        denom = self.tp + self.fn
        return self.tp / denom if denom else 0.0

    @property
    def f1(self) -> float | None:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r > 0 else None

    def to_dict(self) -> dict:
        return {
            "cause": self.cause.code,
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "tn": self.tn,
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
        }


@dataclass(frozen=True)
class MultiLabelReport:
    """Per-cause metrics plus the unweighted macro average."""

    per_cause: tuple[CauseMetrics, ...]
    n_samples: int

    def metrics_for(self, cause: FailureCause) -> CauseMetrics:
        for m in self.per_cause:
            if m.cause is cause:
                return m
        raise KeyError(cause)

    @property
    def macro_accuracy(self) -> float:
        return sum(m.accuracy for m in self.per_cause) / len(self.per_cause)

    @property
    def macro_precision(self) -> float:
        return sum(m.precision for m in self.per_cause) / len(self.per_cause)

    @property
    def macro_recall(self) -> float:
        return sum(m.recall for m in self.per_cause) / len(self.per_cause)

    @property
    def macro_f1(self) -> float | None:
        defined = [m.f1 for m in self.per_cause if m.f1 is not None]
        return sum(defined) / len(defined) if defined else None

    def to_dict(self) -> dict:
        return {
            "n_samples": self.n_samples,
            "causes": [m.to_dict() for m in self.per_cause],
            "macro": {
                "accuracy": self.macro_accuracy,
                "precision": self.macro_precision,
                "recall": self.macro_recall,
                "f1": self.macro_f1,
            },
        }


def multilabel_report(
    pred: Sequence[set],
    truth: Sequence[set],
    causes: Sequence[FailureCause] = DEFAULT_EVAL_CAUSES,
) -> MultiLabelReport:
    """Score predicted cause sets against true ones, cause by cause."""
    if len(pred) != len(truth):
        raise LengthMismatchError(
            f"{len(pred)} predictions vs {len(truth)} ground-truth rows"
        )
    if not pred:
        raise LengthMismatchError("need at least one sample")
    per_cause = []
    for cause in causes:
        tp = fp = fn = tn = 0
        for p, t in zip(pred, truth):
            predicted, actual = cause in p, cause in t
            if predicted and actual:
                tp += 1
            elif predicted:
                fp += 1
            elif actual:
                fn += 1
            else:
                tn += 1
        per_cause.append(CauseMetrics(cause=cause, tp=tp, fp=fp, fn=fn, tn=tn))
    return MultiLabelReport(per_cause=tuple(per_cause), n_samples=len(pred))


@dataclass(frozen=True)
class TallyRow:
    """One bit of the end-to-end tally; green never counts as a cause."""

    bit_id: str
    existing: frozenset[FailureCause]
    detected: frozenset[FailureCause]

    def _real(self, causes: frozenset) -> frozenset:
        return causes - {FailureCause.GREEN}

    @property
    def n_existing(self) -> int:
        return len(self._real(self.existing))

    @property
    def n_correct(self) -> int:
        return len(self._real(self.existing) & self._real(self.detected))

    @property
    def n_false(self) -> int:
        return len(self._real(self.detected) - self._real(self.existing))

    def to_dict(self) -> dict:
        return {
            "bit_id": self.bit_id,
            "existing": sorted(c.code for c in self.existing),
            "detected": sorted(c.code for c in self.detected),
            "correct": self.n_correct,
            "false": self.n_false,
        }


@dataclass(frozen=True)
class PipelineTally:
    """End-to-end score: causes recovered and causes invented, over all bits."""

    rows: tuple[TallyRow, ...]

    @property
    def total_existing(self) -> int:
        return sum(r.n_existing for r in self.rows)

    @property
    def correctly_detected(self) -> int:
        return sum(r.n_correct for r in self.rows)

    @property
    def falsely_detected(self) -> int:
        return sum(r.n_false for r in self.rows)

    @property
    def recall(self) -> float:
        return self.correctly_detected / self.total_existing if self.total_existing else 0.0

    def to_dict(self) -> dict:
        return {
            "bits": [r.to_dict() for r in self.rows],
            "total_existing": self.total_existing,
            "correctly_detected": self.correctly_detected,
            "falsely_detected": self.falsely_detected,
            "recall": self.recall,
        }


def pipeline_tally(
    pred: Sequence[set],
    truth: Sequence[set],
    bit_ids: Sequence[str] | None = None,
) -> PipelineTally:
    """Tally detected against existing causes, bit by bit."""
    if len(pred) != len(truth):
        raise LengthMismatchError(
            f"{len(pred)} predictions vs {len(truth)} ground-truth rows"
        )
    if bit_ids is None:
        bit_ids = [str(i) for i in range(len(pred))]
    elif len(bit_ids) != len(pred):
        raise LengthMismatchError("bit_ids must align with predictions")
    rows = tuple(
        TallyRow(bit_id=b, existing=frozenset(t), detected=frozenset(p))
        for b, p, t in zip(bit_ids, pred, truth)
    )
    return PipelineTally(rows=rows)
