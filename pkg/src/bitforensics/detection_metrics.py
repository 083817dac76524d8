"""Object-detection evaluation: IoU, greedy matching, AP/mAP, confusion.

Predictions match ground truth greedily in descending confidence order;
each ground-truth box can back at most one true positive, every other
prediction over it is a false positive and unclaimed ground truth counts
as a false negative.  Average precision integrates the monotone precision
envelope over recall (all-points interpolation by default, the 11-point
variant on request).  mAP averages per-class AP over the classes that have
ground truth.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import NoGroundTruthError
from .records import BoundingBox, Detection

IOU_RANGE_THRESHOLDS: tuple[float, ...] = tuple(0.5 + 0.05 * i for i in range(10))

INTERPOLATIONS = ("continuous", "11point")

BACKGROUND = "background"


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union of two boxes; disjoint boxes give 0."""
    ix = min(a.x1, b.x1) - max(a.x0, b.x0)
    iy = min(a.y1, b.y1) - max(a.y0, b.y0)
    if ix <= 0.0 or iy <= 0.0:
        return 0.0
    intersection = ix * iy
    # areas from the same corner differences, so identical boxes hit 1 exactly
    area_a = (a.x1 - a.x0) * (a.y1 - a.y0)
    area_b = (b.x1 - b.x0) * (b.y1 - b.y0)
    union = area_a + area_b - intersection
    return intersection / union


@dataclass(frozen=True)
class MatchResult:
    """Greedy matching outcome for one image and one class."""

    iou_threshold: float
    pred_matches: tuple[int | None, ...]  # per prediction: GT index or None (FP)
    gt_matches: tuple[int | None, ...]  # per GT: prediction index or None (FN)

    @property
    def n_tp(self) -> int:
        return sum(1 for m in self.pred_matches if m is not None)

    @property
    def n_fp(self) -> int:
        return sum(1 for m in self.pred_matches if m is None)

    @property
    def n_fn(self) -> int:
        return sum(1 for m in self.gt_matches if m is None)


def match(
    preds: Sequence[Detection], gts: Sequence[BoundingBox], iou_threshold: float
) -> MatchResult:
    """Match predictions of one class to ground-truth boxes of that class.

    Predictions claim ground truth in descending confidence order (ties
    keep input order); each claims the unclaimed box with the highest IoU
    at or above the threshold, otherwise it is a false positive.
    """
    order = sorted(range(len(preds)), key=lambda i: (-preds[i].confidence, i))
    pred_matches: list[int | None] = [None] * len(preds)
    gt_matches: list[int | None] = [None] * len(gts)
    for i in order:
        best_gt = None
        best_iou = 0.0
        for j, gt in enumerate(gts):
            if gt_matches[j] is not None:
                continue
            overlap = iou(preds[i].box, gt)
            if overlap >= iou_threshold and overlap > best_iou:
                best_gt, best_iou = j, overlap
        if best_gt is not None:
            pred_matches[i] = best_gt
            gt_matches[best_gt] = i
    return MatchResult(
        iou_threshold=iou_threshold,
        pred_matches=tuple(pred_matches),
        gt_matches=tuple(gt_matches),
    )


@dataclass(frozen=True)
class ClassMatches:
    """Scored matches for one class accumulated across a dataset."""

    label_code: str
    scored: tuple[tuple[float, bool], ...]  # (confidence, is true positive)
    n_gt: int


def collect_class_matches(
    image_pairs: Sequence[tuple[Sequence[Detection], Sequence[Detection]]],
    label,
    iou_threshold: float,
) -> ClassMatches:
    """Match one class image by image over (predictions, ground truth) pairs."""
    scored: list[tuple[float, bool]] = []
    n_gt = 0
    for preds, gts in image_pairs:
        class_preds = [p for p in preds if p.label is label]
        class_gts = [g.box for g in gts if g.label is label]
        n_gt += len(class_gts)
        result = match(class_preds, class_gts, iou_threshold)
        scored.extend(
            (p.confidence, m is not None) for p, m in zip(class_preds, result.pred_matches)
        )
    return ClassMatches(label_code=label.code, scored=tuple(scored), n_gt=n_gt)


@dataclass(frozen=True)
class APResult:
    """AP of one class; ``ap`` is None when there was nothing to score."""

    label_code: str
    ap: float | None
    n_gt: int
    n_pred: int

    @property
    def skipped(self) -> bool:
        return self.ap is None


def _pr_points(scored: Sequence[tuple[float, bool]], n_gt: int) -> tuple[np.ndarray, np.ndarray]:
    order = sorted(range(len(scored)), key=lambda i: (-scored[i][0], i))
    flags = np.array([scored[i][1] for i in order], dtype=bool)
    tp = np.cumsum(flags)
    ranks = np.arange(1, len(flags) + 1)
    return tp / n_gt, tp / ranks


def average_precision(
    matches: ClassMatches, interpolation: str = "continuous"
) -> APResult:
    """AP from scored matches.  No ground truth and no predictions means the
    class is skipped; predictions without any ground truth score 0."""
    if interpolation not in INTERPOLATIONS:
        raise ValueError(f"interpolation must be one of {INTERPOLATIONS}")
    n_pred = len(matches.scored)
    if matches.n_gt == 0:
        ap = None if n_pred == 0 else 0.0
        return APResult(matches.label_code, ap, 0, n_pred)
    if n_pred == 0:
        return APResult(matches.label_code, 0.0, matches.n_gt, 0)

    recall, precision = _pr_points(matches.scored, matches.n_gt)
    envelope = np.maximum.accumulate(precision[::-1])[::-1]
    if interpolation == "continuous":
        prev_recall = np.concatenate(([0.0], recall[:-1]))
        ap = float(np.sum((recall - prev_recall) * envelope))
    else:
        levels = np.linspace(0.0, 1.0, 11)
        ap = 0.0
        for level in levels:
            at_level = envelope[recall >= level]
            ap += float(at_level[0]) if at_level.size else 0.0
        ap /= 11.0
    return APResult(matches.label_code, ap, matches.n_gt, n_pred)


@dataclass(frozen=True)
class MAPResult:
    """Per-class APs and their mean; classes without ground truth excluded."""

    iou_thresholds: tuple[float, ...]
    per_class: Mapping[str, float]
    mean_ap: float

    @property
    def n_classes(self) -> int:
        return len(self.per_class)


def _gt_labels(image_pairs, labels) -> list:
    with_gt = []
    for label in labels:
        if any(any(g.label is label for g in gts) for _, gts in image_pairs):
            with_gt.append(label)
    return with_gt


def map_at(
    image_pairs: Sequence[tuple[Sequence[Detection], Sequence[Detection]]],
    labels: Sequence,
    iou_threshold: float,
    interpolation: str = "continuous",
) -> MAPResult:
    """Mean AP at one IoU threshold over the classes with ground truth."""
    scored_labels = _gt_labels(image_pairs, labels)
    if not scored_labels:
        raise NoGroundTruthError("no class has any ground-truth box")
    per_class = {}
    for label in scored_labels:
        result = average_precision(
            collect_class_matches(image_pairs, label, iou_threshold), interpolation
        )
        per_class[label.code] = result.ap
    mean_ap = sum(per_class.values()) / len(per_class)
    return MAPResult((iou_threshold,), per_class, mean_ap)


def map_range(
    image_pairs: Sequence[tuple[Sequence[Detection], Sequence[Detection]]],
    labels: Sequence,
    interpolation: str = "continuous",
) -> MAPResult:
    """Mean AP averaged over IoU thresholds 0.50, 0.55, ..., 0.95."""
    results = [
        map_at(image_pairs, labels, thr, interpolation) for thr in IOU_RANGE_THRESHOLDS
    ]
    codes = results[0].per_class.keys()
    per_class = {
        code: sum(r.per_class[code] for r in results) / len(results) for code in codes
    }
    mean_ap = sum(r.mean_ap for r in results) / len(results)
    return MAPResult(IOU_RANGE_THRESHOLDS, per_class, mean_ap)


@dataclass(frozen=True)
class ConfusionMatrix:
    """Rows are ground-truth classes, columns predicted; the trailing
    background row/column holds unmatched predictions/ground truth."""

    labels: tuple[str, ...]  # class codes + BACKGROUND last
    matrix: np.ndarray

    def cell(self, actual: str, predicted: str) -> int:
        return int(self.matrix[self.labels.index(actual), self.labels.index(predicted)])

    def to_dict(self) -> dict:
        return {"labels": list(self.labels), "matrix": self.matrix.tolist()}


def detection_confusion(
    image_pairs: Sequence[tuple[Sequence[Detection], Sequence[Detection]]],
    labels: Sequence,
    iou_threshold: float,
) -> ConfusionMatrix:
    """Class-agnostic box matching first, then label comparison per match."""
    codes = tuple(label.code for label in labels) + (BACKGROUND,)
    index = {code: i for i, code in enumerate(codes)}
    counts = np.zeros((len(codes), len(codes)), dtype=np.int64)
    for preds, gts in image_pairs:
        result = match(preds, [g.box for g in gts], iou_threshold)
        for p, m in zip(preds, result.pred_matches):
            if m is None:
                counts[index[BACKGROUND], index[p.label.code]] += 1
            else:
                counts[index[gts[m].label.code], index[p.label.code]] += 1
        for g, m in zip(gts, result.gt_matches):
            if m is None:
                counts[index[g.label.code], index[BACKGROUND]] += 1
    return ConfusionMatrix(labels=codes, matrix=counts)


@dataclass(frozen=True)
class DetectionReportRow:
    """One row of the per-class evaluation table."""

    label_code: str
    n_gt: int
    precision: float
    recall: float
    ap50: float
    ap50_95: float


def evaluate_detections(
    image_pairs: Sequence[tuple[Sequence[Detection], Sequence[Detection]]],
    labels: Sequence,
    conf_threshold: float = 0.25,
    interpolation: str = "continuous",
) -> list[DetectionReportRow]:
    """Build the per-class table (plus a leading macro "all" row).

    AP uses all predictions; the P/R columns apply ``conf_threshold``
    first and match at IoU 0.5.
    """
    scored_labels = _gt_labels(image_pairs, labels)
    if not scored_labels:
        raise NoGroundTruthError("no class has any ground-truth box")
    ap50 = map_at(image_pairs, scored_labels, 0.5, interpolation)
    ap_range = map_range(image_pairs, scored_labels, interpolation)
    confident = [
        ([p for p in preds if p.confidence >= conf_threshold], gts)
        for preds, gts in image_pairs
    ]
    rows = []
    for label in scored_labels:
        matches = collect_class_matches(confident, label, 0.5)
        n_pred = len(matches.scored)
        n_tp = sum(1 for _, is_tp in matches.scored if is_tp)
        rows.append(
            DetectionReportRow(
                label_code=label.code,
                n_gt=matches.n_gt,
                precision=n_tp / n_pred if n_pred else 0.0,
                recall=n_tp / matches.n_gt,
                ap50=ap50.per_class[label.code],
                ap50_95=ap_range.per_class[label.code],
            )
        )
    all_row = DetectionReportRow(
        label_code="all",
        n_gt=sum(r.n_gt for r in rows),
        precision=sum(r.precision for r in rows) / len(rows),
        recall=sum(r.recall for r in rows) / len(rows),
        ap50=ap50.mean_ap,
        ap50_95=ap_range.mean_ap,
    )
    return [all_row] + rows
