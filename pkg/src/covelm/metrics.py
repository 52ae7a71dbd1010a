"""Confusion matrices, per-class reports, one-vs-rest ROC and fold CIs."""
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .errors import DegenerateCurve, InvalidInput

Z_95 = 1.96


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts with rows = true class, columns = predicted class."""

    counts: np.ndarray
    class_order: Tuple

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        if tuple(other.class_order) != tuple(self.class_order):
            raise InvalidInput("cannot add confusion matrices with different class orders")
        return ConfusionMatrix(self.counts + other.counts, self.class_order)

    def to_dict(self) -> dict:
        return {"class_order": list(self.class_order), "counts": self.counts.tolist()}


@dataclass(frozen=True)
class ClassReport:
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    macro_f1: float
    accuracy: float
    class_order: Tuple

    def to_dict(self) -> dict:
        per_class = {
            str(c): {
                "precision": float(self.precision[i]),
                "recall": float(self.recall[i]),
                "f1": float(self.f1[i]),
            }
            for i, c in enumerate(self.class_order)
        }
        return {"per_class": per_class, "macro_f1": self.macro_f1, "accuracy": self.accuracy}


@dataclass(frozen=True)
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray
    auc: float

    @property
    def points(self) -> List[Tuple[float, float]]:
        return list(zip(self.fpr.tolist(), self.tpr.tolist()))


def confusion(true_labels: Sequence, predicted_labels: Sequence, class_order: Sequence) -> ConfusionMatrix:
    true_labels = list(true_labels)
    predicted_labels = list(predicted_labels)
    if len(true_labels) != len(predicted_labels):
        raise InvalidInput(
            f"label sequences differ in length ({len(true_labels)} vs {len(predicted_labels)})"
        )
    index = {c: i for i, c in enumerate(class_order)}
    counts = np.zeros((len(index), len(index)), dtype=np.int64)
    for t, p in zip(true_labels, predicted_labels):
        try:
            counts[index[t], index[p]] += 1
        except KeyError as exc:
            raise InvalidInput(f"label {exc.args[0]!r} is not in {tuple(class_order)}") from None
    return ConfusionMatrix(counts, tuple(class_order))


def _safe_div(num, den):
    num = np.asarray(num, dtype=np.float64)
    den = np.asarray(den, dtype=np.float64)
    return np.divide(num, den, out=np.zeros_like(num), where=den > 0)


def class_report(cm: ConfusionMatrix) -> ClassReport:
    """Per-class precision/recall/F1 plus macro-F1 and accuracy; 0/0 -> 0."""
    counts = np.asarray(cm.counts, dtype=np.float64)
    if counts.size == 0 or counts.sum() <= 0:
        raise InvalidInput("confusion matrix is empty")
    tp = np.diag(counts)
    precision = _safe_div(tp, counts.sum(axis=0))
    recall = _safe_div(tp, counts.sum(axis=1))
    f1 = _safe_div(2 * precision * recall, precision + recall)
    return ClassReport(
        precision=precision,
        recall=recall,
        f1=f1,
        macro_f1=float(f1.mean()),
        accuracy=float(tp.sum() / counts.sum()),
        class_order=tuple(cm.class_order),
    )


def roc_one_vs_rest(true_labels: Sequence, scores, positive_class, class_order: Sequence = None) -> RocCurve:
    """ROC of one class against the rest with a trapezoidal AUC.

    ``scores`` is either the positive-class column or the full (N, m)
    matrix together with ``class_order``. All samples sharing a score are
    moved past the threshold together, so ties produce a diagonal segment.
    """
    s = np.asarray(scores, dtype=np.float64)
    if s.ndim == 2:
        if class_order is None:
            raise InvalidInput("class_order is required with a score matrix")
        order = list(class_order)
        if positive_class not in order:
            raise InvalidInput(f"{positive_class!r} is not in {tuple(order)}")
        s = s[:, order.index(positive_class)]
    elif class_order is not None and positive_class not in list(class_order):
        raise InvalidInput(f"{positive_class!r} is not in {tuple(class_order)}")
    y = np.array([t == positive_class for t in true_labels], dtype=bool)
    if s.shape != y.shape:
        raise InvalidInput(f"{len(y)} labels but {s.shape[0]} scores")
    if not np.all(np.isfinite(s)):
        raise InvalidInput("scores must be finite")
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateCurve(
            f"class {positive_class!r} has {n_pos} positives and {n_neg} negatives"
        )
    order = np.argsort(-s, kind="mergesort")
    s_sorted = s[order]
    y_sorted = y[order]
    # last index of each run of equal scores
    run_ends = np.r_[np.nonzero(np.diff(s_sorted))[0], s_sorted.size - 1]
    tp = np.cumsum(y_sorted)[run_ends]
    fp = (run_ends + 1) - tp
    tpr = np.r_[0.0, tp / n_pos]
    fpr = np.r_[0.0, fp / n_neg]
    thresholds = np.r_[np.inf, s_sorted[run_ends]]
    auc = float(np.sum((fpr[1:] - fpr[:-1]) * (tpr[1:] + tpr[:-1]) / 2.0))
    return RocCurve(fpr=fpr, tpr=tpr, thresholds=thresholds, auc=auc)


def mann_whitney_auc(true_labels: Sequence, scores, positive_class) -> float:
    """Fraction of positive/negative pairs ranked correctly (ties count 1/2)."""
    s = np.asarray(scores, dtype=np.float64)
    y = np.array([t == positive_class for t in true_labels], dtype=bool)
    pos, neg = s[y], s[~y]
    if pos.size == 0 or neg.size == 0:
        raise DegenerateCurve("need at least one positive and one negative")
    diff = pos[:, None] - neg[None, :]
    return float(((diff > 0).sum() + 0.5 * (diff == 0).sum()) / diff.size)


@dataclass(frozen=True)
class Interval:
    mean: float
    half_width: float

    def __str__(self) -> str:
        return f"{self.mean:.2f} ± {self.half_width:.2f}"

    def to_dict(self) -> dict:
        return {"mean": self.mean, "half_width": self.half_width, "text": str(self)}


def mean_ci(values: Sequence[float], z: float = Z_95) -> Interval:
    """Normal-approximation interval ``mean +/- z * s / sqrt(k)``."""
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1 or v.size < 2:
        raise InvalidInput("a confidence interval needs at least two fold values")
    return Interval(float(v.mean()), float(z * v.std(ddof=1) / np.sqrt(v.size)))


def sensitivity_ci(per_fold_recalls, class_order: Sequence = None, confidence: float = 0.95) -> Dict:
    """Per-class and overall recall intervals over folds.

    ``per_fold_recalls`` has shape (k, m): one row of per-class recalls per
    fold. The overall interval is taken over each fold's macro recall.
    """
    if not np.isclose(confidence, 0.95):
        raise InvalidInput("only the 95% normal-approximation interval is supported")
    R = np.asarray(per_fold_recalls, dtype=np.float64)
    if R.ndim == 1:
        R = R[:, None]
    if R.shape[0] < 2:
        raise InvalidInput("a confidence interval needs at least two folds")
    if class_order is None:
        class_order = list(range(R.shape[1]))
    per_class = {str(c): mean_ci(R[:, i]) for i, c in enumerate(class_order)}
    return {"per_class": per_class, "overall": mean_ci(R.mean(axis=1))}
