"""Cross-validation, hidden-neuron sweep and feature-subset ablation."""
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import elm
from .errors import DegenerateCurve, InvalidInput, NumericalFailure
from .features import LAYOUT_DIGEST, SUBSETS, select_subset
from .metrics import (
    ClassReport,
    ConfusionMatrix,
    class_report,
    confusion,
    roc_one_vs_rest,
    sensitivity_ci,
)

log = logging.getLogger(__name__)


def thread_count() -> int:
    """Worker cap from ``COVELM_THREADS`` (default 1)."""
    raw = os.environ.get("COVELM_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        log.warning("ignoring non-integer COVELM_THREADS=%r", raw)
        return 1


@dataclass(frozen=True)
class FoldPlan:
    k: int
    assignments: np.ndarray
    seed: int
    stratified: bool

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments != fold)


def kfold_split(labels: Sequence, k: int = 10, seed: int = 0, stratified: bool = True) -> FoldPlan:
    """Assign every sample to one of ``k`` folds.

    Stratified plans shuffle each class and deal it round-robin, carrying
    the dealing position across classes so overall fold sizes also stay
    within one of each other.
    """
    labels = list(labels)
    n = len(labels)
    if k < 2:
        raise InvalidInput("k must be at least 2")
    if n < k:
        raise InvalidInput(f"{n} samples cannot fill {k} folds")
    rng = np.random.default_rng(seed)
    assignments = np.empty(n, dtype=np.int64)
    if stratified:
        classes = elm.resolve_class_order(labels)
        arr = np.array(labels, dtype=object)
        offset = 0
        for c in classes:
            members = np.flatnonzero(arr == c)
            if members.size == 0:
                continue
            if members.size < k:
                raise InvalidInput(f"class {c!r} has {members.size} samples, fewer than k={k}")
            members = rng.permutation(members)
            assignments[members] = (offset + np.arange(members.size)) % k
            offset = (offset + members.size) % k
    else:
        order = rng.permutation(n)
        assignments[order] = np.arange(n) % k
    return FoldPlan(k=k, assignments=assignments, seed=int(seed), stratified=stratified)


@dataclass
class FoldResult:
    index: int
    test_indices: np.ndarray
    confusion: ConfusionMatrix
    report: ClassReport
    auc: Dict[str, Optional[float]]
    standardizer: elm.Standardizer
    seed: int

    def to_dict(self) -> dict:
        return {
            "fold": self.index,
            "seed": self.seed,
            "n_test": int(self.test_indices.size),
            "confusion": self.confusion.to_dict(),
            "metrics": self.report.to_dict(),
            "auc": self.auc,
        }


@dataclass
class CvReport:
    folds: List[FoldResult]
    pooled: ConfusionMatrix
    report: ClassReport
    sensitivity: dict
    roc: dict
    config: dict
    scores: np.ndarray = field(repr=False)

    @property
    def accuracy(self) -> float:
        return self.report.accuracy

    def fold_recalls(self) -> np.ndarray:
        return np.array([f.report.recall for f in self.folds])

    def fold_macro_sensitivity(self) -> List[float]:
        return [float(f.report.recall.mean()) for f in self.folds]

    def to_dict(self) -> dict:
        sens = {
            "method": "normal approximation over folds: mean ± 1.96·s/√k",
            "per_class": {c: iv.to_dict() for c, iv in self.sensitivity["per_class"].items()},
            "overall": self.sensitivity["overall"].to_dict(),
        }
        return {
            "config": self.config,
            "pooled_confusion": self.pooled.to_dict(),
            "metrics": self.report.to_dict(),
            "sensitivity_ci": sens,
            "roc": self.roc,
            "folds": [f.to_dict() for f in self.folds],
        }


def _run_fold(X, labels, plan, fold, L, activation, seed, class_order):
    tr = plan.train_indices(fold)
    te = plan.test_indices(fold)
    fold_seed = seed + fold
    try:
        model = elm.train(X[tr], [labels[i] for i in tr], L=L, activation=activation,
                          seed=fold_seed, class_order=class_order)
    except InvalidInput as exc:
        raise InvalidInput(f"fold {fold}: {exc}") from exc
    except NumericalFailure as exc:
        raise NumericalFailure(f"fold {fold}: {exc}") from exc
    scores, predicted = elm.predict(model, X[te])
    truth = [labels[i] for i in te]
    cm = confusion(truth, predicted, class_order)
    auc = {}
    for c in class_order:
        try:
            auc[str(c)] = roc_one_vs_rest(truth, scores, c, class_order).auc
        except DegenerateCurve:
            auc[str(c)] = None
    result = FoldResult(index=fold, test_indices=te, confusion=cm, report=class_report(cm),
                        auc=auc, standardizer=model.standardizer, seed=fold_seed)
    return result, scores


def cross_validate(
    features,
    labels: Sequence,
    plan: FoldPlan,
    L: int = elm.DEFAULT_HIDDEN,
    activation: str = elm.DEFAULT_ACTIVATION,
    seed: int = 0,
    subset: str = "combined",
    class_order: Optional[Sequence] = None,
    extra_config: Optional[dict] = None,
) -> CvReport:
    """k-fold evaluation of the ELM; fold ``i`` trains with seed ``seed + i``."""
    labels = [elm._plain(lab) for lab in labels]
    X = np.asarray(features, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != len(labels):
        raise InvalidInput(f"features have shape {X.shape} for {len(labels)} labels")
    if plan.assignments.shape != (len(labels),):
        raise InvalidInput("fold plan does not cover the dataset")
    if subset not in SUBSETS:
        raise InvalidInput(f"unknown subset {subset!r}; expected one of {SUBSETS}")
    if X.shape[1] == 168:
        X = select_subset(X, subset)
    elif subset != "combined":
        raise InvalidInput("feature subsets need the full 168-column layout")
    order = elm.resolve_class_order(labels, class_order)

    def work(fold):
        return _run_fold(X, labels, plan, fold, L, activation, seed, order)

    workers = min(thread_count(), plan.k)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(work, range(plan.k)))
    else:
        outcomes = [work(f) for f in range(plan.k)]

    folds = [o[0] for o in outcomes]
    all_scores = np.zeros((len(labels), len(order)))
    for fold, (_, scores) in zip(folds, outcomes):
        all_scores[fold.test_indices] = scores
    pooled = folds[0].confusion
    for f in folds[1:]:
        pooled = pooled + f.confusion

    roc = {}
    for c in order:
        try:
            curve = roc_one_vs_rest(labels, all_scores, c, order)
            roc[str(c)] = {"auc": curve.auc, "fpr": curve.fpr.tolist(), "tpr": curve.tpr.tolist()}
        except DegenerateCurve:
            roc[str(c)] = None

    config = {
        "k": plan.k,
        "stratified": plan.stratified,
        "plan_seed": plan.seed,
        "hidden": L,
        "activation": activation,
        "seed": seed,
        "subset": subset,
        "n_samples": len(labels),
        "n_features": int(X.shape[1]),
        "class_order": [str(c) for c in order],
        "layout_digest": LAYOUT_DIGEST,
    }
    if extra_config:
        config.update(extra_config)
    recalls = np.array([f.report.recall for f in folds])
    return CvReport(
        folds=folds,
        pooled=pooled,
        report=class_report(pooled),
        sensitivity=sensitivity_ci(recalls, order),
        roc=roc,
        config=config,
        scores=all_scores,
    )


def sweep_hidden(features, labels, plan, L_values: Sequence[int], activation=elm.DEFAULT_ACTIVATION,
                 seed: int = 0, subset: str = "combined") -> List[dict]:
    """One cross-validation per hidden size, sharing the fold plan and seed."""
    L_values = list(L_values)
    if not L_values or any(int(v) < 1 for v in L_values):
        raise InvalidInput("L_values must be a non-empty list of positive integers")
    rows = []
    for L in L_values:
        rep = cross_validate(features, labels, plan, L=int(L), activation=activation,
                             seed=seed, subset=subset)
        rows.append({"hidden": int(L), "accuracy": rep.accuracy, "macro_f1": rep.report.macro_f1})
        log.info("L=%d accuracy=%.4f", L, rep.accuracy)
    return rows


def ablate_subsets(features, labels, plan, L: int = elm.DEFAULT_HIDDEN,
                   activation=elm.DEFAULT_ACTIVATION, seed: int = 0) -> Dict[str, dict]:
    """Per-fold macro sensitivity for the frequency, texture and combined sets."""
    out = {}
    for subset in ("frequency", "texture", "combined"):
        rep = cross_validate(features, labels, plan, L=L, activation=activation,
                             seed=seed, subset=subset)
        sens = rep.fold_macro_sensitivity()
        out[subset] = {
            "fold_sensitivity": sens,
            "median": float(np.median(sens)),
            "accuracy": rep.accuracy,
        }
    return out
