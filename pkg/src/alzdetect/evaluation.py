"""Dataset splitting, metrics, the multi-seed protocol, variant
comparison, and the feature-ablation harness.

AUC is computed two independent ways (positive/negative pair counting
and trapezoidal ROC integration) over a common integer numerator, so the
two agree exactly, ties included. Metrics are averaged metric-by-metric
across seeds; confusion counts are averaged the same way, which is why
they are reals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .lexical_features import EncodedInstance
from .model import (
    ModelConfig,
    VARIANTS,
    active_feature_indices,
    classify,
    fit,
    predict,
    variant_config,
)

ABLATION_LABELS = {"psych": "No Psych.", "sent": "No Sent.", "demo": "No Demo."}


class TooSmall(ValueError):
    pass


class LengthMismatch(ValueError):
    pass


# ---------------------------------------------------------------------------
# splitting

@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.81
    val_fraction: float = 0.09
    test_fraction: float = 0.10
    seed: int = 0
    unit: str = "transcript"

    def __post_init__(self):
        total = self.train_fraction + self.val_fraction + self.test_fraction
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"fractions sum to {total}, expected 1.0")
        if min(self.train_fraction, self.val_fraction, self.test_fraction) < 0:
            raise ValueError("fractions must be non-negative")
        if self.unit not in ("transcript", "participant"):
            raise ValueError(f"unknown split unit {self.unit!r}")


def _slice_sizes(n: int, spec: SplitSpec) -> tuple[int, int, int]:
    n_train = math.floor(spec.train_fraction * n)
    n_val = math.floor(spec.val_fraction * n)
    return n_train, n_val, n - n_train - n_val


def split(items: list, spec: SplitSpec) -> tuple[list, list, list]:
    """Seeded shuffle, then contiguous slices: floor(train·N),
    floor(val·N), remainder to test.

    With unit="participant" the shuffle-and-slice runs over participant
    ids, keeping all of a participant's items on one side; items must
    then expose ``.participant_id``.
    """
    if not items:
        raise TooSmall("nothing to split")
    rng = np.random.default_rng(spec.seed)
    if spec.unit == "participant":
        units: list = []
        by_unit: dict = {}
        for item in items:
            pid = item.participant_id
            if pid not in by_unit:
                units.append(pid)
                by_unit[pid] = []
            by_unit[pid].append(item)
        order = rng.permutation(len(units))
        n_train, n_val, n_test = _slice_sizes(len(units), spec)
        if min(n_train, n_val, n_test) < 1:
            raise TooSmall(f"{len(units)} participants leave an empty slice")
        shuffled = [units[i] for i in order]
        parts = (shuffled[:n_train],
                 shuffled[n_train:n_train + n_val],
                 shuffled[n_train + n_val:])
        train, val, test = ([x for pid in part for x in by_unit[pid]]
                            for part in parts)
    else:
        order = rng.permutation(len(items))
        n_train, n_val, n_test = _slice_sizes(len(items), spec)
        if min(n_train, n_val, n_test) < 1:
            raise TooSmall(f"{len(items)} items leave an empty slice")
        shuffled = [items[i] for i in order]
        train = shuffled[:n_train]
        val = shuffled[n_train:n_train + n_val]
        test = shuffled[n_train + n_val:]
    return train, val, test


# ---------------------------------------------------------------------------
# metrics

@dataclass(frozen=True)
class ConfusionCounts:
    tn: float
    fp: float
    fn: float
    tp: float

    def __post_init__(self):
        if min(self.tn, self.fp, self.fn, self.tp) < 0:
            raise ValueError("confusion counts must be >= 0")

    def total(self) -> float:
        return self.tn + self.fp + self.fn + self.tp


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    precision: float
    recall: float
    f1: float
    auc: float
    counts: ConfusionCounts
    undefined: tuple[str, ...] = ()


def confusion(labels, predictions) -> ConfusionCounts:
    """Counts with 1 as the positive class."""
    y = np.asarray(labels)
    p = np.asarray(predictions)
    if y.shape != p.shape:
        raise LengthMismatch(f"{y.shape} labels vs {p.shape} predictions")
    return ConfusionCounts(
        tn=float(np.sum((y == 0) & (p == 0))),
        fp=float(np.sum((y == 0) & (p == 1))),
        fn=float(np.sum((y == 1) & (p == 0))),
        tp=float(np.sum((y == 1) & (p == 1))),
    )


def _auc_numerator_pairs(pos: np.ndarray, neg: np.ndarray) -> int:
    """2·(wins) + 1·(ties) over all positive/negative score pairs."""
    num = 0
    for s in pos:
        num += 2 * int(np.sum(s > neg)) + int(np.sum(s == neg))
    return num


def auc_pair(labels, scores) -> float:
    """AUC by brute-force pair counting; ties count half."""
    y = np.asarray(labels)
    s = np.asarray(scores, dtype=np.float64)
    if y.shape != s.shape:
        raise LengthMismatch(f"{y.shape} labels vs {s.shape} scores")
    pos, neg = s[y == 1], s[y == 0]
    if len(pos) == 0 or len(neg) == 0:
        raise ValueError("AUC needs both classes present")
    return _auc_numerator_pairs(pos, neg) / (2 * len(pos) * len(neg))


def roc_points(labels, scores) -> list[tuple[float, float]]:
    """(FPR, TPR) points from (0,0) to (1,1), one per distinct score."""
    y = np.asarray(labels)
    s = np.asarray(scores, dtype=np.float64)
    n_pos = int(np.sum(y == 1))
    n_neg = int(np.sum(y == 0))
    if n_pos == 0 or n_neg == 0:
        raise ValueError("ROC needs both classes present")
    order = np.argsort(-s, kind="stable")
    points = [(0.0, 0.0)]
    tp = fp = 0
    i = 0
    while i < len(order):
        j = i
        while j < len(order) and s[order[j]] == s[order[i]]:
            tp += int(y[order[j]] == 1)
            fp += int(y[order[j]] == 0)
            j += 1
        points.append((fp / n_neg, tp / n_pos))
        i = j
    return points


def auc_trapezoid(labels, scores) -> float:
    """AUC by trapezoidal integration of the ROC curve.

    The area accumulates as an integer numerator over 2·P·N, the same
    denominator the pair count uses, so both routes agree bit-for-bit.
    """
    y = np.asarray(labels)
    s = np.asarray(scores, dtype=np.float64)
    if y.shape != s.shape:
        raise LengthMismatch(f"{y.shape} labels vs {s.shape} scores")
    n_pos = int(np.sum(y == 1))
    n_neg = int(np.sum(y == 0))
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs both classes present")
    order = np.argsort(-s, kind="stable")
    num = 0
    tp = fp = 0
    i = 0
    while i < len(order):
        j = i
        prev_tp, prev_fp = tp, fp
        while j < len(order) and s[order[j]] == s[order[i]]:
            tp += int(y[order[j]] == 1)
            fp += int(y[order[j]] == 0)
            j += 1
        num += (fp - prev_fp) * (tp + prev_tp)
        i = j
    return num / (2 * n_pos * n_neg)


def metrics(counts: ConfusionCounts, scores=None, labels=None) -> MetricsReport:
    """Threshold metrics from counts plus AUC from raw scores.

    Zero-denominator metrics come back 0.0 and flagged; AUC on a
    single-class score set is flagged the same way.
    """
    undefined: list[str] = []

    def ratio(num, den, name):
        if den == 0:
            undefined.append(name)
            return 0.0
        return num / den

    accuracy = ratio(counts.tp + counts.tn, counts.total(), "accuracy")
    precision = ratio(counts.tp, counts.tp + counts.fp, "precision")
    recall = ratio(counts.tp, counts.tp + counts.fn, "recall")
    f1 = ratio(2 * precision * recall, precision + recall, "f1")
    auc = 0.0
    if scores is None or labels is None:
        undefined.append("auc")
    else:
        y = np.asarray(labels)
        if 0 < np.sum(y == 1) < len(y):
            auc = auc_pair(labels, scores)
        else:
            undefined.append("auc")
    return MetricsReport(accuracy=accuracy, precision=precision, recall=recall,
                         f1=f1, auc=auc, counts=counts,
                         undefined=tuple(undefined))


def evaluate_scores(labels, scores) -> MetricsReport:
    """Metrics of hard 0.5-threshold predictions plus score-based AUC."""
    counts = confusion(labels, classify(scores))
    return metrics(counts, scores, labels)


# ---------------------------------------------------------------------------
# experiment protocol

@dataclass(frozen=True)
class ExperimentResult:
    variant: str
    seeds: tuple[int, ...]
    per_seed: tuple[MetricsReport, ...]
    mean: MetricsReport
    feature_dim: int


def mean_report(reports: list[MetricsReport]) -> MetricsReport:
    """Arithmetic mean of every metric and every confusion count."""
    n = len(reports)
    counts = ConfusionCounts(
        tn=sum(r.counts.tn for r in reports) / n,
        fp=sum(r.counts.fp for r in reports) / n,
        fn=sum(r.counts.fn for r in reports) / n,
        tp=sum(r.counts.tp for r in reports) / n,
    )
    flags = sorted({f for r in reports for f in r.undefined})
    return MetricsReport(
        accuracy=sum(r.accuracy for r in reports) / n,
        precision=sum(r.precision for r in reports) / n,
        recall=sum(r.recall for r in reports) / n,
        f1=sum(r.f1 for r in reports) / n,
        auc=sum(r.auc for r in reports) / n,
        counts=counts,
        undefined=tuple(flags),
    )


def run_experiment(instances: list[EncodedInstance], config: ModelConfig,
                   seeds: list[int], variant: str = "",
                   split_spec: SplitSpec | None = None) -> ExperimentResult:
    """split -> fit -> evaluate-on-test once per seed, then average.

    Each seed reseeds both the split shuffle and the model (init,
    batch order, dropout).
    """
    if not seeds:
        raise ValueError("need at least one seed")
    base_split = split_spec or SplitSpec()
    reports = []
    for seed in seeds:
        train, val, test = split(instances, replace(base_split, seed=seed))
        cfg = replace(config, seed=seed)
        params, _ = fit(cfg, train, val)
        scores = predict(params, cfg, test)
        labels = np.array([i.label for i in test])
        reports.append(metrics(confusion(labels, classify(scores)), scores, labels))
    return ExperimentResult(
        variant=variant,
        seeds=tuple(seeds),
        per_seed=tuple(reports),
        mean=mean_report(reports),
        feature_dim=len(active_feature_indices(config)),
    )


def compare_variants(instances: list[EncodedInstance], seeds: list[int],
                     base: ModelConfig | None = None,
                     split_spec: SplitSpec | None = None) -> list[ExperimentResult]:
    """The six-variant comparison, rows in VARIANTS order."""
    base = base or ModelConfig()
    return [run_experiment(instances, variant_config(name, base), seeds,
                           variant=name, split_spec=split_spec)
            for name in VARIANTS]


def ablate(instances: list[EncodedInstance], seeds: list[int],
           groups: list[str] | None = None,
           base: ModelConfig | None = None,
           split_spec: SplitSpec | None = None) -> list[ExperimentResult]:
    """Rerun the full model with one targeted-feature group removed per row."""
    groups = list(ABLATION_LABELS) if groups is None else groups
    if not groups:
        raise ValueError("need at least one group to ablate")
    unknown = set(groups) - set(ABLATION_LABELS)
    if unknown:
        raise ValueError(f"unknown feature groups {sorted(unknown)}")
    base = base or ModelConfig()
    full = variant_config("OURS-Att-w", base)
    results = []
    for group in groups:
        kept = tuple(g for g in ("psych", "sent", "demo") if g != group)
        cfg = replace(full, feature_mask=kept)
        results.append(run_experiment(instances, cfg, seeds,
                                      variant=ABLATION_LABELS[group],
                                      split_spec=split_spec))
    return results


# ---------------------------------------------------------------------------
# report rendering

_CSV_HEADER = "variant,seed,accuracy,precision,recall,f1,auc,tn,fp,fn,tp,feature_dim"


def _csv_row(variant: str, seed: str, r: MetricsReport, feature_dim: int) -> str:
    cells = [variant, seed]
    cells += [f"{v:.6f}" for v in (r.accuracy, r.precision, r.recall, r.f1, r.auc,
                                   r.counts.tn, r.counts.fp, r.counts.fn, r.counts.tp)]
    cells.append(str(feature_dim))
    return ",".join(cells)


def results_csv(results: list[ExperimentResult]) -> str:
    """One mean row per variant plus one row per seed, byte-stable."""
    lines = [_CSV_HEADER]
    for res in results:
        for seed, rep in zip(res.seeds, res.per_seed):
            lines.append(_csv_row(res.variant, str(seed), rep, res.feature_dim))
        lines.append(_csv_row(res.variant, "mean", res.mean, res.feature_dim))
    return "\n".join(lines) + "\n"


def roc_csv(labels, scores) -> str:
    lines = ["fpr,tpr"]
    lines += [f"{fpr:.6f},{tpr:.6f}" for fpr, tpr in roc_points(labels, scores)]
    return "\n".join(lines) + "\n"


def format_table(results: list[ExperimentResult]) -> str:
    """Aligned human-readable summary of the mean rows."""
    header = ["Variant", "Acc", "Prec", "Rec", "F1", "AUC", "TN", "FP", "FN", "TP"]
    rows = [header]
    for res in results:
        m = res.mean
        rows.append([res.variant] +
                    [f"{v:.4f}" for v in (m.accuracy, m.precision, m.recall, m.f1, m.auc)] +
                    [f"{c:.1f}" for c in (m.counts.tn, m.counts.fp, m.counts.fn, m.counts.tp)])
    widths = [max(len(row[i]) for row in rows) for i in range(len(header))]
    out = []
    for row in rows:
        out.append("  ".join(cell.ljust(w) if i == 0 else cell.rjust(w)
                             for i, (cell, w) in enumerate(zip(row, widths))))
    return "\n".join(out) + "\n"
