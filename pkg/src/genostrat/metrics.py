"""Classification and clustering evaluation.

Classification: confusion matrix, support-weighted precision/recall/F-beta and
RMSE on class indices.  Clustering: Rand index, adjusted Rand index, NMI,
clustering accuracy under the best one-to-one cluster/class matching, and the
train/validation loss ratio G.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import asdict, dataclass, fields
from typing import Hashable, Iterable, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import (
    EmptyMatrix,
    LengthMismatch,
    TooFewPoints,
    UnknownLabel,
    ZeroValidationLoss,
)


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    labels: tuple
    counts: np.ndarray  # counts[i, j]: true class i predicted as j

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def support(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def errors(self) -> np.ndarray:
        """Per-class error (support - correct) / support; 0 for empty classes."""
        sup = self.support
        wrong = sup - np.diag(self.counts)
        with np.errstate(invalid="ignore", divide="ignore"):
            err = np.where(sup > 0, wrong / np.where(sup > 0, sup, 1), 0.0)
        return err

    def to_rows(self) -> list[list]:
        rows = []
        for i, lab in enumerate(self.labels):
            sup = int(self.support[i])
            wrong = sup - int(self.counts[i, i])
            rows.append([lab, *self.counts[i].tolist(), f"{self.errors[i]:.4f}", f"{wrong}/{sup}"])
        return rows


def _encode(values: Sequence, vocabulary: Sequence) -> np.ndarray:
    index = {v: i for i, v in enumerate(vocabulary)}
    out = np.empty(len(values), dtype=np.int64)
    for k, v in enumerate(values):
        try:
            out[k] = index[v]
        except (KeyError, TypeError):
            raise UnknownLabel(f"label {v!r} not in vocabulary") from None
    return out


def confusion_matrix(y_true: Sequence, y_pred: Sequence, vocabulary: Sequence) -> ConfusionMatrix:
    if len(y_true) != len(y_pred):
        raise LengthMismatch(f"{len(y_true)} true labels vs {len(y_pred)} predictions")
    t = _encode(list(y_true), vocabulary)
    p = _encode(list(y_pred), vocabulary)
    m = len(vocabulary)
    counts = np.zeros((m, m), dtype=np.int64)
    np.add.at(counts, (t, p), 1)
    return ConfusionMatrix(tuple(vocabulary), counts)


def per_class_prf(cm: ConfusionMatrix, beta: float = 1.0) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    c = cm.counts.astype(np.float64)
    tp = np.diag(c)
    predicted = c.sum(axis=0)
    actual = c.sum(axis=1)
    ppv = np.divide(tp, predicted, out=np.zeros_like(tp), where=predicted > 0)
    tpr = np.divide(tp, actual, out=np.zeros_like(tp), where=actual > 0)
    b2 = beta * beta
    denom = b2 * ppv + tpr
    f = np.divide((1 + b2) * ppv * tpr, denom, out=np.zeros_like(tp), where=denom > 0)
    return ppv, tpr, f


def weighted_prf(cm: ConfusionMatrix, beta: float = 1.0) -> tuple[float, float, float]:
    """Precision, recall and F-beta averaged with weights = true-class support / N."""
    n = cm.total
    if n == 0:
        raise EmptyMatrix("confusion matrix has no entries")
    ppv, tpr, f = per_class_prf(cm, beta)
    w = cm.support / n
    return float(w @ ppv), float(w @ tpr), float(w @ f)


def rmse(y_true: Sequence[float], y_pred: Sequence[float]) -> float:
    t = np.asarray(y_true, dtype=np.float64)
    p = np.asarray(y_pred, dtype=np.float64)
    if t.shape != p.shape:
        raise LengthMismatch(f"{t.shape} vs {p.shape}")
    if t.size == 0:
        raise EmptyMatrix("rmse of empty vectors")
    return float(math.sqrt(np.mean((t - p) ** 2)))


@dataclass(frozen=True)
class ClassificationScore:
    accuracy: float
    weighted_precision: float
    weighted_recall: float
    weighted_f1: float
    rmse: float


def classification_score(y_true: Sequence[int], y_pred: Sequence[int], n_classes: int,
                         beta: float = 1.0) -> ClassificationScore:
    """Score integer class predictions; RMSE is taken on the class indices."""
    t = np.asarray(y_true, dtype=np.int64)
    p = np.asarray(y_pred, dtype=np.int64)
    cm = confusion_matrix(t.tolist(), p.tolist(), list(range(n_classes)))
    prec, rec, f1 = weighted_prf(cm, beta)
    acc = float(np.trace(cm.counts) / cm.total)
    return ClassificationScore(acc, prec, rec, f1, rmse(t, p))


def mean_score(scores: Sequence[ClassificationScore]) -> ClassificationScore:
    names = [f.name for f in fields(ClassificationScore)]
    return ClassificationScore(*[float(np.mean([getattr(s, n) for s in scores])) for n in names])


# clustering -----------------------------------------------------------------

def _codes(labels: Sequence[Hashable]) -> np.ndarray:
    index: dict = {}
    return np.array([index.setdefault(v, len(index)) for v in labels], dtype=np.int64)


def contingency(labels_a: Sequence, labels_b: Sequence) -> np.ndarray:
    if len(labels_a) != len(labels_b):
        raise LengthMismatch(f"{len(labels_a)} vs {len(labels_b)} labels")
    a = _codes(list(labels_a))
    b = _codes(list(labels_b))
    table = np.zeros((a.max(initial=-1) + 1, b.max(initial=-1) + 1), dtype=np.int64)
    np.add.at(table, (a, b), 1)
    return table


def _comb2(x) -> np.ndarray | float:
    x = np.asarray(x, dtype=np.float64)
    return x * (x - 1.0) / 2.0


def pair_counts(labels_a: Sequence, labels_b: Sequence) -> tuple[int, int, int, int]:
    """(TP, FP, FN, TN) over all unordered pairs; TP = together in both partitions.

    FP = apart in ``labels_a`` but together in ``labels_b``; FN the reverse.
    """
    table = contingency(labels_a, labels_b)
    n = int(table.sum())
    together_both = int(_comb2(table).sum())
    together_a = int(_comb2(table.sum(axis=1)).sum())
    together_b = int(_comb2(table.sum(axis=0)).sum())
    total = n * (n - 1) // 2
    tp = together_both
    fn = together_a - tp
    fp = together_b - tp
    tn = total - tp - fp - fn
    return tp, fp, fn, tn


def rand_index(labels_a: Sequence, labels_b: Sequence) -> float:
    if len(labels_a) != len(labels_b):
        raise LengthMismatch(f"{len(labels_a)} vs {len(labels_b)} labels")
    if len(labels_a) < 2:
        raise TooFewPoints("rand index needs at least two points")
    tp, fp, fn, tn = pair_counts(labels_a, labels_b)
    return (tp + tn) / (tp + fp + fn + tn)


def adjusted_rand_index(labels_a: Sequence, labels_b: Sequence) -> float:
    """Hubert-Arabie adjusted Rand index.

    When the expected and maximum index coincide (both partitions trivial in the
    same way) the result is 1 for identical partitions and 0 otherwise.
    """
    if len(labels_a) != len(labels_b):
        raise LengthMismatch(f"{len(labels_a)} vs {len(labels_b)} labels")
    n = len(labels_a)
    if n < 2:
        raise TooFewPoints("adjusted rand index needs at least two points")
    table = contingency(labels_a, labels_b)
    index = float(_comb2(table).sum())
    sum_a = float(_comb2(table.sum(axis=1)).sum())
    sum_b = float(_comb2(table.sum(axis=0)).sum())
    expected = sum_a * sum_b / _comb2(n)
    max_index = 0.5 * (sum_a + sum_b)
    if max_index == expected:
        return 1.0 if _same_partition(table) else 0.0
    return float((index - expected) / (max_index - expected))


def _same_partition(table: np.ndarray) -> bool:
    nz = table > 0
    return bool((nz.sum(axis=0) == 1).all() and (nz.sum(axis=1) == 1).all())


def _entropy(counts: np.ndarray, n: int) -> float:
    p = counts[counts > 0] / n
    return float(-(p * np.log(p)).sum())


def mutual_information(labels_a: Sequence, labels_b: Sequence) -> float:
    table = contingency(labels_a, labels_b).astype(np.float64)
    n = table.sum()
    outer = np.outer(table.sum(axis=1), table.sum(axis=0))
    nz = table > 0
    return float((table[nz] / n * np.log(table[nz] * n / outer[nz])).sum())


def nmi(labels_a: Sequence, labels_b: Sequence) -> float:
    """I(a, b) / mean(H(a), H(b)), natural log; 1 when both partitions are a single cluster."""
    table = contingency(labels_a, labels_b)
    n = int(table.sum())
    if n == 0:
        raise TooFewPoints("nmi of empty labelings")
    h_a = _entropy(table.sum(axis=1), n)
    h_b = _entropy(table.sum(axis=0), n)
    if h_a == 0.0 and h_b == 0.0:
        return 1.0
    value = mutual_information(labels_a, labels_b) / (0.5 * (h_a + h_b))
    return float(min(max(value, 0.0), 1.0))


def clustering_accuracy(truth: Sequence, assignment: Sequence) -> float:
    """Best one-to-one cluster -> class matching accuracy (Hungarian assignment)."""
    if len(truth) != len(assignment):
        raise LengthMismatch(f"{len(truth)} vs {len(assignment)} labels")
    n = len(truth)
    if n == 0:
        raise TooFewPoints("clustering accuracy of empty labelings")
    table = contingency(assignment, truth)
    size = max(table.shape)
    square = np.zeros((size, size), dtype=np.int64)
    square[: table.shape[0], : table.shape[1]] = table
    rows, cols = linear_sum_assignment(square, maximize=True)
    return float(square[rows, cols].sum() / n)


def generalizability(loss_train: float, loss_validation: float) -> float:
    if loss_validation <= 0:
        raise ZeroValidationLoss(f"validation loss must be positive, got {loss_validation}")
    return float(loss_train / loss_validation)


@dataclass(frozen=True)
class ClusteringScore:
    ri: float
    ari: float
    nmi: float
    acc: float
    g: float | None = None


def clustering_score(truth: Sequence, assignment: Sequence, g: float | None = None) -> ClusteringScore:
    return ClusteringScore(
        ri=rand_index(truth, assignment),
        ari=adjusted_rand_index(truth, assignment),
        nmi=nmi(truth, assignment),
        acc=clustering_accuracy(truth, assignment),
        g=g,
    )


# reports ---------------------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def format_report(score, prefix: str = "") -> str:
    """``field=value`` lines for a score dataclass (floats at full precision)."""
    lines = []
    for k, v in asdict(score).items():
        if v is None:
            continue
        lines.append(f"{prefix}{k}={_fmt(v)}")
    return "\n".join(lines) + "\n"


def write_score_csv(rows: Iterable[tuple[str, object]], path: str | os.PathLike) -> None:
    """Two-column (metric, value) CSV."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["metric", "value"])
        for k, v in rows:
            w.writerow([k, _fmt(v)])


def write_confusion_csv(cm: ConfusionMatrix, path: str | os.PathLike) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["group", *cm.labels, "error", "support"])
        w.writerows(cm.to_rows())
