"""Classification metrics, ROC/AUC and paired significance tests.

Malignant is the positive class throughout. Metrics whose denominator is
zero are reported as ``None`` (an explicit undefined marker), never as a
silent zero; the same convention covers degenerate statistics such as a
zero-variance paired t-test.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import stats as _scipy_stats

from .errors import InvalidInputError

MCNEMAR_EXACT_LIMIT = 25  # exact binomial below this many disagreements
WILCOXON_MIN_NONZERO = 5
WILCOXON_EXACT_LIMIT = 25


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise InvalidInputError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @classmethod
    def from_predictions(cls, preds, labels) -> "ConfusionMatrix":
        preds = np.asarray(preds)
        labels = np.asarray(labels)
        if preds.shape != labels.shape:
            raise InvalidInputError("predictions and labels must align")
        return cls(
            tp=int(((preds == 1) & (labels == 1)).sum()),
            fp=int(((preds == 1) & (labels == 0)).sum()),
            tn=int(((preds == 0) & (labels == 0)).sum()),
            fn=int(((preds == 0) & (labels == 1)).sum()),
        )


@dataclass
class MetricReport:
    """Percentages in [0, 100]; ``None`` marks an undefined metric."""

    acc: float | None = None
    sen: float | None = None
    spe: float | None = None
    precision: float | None = None
    fpr: float | None = None
    f1: float | None = None
    auc: float | None = None
    mse_loss: float | None = None

    def as_dict(self) -> dict:
        return {
            "acc": self.acc,
            "sen": self.sen,
            "spe": self.spe,
            "precision": self.precision,
            "fpr": self.fpr,
            "f1": self.f1,
            "auc": self.auc,
            "mse_loss": self.mse_loss,
        }


def _ratio(num, den):
    return 100.0 * num / den if den > 0 else None


def compute_metrics(cm: ConfusionMatrix) -> MetricReport:
    """Accuracy, sensitivity, specificity, precision, FPR and F1 from counts."""
    if cm.total == 0:
        raise InvalidInputError("confusion matrix is empty")
    report = MetricReport(
        acc=_ratio(cm.tp + cm.tn, cm.total),
        sen=_ratio(cm.tp, cm.tp + cm.fn),
        spe=_ratio(cm.tn, cm.tn + cm.fp),
        precision=_ratio(cm.tp, cm.tp + cm.fp),
        fpr=_ratio(cm.fp, cm.fp + cm.tn),
    )
    if report.precision is not None and report.sen is not None:
        denom = report.precision + report.sen
        report.f1 = 2.0 * report.precision * report.sen / denom if denom > 0 else None
    return report


def mse_loss(probs, labels) -> float:
    """Mean squared error between one-hot labels and predicted probabilities."""
    probs = np.asarray(probs, dtype=np.float64)
    labels = np.asarray(labels)
    onehot = np.zeros_like(probs)
    onehot[np.arange(len(labels)), labels] = 1.0
    return float(((probs - onehot) ** 2).mean())


def roc_auc(scores, labels):
    """ROC by grouped-threshold sweep plus trapezoidal AUC.

    Returns (points, auc) where points runs from (0, 0) to (1, 1) in
    (fpr, tpr) pairs, one step per distinct score. Ties are grouped, which
    makes the trapezoidal area equal the tie-aware Mann-Whitney statistic.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise InvalidInputError("scores and labels must be aligned 1-D sequences")
    pos = int((labels == 1).sum())
    neg = int((labels == 0).sum())
    if pos == 0 or neg == 0:
        raise InvalidInputError("ROC needs at least one sample of each class")
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    l = labels[order]
    points = [(0.0, 0.0)]
    tp = fp = 0
    i = 0
    n = len(s)
    while i < n:
        j = i
        while j < n and s[j] == s[i]:
            j += 1
        tp += int((l[i:j] == 1).sum())
        fp += int((l[i:j] == 0).sum())
        points.append((fp / neg, tp / pos))
        i = j
    auc = 0.0
    for (x0, y0), (x1, y1) in zip(points, points[1:]):
        auc += (x1 - x0) * (y0 + y1) / 2.0
    return points, auc


def mann_whitney_auc(scores, labels) -> float:
    """Brute-force pairwise AUC: P(score_pos > score_neg) + 0.5 P(tie)."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    if len(pos) == 0 or len(neg) == 0:
        raise InvalidInputError("need both classes")
    wins = (pos[:, None] > neg[None, :]).sum()
    ties = (pos[:, None] == neg[None, :]).sum()
    return float((wins + 0.5 * ties) / (len(pos) * len(neg)))


class McNemarResult(NamedTuple):
    b: int  # first classifier correct, second wrong
    c: int  # first classifier wrong, second correct
    statistic: float | None
    p_value: float | None


def mcnemar_test(preds_a, preds_b, labels) -> McNemarResult:
    """Paired McNemar test on the discordant counts of two classifiers.

    Exact two-sided binomial when b + c < 25, else chi-square with
    continuity correction. No disagreements at all yields undefined
    markers.
    """
    preds_a = np.asarray(preds_a)
    preds_b = np.asarray(preds_b)
    labels = np.asarray(labels)
    if not (preds_a.shape == preds_b.shape == labels.shape):
        raise InvalidInputError("prediction and label sequences must align")
    a_ok = preds_a == labels
    b_ok = preds_b == labels
    b = int((a_ok & ~b_ok).sum())
    c = int((~a_ok & b_ok).sum())
    n = b + c
    if n == 0:
        return McNemarResult(0, 0, None, None)
    if n < MCNEMAR_EXACT_LIMIT:
        k = max(b, c)
        tail = sum(math.comb(n, i) for i in range(k, n + 1))
        p = min(1.0, 2.0 * tail / 2.0**n)
        return McNemarResult(b, c, float(min(b, c)), p)
    stat = (abs(b - c) - 1) ** 2 / n
    p = chi2_sf1(stat)
    return McNemarResult(b, c, stat, p)


def chi2_sf1(x: float) -> float:
    """Survival function of chi-square with one degree of freedom."""
    return math.erfc(math.sqrt(x / 2.0))


def paired_t_test(xs, ys):
    """Two-sided paired t-test; (None, None) when the statistic is undefined."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.shape != ys.shape:
        raise InvalidInputError("paired samples must have equal length")
    n = xs.size
    if n < 2:
        return None, None
    d = xs - ys
    sd = d.std(ddof=1)
    if sd == 0.0:
        return None, None
    t = float(d.mean() / (sd / math.sqrt(n)))
    p = 2.0 * float(_scipy_stats.t.sf(abs(t), n - 1))
    return t, p


def wilcoxon_signed_rank(xs, ys):
    """Two-sided Wilcoxon signed-rank test on paired samples.

    Zero differences are dropped; fewer than five nonzero differences
    yields undefined markers. Exact tail by rank-sum enumeration up to
    n = 25, normal approximation beyond.
    """
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.shape != ys.shape:
        raise InvalidInputError("paired samples must have equal length")
    d = xs - ys
    d = d[d != 0.0]
    n = d.size
    if n < WILCOXON_MIN_NONZERO:
        return None, None
    ranks = _average_ranks(np.abs(d))
    w_pos = float(ranks[d > 0].sum())
    w_neg = float(ranks[d < 0].sum())
    w = min(w_pos, w_neg)
    if n <= WILCOXON_EXACT_LIMIT:
        p = _wilcoxon_exact_p(ranks, w)
    else:
        mean = n * (n + 1) / 4.0
        var = n * (n + 1) * (2 * n + 1) / 24.0
        z = (w - mean + 0.5) / math.sqrt(var)
        p = min(1.0, 2.0 * 0.5 * math.erfc(-z / math.sqrt(2.0)))
    return w, p


def _average_ranks(values):
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values))
    i = 0
    while i < len(values):
        j = i
        while j < len(values) and values[order[j]] == values[order[i]]:
            j += 1
        ranks[order[i:j]] = (i + j + 1) / 2.0  # average of 1-based positions
        i = j
    return ranks

def _wilcoxon_exact_p(ranks, w):
    # distribution of the positive-rank sum over all 2^n sign assignments,
    # in half-rank units so tied (half-integer) ranks stay integral
    units = np.rint(ranks * 2).astype(np.int64)
    total = int(units.sum())
    counts = np.zeros(total + 1, dtype=np.float64)
    counts[0] = 1.0
    for u in units:
        shifted = np.zeros_like(counts)
        shifted[u:] = counts[: total + 1 - u]
        counts = counts + shifted
    w_units = int(round(w * 2))
    tail = counts[: w_units + 1].sum()
    return min(1.0, 2.0 * tail / 2.0 ** len(units))


def mean_sd(values):
    """Mean and sample (n-1) standard deviation."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise InvalidInputError("no values to aggregate")
    mean = float(values.mean())
    sd = float(values.std(ddof=1)) if values.size > 1 else 0.0
    return mean, sd


def format_p(p: float | None) -> str:
    """Four-decimal p-value string; tiny values print as 0.0000."""
    if p is None:
        return "nan"
    return f"{p:.4f}"
