"""Classification metrics, optimism correction, stability, and recovery analytics.

All functions here are pure; undefined quantities (empty predicted class,
degenerate stability denominators) are reported as NaN so aggregation can
exclude them instead of crashing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

METRIC_NAMES = ("auc", "accuracy", "sensitivity", "specificity", "ppv", "npv")


@dataclass(frozen=True)
class BinaryMetrics:
    auc: float
    accuracy: float
    sensitivity: float
    specificity: float
    ppv: float
    npv: float

    def as_dict(self):
        return {name: getattr(self, name) for name in METRIC_NAMES}


def rank_auc(scores, labels):
    """AUC via the Mann-Whitney statistic; tied scores count one half."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    n1 = int(labels.sum())
    n0 = labels.size - n1
    if n1 == 0 or n0 == 0:
        raise ValueError("AUC needs both classes")
    ranks = rankdata(scores)
    return float((ranks[labels == 1].sum() - n1 * (n1 + 1) / 2.0) / (n0 * n1))


def binary_metrics(scores, labels, threshold=0.5) -> BinaryMetrics:
    """AUC plus thresholded confusion metrics; PPV/NPV are NaN when undefined."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if not np.all(np.isfinite(scores)):
        raise ValueError("scores must be finite")
    if np.unique(labels).size < 2:
        raise ValueError("labels must contain both classes")
    pred = scores >= threshold
    pos = labels == 1
    tp = int(np.sum(pred & pos))
    fp = int(np.sum(pred & ~pos))
    fn = int(np.sum(~pred & pos))
    tn = int(np.sum(~pred & ~pos))
    n = labels.size
    return BinaryMetrics(
        auc=rank_auc(scores, labels),
        accuracy=(tp + tn) / n,
        sensitivity=tp / (tp + fn),
        specificity=tn / (tn + fp),
        ppv=tp / (tp + fp) if (tp + fp) > 0 else float("nan"),
        npv=tn / (tn + fn) if (tn + fn) > 0 else float("nan"),
    )


def harrell_correct(theta_app, theta_boot, theta_orig):
    """Harrell correction: apparent score minus the mean train/test optimism."""
    boot = np.asarray(theta_boot, dtype=np.float64)
    orig = np.asarray(theta_orig, dtype=np.float64)
    optimism = np.nanmean(boot - orig)
    return float(theta_app - optimism)


def dot632_correct(theta_app, theta_oob):
    """The .632 blend of apparent and mean out-of-bag performance."""
    theta_out = float(np.nanmean(np.asarray(theta_oob, dtype=np.float64)))
    return 0.368 * theta_app + 0.632 * theta_out


@dataclass(frozen=True)
class Dot632Plus:
    corrected: float
    R: float
    w: float


def dot632plus_correct(theta_app, theta_out, gamma) -> Dot632Plus:
    """The .632+ rule with the overfitting ratio R clamped to [0, 1].

    R is set to 0 when the apparent score does not exceed the out-of-bag
    score or the no-information score, which makes the rule total and lets it
    reduce exactly to .632 in the no-overfitting case.
    """
    if theta_app <= theta_out or theta_app <= gamma:
        R = 0.0
    else:
        R = (theta_app - theta_out) / (theta_app - gamma)
        R = min(max(R, 0.0), 1.0)
    w = 0.632 / (1.0 - 0.368 * R)
    corrected = (1.0 - w) * theta_app + w * theta_out
    return Dot632Plus(corrected=float(corrected), R=float(R), w=float(w))


def no_information_score(scores, labels, metric="auc", permutations=200, seed=0):
    """Expected performance when the outcome is randomly permuted (gamma).

    AUC has the analytic value 0.5; accuracy has the closed form
    q*p + (1-q)*(1-p) with q the predicted-positive rate and p the class-1
    prevalence. Other metrics fall back to the mean over seeded label
    permutations (undefined draws excluded).
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if metric == "auc":
        return 0.5
    if metric == "accuracy":
        q = float(np.mean(scores >= 0.5))
        p = float(np.mean(labels == 1))
        return q * p + (1.0 - q) * (1.0 - p)
    rng = np.random.default_rng(seed)
    vals = []
    for _ in range(permutations):
        perm = rng.permutation(labels)
        if np.unique(perm).size < 2:
            continue
        vals.append(getattr(binary_metrics(scores, perm), metric))
    return float(np.nanmean(vals)) if vals else float("nan")


@dataclass(frozen=True)
class PerformanceEstimate:
    """All ingredients of one optimism-corrected performance figure."""

    theta_app: float
    theta_boot: np.ndarray
    theta_orig: np.ndarray
    theta_oob: np.ndarray
    theta_out: float
    optimism: float
    gamma: float
    R: float
    w: float
    corrected: dict

    @classmethod
    def compute(cls, theta_app, theta_boot, theta_orig, theta_oob, gamma):
        theta_boot = np.asarray(theta_boot, dtype=np.float64)
        theta_orig = np.asarray(theta_orig, dtype=np.float64)
        theta_oob = np.asarray(theta_oob, dtype=np.float64)
        with np.errstate(invalid="ignore"):
            optimism = float(np.nanmean(theta_boot - theta_orig))
            theta_out = float(np.nanmean(theta_oob))
        harrell = theta_app - optimism
        dot632 = 0.368 * theta_app + 0.632 * theta_out
        if np.isnan(theta_out) or np.isnan(theta_app) or np.isnan(gamma):
            plus = Dot632Plus(float("nan"), float("nan"), float("nan"))
        else:
            plus = dot632plus_correct(theta_app, theta_out, gamma)
        return cls(theta_app=float(theta_app), theta_boot=theta_boot,
                   theta_orig=theta_orig, theta_oob=theta_oob, theta_out=theta_out,
                   optimism=optimism, gamma=float(gamma), R=plus.R, w=plus.w,
                   corrected={"harrell": float(harrell), "dot632": float(dot632),
                              "dot632plus": plus.corrected})


@dataclass(frozen=True)
class SelectionEnsemble:
    """Per-resample selected sets and the statistics derived from them."""

    B: int
    selected_sets: tuple
    frequencies: np.ndarray
    variances: np.ndarray
    mean_size: float
    stability: float
    p: int = field(default=0)

    @classmethod
    def from_sets(cls, selected_sets, p):
        sets = tuple(tuple(int(i) for i in s) for s in selected_sets)
        B = len(sets)
        if B < 1:
            raise ValueError("need at least one selected set")
        indicator = np.zeros((B, p))
        for b, s in enumerate(sets):
            indicator[b, list(s)] = 1.0
        freq = indicator.mean(axis=0)
        if B >= 2:
            var = B / (B - 1.0) * freq * (1.0 - freq)
        else:
            var = np.full(p, np.nan)
        mean_size = float(indicator.sum(axis=1).mean())
        stability = _nogueira(freq, var, mean_size, B, p)
        return cls(B=B, selected_sets=sets, frequencies=freq, variances=var,
                   mean_size=mean_size, stability=stability, p=p)


def _nogueira(freq, var, mean_size, B, p):
    if B < 2 or mean_size == 0.0 or mean_size == float(p):
        return float("nan")
    denom = (mean_size / p) * (1.0 - mean_size / p)
    return float(1.0 - float(np.mean(var)) / denom)


def nogueira_stability(selected_sets, p):
    """Frequency-based subset stability over B resamples.

    1 means the same subset every time; values near 0 match random fixed-size
    selection; negatives indicate systematic disagreement. Undefined (NaN)
    when the mean subset size is 0 or p, or fewer than 2 sets are given.
    """
    return SelectionEnsemble.from_sets(selected_sets, p).stability


def selection_frequencies(selected_sets, p):
    """Per-feature selection frequency over resamples."""
    return SelectionEnsemble.from_sets(selected_sets, p).frequencies


def high_confidence_counts(frequencies_by_method, threshold=0.5):
    """Count, per feature, how many methods select it with frequency >= threshold."""
    mats = [np.asarray(f, dtype=np.float64) for f in frequencies_by_method.values()]
    if not mats:
        raise ValueError("no methods given")
    stacked = np.vstack(mats)
    return (stacked >= threshold).sum(axis=0).astype(int)


@dataclass(frozen=True)
class RecoveryMetrics:
    tpr: float
    fpr: float
    fdr: float
    for_: float
    tp: int
    fp: int
    fn: int
    tn: int

    def as_dict(self):
        return {"tpr": self.tpr, "fpr": self.fpr, "fdr": self.fdr, "for": self.for_,
                "tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn}


def recovery_metrics(selected, truth, p) -> RecoveryMetrics:
    """True/false discovery rates of a selection against a known truth set."""
    sel = set(int(i) for i in selected)
    tru = set(int(i) for i in truth)
    if not sel <= set(range(p)) or not tru <= set(range(p)):
        raise ValueError("indices out of range")
    tp = len(sel & tru)
    fp = len(sel - tru)
    fn = len(tru - sel)
    tn = p - tp - fp - fn
    return RecoveryMetrics(
        tpr=tp / (tp + fn) if (tp + fn) > 0 else float("nan"),
        fpr=fp / (fp + tn) if (fp + tn) > 0 else float("nan"),
        fdr=fp / max(tp + fp, 1),
        for_=fn / max(fn + tn, 1),
        tp=tp, fp=fp, fn=fn, tn=tn)


def instability_index(full_scores, resample_scores, threshold=0.5):
    """Per-row share of resample models that disagree with the full model.

    ``resample_scores`` is a (B, n) array of each resample model's predicted
    probabilities on the original rows; rows of all-NaN (failed fits) are
    excluded from the denominator.
    """
    full_scores = np.asarray(full_scores, dtype=np.float64)
    resample_scores = np.asarray(resample_scores, dtype=np.float64)
    if resample_scores.ndim != 2 or resample_scores.shape[1] != full_scores.size:
        raise ValueError("resample_scores must be (B, n)")
    full_pred = full_scores >= threshold
    valid = ~np.isnan(resample_scores)
    pred = resample_scores >= threshold
    disagree = (pred != full_pred[None, :]) & valid
    counts = valid.sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = disagree.sum(axis=0) / counts
    out = np.where(counts > 0, out, np.nan)
    return out
