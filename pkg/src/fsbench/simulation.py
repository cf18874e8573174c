"""Semi-synthetic outcome generation with a known sparse truth model.

Labels come from thresholding a logistic score built on a linear combination
of designated truth features plus Gaussian noise: a row is labeled 1 exactly
when its score is >= 0.5, equivalently when linear predictor + noise >= 0.
Repeating the generation with fresh noise gives independent replicates for
the true/false-discovery recovery experiment.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import classifiers
from .errors import ResampleError
from .filters import FIXED_K
from .metrics import RecoveryMetrics, recovery_metrics

BETA_CAP = 20.0


@dataclass(frozen=True)
class SimulationSpec:
    """Truth set, coefficients, and noise configuration for label generation."""

    truth: tuple
    beta: np.ndarray
    intercept: float
    noise_sd: float = 1.0
    replicates: int = 36
    seed: int = 0

    def __post_init__(self):
        truth = tuple(int(j) for j in self.truth)
        beta = np.asarray(self.beta, dtype=np.float64)
        if len(truth) < 1:
            raise ValueError("truth set must contain at least one feature")
        if len(set(truth)) != len(truth):
            raise ValueError("truth indices must be unique")
        if beta.shape != (len(truth),):
            raise ValueError("beta length must match the truth set")
        if self.noise_sd < 0:
            raise ValueError("noise_sd must be >= 0")
        object.__setattr__(self, "truth", truth)
        object.__setattr__(self, "beta", beta)

    def replicate_seeds(self):
        return tuple(self.seed ^ (r + 1) for r in range(self.replicates))

    def to_manifest(self):
        return {"truth": list(self.truth), "beta": [float(b) for b in self.beta],
                "intercept": float(self.intercept), "noise_sd": float(self.noise_sd),
                "replicates": int(self.replicates), "seed": int(self.seed)}

    @classmethod
    def from_manifest(cls, d):
        return cls(truth=tuple(d["truth"]), beta=np.asarray(d["beta"]),
                   intercept=float(d["intercept"]), noise_sd=float(d["noise_sd"]),
                   replicates=int(d["replicates"]), seed=int(d["seed"]))


def fit_truth_model(matrix, y, truth_set):
    """Coefficients of an unpenalized logistic fit on the truth columns.

    Under separation the fit is flagged and coefficients are capped at
    |beta| <= 20 so downstream score generation stays finite and sane.
    Returns (beta, intercept, flagged).
    """
    M = np.asarray(matrix, dtype=np.float64)
    cols = [int(j) for j in truth_set]
    sub = M[:, cols]
    if np.any(sub.std(axis=0) == 0.0):
        raise ValueError("truth features must be non-constant")
    spec = classifiers.ClassifierSpec(kind="logistic")
    model = classifiers.fit(spec, sub, y)
    beta = model.impl.coef.copy()
    intercept = model.impl.intercept
    flagged = not model.impl.converged
    if flagged:
        beta = np.clip(beta, -BETA_CAP, BETA_CAP)
    return beta, float(intercept), flagged


def simulate_outcome(matrix, spec: SimulationSpec, replicate):
    """Labels for one replicate: 1 where linear predictor + noise >= 0.

    The replicate's noise comes from the child seed ``seed ^ (replicate+1)``.
    With positive noise, draws are retried up to 100 times until both classes
    appear; with noise_sd = 0 the labels are deterministic and returned as-is
    (a redraw could not change them).
    """
    M = np.asarray(matrix, dtype=np.float64)
    lp = M[:, list(spec.truth)] @ spec.beta + spec.intercept
    rng = np.random.default_rng(spec.seed ^ (int(replicate) + 1))
    if spec.noise_sd == 0.0:
        return (lp >= 0.0).astype(np.int8)
    for _ in range(100):
        eps = rng.normal(0.0, spec.noise_sd, size=lp.size)
        labels = (lp + eps >= 0.0).astype(np.int8)
        if np.unique(labels).size == 2:
            return labels
    raise ResampleError("could not generate two-class simulated labels in 100 draws")


@dataclass(frozen=True)
class RecoverySummary:
    method: str
    mean: dict
    sd: dict
    replicates: int
    per_replicate: tuple

    def as_dict(self):
        return {"mean": dict(self.mean), "sd": dict(self.sd),
                "replicates": self.replicates}


def run_recovery_experiment(matrix, spec: SimulationSpec, methods,
                            replicates=None):
    """Recovery rates of each method over noise replicates.

    ``methods`` maps a name to a runner ``(matrix, labels, seed) ->
    SelectionResult``. Fixed-size runners are expected to be configured with
    k = |truth|; for every fixed-size result the structural bound
    FPR <= k / (p - |truth|) is asserted.
    """
    M = np.asarray(matrix, dtype=np.float64)
    p = M.shape[1]
    n_rep = spec.replicates if replicates is None else int(replicates)
    truth = spec.truth
    results = {name: [] for name in methods}
    for r in range(n_rep):
        labels = simulate_outcome(M, spec, r)
        for name, runner in methods.items():
            sel = runner(M, labels, spec.seed ^ ((r + 1) * 7919))
            rec = recovery_metrics(sel.selected, truth, p)
            if sel.mode == FIXED_K and p > len(truth):
                bound = sel.k / (p - len(truth))
                if rec.fpr > bound + 1e-12:
                    raise AssertionError(
                        f"{name}: FPR {rec.fpr:.4f} violates the fixed-size "
                        f"bound {bound:.4f}")
            results[name].append(rec)
    out = {}
    for name, recs in results.items():
        fields = ("tpr", "fpr", "fdr", "for_")
        arr = {f: np.array([getattr(r, f) for r in recs]) for f in fields}
        out[name] = RecoverySummary(
            method=name,
            mean={f: float(np.nanmean(v)) for f, v in arr.items()},
            sd={f: float(np.nanstd(v, ddof=1)) if len(recs) > 1 else 0.0
                for f, v in arr.items()},
            replicates=n_rep,
            per_replicate=tuple(recs))
    return out


def truth_from_top_features(matrix, y, s):
    """Pick s truth features by the smallest BH-adjusted logistic Wald p-values.

    A classification stand-in for choosing "known" predictors on real data:
    each feature's univariate logistic p-value is BH-adjusted and the s best
    (ties broken by raw p-value, then index) form the truth set.
    """
    from ._glm import irls_logistic
    from .filters import bh_adjust
    from scipy.stats import norm

    M = np.asarray(matrix, dtype=np.float64)
    p = M.shape[1]
    if not 1 <= s <= p:
        raise ValueError("truth size out of range")
    pvals = np.ones(p)
    for j in range(p):
        fitres = irls_logistic(M[:, [j]], y, compute_cov=True)
        if fitres.converged and fitres.cov is not None and fitres.cov[1, 1] > 0:
            z = fitres.coef[0] / np.sqrt(fitres.cov[1, 1])
            pvals[j] = 2.0 * norm.sf(abs(z))
    qvals = bh_adjust(pvals)
    order = np.lexsort((np.arange(p), pvals, qvals))
    return tuple(sorted(int(j) for j in order[:s]))
