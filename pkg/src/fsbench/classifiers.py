"""Downstream classifiers with a uniform fit / predict-probability contract.

Five model families: unpenalized logistic regression (Newton/IRLS), linear
discriminant analysis, k-nearest neighbors, a depth-limited random forest,
and gradient boosting with depth-limited regression trees. Forest and
boosting defaults follow the benchmark configuration (200/100 rounds, depth
<= 2, min leaf 40, 70% feature subsampling; boosting also subsamples 70% of
rows per round).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import expit

from ._glm import irls_logistic
from ._trees import build_tree
from .errors import ConfigError

CLASSIFIER_KINDS = ("logistic", "lda", "knn", "random_forest", "gradient_boosting")

_DEFAULTS = {
    "logistic": {"max_iter": 100, "tol": 1e-8},
    "lda": {"reg": 1e-6},
    "knn": {"n_neighbors": 5},
    "random_forest": {"n_estimators": 200, "max_depth": 2, "min_samples_leaf": 40,
                      "max_features": 0.7},
    "gradient_boosting": {"n_estimators": 100, "learning_rate": 0.1, "max_depth": 2,
                          "min_samples_leaf": 40, "max_features": 0.7, "subsample": 0.7},
}


@dataclass(frozen=True)
class ClassifierSpec:
    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in CLASSIFIER_KINDS:
            raise ConfigError(f"unknown classifier kind {self.kind!r}")
        unknown = set(self.params) - set(_DEFAULTS[self.kind]) - {"seed"}
        if unknown:
            raise ConfigError(f"{self.kind}: unknown parameters {sorted(unknown)}")
        merged = {**_DEFAULTS[self.kind], **self.params}
        if merged.get("max_depth", 1) < 1:
            raise ConfigError("max_depth must be >= 1")
        if merged.get("n_neighbors", 1) < 1:
            raise ConfigError("n_neighbors must be >= 1")
        if merged.get("learning_rate", 1.0) <= 0:
            raise ConfigError("learning_rate must be > 0")
        if merged.get("n_estimators", 1) < 1:
            raise ConfigError("n_estimators must be >= 1")
        if not 0.0 < merged.get("max_features", 0.5) <= 1.0:
            raise ConfigError("max_features must be in (0, 1]")
        if not 0.0 < merged.get("subsample", 0.5) <= 1.0:
            raise ConfigError("subsample must be in (0, 1]")
        object.__setattr__(self, "params", dict(self.params))

    def resolved(self):
        return {**_DEFAULTS[self.kind], **{k: v for k, v in self.params.items()
                                           if k != "seed"}}


@dataclass(frozen=True)
class FittedModel:
    spec: ClassifierSpec
    n_features: int
    impl: object

    def feature_importances(self):
        """Per-feature importances (|coefficient| or impurity decrease), or None."""
        return self.impl.importances()


def fit(spec: ClassifierSpec, matrix, y, seed=None) -> FittedModel:
    """Fit the classifier described by ``spec`` on a complete numeric matrix."""
    X = np.asarray(matrix, dtype=np.float64)
    y = np.asarray(y)
    if np.unique(y).size != 2:
        raise ValueError("need both outcome classes to fit")
    if np.isnan(X).any():
        raise ValueError("matrix must not contain missing values")
    if seed is None:
        seed = spec.params.get("seed", 0)
    params = spec.resolved()
    impl = _FITTERS[spec.kind](X, y, params, seed)
    return FittedModel(spec=spec, n_features=X.shape[1], impl=impl)


def predict_proba(model: FittedModel, matrix):
    """P(y=1) for each row; raises on feature-count mismatch."""
    X = np.asarray(matrix, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ValueError(
            f"expected {model.n_features} feature columns, got {X.shape[1] if X.ndim == 2 else 'non-2d'}")
    return np.clip(model.impl.predict_proba(X), 0.0, 1.0)


class _Logistic:
    def __init__(self, X, y, params, seed):
        fitres = irls_logistic(X, y, l2=0.0, max_iter=params["max_iter"],
                               tol=params["tol"])
        self.coef = fitres.coef
        self.intercept = fitres.intercept
        self.converged = fitres.converged

    def predict_proba(self, X):
        return expit(X @ self.coef + self.intercept)

    def importances(self):
        return np.abs(self.coef)


class _Lda:
    def __init__(self, X, y, params, seed):
        X1, X0 = X[y == 1], X[y == 0]
        n, p = X.shape
        mu1, mu0 = X1.mean(axis=0), X0.mean(axis=0)
        scatter = ((X1 - mu1).T @ (X1 - mu1) + (X0 - mu0).T @ (X0 - mu0))
        cov = scatter / max(n - 2, 1) + params["reg"] * np.eye(p)
        self.coef = np.linalg.solve(cov, mu1 - mu0)
        self.intercept = float(-0.5 * (mu1 + mu0) @ self.coef
                               + np.log(len(X1) / len(X0)))

    def predict_proba(self, X):
        return expit(X @ self.coef + self.intercept)

    def importances(self):
        return np.abs(self.coef)


class _Knn:
    def __init__(self, X, y, params, seed):
        self.X = X
        self.y = y.astype(np.float64)
        self.k = min(params["n_neighbors"], len(X))

    def predict_proba(self, X):
        dist = cdist(X, self.X)
        out = np.empty(X.shape[0])
        for i in range(X.shape[0]):
            nearest = np.argsort(dist[i], kind="stable")[:self.k]
            out[i] = self.y[nearest].mean()
        return out

    def importances(self):
        return None


class _Forest:
    def __init__(self, X, y, params, seed):
        yf = y.astype(np.float64)
        n = X.shape[0]
        self.trees = []
        for child in np.random.SeedSequence(seed).spawn(params["n_estimators"]):
            rng = np.random.default_rng(child)
            rows = rng.integers(0, n, size=n)
            tree = build_tree(X[rows], yf[rows], criterion="gini",
                              max_depth=params["max_depth"],
                              min_samples_leaf=params["min_samples_leaf"],
                              max_features=params["max_features"], rng=rng)
            self.trees.append(tree)

    def predict_proba(self, X):
        return np.mean([t.predict(X) for t in self.trees], axis=0)

    def importances(self):
        imp = np.mean([t.importances for t in self.trees], axis=0)
        total = imp.sum()
        return imp / total if total > 0 else imp


class _Gbm:
    def __init__(self, X, y, params, seed):
        yf = y.astype(np.float64)
        n = X.shape[0]
        rng = np.random.default_rng(np.random.SeedSequence(seed))
        pbar = min(max(float(yf.mean()), 1e-12), 1.0 - 1e-12)
        self.f0 = float(np.log(pbar / (1.0 - pbar)))
        self.lr = params["learning_rate"]
        self.trees = []
        m = max(1, int(round(params["subsample"] * n)))
        F = np.full(n, self.f0)
        for _ in range(params["n_estimators"]):
            prob = expit(F)
            grad = yf - prob
            hess = prob * (1.0 - prob)
            idx = rng.choice(n, size=m, replace=False)
            g_sub, h_sub = grad[idx], hess[idx]

            def newton_leaf(rows, g=g_sub, h=h_sub):
                return float(g[rows].sum() / (h[rows].sum() + 1e-12))

            tree = build_tree(X[idx], g_sub, criterion="mse",
                              max_depth=params["max_depth"],
                              min_samples_leaf=params["min_samples_leaf"],
                              max_features=params["max_features"], rng=rng,
                              leaf_value=newton_leaf)
            self.trees.append(tree)
            F += self.lr * tree.predict(X)

    def predict_proba(self, X):
        F = np.full(X.shape[0], self.f0)
        for tree in self.trees:
            F += self.lr * tree.predict(X)
        return expit(F)

    def importances(self):
        imp = np.mean([t.importances for t in self.trees], axis=0)
        total = imp.sum()
        return imp / total if total > 0 else imp


_FITTERS = {
    "logistic": _Logistic,
    "lda": _Lda,
    "knn": _Knn,
    "random_forest": _Forest,
    "gradient_boosting": _Gbm,
}
