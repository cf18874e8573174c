"""Classifier-in-the-loop feature selection: RFE and greedy forward search."""

from __future__ import annotations

import math

import numpy as np

from . import classifiers
from .data import stratified_fold_indices
from .filters import FIXED_K, THRESHOLDED, SelectionResult
from .metrics import rank_auc


def rfe_select(matrix, y, base: classifiers.ClassifierSpec, k, drop_fraction=0.1,
               seed=0) -> SelectionResult:
    """Recursive feature elimination down to exactly k features.

    Each round refits the base classifier on the surviving columns and drops
    ceil(drop_fraction * current) of the lowest-importance features, never
    crossing below k. Importance ties drop the lowest feature index first.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    X = np.asarray(matrix, dtype=np.float64)
    p = X.shape[1]
    k = min(k, p)
    surviving = list(range(p))
    while len(surviving) > k:
        model = classifiers.fit(base, X[:, surviving], y, seed=seed)
        importances = model.feature_importances()
        if importances is None:
            raise ValueError(f"classifier {base.kind!r} exposes no importances")
        n_drop = min(math.ceil(drop_fraction * len(surviving)), len(surviving) - k)
        order = np.lexsort((np.arange(len(surviving)), importances))
        doomed = {surviving[i] for i in order[:n_drop]}
        surviving = [f for f in surviving if f not in doomed]
    return SelectionResult(method="rfe", selected=tuple(surviving), k=k,
                           mode=FIXED_K, diagnostics={"base": base.kind})


def forward_select(matrix, y, base: classifiers.ClassifierSpec, k_max, folds=5,
                   seed=0) -> SelectionResult:
    """Greedy forward selection scored by cross-validated AUC.

    Adds the feature maximizing the cv AUC of the base classifier at each
    step up to k_max, then returns the prefix whose cv AUC is maximal (ties
    go to the smaller size, so the subset size is chosen internally).
    """
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    X = np.asarray(matrix, dtype=np.float64)
    y = np.asarray(y)
    p = X.shape[1]
    k_max = min(k_max, p)
    folds_idx = stratified_fold_indices(y, folds, seed=None)
    all_rows = np.arange(X.shape[0])

    def cv_auc(cols):
        vals = []
        for test in folds_idx:
            train = np.setdiff1d(all_rows, test)
            model = classifiers.fit(base, X[np.ix_(train, cols)], y[train], seed=seed)
            scores = classifiers.predict_proba(model, X[np.ix_(test, cols)])
            vals.append(rank_auc(scores, y[test]))
        return float(np.mean(vals))

    chosen: list[int] = []
    auc_path = []
    while len(chosen) < k_max:
        candidates = [j for j in range(p) if j not in chosen]
        scores = np.array([cv_auc(chosen + [j]) for j in candidates])
        best = int(np.argmax(scores))
        chosen.append(candidates[best])
        auc_path.append(float(scores[best]))
    best_size = int(np.argmax(auc_path)) + 1  # first max = smallest size on ties
    return SelectionResult(method="forward", selected=tuple(chosen[:best_size]),
                           k=best_size, mode=THRESHOLDED,
                           diagnostics={"cv_auc_path": tuple(auc_path),
                                        "order_added": tuple(chosen),
                                        "base": base.kind})
