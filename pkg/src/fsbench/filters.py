"""Filter-family feature selection.

Rank-based statistical scores (Welch t, Fisher, Gini), ReliefF, greedy
information-theoretic selection (CIFE, CMIM, DISR, JMI), mRMR, hierarchical
clustering representatives, the Benjamini-Hochberg union filter, plus the
top-k and random-control selectors. All operations are pure functions and
deterministic; greedy and rank tie-breaks always go to the lowest feature
index.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.cluster.hierarchy import cut_tree, linkage
from scipy.spatial.distance import cdist, squareform
from scipy.stats import norm, rankdata, ttest_ind

from ._glm import irls_logistic

FIXED_K = "fixed_k"
THRESHOLDED = "thresholded"
SCORE_CAP = 1e12

MI_CRITERIA = ("cife", "cmim", "disr", "jmi")
STATISTICAL_METHODS = ("t_score", "fisher", "gini")


@dataclass(frozen=True)
class FeatureScores:
    method: str
    scores: np.ndarray
    higher_is_better: bool = True

    def __post_init__(self):
        s = np.asarray(self.scores, dtype=np.float64)
        if not np.all(np.isfinite(s)):
            raise ValueError("scores must be finite")
        object.__setattr__(self, "scores", s)


@dataclass(frozen=True)
class SelectionResult:
    method: str
    selected: tuple
    k: int
    mode: str
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        sel = tuple(int(i) for i in self.selected)
        if len(set(sel)) != len(sel):
            raise ValueError("selected indices must be unique")
        if any(i < 0 for i in sel):
            raise ValueError("selected indices must be non-negative")
        object.__setattr__(self, "selected", sel)
        object.__setattr__(self, "k", int(self.k))


def _class_split(matrix, y):
    y = np.asarray(y)
    classes = np.unique(y)
    if classes.size != 2:
        raise ValueError("need exactly two outcome classes")
    return matrix[y == classes[1]], matrix[y == classes[0]]


def score_statistical(matrix, y, method) -> FeatureScores:
    """Per-feature statistical relevance scores; higher is better.

    t_score is the absolute Welch two-sample t statistic, fisher the
    class-size-weighted between/within variance ratio, and gini the negated
    minimum weighted Gini impurity over all realizable midpoint splits.
    Degenerate zero-variance denominators yield 0 for equal class means and
    the cap 1e12 otherwise.
    """
    M = np.asarray(matrix, dtype=np.float64)
    if method == "t_score":
        g1, g0 = _class_split(M, y)
        if len(g1) < 2 or len(g0) < 2:
            raise ValueError("t_score needs at least 2 samples per class")
        var1 = g1.var(axis=0, ddof=1)
        var0 = g0.var(axis=0, ddof=1)
        denom = np.sqrt(var1 / len(g1) + var0 / len(g0))
        diff = g1.mean(axis=0) - g0.mean(axis=0)
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.abs(diff) / denom
        t = np.where(denom == 0.0, np.where(diff == 0.0, 0.0, SCORE_CAP), t)
        return FeatureScores(method="t_score", scores=np.minimum(t, SCORE_CAP))
    if method == "fisher":
        g1, g0 = _class_split(M, y)
        if len(g1) < 2 or len(g0) < 2:
            raise ValueError("fisher needs at least 2 samples per class")
        mu = M.mean(axis=0)
        between = len(g1) * (g1.mean(axis=0) - mu) ** 2 + len(g0) * (g0.mean(axis=0) - mu) ** 2
        within = len(g1) * g1.var(axis=0) + len(g0) * g0.var(axis=0)
        with np.errstate(divide="ignore", invalid="ignore"):
            score = between / within
        score = np.where(within == 0.0, np.where(between == 0.0, 0.0, SCORE_CAP), score)
        return FeatureScores(method="fisher", scores=np.minimum(score, SCORE_CAP))
    if method == "gini":
        y01 = np.asarray(y, dtype=np.float64)
        scores = np.array([-_min_split_gini(M[:, j], y01) for j in range(M.shape[1])])
        return FeatureScores(method="gini", scores=scores)
    raise ValueError(f"unknown statistical method {method!r}")


def _min_split_gini(x, y):
    """Minimum weighted Gini impurity over thresholds between distinct values."""
    order = np.argsort(x, kind="stable")
    xs = x[order]
    ys = y[order]
    n = x.size
    total1 = ys.sum()
    boundary = xs[:-1] < xs[1:]
    p_all = total1 / n
    parent = 1.0 - p_all ** 2 - (1.0 - p_all) ** 2
    if not boundary.any():
        return float(parent)
    left_n = np.arange(1, n, dtype=np.float64)
    left1 = np.cumsum(ys)[:-1]
    right_n = n - left_n
    right1 = total1 - left1
    pl = left1 / left_n
    pr = right1 / right_n
    gini_l = 1.0 - pl ** 2 - (1.0 - pl) ** 2
    gini_r = 1.0 - pr ** 2 - (1.0 - pr) ** 2
    weighted = (left_n * gini_l + right_n * gini_r) / n
    return float(weighted[boundary].min())


def relieff_score(matrix, y, neighbors=5, sample_rounds=None) -> FeatureScores:
    """Classic ReliefF weights over Euclidean nearest hits and misses.

    Feature differences are range-normalized. With the default
    ``sample_rounds`` every row is visited once in order, which makes the
    scores deterministic. Neighbor ties break to the lowest row index.
    """
    M = np.asarray(matrix, dtype=np.float64)
    y = np.asarray(y)
    n, p = M.shape
    counts = np.bincount(y, minlength=2)
    if counts.min() < neighbors + 1:
        raise ValueError(
            f"each class needs more than {neighbors} samples for {neighbors} neighbors")
    rounds = n if sample_rounds is None else min(int(sample_rounds), n)
    span = M.max(axis=0) - M.min(axis=0)
    span_safe = np.where(span == 0.0, 1.0, span)
    dist = cdist(M, M)
    w = np.zeros(p)
    denom = rounds * neighbors
    for i in range(rounds):
        same = np.flatnonzero(y == y[i])
        same = same[same != i]
        opp = np.flatnonzero(y != y[i])
        hits = same[np.argsort(dist[i, same], kind="stable")[:neighbors]]
        misses = opp[np.argsort(dist[i, opp], kind="stable")[:neighbors]]
        diffs_h = np.abs(M[i] - M[hits]) / span_safe
        diffs_m = np.abs(M[i] - M[misses]) / span_safe
        w -= diffs_h.sum(axis=0) / denom
        w += diffs_m.sum(axis=0) / denom
    return FeatureScores(method="relieff", scores=w)


# ---------------------------------------------------------------------------
# Plug-in mutual information on discretized features
# ---------------------------------------------------------------------------

def discretize_matrix(matrix, bins=5, categorical=None):
    """Integer codes per column: equal-frequency bins, or native codes for
    columns flagged categorical."""
    M = np.asarray(matrix, dtype=np.float64)
    n, p = M.shape
    if categorical is None:
        categorical = np.zeros(p, dtype=bool)
    codes = np.empty((n, p), dtype=np.int64)
    for j in range(p):
        col = M[:, j]
        if categorical[j]:
            codes[:, j] = np.unique(col, return_inverse=True)[1]
        else:
            edges = np.quantile(col, np.linspace(0.0, 1.0, bins + 1)[1:-1])
            codes[:, j] = np.searchsorted(edges, col, side="right")
    return codes


def _entropy_of(*code_arrays):
    joint = code_arrays[0].astype(np.int64)
    for nxt in code_arrays[1:]:
        joint = joint * (int(nxt.max()) + 1) + nxt
    counts = np.bincount(joint)
    pr = counts[counts > 0] / joint.size
    return float(-(pr * np.log(pr)).sum())


def _mi(a, b):
    return _entropy_of(a) + _entropy_of(b) - _entropy_of(a, b)


def _cmi(a, b, z):
    return (_entropy_of(a, z) + _entropy_of(b, z)
            - _entropy_of(z) - _entropy_of(a, b, z))


def greedy_mi_select(matrix, y, criterion, k, bins=5, categorical=None) -> SelectionResult:
    """Greedy forward selection by an information-theoretic criterion.

    All four criteria start from the feature maximizing the plug-in mutual
    information with the outcome, then add the argmax of the criterion until
    k features are selected. DISR uses the decomposition with denominator
    H(Xk) + H(Xk|Xj) + H(Y|Xk) - I(Y;Xj|Xk).
    """
    if criterion not in MI_CRITERIA:
        raise ValueError(f"unknown criterion {criterion!r}")
    if k < 1:
        raise ValueError("k must be >= 1")
    codes = discretize_matrix(matrix, bins=bins, categorical=categorical)
    yc = np.asarray(y, dtype=np.int64)
    n, p = codes.shape
    if k > p:
        warnings.warn(f"k={k} exceeds p={p}; selecting all features")
        k = p

    rel = np.array([_mi(codes[:, j], yc) for j in range(p)])
    selected = [int(np.argmax(rel))]
    mi_cache, cmi_cache, cmim_cache, disr_cache = {}, {}, {}, {}

    def mi_pair(a, b):
        key = (a, b) if a < b else (b, a)
        if key not in mi_cache:
            mi_cache[key] = _mi(codes[:, a], codes[:, b])
        return mi_cache[key]

    def cmi_pair_given_y(a, b):
        key = (a, b) if a < b else (b, a)
        if key not in cmi_cache:
            cmi_cache[key] = _cmi(codes[:, a], codes[:, b], yc)
        return cmi_cache[key]

    def cmim_term(cand, j):
        # I(X_cand; Y | X_j), asymmetric in (cand, j)
        if (cand, j) not in cmim_cache:
            cmim_cache[(cand, j)] = _cmi(codes[:, cand], yc, codes[:, j])
        return cmim_cache[(cand, j)]

    def disr_term(j, cand):
        # numerator I(XjXk;Y) = I(Xk;Y) + I(Xj;Y|Xk); denominator as documented
        key = (j, cand)
        if key not in disr_cache:
            cj, ck = codes[:, j], codes[:, cand]
            num = rel[cand] + _cmi(cj, yc, ck)
            den = (_entropy_of(ck)
                   + _entropy_of(cj, ck) - _entropy_of(cj)
                   + _entropy_of(yc, ck) - _entropy_of(ck)
                   - _cmi(yc, cj, ck))
            disr_cache[key] = num / den if den > 1e-12 else 0.0
        return disr_cache[key]

    while len(selected) < k:
        candidates = [j for j in range(p) if j not in selected]
        scores = np.empty(len(candidates))
        for pos, cand in enumerate(candidates):
            if criterion == "cmim":
                scores[pos] = min(cmim_term(cand, j) for j in selected)
            elif criterion == "cife":
                scores[pos] = (rel[cand]
                               - sum(mi_pair(j, cand) for j in selected)
                               + sum(cmi_pair_given_y(j, cand) for j in selected))
            elif criterion == "jmi":
                beta = 1.0 / len(selected)
                scores[pos] = (rel[cand]
                               - beta * sum(mi_pair(j, cand) for j in selected)
                               + beta * sum(cmi_pair_given_y(j, cand) for j in selected))
            else:  # disr
                scores[pos] = sum(disr_term(j, cand) for j in selected)
        selected.append(candidates[int(np.argmax(scores))])

    return SelectionResult(method=criterion, selected=tuple(selected), k=k,
                           mode=FIXED_K, diagnostics={"relevance": rel})


def mrmr_select(matrix, y, k) -> SelectionResult:
    """mRMR: ANOVA F relevance over mean absolute Pearson redundancy."""
    if k < 1:
        raise ValueError("k must be >= 1")
    M = np.asarray(matrix, dtype=np.float64)
    p = M.shape[1]
    if k > p:
        warnings.warn(f"k={k} exceeds p={p}; selecting all features")
        k = p
    fvals = anova_f(M, y)
    corr = _abs_corr_matrix(M)
    selected = [int(np.argmax(fvals))]
    while len(selected) < k:
        candidates = [j for j in range(p) if j not in selected]
        redundancy = corr[np.ix_(candidates, selected)].mean(axis=1)
        scores = fvals[candidates] / (redundancy + 1e-12)
        selected.append(candidates[int(np.argmax(scores))])
    return SelectionResult(method="mrmr", selected=tuple(selected), k=k,
                           mode=FIXED_K, diagnostics={"f_values": fvals})


def anova_f(matrix, y):
    """One-way ANOVA F value of each feature against the binary outcome."""
    M = np.asarray(matrix, dtype=np.float64)
    g1, g0 = _class_split(M, y)
    n1, n0 = len(g1), len(g0)
    n = n1 + n0
    mu = M.mean(axis=0)
    ssb = n1 * (g1.mean(axis=0) - mu) ** 2 + n0 * (g0.mean(axis=0) - mu) ** 2
    ssw = ((g1 - g1.mean(axis=0)) ** 2).sum(axis=0) + ((g0 - g0.mean(axis=0)) ** 2).sum(axis=0)
    msw = ssw / (n - 2)
    with np.errstate(divide="ignore", invalid="ignore"):
        f = ssb / msw
    f = np.where(msw == 0.0, np.where(ssb == 0.0, 0.0, SCORE_CAP), f)
    return np.minimum(f, SCORE_CAP)


def _abs_corr_matrix(M):
    n = M.shape[0]
    centered = M - M.mean(axis=0)
    sd = M.std(axis=0)
    safe = np.where(sd == 0.0, 1.0, sd)
    Z = centered / safe
    C = Z.T @ Z / n
    C[sd == 0.0, :] = 0.0
    C[:, sd == 0.0] = 0.0
    np.fill_diagonal(C, 1.0)
    return np.clip(np.abs(C), 0.0, 1.0)


def point_biserial(matrix, y):
    """Pearson correlation of each feature with the 0/1 outcome."""
    M = np.asarray(matrix, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    yc = y - y.mean()
    sy = y.std()
    sd = M.std(axis=0)
    safe = np.where(sd == 0.0, 1.0, sd)
    r = (M - M.mean(axis=0)).T @ yc / (M.shape[0] * safe * sy)
    return np.where(sd == 0.0, 0.0, r)


def hcluster_select(matrix, y, k) -> SelectionResult:
    """Representative selection after average-linkage clustering of features.

    Features are clustered on the distance 1 - |Spearman rho|, the tree is
    cut to exactly k clusters, and each cluster contributes the feature with
    the largest absolute point-biserial correlation with the outcome.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    M = np.asarray(matrix, dtype=np.float64)
    p = M.shape[1]
    if k > p:
        warnings.warn(f"k={k} exceeds p={p}; selecting all features")
        k = p
    if k == p:
        labels = np.arange(p)
    else:
        ranks = np.apply_along_axis(rankdata, 0, M)
        with np.errstate(invalid="ignore"):
            C = np.corrcoef(ranks, rowvar=False)
        C = np.atleast_2d(C)
        C[np.isnan(C)] = 0.0
        np.fill_diagonal(C, 1.0)
        D = np.clip(1.0 - np.abs(C), 0.0, None)
        Z = linkage(squareform(D, checks=False), method="average")
        labels = cut_tree(Z, n_clusters=k).ravel()
    pb = np.abs(point_biserial(M, y))
    selected = []
    for cluster in np.unique(labels):
        members = np.flatnonzero(labels == cluster)
        selected.append(int(members[np.argmax(pb[members])]))
    selected = tuple(sorted(selected))
    return SelectionResult(method="hcluster", selected=selected, k=k,
                           mode=FIXED_K, diagnostics={"cluster_labels": labels})


def bh_adjust(pvalues):
    """Benjamini-Hochberg step-up adjusted p-values, in input order."""
    p = np.asarray(pvalues, dtype=np.float64)
    if p.ndim != 1 or p.size == 0:
        raise ValueError("pvalues must be a non-empty 1-d sequence")
    if np.any((p < 0.0) | (p > 1.0)) or np.any(np.isnan(p)):
        raise ValueError("p-values must lie in [0, 1]")
    m = p.size
    order = np.argsort(p, kind="stable")
    scaled = p[order] * m / np.arange(1, m + 1)
    q_sorted = np.minimum.accumulate(scaled[::-1])[::-1]
    q_sorted = np.minimum(q_sorted, 1.0)
    out = np.empty(m)
    out[order] = q_sorted
    return out


def padjust_union_filter(matrix, y, alpha=0.05, covariates=()) -> SelectionResult:
    """Union of features passing BH-adjusted Welch t-test or logistic Wald test.

    Each candidate feature gets (a) a Welch t-test p-value and (b) the Wald
    p-value of its coefficient in a logistic fit that controls for the given
    covariate columns. The two p-value families are BH-adjusted separately;
    a feature is selected when either adjusted value is <= alpha. A logistic
    fit that fails to converge contributes p = 1 for that feature (the t-test
    arm still applies) and is flagged in the diagnostics.
    """
    M = np.asarray(matrix, dtype=np.float64)
    y = np.asarray(y)
    p = M.shape[1]
    covariates = tuple(int(c) for c in covariates)
    if not set(covariates) <= set(range(p)):
        raise ValueError("covariates must be valid feature indices")
    candidates = [j for j in range(p) if j not in covariates]
    if not candidates:
        raise ValueError("no candidate features outside the covariate set")
    g1, g0 = _class_split(M[:, candidates], y)
    if len(g1) < 2 or len(g0) < 2:
        raise ValueError("t-test arm needs at least 2 samples per class")
    with np.errstate(all="ignore"):
        p_t = ttest_ind(g1, g0, axis=0, equal_var=False).pvalue
    p_t = np.where(np.isnan(p_t), 1.0, p_t)

    cov_block = M[:, covariates] if covariates else np.empty((M.shape[0], 0))
    p_lr = np.ones(len(candidates))
    lr_failed = []
    for pos, j in enumerate(candidates):
        design = np.column_stack([M[:, j], cov_block])
        fit = irls_logistic(design, y, compute_cov=True)
        ok = fit.converged and fit.cov is not None and fit.cov[1, 1] > 0.0
        if ok:
            z = fit.coef[0] / np.sqrt(fit.cov[1, 1])
            p_lr[pos] = 2.0 * norm.sf(abs(z))
        else:
            lr_failed.append(j)
    q_t = bh_adjust(p_t)
    q_lr = bh_adjust(p_lr)
    hit = (q_t <= alpha) | (q_lr <= alpha)
    selected = tuple(sorted(candidates[pos] for pos in np.flatnonzero(hit)))
    diagnostics = {"candidates": tuple(candidates), "p_ttest": p_t, "p_logistic": p_lr,
                   "q_ttest": q_t, "q_logistic": q_lr, "alpha": alpha,
                   "lr_failed": tuple(lr_failed), "covariates": covariates}
    return SelectionResult(method="padjust_union", selected=selected, k=len(selected),
                           mode=THRESHOLDED, diagnostics=diagnostics)


def select_top_k(scores: FeatureScores, k) -> SelectionResult:
    """Best k features by score; ties break to the lowest index."""
    if k < 1:
        raise ValueError("k must be >= 1")
    vals = scores.scores if scores.higher_is_better else -scores.scores
    p = vals.size
    k_eff = min(k, p)
    order = np.lexsort((np.arange(p), -vals))
    selected = tuple(int(j) for j in order[:k_eff])
    return SelectionResult(method=scores.method, selected=selected, k=k_eff,
                           mode=FIXED_K, diagnostics={"scores": scores.scores})


def random_select(p, k, seed) -> SelectionResult:
    """Uniform random subset control; ``k`` may be an int or an inclusive range."""
    rng = np.random.default_rng(seed)
    if isinstance(k, (tuple, list)):
        lo, hi = int(k[0]), int(k[1])
        if lo > hi or lo < 1 or hi > p:
            raise ValueError(f"empty or invalid size range [{lo}, {hi}] for p={p}")
        size = int(rng.integers(lo, hi + 1))
    else:
        size = int(k)
        if size < 1 or size > p:
            raise ValueError(f"k={size} out of range for p={p}")
    selected = tuple(sorted(int(j) for j in rng.choice(p, size=size, replace=False)))
    return SelectionResult(method="random", selected=selected, k=size,
                           mode=FIXED_K, diagnostics={"requested": k, "seed": seed})
