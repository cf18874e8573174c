"""Slow, obviously-correct oracle implementations used by the test suite.

Each oracle deliberately shares no code with the library path it checks:
pairwise AUC counts all pairs directly, mutual information comes from
Counter-based joint histograms, linkage clustering is the naive O(p^3)
agglomeration, VIF solves the normal equations, and the KKT checker
recomputes the logistic gradient from scratch.
"""

from __future__ import annotations

import math
from collections import Counter
from itertools import combinations

import numpy as np
from scipy import stats


# ---------------------------------------------------------------------------
# AUC
# ---------------------------------------------------------------------------

def pairwise_auc(scores, labels):
    """AUC by explicit comparison of every (positive, negative) pair."""
    pos = [s for s, l in zip(scores, labels) if l == 1]
    neg = [s for s, l in zip(scores, labels) if l == 0]
    wins = 0.0
    for sp in pos:
        for sn in neg:
            if sp > sn:
                wins += 1.0
            elif sp == sn:
                wins += 0.5
    return wins / (len(pos) * len(neg))


# ---------------------------------------------------------------------------
# Mutual information from Counter-based joint histograms
# ---------------------------------------------------------------------------

def entropy_counter(*columns):
    joint = Counter(zip(*[list(c) for c in columns]))
    total = sum(joint.values())
    return -sum((c / total) * math.log(c / total) for c in joint.values())


def mi_counter(a, b):
    return entropy_counter(a) + entropy_counter(b) - entropy_counter(a, b)


def cmi_counter(a, b, z):
    return (entropy_counter(a, z) + entropy_counter(b, z)
            - entropy_counter(z) - entropy_counter(a, b, z))


def greedy_mi_oracle(codes, y, criterion, k):
    """Exhaustive greedy recomputation of the MI criteria from raw histograms."""
    n, p = codes.shape
    cols = [codes[:, j].tolist() for j in range(p)]
    yl = list(y)
    rel = [mi_counter(cols[j], yl) for j in range(p)]
    selected = [max(range(p), key=lambda j: (rel[j], -j))]
    while len(selected) < k:
        best_j, best_score = None, None
        for cand in range(p):
            if cand in selected:
                continue
            if criterion == "cmim":
                score = min(cmi_counter(cols[cand], yl, cols[j]) for j in selected)
            elif criterion == "cife":
                score = (rel[cand]
                         - sum(mi_counter(cols[j], cols[cand]) for j in selected)
                         + sum(cmi_counter(cols[j], cols[cand], yl) for j in selected))
            elif criterion == "jmi":
                w = 1.0 / len(selected)
                score = (rel[cand]
                         - w * sum(mi_counter(cols[j], cols[cand]) for j in selected)
                         + w * sum(cmi_counter(cols[j], cols[cand], yl) for j in selected))
            elif criterion == "disr":
                score = 0.0
                for j in selected:
                    num = rel[cand] + cmi_counter(cols[j], yl, cols[cand])
                    den = (entropy_counter(cols[cand])
                           + entropy_counter(cols[j], cols[cand]) - entropy_counter(cols[j])
                           + entropy_counter(yl, cols[cand]) - entropy_counter(cols[cand])
                           - cmi_counter(yl, cols[j], cols[cand]))
                    score += num / den if den > 1e-12 else 0.0
            else:
                raise ValueError(criterion)
            if best_score is None or score > best_score + 1e-15:
                best_j, best_score = cand, score
        selected.append(best_j)
    return selected


def mrmr_oracle(X, y, k):
    """Step-by-step mRMR recomputation with scipy's F and Pearson r."""
    p = X.shape[1]
    f_vals = []
    for j in range(p):
        g1 = X[y == 1, j]
        g0 = X[y == 0, j]
        f_vals.append(float(stats.f_oneway(g1, g0).statistic))
    selected = [int(np.argmax(f_vals))]
    while len(selected) < k:
        best_j, best_score = None, None
        for cand in range(p):
            if cand in selected:
                continue
            red = np.mean([abs(stats.pearsonr(X[:, cand], X[:, j]).statistic)
                           for j in selected])
            score = f_vals[cand] / (red + 1e-12)
            if best_score is None or score > best_score + 1e-15:
                best_j, best_score = cand, score
        selected.append(best_j)
    return selected


# ---------------------------------------------------------------------------
# Naive average-linkage clustering
# ---------------------------------------------------------------------------

def naive_average_linkage(D, k):
    """Agglomerate to k clusters on a precomputed distance matrix.

    Cluster distance is the average over all member pairs (recomputed from
    scratch every merge). Returns a partition as a set of frozensets.
    """
    p = D.shape[0]
    clusters = [frozenset([j]) for j in range(p)]
    while len(clusters) > k:
        best = None
        for a, b in combinations(range(len(clusters)), 2):
            dist = np.mean([D[i, j] for i in clusters[a] for j in clusters[b]])
            if best is None or dist < best[0] - 1e-15:
                best = (dist, a, b)
        _, a, b = best
        merged = clusters[a] | clusters[b]
        clusters = [c for i, c in enumerate(clusters) if i not in (a, b)] + [merged]
    return set(clusters)


# ---------------------------------------------------------------------------
# LASSO KKT residuals
# ---------------------------------------------------------------------------

def kkt_residuals(X, y, coefficients, intercept, lam):
    """Max violation of the subgradient conditions of the penalized objective.

    Returns (active_residual, inactive_residual): for nonzero coefficients
    |grad_j + lam*sign(beta_j)| and for zero coefficients
    max(|grad_j| - lam, 0), computed from a from-scratch gradient of the
    mean log-loss.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(y)
    eta = intercept + X @ coefficients
    prob = 1.0 / (1.0 + np.exp(-eta))
    grad = -X.T @ (y - prob) / n
    active = coefficients != 0.0
    res_active = 0.0
    if active.any():
        res_active = float(np.max(np.abs(grad[active] + lam * np.sign(coefficients[active]))))
    res_inactive = 0.0
    if (~active).any():
        res_inactive = float(max(np.max(np.abs(grad[~active])) - lam, 0.0))
    return res_active, res_inactive


# ---------------------------------------------------------------------------
# VIF by normal equations
# ---------------------------------------------------------------------------

def vif_normal_equations(M, j):
    """R^2 and VIF of column j from the normal equations of the regression."""
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    target = M[:, j]
    others = np.delete(M, j, axis=1)
    A = np.column_stack([np.ones(n), others])
    beta = np.linalg.solve(A.T @ A, A.T @ target)
    resid = target - A @ beta
    sst = np.sum((target - target.mean()) ** 2)
    r2 = 1.0 - resid @ resid / sst
    return float(r2), float(1.0 / (1.0 - r2))


# ---------------------------------------------------------------------------
# Benjamini-Hochberg brute force
# ---------------------------------------------------------------------------

def bh_brute_force(pvalues):
    """Direct evaluation of q_(i) = min_{j>=i} p_(j) * m / j, input order."""
    p = list(pvalues)
    m = len(p)
    order = sorted(range(m), key=lambda i: (p[i], i))
    q_sorted = []
    for rank_i in range(m):
        q = min(p[order[j]] * m / (j + 1) for j in range(rank_i, m))
        q_sorted.append(min(q, 1.0))
    out = [0.0] * m
    for rank_i, idx in enumerate(order):
        out[idx] = q_sorted[rank_i]
    return out


# ---------------------------------------------------------------------------
# Closed forms for probabilistic checks
# ---------------------------------------------------------------------------

def expected_tpr_uniform(k, p):
    """E[TPR] of a uniform k-subset against any fixed truth set: k/p."""
    return k / p


def probit_prevalence(linear_predictor, noise_sd):
    """Expected label-1 share: mean_i Phi(lp_i / sd)."""
    lp = np.asarray(linear_predictor, dtype=float)
    return float(np.mean(stats.norm.cdf(lp / noise_sd)))


def welch_t_oracle(x1, x0):
    """Welch t statistic via scipy (independent of the library's formula)."""
    return abs(float(stats.ttest_ind(x1, x0, equal_var=False).statistic))
