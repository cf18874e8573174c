"""Depth-limited decision trees backing the forest and boosting classifiers.

Trees are deliberately tiny (the benchmark caps depth at 2, i.e. at most 4
leaves), so the builder favors clarity and exact determinism over speed:
candidate thresholds are midpoints between consecutive distinct sorted
values, features are scanned in ascending index order, and ties keep the
first (lowest feature, lowest threshold) split.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class TreeNode:
    value: float
    n_samples: int
    impurity: float
    feature: int = -1
    threshold: float = 0.0
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    @property
    def is_leaf(self):
        return self.left is None

    def depth(self):
        if self.is_leaf:
            return 0
        return 1 + max(self.left.depth(), self.right.depth())

    def n_leaves(self):
        if self.is_leaf:
            return 1
        return self.left.n_leaves() + self.right.n_leaves()


@dataclass
class Tree:
    root: TreeNode
    importances: np.ndarray = field(repr=False)

    def predict(self, X):
        X = np.asarray(X, dtype=np.float64)
        out = np.empty(X.shape[0])
        self._fill(self.root, X, np.arange(X.shape[0]), out)
        return out

    def _fill(self, node, X, rows, out):
        if node.is_leaf:
            out[rows] = node.value
            return
        go_left = X[rows, node.feature] <= node.threshold
        self._fill(node.left, X, rows[go_left], out)
        self._fill(node.right, X, rows[~go_left], out)


def _gini(y):
    p1 = y.mean()
    return 1.0 - p1 * p1 - (1.0 - p1) * (1.0 - p1)


def _impurity(target, criterion):
    return _gini(target) if criterion == "gini" else float(target.var())


def _scan_feature(x, t, min_leaf, criterion):
    """Best (threshold, weighted child impurity) for one feature, or None."""
    n = x.size
    order = np.argsort(x, kind="stable")
    xs = x[order]
    ts = t[order]
    sizes = np.arange(1, n)
    ok = (xs[:-1] < xs[1:]) & (sizes >= min_leaf) & ((n - sizes) >= min_leaf)
    if not ok.any():
        return None
    left_n = sizes.astype(np.float64)
    right_n = n - left_n
    csum = np.cumsum(ts)[:-1]
    if criterion == "gini":
        pl = csum / left_n
        pr = (ts.sum() - csum) / right_n
        child_l = 1.0 - pl ** 2 - (1.0 - pl) ** 2
        child_r = 1.0 - pr ** 2 - (1.0 - pr) ** 2
        weighted = (left_n * child_l + right_n * child_r) / n
    else:
        csumsq = np.cumsum(ts * ts)[:-1]
        sse_l = csumsq - csum ** 2 / left_n
        total, total_sq = ts.sum(), (ts * ts).sum()
        sse_r = (total_sq - csumsq) - (total - csum) ** 2 / right_n
        weighted = (sse_l + sse_r) / n
    weighted = np.where(ok, weighted, np.inf)
    best = int(np.argmin(weighted))
    thr = 0.5 * (xs[best] + xs[best + 1])
    return float(thr), float(weighted[best])


def build_tree(X, target, *, criterion, max_depth, min_samples_leaf,
               max_features, rng, leaf_value=None):
    """Grow a depth-limited tree; ``leaf_value`` overrides the default mean payload.

    ``max_features`` is the fraction of features drawn (without replacement)
    at every split. ``leaf_value`` receives the row indices reaching a leaf.
    """
    X = np.asarray(X, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    n, p = X.shape
    m = max(1, int(round(max_features * p)))
    importances = np.zeros(p)
    if leaf_value is None:
        def leaf_value(rows):
            return float(target[rows].mean())

    def grow(rows, depth):
        t = target[rows]
        imp = _impurity(t, criterion)
        node = TreeNode(value=leaf_value(rows), n_samples=rows.size, impurity=imp)
        if depth >= max_depth or rows.size < 2 * min_samples_leaf or imp <= 1e-12:
            return node
        feats = np.sort(rng.choice(p, size=m, replace=False))
        best = None
        for f in feats:
            hit = _scan_feature(X[rows, f], t, min_samples_leaf, criterion)
            if hit is None:
                continue
            thr, weighted = hit
            if best is None or weighted < best[2]:
                best = (int(f), thr, weighted)
        if best is None or imp - best[2] <= 1e-12:
            return node
        f, thr, weighted = best
        importances[f] += rows.size * (imp - weighted) / n
        go_left = X[rows, f] <= thr
        node.feature = f
        node.threshold = thr
        node.left = grow(rows[go_left], depth + 1)
        node.right = grow(rows[~go_left], depth + 1)
        return node

    root = grow(np.arange(n), 0)
    return Tree(root=root, importances=importances)
