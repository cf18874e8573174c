"""Loading, validation, preprocessing, and resampling of tabular classification data."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, ResampleError

DEFAULT_MISSING_SENTINELS = ("", "NA", "NaN")
DEFAULT_MAX_CATEGORIES = 10
CONTINUOUS = "continuous"
CATEGORICAL = "categorical"


@dataclass(frozen=True)
class FeatureMeta:
    name: str
    kind: str  # "continuous" | "categorical"


@dataclass(frozen=True)
class Dataset:
    """An n x p feature matrix with missing mask and a binary outcome.

    ``features`` holds NaN exactly where ``missing`` is True. Instances are
    immutable and safe to share across threads.
    """

    features: np.ndarray
    missing: np.ndarray
    feature_meta: tuple[FeatureMeta, ...]
    outcome: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.features, dtype=np.float64)
        mask = np.asarray(self.missing, dtype=bool)
        y = np.asarray(self.outcome)
        if X.ndim != 2:
            raise DataError("feature matrix must be 2-dimensional")
        n, p = X.shape
        if n < 2 or p < 1:
            raise DataError(f"need n >= 2 and p >= 1, got n={n}, p={p}")
        if mask.shape != X.shape:
            raise DataError("missing mask shape differs from feature matrix")
        if not np.array_equal(np.isnan(X), mask):
            raise DataError("missing mask inconsistent with NaN entries")
        if len(self.feature_meta) != p:
            raise DataError("feature_meta length differs from feature count")
        if y.shape != (n,):
            raise DataError("outcome length differs from sample count")
        vals = set(np.unique(y).tolist())
        if not vals <= {0, 1}:
            raise DataError("outcome values must be 0/1")
        if len(vals) < 2:
            raise DataError("single-class outcome")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "missing", mask)
        object.__setattr__(self, "outcome", y.astype(np.int8))
        object.__setattr__(self, "feature_meta", tuple(self.feature_meta))

    @property
    def n(self):
        return self.features.shape[0]

    @property
    def p(self):
        return self.features.shape[1]

    @property
    def feature_names(self):
        return tuple(m.name for m in self.feature_meta)

    @classmethod
    def from_arrays(cls, X, y, names=None, kinds=None):
        """Build a Dataset from dense arrays; NaN entries become the missing mask."""
        X = np.asarray(X, dtype=np.float64)
        n, p = X.shape
        if names is None:
            names = [f"feat_{j:02d}" for j in range(p)]
        if kinds is None:
            kinds = [CONTINUOUS] * p
        meta = tuple(FeatureMeta(str(nm), str(kd)) for nm, kd in zip(names, kinds))
        return cls(features=X, missing=np.isnan(X), feature_meta=meta,
                   outcome=np.asarray(y))


@dataclass(frozen=True)
class Resample:
    """One bootstrap or subsample draw of the rows of a Dataset."""

    kind: str
    in_indices: np.ndarray
    oob_indices: np.ndarray
    seed: int
    ordinal: int


@dataclass(frozen=True)
class PreprocessState:
    """Per-feature imputation values and standardization pairs.

    Fitted only from training rows; applying it never consults held-out
    rows. Constant features carry scale 1 and are flagged.
    """

    impute: np.ndarray
    center: np.ndarray
    scale: np.ndarray
    constant: np.ndarray
    feature_names: tuple = field(default=())


def _parse_cell(raw, sentinels):
    text = raw.strip()
    if text in sentinels:
        return np.nan
    try:
        return float(text)
    except ValueError:
        return np.nan  # unparseable cells count as missing


def load_csv(path, target, schema_hints=None, *,
             missing_sentinels=DEFAULT_MISSING_SENTINELS,
             max_categories=DEFAULT_MAX_CATEGORIES):
    """Load an RFC-4180 CSV with a header row into a Dataset.

    Cells equal to a missing sentinel (after stripping whitespace), and cells
    that fail numeric parsing, are marked missing. A feature column with zero
    parseable values is an error. Feature kind is inferred as categorical when
    the number of distinct observed values is <= ``max_categories``, unless
    overridden through ``schema_hints`` (a name -> kind mapping).
    """
    sentinels = set(missing_sentinels)
    hints = dict(schema_hints or {})
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        rows = [r for r in reader if r]
    if len(set(header)) != len(header):
        dupes = sorted({h for h in header if header.count(h) > 1})
        raise DataError(f"duplicate column names: {dupes}")
    if target not in header:
        raise DataError(f"target column {target!r} not found")
    t_col = header.index(target)
    feat_cols = [j for j in range(len(header)) if j != t_col]
    if not feat_cols:
        raise DataError("no feature columns besides the target")

    n = len(rows)
    raw_target = []
    X = np.empty((n, len(feat_cols)))
    for i, row in enumerate(rows):
        if len(row) != len(header):
            raise DataError(f"row {i + 2}: expected {len(header)} cells, got {len(row)}")
        raw_target.append(row[t_col].strip())
        for out_j, j in enumerate(feat_cols):
            X[i, out_j] = _parse_cell(row[j], sentinels)

    y = _binarize_target(raw_target, target)

    meta = []
    for out_j, j in enumerate(feat_cols):
        col = X[:, out_j]
        observed = col[~np.isnan(col)]
        if observed.size == 0:
            raise DataError(f"column {header[j]!r} has no parseable values")
        name = header[j]
        if name in hints:
            kind = hints[name]
            if kind not in (CONTINUOUS, CATEGORICAL):
                raise DataError(f"schema hint for {name!r} must be continuous or categorical")
        else:
            kind = CATEGORICAL if np.unique(observed).size <= max_categories else CONTINUOUS
        meta.append(FeatureMeta(name, kind))

    return Dataset(features=X, missing=np.isnan(X), feature_meta=tuple(meta), outcome=y)


def _binarize_target(raw_target, target):
    if any(t == "" for t in raw_target):
        raise DataError(f"target column {target!r} has missing values")
    try:
        vals = np.array([float(t) for t in raw_target])
        if not set(np.unique(vals).tolist()) <= {0.0, 1.0}:
            raise DataError(f"target column {target!r} does not binarize to 0/1")
        y = vals.astype(np.int8)
    except ValueError:
        levels = sorted(set(raw_target))
        if len(levels) != 2:
            raise DataError(f"target column {target!r} does not binarize to 0/1") from None
        y = np.array([levels.index(t) for t in raw_target], dtype=np.int8)
    if np.unique(y).size < 2:
        raise DataError("single-class outcome")
    return y


def fit_preprocess(data: Dataset, rows) -> PreprocessState:
    """Fit imputation and z-score parameters on the given training rows.

    ``rows`` may contain repeats (a bootstrap is a multiset); repeated rows
    are honored, so the state describes the resample exactly as drawn.
    Continuous features impute the median, categorical the mode (ties go to
    the smallest value). Mean/SD are computed after imputation.
    """
    rows = np.asarray(rows, dtype=np.intp)
    if rows.size == 0:
        raise DataError("cannot fit preprocessing on an empty row set")
    sub = data.features[rows]
    p = data.p
    impute = np.empty(p)
    center = np.empty(p)
    scale = np.empty(p)
    constant = np.zeros(p, dtype=bool)
    for j in range(p):
        col = sub[:, j]
        observed = col[~np.isnan(col)]
        if observed.size == 0:
            raise DataError(
                f"feature {data.feature_meta[j].name!r} is missing in all training rows")
        if data.feature_meta[j].kind == CATEGORICAL:
            uniq, counts = np.unique(observed, return_counts=True)
            impute[j] = uniq[np.argmax(counts)]  # first max = smallest value
        else:
            impute[j] = np.median(observed)
        filled = np.where(np.isnan(col), impute[j], col)
        center[j] = filled.mean()
        sd = filled.std()
        if sd == 0.0:
            constant[j] = True
            scale[j] = 1.0
        else:
            scale[j] = sd
    return PreprocessState(impute=impute, center=center, scale=scale,
                           constant=constant, feature_names=data.feature_names)


def apply_preprocess(state: PreprocessState, data: Dataset, rows) -> np.ndarray:
    """Impute and standardize the given rows using a fitted state."""
    if state.feature_names != data.feature_names:
        raise DataError("preprocess state was fitted on a different feature schema")
    rows = np.asarray(rows, dtype=np.intp)
    M = data.features[rows].copy()
    nan_mask = np.isnan(M)
    M[nan_mask] = np.broadcast_to(state.impute, M.shape)[nan_mask]
    return (M - state.center) / state.scale


def make_resamples(data: Dataset, B, kind="bootstrap", ratio=0.8, seed=0):
    """Draw B resamples, each from the child seed ``seed ^ ordinal``.

    The child-seed scheme makes generation order irrelevant, so resamples can
    be produced in parallel. Draws that land a single outcome class in
    ``in_indices`` are retried up to 100 times before raising.
    """
    if B < 1:
        raise ValueError("B must be >= 1")
    if kind not in ("bootstrap", "subsample"):
        raise ValueError(f"unknown resample kind {kind!r}")
    if kind == "subsample" and not 0.0 < ratio <= 1.0:
        raise ValueError("subsample ratio must be in (0, 1]")
    if seed < 0:
        raise ValueError("seed must be non-negative")
    n = data.n
    y = data.outcome
    all_rows = np.arange(n)
    out = []
    for b in range(1, B + 1):
        child = seed ^ b
        rng = np.random.default_rng(child)
        for _ in range(100):
            if kind == "bootstrap":
                idx = rng.integers(0, n, size=n)
            else:
                m = int(round(ratio * n))
                if m < 2:
                    raise ResampleError("subsample too small to hold both classes")
                idx = rng.choice(n, size=m, replace=False)
            if np.unique(y[idx]).size == 2:
                break
        else:
            raise ResampleError(
                f"could not draw a two-class resample (ordinal {b}) in 100 attempts")
        oob = np.setdiff1d(all_rows, idx)
        out.append(Resample(kind=kind, in_indices=idx, oob_indices=oob,
                            seed=child, ordinal=b))
    return out


def stratified_fold_indices(y, folds, seed=None):
    """Assign rows to stratified CV folds; returns a list of held-out index arrays.

    With ``seed=None`` the assignment is a deterministic round-robin within
    each class (no RNG involved); with a seed, class indices are shuffled
    first. Every fold is guaranteed both classes, which requires the minority
    class to have at least ``folds`` members.
    """
    y = np.asarray(y)
    if folds < 2:
        raise ValueError("folds must be >= 2")
    assignments = np.empty(y.size, dtype=np.intp)
    rng = np.random.default_rng(seed) if seed is not None else None
    for cls in (0, 1):
        idx = np.flatnonzero(y == cls)
        if idx.size < folds:
            raise DataError(
                f"class {cls} has {idx.size} samples; cannot build {folds} two-class folds")
        if rng is not None:
            idx = rng.permutation(idx)
        assignments[idx] = np.arange(idx.size) % folds
    return [np.flatnonzero(assignments == f) for f in range(folds)]
