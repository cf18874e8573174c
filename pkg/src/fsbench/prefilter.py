"""Iterative variance-inflation-factor reduction of multicollinearity."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

R2_CLAMP = 1.0 - 1e-12
VIF_CAP = 1e12


class VifValue(NamedTuple):
    vif: float
    r2: float
    constant: bool


@dataclass(frozen=True)
class VifReport:
    """Outcome of the iterative VIF filter.

    ``surviving_features`` keeps the original column order; ``removal_trace``
    records, in removal order, the feature dropped at each step together with
    its VIF (the maximum among features alive at that step). ``final_vifs``
    and ``final_r2`` describe the surviving set.
    """

    surviving_features: tuple
    removal_trace: tuple
    final_vifs: dict
    final_r2: dict
    threshold: float

    def to_json_dict(self, names=None):
        def label(j):
            return names[j] if names is not None else j

        return {
            "threshold": self.threshold,
            "surviving": [int(j) for j in self.surviving_features],
            "surviving_names": [label(j) for j in self.surviving_features] if names else None,
            "trace": [{"feature": int(j), "name": label(j) if names else None,
                       "vif": float(v)} for j, v in self.removal_trace],
            "final_vifs": {str(j): float(v) for j, v in self.final_vifs.items()},
            "final_r2": {str(j): float(v) for j, v in self.final_r2.items()},
        }


def compute_vif(matrix, j) -> VifValue:
    """VIF of column j: 1/(1 - R^2) from regressing it on all other columns.

    Least squares uses an SVD factorization (minimum-norm on rank-deficient
    designs). R^2 is clamped below 1 so a perfectly collinear column reports
    the cap 1e12 instead of infinity. A constant column has no variance to
    explain: VIF is defined as 1 and flagged.
    """
    M = np.asarray(matrix, dtype=np.float64)
    n, p = M.shape
    if p < 2:
        raise ValueError("VIF needs at least two columns")
    target = M[:, j]
    sst = float(np.sum((target - target.mean()) ** 2))
    if sst == 0.0:
        return VifValue(vif=1.0, r2=0.0, constant=True)
    others = np.delete(M, j, axis=1)
    design = np.column_stack([np.ones(n), others])
    coef, *_ = np.linalg.lstsq(design, target, rcond=None)
    resid = target - design @ coef
    ssr = float(resid @ resid)
    r2 = 1.0 - ssr / sst
    r2 = min(max(r2, 0.0), R2_CLAMP)
    return VifValue(vif=1.0 / (1.0 - r2), r2=r2, constant=False)


def iterative_vif_filter(matrix, threshold=5.0) -> VifReport:
    """Drop the highest-VIF feature (ties to the lowest index) until all pass.

    Stops when every surviving feature has VIF <= threshold or only one
    feature remains. VIFs are recomputed from scratch after each removal.
    """
    if threshold <= 1.0:
        raise ValueError("VIF threshold must be > 1")
    M = np.asarray(matrix, dtype=np.float64)
    p = M.shape[1]
    alive = list(range(p))
    trace = []
    while len(alive) > 1:
        sub = M[:, alive]
        vifs = np.array([compute_vif(sub, local).vif for local in range(len(alive))])
        worst = int(np.argmax(vifs))  # first max = lowest index on ties
        if vifs[worst] <= threshold:
            break
        trace.append((alive[worst], float(vifs[worst])))
        alive.pop(worst)

    final_vifs = {}
    final_r2 = {}
    if len(alive) == 1:
        final_vifs[alive[0]] = 1.0
        final_r2[alive[0]] = 0.0
    else:
        sub = M[:, alive]
        for local, j in enumerate(alive):
            val = compute_vif(sub, local)
            final_vifs[j] = val.vif
            final_r2[j] = val.r2
    return VifReport(surviving_features=tuple(alive), removal_trace=tuple(trace),
                     final_vifs=final_vifs, final_r2=final_r2, threshold=float(threshold))
