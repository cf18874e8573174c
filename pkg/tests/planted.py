"""Planted-signal dataset generators for the test suite."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from fsbench.simulation import SimulationSpec, simulate_outcome


@dataclass(frozen=True)
class PlantedDataset:
    matrix: np.ndarray
    labels: np.ndarray
    truth: tuple
    strength: float
    seed: int


def make_planted(n, p, s, strength, seed, block_corr=0.0):
    """Standard-normal matrix with labels from the package's own generator.

    The first ``s`` features carry coefficient ``strength`` in a linear truth
    model with unit Gaussian noise; ``block_corr`` adds equicorrelation
    within blocks of 4 consecutive features. Regeneration from the same seed
    is exact.
    """
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, p))
    if block_corr > 0.0:
        for start in range(0, p, 4):
            block = slice(start, min(start + 4, p))
            common = rng.normal(size=(n, 1))
            X[:, block] = (np.sqrt(1.0 - block_corr) * X[:, block]
                           + np.sqrt(block_corr) * common)
    truth = tuple(range(s))
    spec = SimulationSpec(truth=truth, beta=np.full(s, float(strength)),
                          intercept=0.0, noise_sd=1.0, replicates=1, seed=seed)
    labels = simulate_outcome(X, spec, 0)
    return PlantedDataset(matrix=X, labels=labels, truth=truth,
                          strength=float(strength), seed=seed)
