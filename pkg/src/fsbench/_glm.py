"""Internal IRLS solver for (optionally ridge-penalized) logistic regression.

Shared by the classifiers, filters, embedded, and simulation modules so that
every unpenalized logistic fit in the package goes through one code path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit


@dataclass(frozen=True)
class LogisticFit:
    """Result of an IRLS logistic fit.

    ``coef`` excludes the intercept. ``cov`` is the inverse observed Fisher
    information of the full parameter vector (intercept first) when it could
    be computed, else None; it is the basis for Wald tests.
    """

    coef: np.ndarray
    intercept: float
    converged: bool
    iterations: int
    cov: np.ndarray | None


def _mean_logloss(eta, y):
    # log(1 + exp(eta)) - y*eta, computed stably
    return float(np.mean(np.logaddexp(0.0, eta) - y * eta))


def irls_logistic(X, y, l2=0.0, max_iter=100, tol=1e-8, compute_cov=False):
    """Fit logistic regression by Newton/IRLS with optional L2 penalty.

    Minimizes mean log-loss + (l2/2)*||coef||^2; the intercept is never
    penalized. Convergence when the infinity norm of the (penalized) mean
    gradient drops below ``tol``. Under perfect separation the iteration cap
    is reached and ``converged`` is False; the best iterate is returned.

    Parameters
    ----------
    X : (n, p) array, design without intercept column.
    y : (n,) array of 0/1 labels.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, p = X.shape
    A = np.column_stack([np.ones(n), X])
    beta = np.zeros(p + 1)
    pen = np.full(p + 1, l2)
    pen[0] = 0.0

    eta = A @ beta
    loss = _mean_logloss(eta, y) + 0.5 * l2 * float(beta[1:] @ beta[1:])
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        prob = expit(eta)
        grad = A.T @ (prob - y) / n + pen * beta
        if np.max(np.abs(grad)) < tol:
            converged = True
            break
        w = prob * (1.0 - prob)
        hess = (A * w[:, None]).T @ A / n + np.diag(pen)
        try:
            step = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            step, *_ = np.linalg.lstsq(hess, grad, rcond=None)
        # backtracking keeps the objective monotone under separation
        scale = 1.0
        for _ in range(50):
            cand = beta - scale * step
            eta_c = A @ cand
            loss_c = _mean_logloss(eta_c, y) + 0.5 * l2 * float(cand[1:] @ cand[1:])
            if loss_c <= loss + 1e-14:
                beta, eta, loss = cand, eta_c, loss_c
                break
            scale *= 0.5
        else:
            break  # no descent direction left; stop with current iterate

    cov = None
    if compute_cov:
        prob = expit(A @ beta)
        w = prob * (1.0 - prob)
        info = (A * w[:, None]).T @ A
        try:
            cov = np.linalg.inv(info)
        except np.linalg.LinAlgError:
            cov = None
    return LogisticFit(coef=beta[1:], intercept=float(beta[0]),
                       converged=converged, iterations=it, cov=cov)
