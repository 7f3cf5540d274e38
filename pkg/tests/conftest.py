"""Shared test helpers.

The reference implementations here deliberately avoid the package's own
code paths (lstsq instead of normal equations, itertools enumeration
instead of the downdate chain) so they can serve as independent oracles.
"""

import itertools

import numpy as np
import pytest


def lstsq_theta(X, y):
    """Reference OLS solve via lstsq, independent of the package."""
    theta, *_ = np.linalg.lstsq(X, y, rcond=None)
    return theta


def lstsq_drop(X, y, indices):
    """Reference refit after deleting rows; returns (theta, identified).

    identified is False when the design loses full column rank.
    """
    keep = np.ones(X.shape[0], dtype=bool)
    keep[list(indices)] = False
    Xk, yk = X[keep], y[keep]
    identified = np.linalg.matrix_rank(Xk) == X.shape[1]
    return lstsq_theta(Xk, yk), identified


def exhaustive_best_drop(X, y, p, k_max, direction_sign=1.0):
    """Reference subset search: full lstsq refit of every subset.

    Returns (best_indices, best_estimate) maximizing
    direction_sign * (theta_full - theta_subset), preferring smaller
    subsets then earlier enumeration on ties. Rank-losing subsets are
    skipped.
    """
    base = lstsq_theta(X, y)[p]
    best_indices, best_estimate, best_objective = (), float(base), 0.0
    n = X.shape[0]
    for k in range(1, k_max + 1):
        for combo in itertools.combinations(range(n), k):
            theta, ok = lstsq_drop(X, y, combo)
            if not ok:
                continue
            objective = direction_sign * (base - theta[p])
            if objective > best_objective:
                best_indices, best_estimate = combo, float(theta[p])
                best_objective = objective
    return best_indices, best_estimate


def random_dataset(rng, n=None, p=None, max_n=40, max_p=5):
    """Random well-conditioned regression problem."""
    if p is None:
        p = int(rng.integers(1, max_p + 1))
    if n is None:
        n = int(rng.integers(p + 3, max_n + 1))
    X = rng.normal(size=(n, p))
    theta = rng.normal(size=p)
    y = X @ theta + rng.normal(size=n)
    return X, y


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
