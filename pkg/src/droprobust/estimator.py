"""Scikit-learn style wrapper around the audit pipeline.

DropSensitivityAuditor fits OLS on (X, y) and then asks, for each
configured method, whether deleting at most a small fraction of the rows
can change the sign of one chosen coefficient. The estimator surface
(fit / get_params / set_params) makes it drop into sklearn tooling such
as clone and parameter grids.
"""

from __future__ import annotations

import time

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted, check_X_y

from .core import fit as ols_fit
from .core import make_dataset
from .greedy import GREEDY_AMIP, GREEDY_ONE_EXACT, greedy_audit
from .scores import (
    ADDITIVE_ONE_EXACT,
    AMIP,
    TO_NEGATIVE,
    TO_POSITIVE,
    additive_audit,
    additive_report,
)

DEFAULT_METHODS = (AMIP, ADDITIVE_ONE_EXACT, GREEDY_AMIP, GREEDY_ONE_EXACT)


def resolve_direction(direction: str, theta_p: float) -> str:
    """Map "auto" to the sign flip of the observed coefficient."""
    if direction == "auto":
        return TO_NEGATIVE if theta_p > 0 else TO_POSITIVE
    if direction in (TO_NEGATIVE, TO_POSITIVE):
        return direction
    raise ValueError(f"unknown direction {direction!r}")


class DropSensitivityAuditor(BaseEstimator):
    """Audit the sign stability of one OLS coefficient under row deletion.

    Parameters
    ----------
    coef : column index (or name, when fit on a named dataset) of the
        audited coefficient. Defaults to the first column.
    alpha : maximum fraction of rows the audit may delete.
    methods : audit methods to run.
    direction : "auto" targets the sign opposite the fitted coefficient.
    add_intercept : append an all-ones column before fitting.

    Attributes after fit: ``theta_`` (full-data coefficients),
    ``reports_`` (method name to report), ``non_robust_`` (True when any
    method found a conclusion-changing drop set within budget).
    """

    def __init__(
        self,
        coef=0,
        alpha: float = 0.01,
        methods=DEFAULT_METHODS,
        direction: str = "auto",
        add_intercept: bool = True,
    ):
        self.coef = coef
        self.alpha = alpha
        self.methods = methods
        self.direction = direction
        self.add_intercept = add_intercept

    def fit(self, X, y):
        X, y = check_X_y(X, y, y_numeric=True)
        self.n_features_in_ = X.shape[1]
        names = [f"x{j}" for j in range(X.shape[1])]
        dataset = make_dataset(X, y, names, add_intercept=self.add_intercept)
        p = dataset.coef_index(self.coef)

        full = ols_fit(dataset)
        self.theta_ = full.theta.copy()
        direction = resolve_direction(self.direction, float(full.theta[p]))

        reports = {}
        for method in self.methods:
            t0 = time.perf_counter()
            if method in (AMIP, ADDITIVE_ONE_EXACT):
                audit = additive_audit(
                    dataset, p, self.alpha, method, direction, base_fit=full
                )
                reports[method] = additive_report(
                    audit, runtime_seconds=time.perf_counter() - t0
                )
            elif method in (GREEDY_AMIP, GREEDY_ONE_EXACT):
                report, _ = greedy_audit(dataset, p, self.alpha, method, direction)
                reports[method] = report
            else:
                raise ValueError(f"unknown method {method!r}")
        self.reports_ = reports
        self.non_robust_ = any(r.sign_changed for r in reports.values())
        return self

    def predict(self, X):
        """Fitted values of the underlying full-data OLS model."""
        check_is_fitted(self, "theta_")
        X = np.asarray(X, dtype=float)
        if self.add_intercept:
            X = np.hstack([X, np.ones((X.shape[0], 1))])
        return X @ self.theta_
