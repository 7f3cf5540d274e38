"""Exhaustive worst-case subset search and failure classification.

The oracle enumerates every drop set of size <= k_max and reports the one
that moves the audited coefficient furthest in the target direction. It
is the ground truth the approximations are judged against, so it must be
cheap per subset: each subset is evaluated by a chain of Sherman-Morrison
downdates (O(k P^2)), verified against a full refit every 1e5 subsets.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .core import (
    LEVERAGE_ONE_TOL,
    Dataset,
    DropSet,
    downdate_gram_inverse,
    fit,
    refit_without,
)
from .errors import (
    DropRobustError,
    LeverageOneError,
    OracleInfeasibleError,
    RankDeficientError,
)
from .report import AuditReport
from .scores import TO_NEGATIVE, conclusion_changed

NO_FAILURE = "no_failure"
FAILURE_WITH_RERUN = "failure_with_rerun"
FAILURE_WITHOUT_RERUN = "failure_without_rerun"
ROBUST = "robust"

DEFAULT_MAX_SUBSETS = 5e7
VERIFY_EVERY = 100_000
_CHAIN_VERIFY_RTOL = 1e-8


@dataclass(frozen=True)
class OracleResult:
    best_drop: DropSet
    best_estimate: float
    base_estimate: float
    max_perturbation: float
    subsets_evaluated: int
    skipped_ill_defined: int
    exhaustive: bool
    direction: str

    def sign_flip_found(self, direction: str | None = None) -> bool:
        return conclusion_changed(
            self.best_estimate, False, direction or self.direction
        )


def subset_count(n: int, k_max: int) -> int:
    return sum(math.comb(n, j) for j in range(k_max + 1))


def brute_force_mip(
    dataset: Dataset,
    p,
    k_max: int,
    limits: dict | None = None,
    direction: str = TO_NEGATIVE,
) -> OracleResult:
    """Enumerate all drop sets of size <= k_max; return the maximizer of
    the coefficient change in the target direction.

    Subsets whose refit is ill-defined are excluded from the argmax and
    counted (the objective is undefined there); on exact objective ties a
    smaller subset is preferred, then the first subset found in
    enumeration order wins.
    """
    limits = limits or {}
    max_subsets = float(limits.get("max_subsets", DEFAULT_MAX_SUBSETS))
    time_budget = limits.get("time_budget")

    p = dataset.coef_index(p)
    n = dataset.n_rows
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    total = subset_count(n, k_max)
    if total > max_subsets:
        raise OracleInfeasibleError(
            f"{total:.3g} subsets exceed the {max_subsets:.3g} limit; "
            "thin the data or lower k_max"
        )

    full = fit(dataset)
    base = float(full.theta[p])
    sign = 1.0 if direction == TO_NEGATIVE else -1.0

    best_indices: tuple[int, ...] = ()
    best_estimate = base
    best_objective = 0.0  # theta_p(full) - theta_p(subset), signed toward target
    evaluated = 1  # the empty subset
    skipped = 0
    t0 = time.perf_counter()
    exhausted = True

    X, y = dataset.X, dataset.y

    # DFS over index combinations sharing downdate prefixes: frame i holds
    # the (gram_inverse, theta) state after deleting prefix[:i].
    prefix: list[int] = []
    ginv_stack = [full.gram_inverse]
    theta_stack = [full.theta]

    def consider(indices: tuple[int, ...], estimate: float):
        nonlocal best_indices, best_estimate, best_objective
        objective = sign * (base - estimate)
        if objective > best_objective or (
            objective == best_objective and len(indices) < len(best_indices)
        ):
            best_indices = indices
            best_estimate = estimate
            best_objective = objective

    def dfs(start: int):
        nonlocal evaluated, skipped, exhausted
        if len(prefix) == k_max:
            return
        for i in range(start, n):
            ginv = ginv_stack[-1]
            theta = theta_stack[-1]
            x_i = X[i]
            g = ginv @ x_i
            h = x_i @ g
            if 1.0 - h < LEVERAGE_ONE_TOL:
                # The rank-one identity is unreliable this close to
                # leverage one; refit the survivors exactly instead.
                try:
                    exact = refit_without(dataset, tuple(prefix) + (i,))
                except RankDeficientError:
                    skipped += 1
                    continue  # every superset is also rank-deficient
                ginv_new = exact.gram_inverse
                theta_new = exact.theta
            else:
                try:
                    ginv_new = downdate_gram_inverse(ginv, x_i)
                except LeverageOneError:  # pragma: no cover - caught above
                    skipped += 1
                    continue
                r_i = y[i] - theta @ x_i
                theta_new = theta - g * (r_i / (1.0 - h))
            prefix.append(i)
            evaluated += 1
            consider(tuple(prefix), float(theta_new[p]))
            if evaluated % VERIFY_EVERY == 0:
                _verify_chain(dataset, tuple(prefix), theta_new, p)
            if time_budget is not None and (
                time.perf_counter() - t0 > time_budget
            ):
                prefix.pop()
                exhausted = False
                raise _TimeBudgetHit
            ginv_stack.append(ginv_new)
            theta_stack.append(theta_new)
            dfs(i + 1)
            ginv_stack.pop()
            theta_stack.pop()
            prefix.pop()

    try:
        dfs(0)
    except _TimeBudgetHit:
        pass

    return OracleResult(
        best_drop=DropSet(best_indices, budget=k_max),
        best_estimate=best_estimate,
        base_estimate=base,
        max_perturbation=base - best_estimate,
        subsets_evaluated=evaluated,
        skipped_ill_defined=skipped,
        exhaustive=exhausted,
        direction=direction,
    )


class _TimeBudgetHit(Exception):
    pass


def _verify_chain(dataset, indices, theta_chain, p):
    refit = refit_without(dataset, indices)
    scale = max(abs(float(refit.theta[p])), 1.0)
    err = abs(float(refit.theta[p]) - float(theta_chain[p])) / scale
    if err > _CHAIN_VERIFY_RTOL:
        raise DropRobustError(
            f"downdate chain drifted from full refit by {err:.3e} "
            f"on subset {indices}"
        )


def failure_classify(
    dataset: Dataset,
    p,
    alpha: float,
    report: AuditReport,
    ground_truth,
) -> str:
    """Classify a method's verdict against ground truth.

    ``ground_truth`` is an :class:`OracleResult`, or an iterable of row
    indices known by construction to flip the conclusion when dropped.
    """
    from .errors import GroundTruthUnavailableError
    from .core import coefficient_after_drop

    p = dataset.coef_index(p)
    direction = report.direction
    if ground_truth is None:
        raise GroundTruthUnavailableError("no oracle result or known set given")
    if isinstance(ground_truth, OracleResult):
        flip_exists = ground_truth.sign_flip_found(direction)
    else:
        value, ill = coefficient_after_drop(dataset, tuple(ground_truth), p)
        flip_exists = conclusion_changed(value, ill, direction)

    if not flip_exists:
        return ROBUST
    if report.sign_changed:
        return NO_FAILURE
    refit_known = report.refit_estimate is not None and (
        report.refit_ill_defined or not math.isnan(report.refit_estimate)
    )
    if refit_known:
        return FAILURE_WITH_RERUN
    return FAILURE_WITHOUT_RERUN
