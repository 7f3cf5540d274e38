"""Per-row drop-effect scores and the two additive audits.

Scores are stored in "effect of dropping" orientation: ``scores[n]`` is
the predicted change in the audited coefficient if row ``n`` alone is
deleted. Selecting the k most negative scores therefore drives the
coefficient downward. (The derivative of the coefficient with respect to
the row's weight, evaluated at all-ones weights, is the negation.)
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    LEVERAGE_ONE_TOL,
    Dataset,
    DropSet,
    OlsFit,
    coefficient_after_drop,
    fit,
)
from .errors import BudgetZeroError, WrongDirectionError

TO_NEGATIVE = "to_negative"
TO_POSITIVE = "to_positive"

AMIP = "amip"
ADDITIVE_ONE_EXACT = "additive_one_exact"


@dataclass(frozen=True)
class ScoreVector:
    """Drop-effect scores for every row.

    ``scores[n]`` is NaN for inactive rows and for rows flagged in
    ``ill_defined`` (active rows whose lone deletion destroys rank; their
    one-exact effect does not exist).
    """

    scores: np.ndarray
    kind: str  # "influence" | "one_exact"
    coef_index: int
    ill_defined: np.ndarray


def influence_scores(fit_result: OlsFit, dataset: Dataset, p: int) -> ScoreVector:
    """First-order (influence-function) drop effects for coefficient p.

    score[n] = -e_p'(X'X)^-1 x_n * r_n; one P-vector solve plus N dot
    products.
    """
    p = dataset.coef_index(p)
    lev_like = dataset.X @ fit_result.gram_inverse[:, p]
    scores = -lev_like * fit_result.residuals
    scores[~fit_result.active] = np.nan
    return ScoreVector(
        scores=scores,
        kind="influence",
        coef_index=p,
        ill_defined=np.zeros(dataset.n_rows, dtype=bool),
    )


def one_exact_scores(fit_result: OlsFit, dataset: Dataset, p: int) -> ScoreVector:
    """Exact single-deletion effects for coefficient p.

    Vectorized Sherman-Morrison: score[n] = -e_p'(X'X)^-1 x_n * r_n /
    (1 - h_nn), so the whole vector costs O(NP^2) after the shared O(P^3)
    inverse. Rows with h_nn >= 1 - 1e-6 are re-evaluated by an actual
    refit, since near-one leverage makes the rank-one formula unreliable
    but does not by itself mean the deletion destroys rank (an extreme
    outlier can sit at h close to 1 while the rest of the data fits
    fine). Only rows whose lone deletion truly leaves the coefficient
    unidentified get NaN and the ill_defined flag.
    """
    p = dataset.coef_index(p)
    lev_like = dataset.X @ fit_result.gram_inverse[:, p]
    one_minus_h = 1.0 - fit_result.leverages
    sentinel = fit_result.active & (one_minus_h < LEVERAGE_ONE_TOL)
    with np.errstate(divide="ignore", invalid="ignore"):
        scores = -lev_like * fit_result.residuals / one_minus_h
    scores[~fit_result.active] = np.nan
    ill = np.zeros(dataset.n_rows, dtype=bool)
    if np.any(sentinel):
        theta_p = float(fit_result.theta[p])
        inactive = tuple(int(i) for i in np.flatnonzero(~fit_result.active))
        for n in np.flatnonzero(sentinel):
            value, value_ill = coefficient_after_drop(
                dataset, inactive + (int(n),), p
            )
            if value_ill:
                scores[n] = np.nan
                ill[n] = True
            else:
                scores[n] = value - theta_p
    return ScoreVector(
        scores=scores, kind="one_exact", coef_index=p, ill_defined=ill
    )


def conclusion_changed(value: float, ill_defined: bool, direction: str) -> bool:
    """Whether an estimate constitutes a conclusion change for the target.

    Reaching the target sign counts, as does landing exactly on zero, as
    does the coefficient becoming unidentified (the original sign can no
    longer be affirmed).
    """
    if ill_defined:
        return True
    if direction == TO_NEGATIVE:
        return value <= 0.0
    return value >= 0.0


def drop_budget(alpha: float, n: int) -> int:
    k = math.floor(alpha * n)
    if k < 1:
        raise BudgetZeroError(
            f"floor(alpha*N) = floor({alpha} * {n}) = 0; nothing to audit"
        )
    return k


def check_direction(theta_p: float, direction: str) -> None:
    if direction == TO_NEGATIVE and theta_p <= 0:
        raise WrongDirectionError(
            f"coefficient is already non-positive ({theta_p:.6g})"
        )
    if direction == TO_POSITIVE and theta_p >= 0:
        raise WrongDirectionError(
            f"coefficient is already non-negative ({theta_p:.6g})"
        )
    if direction not in (TO_NEGATIVE, TO_POSITIVE):
        raise ValueError(f"unknown direction {direction!r}")


def select_helpful(scores: np.ndarray, k: int, direction: str) -> tuple[int, ...]:
    """Indices of up to k rows whose scores move the coefficient toward
    the target sign; strictly helpful only, ties broken by ascending row
    index. NaN scores are never selected."""
    n = scores.shape[0]
    signed = scores if direction == TO_NEGATIVE else -scores
    helpful = np.flatnonzero(np.nan_to_num(signed, nan=np.inf) < 0.0)
    if helpful.size == 0:
        return ()
    order = helpful[np.lexsort((helpful, signed[helpful]))]
    return tuple(int(i) for i in order[:k])


@dataclass(frozen=True)
class AdditiveAudit:
    method: str
    drop: DropSet
    predicted_estimate: float
    refit_estimate: float  # NaN when the refit is ill-defined
    refit_ill_defined: bool
    sign_changed_predicted: bool
    sign_changed_refit: bool
    direction: str
    coef_index: int
    base_estimate: float


def additive_report(audit: "AdditiveAudit", runtime_seconds=None):
    """Repackage an additive audit as the shared report record."""
    from .report import AuditReport

    return AuditReport(
        method=audit.method,
        base_estimate=audit.base_estimate,
        predicted_estimate=audit.predicted_estimate,
        refit_estimate=audit.refit_estimate,
        refit_ill_defined=audit.refit_ill_defined,
        dropped_indices=audit.drop.indices,
        budget=audit.drop.budget,
        direction=audit.direction,
        sign_changed=audit.sign_changed_refit,
        runtime_seconds=runtime_seconds,
        notes={"sign_changed_predicted": audit.sign_changed_predicted},
    )


def additive_audit(
    dataset: Dataset,
    p,
    alpha: float,
    method: str = ADDITIVE_ONE_EXACT,
    direction: str = TO_NEGATIVE,
    base_fit: OlsFit | None = None,
) -> AdditiveAudit:
    """Rank per-row scores, drop the top floor(alpha*N), refit once.

    AMIP uses influence scores; Additive One-Exact uses exact
    single-deletion effects. Rows whose individual score moves the
    coefficient the wrong way are never selected, so the drop set may be
    smaller than the budget (empty means robust-per-this-method).
    """
    p = dataset.coef_index(p)
    k = drop_budget(alpha, dataset.n_rows)
    full = base_fit if base_fit is not None else fit(dataset)
    theta_p = float(full.theta[p])
    check_direction(theta_p, direction)

    if method == AMIP:
        sv = influence_scores(full, dataset, p)
    elif method == ADDITIVE_ONE_EXACT:
        sv = one_exact_scores(full, dataset, p)
    else:
        raise ValueError(f"unknown additive method {method!r}")

    chosen = select_helpful(sv.scores, k, direction)
    drop = DropSet(chosen, budget=k)
    predicted = theta_p + float(np.sum(sv.scores[list(chosen)])) if chosen else theta_p
    refit_value, refit_ill = coefficient_after_drop(dataset, chosen, p)
    return AdditiveAudit(
        method=method,
        drop=drop,
        predicted_estimate=predicted,
        refit_estimate=refit_value,
        refit_ill_defined=refit_ill,
        sign_changed_predicted=conclusion_changed(predicted, False, direction),
        sign_changed_refit=conclusion_changed(refit_value, refit_ill, direction),
        direction=direction,
        coef_index=p,
        base_estimate=theta_p,
    )
