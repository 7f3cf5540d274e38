"""Greedy audits: drop the single best-scoring point, refit, repeat.

Greedy One-Exact ranks candidates by their exact single-deletion effect
on the surviving fit; Greedy AMIP ranks by the influence score computed
on the surviving fit. Both stop early the first time the refit reaches
the target conclusion, and both stop with a robust-per-method verdict if
no remaining point helps.

Candidates whose deletion leaves the coefficient unidentified are a
special case. For One-Exact their effect is ranked as a collapse to zero
(the minimum-norm value of an unidentified coefficient), since losing the
sign entirely is a conclusion change; if selected, the audit records an
ill-defined refit and stops. Deletions that are rank-deficient only in
directions orthogonal to the audited coefficient keep their (unique)
estimable value and the walk continues while the survivors can be scored.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .core import Dataset, DropSet, coefficient_after_drop, fit, indicator_weights
from .errors import RankDeficientError
from .report import AuditReport
from .scores import (
    AMIP,
    TO_NEGATIVE,
    TO_POSITIVE,
    check_direction,
    conclusion_changed,
    drop_budget,
    influence_scores,
    one_exact_scores,
)

GREEDY_AMIP = "greedy_amip"
GREEDY_ONE_EXACT = "greedy_one_exact"


@dataclass(frozen=True)
class GreedyStep:
    iteration: int
    dropped_index: int
    score_used: float
    refit_theta_p: float  # NaN when the refit left the coefficient unidentified
    refit_ill_defined: bool


@dataclass(frozen=True)
class GreedyTrace:
    method: str
    steps: tuple[GreedyStep, ...]
    stopped_early: bool
    final_drop: DropSet


def _ranked_candidates(scores: np.ndarray, direction: str) -> np.ndarray:
    """Strictly helpful candidates, best first, ties by lowest row index."""
    signed = scores if direction == TO_NEGATIVE else -scores
    helpful = np.flatnonzero(np.nan_to_num(signed, nan=np.inf) < 0.0)
    if helpful.size == 0:
        return helpful
    return helpful[np.lexsort((helpful, signed[helpful]))]


def greedy_audit(
    dataset: Dataset,
    p,
    alpha: float,
    method: str = GREEDY_ONE_EXACT,
    direction: str = TO_NEGATIVE,
) -> tuple[AuditReport, GreedyTrace]:
    if method not in (GREEDY_AMIP, GREEDY_ONE_EXACT):
        raise ValueError(f"unknown greedy method {method!r}")
    p = dataset.coef_index(p)
    k = drop_budget(alpha, dataset.n_rows)
    t0 = time.perf_counter()

    full = fit(dataset)
    base_estimate = float(full.theta[p])
    check_direction(base_estimate, direction)

    dropped: list[int] = []
    steps: list[GreedyStep] = []
    stopped_early = False
    refit_value = base_estimate
    refit_ill = False
    current = full

    for iteration in range(k):
        theta_cur = float(current.theta[p])
        if method == GREEDY_ONE_EXACT:
            sv = one_exact_scores(current, dataset, p)
            scores = sv.scores.copy()
            # Rows whose lone deletion destroys rank: rank them by the
            # collapse-to-zero effect, which always moves toward zero.
            collapse_score = -theta_cur
            for i in np.flatnonzero(sv.ill_defined):
                scores[i] = collapse_score
        else:
            sv = influence_scores(current, dataset, p)
            scores = sv.scores

        ranked = _ranked_candidates(scores, direction)
        if ranked.size == 0:
            break  # no direction-helpful point left: robust per this method
        cand = int(ranked[0])
        value, ill = coefficient_after_drop(dataset, dropped + [cand], p)
        dropped.append(cand)
        steps.append(
            GreedyStep(
                iteration=iteration,
                dropped_index=cand,
                score_used=float(scores[cand]),
                refit_theta_p=value,
                refit_ill_defined=ill,
            )
        )
        refit_value, refit_ill = value, ill
        if conclusion_changed(refit_value, refit_ill, direction):
            stopped_early = len(dropped) < k or refit_ill
            break
        try:
            current = fit(dataset, indicator_weights(dataset.n_rows, dropped))
        except RankDeficientError:
            break  # cannot score the survivors; stop with what we have

    # A full-budget run that happens to end on the target sign still counts.
    sign_changed = conclusion_changed(refit_value, refit_ill, direction) and bool(
        dropped
    )
    if sign_changed and len(dropped) < k:
        stopped_early = True

    trace = GreedyTrace(
        method=method,
        steps=tuple(steps),
        stopped_early=stopped_early,
        final_drop=DropSet(tuple(dropped), budget=k),
    )
    report = AuditReport(
        method=method,
        base_estimate=base_estimate,
        predicted_estimate=None,
        refit_estimate=refit_value,
        refit_ill_defined=refit_ill,
        dropped_indices=tuple(dropped),
        budget=k,
        direction=direction,
        sign_changed=sign_changed,
        runtime_seconds=time.perf_counter() - t0,
    )
    return report, trace


@dataclass(frozen=True)
class GreedyComparison:
    """Outcome of running both greedy methods against a ground truth."""

    amip_report: AuditReport
    one_exact_report: AuditReport
    amip_found_flip: bool
    one_exact_found_flip: bool
    flip_exists: bool | None  # None when no ground truth was available
    ground_truth_source: str | None


def greedy_failure_check(
    dataset: Dataset,
    p,
    alpha: float,
    direction: str = TO_NEGATIVE,
    known_set=None,
    oracle_limits: dict | None = None,
) -> GreedyComparison:
    """Run both greedy methods and establish whether a flipping set exists.

    Ground truth comes from a construction-time known influential set when
    supplied, else from the brute-force oracle when the instance is small
    enough, else is reported unavailable.
    """
    p = dataset.coef_index(p)
    amip_report, _ = greedy_audit(dataset, p, alpha, GREEDY_AMIP, direction)
    oe_report, _ = greedy_audit(dataset, p, alpha, GREEDY_ONE_EXACT, direction)

    flip_exists = None
    source = None
    if known_set is not None:
        value, ill = coefficient_after_drop(dataset, tuple(known_set), p)
        flip_exists = conclusion_changed(value, ill, direction)
        source = "known_set"
    else:
        from .oracle import OracleInfeasibleError, brute_force_mip

        k = drop_budget(alpha, dataset.n_rows)
        try:
            result = brute_force_mip(dataset, p, k, limits=oracle_limits)
            flip_exists = result.sign_flip_found(direction)
            source = "oracle"
        except OracleInfeasibleError:
            pass

    return GreedyComparison(
        amip_report=amip_report,
        one_exact_report=oe_report,
        amip_found_flip=amip_report.sign_changed,
        one_exact_found_flip=oe_report.sign_changed,
        flip_exists=flip_exists,
        ground_truth_source=source,
    )
