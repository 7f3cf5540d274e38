"""Explanatory quantities behind audit failures.

Three families of diagnostics live here. The masking report exports the
per-row leverage/residual/score table and the hat-matrix off-diagonals
with their Cauchy-Schwarz bound, which caps how much one deletion can
change another row's fitted value. The outlier-limit quantities (s, t)
give the closed-form limits of influence scores as a single point is
pushed to infinity along a ray. The additive error decomposition
evaluates the exact expressions for the gap between an additive
prediction and the true refit.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

import numpy as np

from .core import Dataset, DropSet, OlsFit, coefficient_after_drop, fit
from .errors import BadParamsError, DropRobustError, RankDeficientError
from .scores import influence_scores, one_exact_scores

_PAIR_TABLE_TOP = 20
_ERROR_IDENTITY_RTOL = 1e-8


@dataclass(frozen=True)
class MaskingReport:
    """Per-row fit diagnostics plus hat-matrix pair bounds.

    Row arrays are aligned with dataset row order. ``pairs`` holds
    ``(n, m, h_nm, bound)`` tuples with n < m, sorted lexicographically;
    ``bound = sqrt(h_nn * h_mm)`` always dominates ``|h_nm|``.
    """

    index: np.ndarray
    leverage: np.ndarray
    residual: np.ndarray
    influence: np.ndarray
    one_exact: np.ndarray
    pairs: tuple[tuple[int, int, float, float], ...]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["index", "leverage", "residual", "influence", "one_exact"])
        for i in range(self.index.shape[0]):
            writer.writerow([
                int(self.index[i]),
                _num(self.leverage[i]),
                _num(self.residual[i]),
                _num(self.influence[i]),
                _num(self.one_exact[i]),
            ])
        return buf.getvalue()

    def to_json(self) -> str:
        rows = [
            {
                "index": int(self.index[i]),
                "leverage": float(self.leverage[i]),
                "residual": float(self.residual[i]),
                "influence": float(self.influence[i]),
                "one_exact": float(self.one_exact[i]),
            }
            for i in range(self.index.shape[0])
        ]
        pairs = [
            {"n": n, "m": m, "h_nm": h, "bound": b}
            for n, m, h, b in self.pairs
        ]
        return json.dumps({"rows": rows, "pairs": pairs})


def _num(x) -> str:
    return repr(float(x))


def masking_report(
    fit_result: OlsFit,
    dataset: Dataset,
    p,
    pairs=None,
    all_pairs: bool = False,
) -> MaskingReport:
    """Row diagnostics and off-diagonal hat entries for a fitted model.

    By default the pair table covers all pairs among the 20 rows with the
    largest one-exact magnitude, which keeps the O(N^2) pair cost bounded;
    pass explicit ``pairs`` or ``all_pairs=True`` to override.
    """
    p = dataset.coef_index(p)
    infl = influence_scores(fit_result, dataset, p)
    oe = one_exact_scores(fit_result, dataset, p)
    n = dataset.n_rows

    if pairs is None:
        if all_pairs:
            chosen = np.arange(n)
        else:
            mag = np.abs(np.nan_to_num(oe.scores, nan=0.0))
            top = min(_PAIR_TABLE_TOP, n)
            chosen = np.sort(np.argpartition(mag, -top)[-top:])
        pair_list = [
            (int(chosen[a]), int(chosen[b]))
            for a in range(chosen.shape[0])
            for b in range(a + 1, chosen.shape[0])
        ]
    else:
        pair_list = [(min(int(a), int(b)), max(int(a), int(b))) for a, b in pairs]
        pair_list = sorted(set(pair_list))

    ginv = fit_result.gram_inverse
    X = dataset.X
    out_pairs = []
    for a, b in pair_list:
        h_ab = float(X[a] @ ginv @ X[b])
        bound = float(
            np.sqrt(max(fit_result.leverages[a] * fit_result.leverages[b], 0.0))
        )
        out_pairs.append((a, b, h_ab, bound))

    return MaskingReport(
        index=np.arange(n),
        leverage=fit_result.leverages.copy(),
        residual=fit_result.residuals.copy(),
        influence=infl.scores,
        one_exact=oe.scores,
        pairs=tuple(out_pairs),
    )


@dataclass(frozen=True)
class OutlierLimit:
    """Limits of influence scores as the outlier recedes along a ray.

    ``s`` and ``t`` are the closed-form factors of the probe row's
    limiting influence score ``limit_value = s*t / (v'A^-1 v)^2``, in the
    derivative-at-full-weights orientation; the outlier's own score
    limit is always zero. ``A_minus_1`` and ``b_minus_1`` are the Gram
    matrix and X'y moments of the background rows (outlier excluded).
    """

    s: float
    t: float
    limit_value: float
    A_minus_1: np.ndarray
    b_minus_1: np.ndarray


def prop1_limits(
    X_background: np.ndarray,
    y_background: np.ndarray,
    v: np.ndarray,
    c: float,
    probe_row_index: int,
    p: int,
) -> OutlierLimit:
    """Closed-form influence-score limits for an outlier (lam*v, lam*c).

    The background rows are everything except the outlier; the probe row
    is indexed within the background. With a one-dimensional design the
    two products in ``s`` coincide, so ``s`` (and the limit) is exactly 0.
    """
    X = np.asarray(X_background, dtype=float)
    y = np.asarray(y_background, dtype=float)
    v = np.asarray(v, dtype=float)
    n, P = X.shape
    if abs(float(v @ v) - 1.0) > 1e-8:
        raise BadParamsError("v must be a unit vector")
    if not c > 0:
        raise BadParamsError("c must be positive")
    if not 0 <= probe_row_index < n:
        raise BadParamsError("probe_row_index out of range")
    A = X.T @ X
    if np.linalg.matrix_rank(A) < P:
        raise RankDeficientError("background design does not have full rank")
    Ainv = np.linalg.inv(A)
    Ainv = (Ainv + Ainv.T) / 2.0
    b = y @ X

    x2 = X[probe_row_index]
    y2 = float(y[probe_row_index])
    vAv = float(v @ Ainv @ v)
    vAx2 = float(v @ Ainv @ x2)
    eAx2 = float(Ainv[p] @ x2)
    eAv = float(Ainv[p] @ v)
    bAx2 = float(b @ Ainv @ x2)
    bAv = float(b @ Ainv @ v)

    if P == 1:
        s = 0.0
    else:
        s = vAv * eAx2 - eAv * vAx2
    t = y2 * vAv - c * vAx2 - bAx2 * vAv + bAv * vAx2
    limit = s * t / (vAv * vAv)
    return OutlierLimit(s=s, t=t, limit_value=limit, A_minus_1=A, b_minus_1=b)


def outlier_score_sweep(
    X_background: np.ndarray,
    y_background: np.ndarray,
    v: np.ndarray,
    c: float,
    probe_row_index: int,
    p: int,
    lams,
):
    """Finite-lam influence scores of the outlier and the probe row.

    For each lam the outlier (lam*v, lam*c) is prepended to the
    background rows and the model is refit without an intercept. Scores
    are reported in the derivative orientation used by the closed-form
    limits (the negation of the package's drop-effect orientation), so
    the probe column converges to ``limit_value``.
    """
    X = np.asarray(X_background, dtype=float)
    y = np.asarray(y_background, dtype=float)
    v = np.asarray(v, dtype=float)
    P = X.shape[1]
    names = tuple(f"x{j}" for j in range(P))
    out = np.empty(len(lams))
    probe = np.empty(len(lams))
    for i, lam in enumerate(lams):
        Xf = np.vstack([lam * v, X])
        yf = np.concatenate([[lam * c], y])
        ds = Dataset(Xf, yf, names, has_intercept=False)
        sv = influence_scores(fit(ds), ds, p)
        out[i] = -sv.scores[0]
        probe[i] = -sv.scores[1 + probe_row_index]
    return np.asarray(lams, dtype=float), out, probe


def additive_error_decomposition(dataset: Dataset, p, drop: DropSet) -> dict:
    """Exact expressions for each additive method's prediction error.

    Returns the closed-form AMIP and additive one-exact errors
    (prediction minus true refit) for dropping ``drop``, after checking
    each against the directly computed prediction-minus-refit gap to
    1e-8 relative. The refit on the complement must be well-defined.
    """
    p = dataset.coef_index(p)
    indices = drop.indices
    if not indices:
        return {"amip_error": 0.0, "one_exact_error": 0.0}

    full = fit(dataset)
    theta_p = float(full.theta[p])
    refit_value, ill = coefficient_after_drop(dataset, indices, p)
    if ill:
        raise RankDeficientError("refit on the complement is ill-defined")

    keep = np.ones(dataset.n_rows, dtype=bool)
    keep[list(indices)] = False
    Xs = dataset.X[~keep]
    rs = full.residuals[~keep]
    Xk = dataset.X[keep]
    gram_keep = Xk.T @ Xk
    ginv_keep = np.linalg.inv(gram_keep)
    ginv_keep = (ginv_keep + ginv_keep.T) / 2.0

    # AMIP prediction error: the full-data and complement inverses act on
    # the same aggregated score direction. Signs follow the drop-effect
    # orientation of the stored scores.
    diff = ginv_keep[p] - full.gram_inverse[p]
    amip_error = float(diff @ (Xs.T @ rs))

    # One-exact prediction error: each dropped row contributes through its
    # own leave-one-out inverse.
    one_exact_error = 0.0
    for n in indices:
        x_n = dataset.X[n]
        Xn = np.delete(dataset.X, n, axis=0)
        ginv_n = np.linalg.inv(Xn.T @ Xn)
        ginv_n = (ginv_n + ginv_n.T) / 2.0
        one_exact_error += float(
            (ginv_keep[p] - ginv_n[p]) @ x_n * full.residuals[n]
        )

    sv_amip = influence_scores(full, dataset, p)
    sv_oe = one_exact_scores(full, dataset, p)
    sel = list(indices)
    amip_gap = theta_p + float(np.sum(sv_amip.scores[sel])) - refit_value
    oe_gap = theta_p + float(np.sum(sv_oe.scores[sel])) - refit_value
    for label, closed, gap in (
        ("amip", amip_error, amip_gap),
        ("one_exact", one_exact_error, oe_gap),
    ):
        scale = max(abs(closed), abs(gap), 1.0)
        if abs(closed - gap) / scale > _ERROR_IDENTITY_RTOL:
            raise DropRobustError(
                f"{label} error identity violated: closed form {closed!r} "
                f"vs prediction gap {gap!r}"
            )
    return {"amip_error": amip_error, "one_exact_error": one_exact_error}
