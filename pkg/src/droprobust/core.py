"""Weighted OLS fitting, deletion refits, and rank-one downdates.

All higher-level audit machinery is built on three primitives:

* :func:`fit` -- weighted least squares with {0,1} weights, returning an
  immutable :class:`OlsFit` that carries the inverse Gram matrix,
  residuals, and leverages for every row.
* :func:`refit_without` -- the same solver after deleting a set of rows.
* :func:`downdate_single` -- the O(P^2) Sherman-Morrison deletion of one
  row from an existing fit.

P is assumed small (tens at most), so the inverse Gram matrix is
materialized explicitly; every per-row quantity is then a dot product.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import LeverageOneError, NonFiniteError, RankDeficientError

# Condition number of X'X beyond which the OLS solution is treated as
# ill-defined. The exactly-singular adversarial constructions sit at inf.
CONDITION_LIMIT = 1e12

# 1 - h_nn below this means deleting the row destroys identifiability.
LEVERAGE_ONE_TOL = 1e-6


@dataclass(frozen=True)
class Dataset:
    """Design matrix plus response, with optional trailing intercept column.

    If ``has_intercept`` is True the last column of ``X`` must be all ones
    (the intercept is just another covariate, kept explicit so that row
    deletion needs no special cases).
    """

    X: np.ndarray
    y: np.ndarray
    column_names: tuple[str, ...]
    has_intercept: bool = False

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if X.ndim != 2:
            raise ValueError("X must be 2-D")
        n, p = X.shape
        if y.shape != (n,):
            raise ValueError(f"y has shape {y.shape}, expected ({n},)")
        if not (n > p >= 1):
            raise ValueError(f"need N > P >= 1, got N={n}, P={p}")
        if not (np.isfinite(X).all() and np.isfinite(y).all()):
            raise NonFiniteError("design matrix or response contains NaN/Inf")
        if len(self.column_names) != p:
            raise ValueError("column_names length must equal P")
        if len(set(self.column_names)) != p:
            raise ValueError("column names must be unique")
        if self.has_intercept and not np.all(X[:, -1] == 1.0):
            raise ValueError("has_intercept set but last column is not all ones")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "column_names", tuple(self.column_names))

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]

    @property
    def n_cols(self) -> int:
        return self.X.shape[1]

    def coef_index(self, coef: int | str) -> int:
        """Resolve a coefficient given by name or position."""
        if isinstance(coef, str):
            try:
                return self.column_names.index(coef)
            except ValueError:
                raise KeyError(f"no column named {coef!r}") from None
        p = int(coef)
        if not 0 <= p < self.n_cols:
            raise IndexError(f"coefficient index {p} out of range [0, {self.n_cols})")
        return p


def make_dataset(X, y, column_names=None, add_intercept=False) -> Dataset:
    """Build a :class:`Dataset`, optionally appending an all-ones column."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if column_names is None:
        column_names = [f"x{j}" for j in range(X.shape[1])]
    column_names = list(column_names)
    if add_intercept:
        X = np.column_stack([X, np.ones(X.shape[0])])
        column_names.append("intercept")
        return Dataset(X, y, tuple(column_names), has_intercept=True)
    return Dataset(X, y, tuple(column_names), has_intercept=False)


def indicator_weights(n: int, dropped=()) -> np.ndarray:
    """All-ones weight vector with zeros at ``dropped``."""
    w = np.ones(n)
    dropped = np.asarray(list(dropped), dtype=int)
    if dropped.size:
        w[dropped] = 0.0
    return w


@dataclass(frozen=True)
class DropSet:
    """An ordered set of deleted row indices under a cardinality budget."""

    indices: tuple[int, ...]
    budget: int

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if len(set(idx)) != len(idx):
            raise ValueError("duplicate indices in drop set")
        if len(idx) > self.budget:
            raise ValueError(f"{len(idx)} indices exceed budget {self.budget}")
        object.__setattr__(self, "indices", idx)

    def __len__(self):
        return len(self.indices)


@dataclass(frozen=True)
class OlsFit:
    """Immutable result of a weighted OLS solve.

    residuals and leverages are populated for every row of the dataset
    (inactive rows are evaluated against the active-row fit); the
    orthogonality and leverage-sum identities hold over active rows only.
    """

    theta: np.ndarray
    gram_inverse: np.ndarray
    residuals: np.ndarray
    leverages: np.ndarray
    condition_estimate: float
    n_active: int
    active: np.ndarray = field(repr=False)

    def leverage_one_rows(self) -> np.ndarray:
        """Active rows whose single deletion is ill-defined (h_nn ~ 1)."""
        mask = self.active & (1.0 - self.leverages < LEVERAGE_ONE_TOL)
        return np.flatnonzero(mask)


def _coef_identified(X_active: np.ndarray, p: int, rtol: float = 1e-9) -> bool:
    """Whether e_p' theta is estimable for this (possibly deficient) design.

    e_p must lie in the row space of X; equivalently its projection onto
    the null space of X'X must vanish.
    """
    _, s, vt = np.linalg.svd(X_active, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return False
    keep = s > rtol * s[0]
    v = vt[keep]
    e = np.zeros(X_active.shape[1])
    e[p] = 1.0
    resid = e - v.T @ (v @ e)
    return bool(np.linalg.norm(resid) <= 1e-8)


def fit(dataset: Dataset, weights: np.ndarray | None = None) -> OlsFit:
    """Weighted OLS with {0,1} weights; all-ones weights give the full fit.

    Raises
    ------
    RankDeficientError
        If the active design has rank < P or cond(X'X) > 1e12. Callers
        that only need one coefficient can fall back to
        :func:`coefficient_after_drop`, which handles estimable
        coefficients of deficient designs.
    NonFiniteError
        If inputs are non-finite (checked at Dataset construction).
    """
    X, y = dataset.X, dataset.y
    n, p = X.shape
    if weights is None:
        active = np.ones(n, dtype=bool)
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != (n,):
            raise ValueError(f"weights have shape {w.shape}, expected ({n},)")
        if not np.isin(w, (0.0, 1.0)).all():
            raise ValueError("weights must be 0 or 1")
        active = w == 1.0

    n_active = int(active.sum())
    if n_active < p:
        raise RankDeficientError(
            f"only {n_active} active rows for {p} coefficients"
        )
    Xa = X[active]
    ya = y[active]
    gram = Xa.T @ Xa
    cond = float(np.linalg.cond(gram))
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        raise RankDeficientError(
            f"active Gram matrix condition {cond:.3e} exceeds {CONDITION_LIMIT:.0e}"
        )
    gram_inverse = np.linalg.inv(gram)
    # Symmetrize: inv() of a symmetric matrix is symmetric only to rounding.
    gram_inverse = 0.5 * (gram_inverse + gram_inverse.T)
    theta = gram_inverse @ (Xa.T @ ya)

    residuals = y - X @ theta
    # h_nn = x_n' (X'X)^-1 x_n, evaluated for every row against the
    # active-row Gram matrix.
    leverages = np.einsum("ij,jk,ik->i", X, gram_inverse, X)
    return OlsFit(
        theta=theta,
        gram_inverse=gram_inverse,
        residuals=residuals,
        leverages=leverages,
        condition_estimate=cond,
        n_active=n_active,
        active=active,
    )


def refit_without(dataset: Dataset, drop: DropSet | tuple | list) -> OlsFit:
    """Refit after deleting the given rows; identical to fit() with the
    corresponding indicator weights (same code path)."""
    indices = drop.indices if isinstance(drop, DropSet) else tuple(drop)
    for i in indices:
        if not 0 <= i < dataset.n_rows:
            raise IndexError(f"row index {i} out of range")
    return fit(dataset, indicator_weights(dataset.n_rows, indices))


def downdate_single(fit_result: OlsFit, dataset: Dataset, n: int) -> np.ndarray:
    """Coefficients after deleting row ``n``, via the rank-one identity.

    theta_{-n} = theta - (X'X)^-1 x_n r_n / (1 - h_nn), an O(P^2)
    operation that matches a full refit to ~1e-10 relative.
    """
    if not fit_result.active[n]:
        raise ValueError(f"row {n} is not active in this fit")
    h = fit_result.leverages[n]
    if 1.0 - h < LEVERAGE_ONE_TOL * 1e-6:
        raise LeverageOneError(
            f"row {n} has leverage {h:.12g}; deleting it destroys rank"
        )
    x_n = dataset.X[n]
    r_n = fit_result.residuals[n]
    return fit_result.theta - (fit_result.gram_inverse @ x_n) * (r_n / (1.0 - h))


def downdate_gram_inverse(gram_inverse: np.ndarray, x_n: np.ndarray) -> np.ndarray:
    """Sherman-Morrison update of (X'X)^-1 after deleting the row x_n."""
    g = gram_inverse @ x_n
    denom = 1.0 - x_n @ g
    if denom <= 1e-12:
        raise LeverageOneError("rank-one downdate denominator vanished")
    return gram_inverse + np.outer(g, g) / denom


def coefficient_after_drop(dataset: Dataset, indices, p: int):
    """Value of coefficient ``p`` after deleting ``indices``.

    Returns ``(value, ill_defined)``. When the reduced design is rank
    deficient but the coefficient is still estimable, the (unique)
    estimable value from the minimum-norm solution is returned. When the
    coefficient itself is no longer identified, returns ``(nan, True)``:
    the sign of the coefficient has ceased to exist.
    """
    indices = tuple(indices)
    try:
        refit = refit_without(dataset, indices)
        return float(refit.theta[p]), False
    except RankDeficientError:
        keep = np.ones(dataset.n_rows, dtype=bool)
        keep[list(indices)] = False
        Xa = dataset.X[keep]
        ya = dataset.y[keep]
        if _coef_identified(Xa, p):
            theta, *_ = np.linalg.lstsq(Xa, ya, rcond=None)
            return float(theta[p]), False
        return float("nan"), True
