import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from droprobust.core import (
    Dataset,
    DropSet,
    coefficient_after_drop,
    downdate_single,
    fit,
    indicator_weights,
    make_dataset,
    refit_without,
)
from droprobust.errors import (
    LeverageOneError,
    NonFiniteError,
    RankDeficientError,
)

from conftest import lstsq_drop, lstsq_theta, random_dataset


def test_exact_linear_data_perfect_fit():
    ds = make_dataset(np.array([[1.0], [2.0], [3.0]]), [2.0, 4.0, 6.0])
    result = fit(ds)
    assert result.theta == pytest.approx([2.0])
    assert result.residuals == pytest.approx([0.0, 0.0, 0.0], abs=1e-12)


def test_two_by_two_normal_equations_hand_solved():
    # X'X = [[35, 42], [42, 52]], X'y = [22, 26]; elimination by hand:
    # det = 35*52 - 42*42 = 56, theta = ([52, -42; -42, 35] @ [22, 26]) / 56
    #     = [52, -14] / 56.
    X = np.array([[1.0, 0.0], [3.0, 4.0], [5.0, 6.0]])
    y = np.array([1.0, 2.0, 3.0])
    expected = np.array([52.0, -14.0]) / 56.0
    ds = Dataset(X, y, ("a", "b"))
    assert fit(ds).theta == pytest.approx(expected, rel=1e-12)


def test_fit_matches_lstsq_reference(rng):
    for _ in range(20):
        X, y = random_dataset(rng)
        ds = Dataset(X, y, tuple(f"c{j}" for j in range(X.shape[1])))
        assert fit(ds).theta == pytest.approx(lstsq_theta(X, y), rel=1e-9)


def test_refit_empty_drop_equals_full_fit_bitwise():
    rng = np.random.default_rng(7)
    X, y = random_dataset(rng)
    ds = Dataset(X, y, tuple(f"c{j}" for j in range(X.shape[1])))
    full = fit(ds)
    refit = refit_without(ds, ())
    assert np.array_equal(full.theta, refit.theta)
    assert np.array_equal(full.residuals, refit.residuals)


def test_refit_matches_reference_after_drop(rng):
    for _ in range(20):
        X, y = random_dataset(rng)
        ds = Dataset(X, y, tuple(f"c{j}" for j in range(X.shape[1])))
        k = int(rng.integers(1, 4))
        drop = tuple(rng.choice(X.shape[0], size=k, replace=False).tolist())
        ref, ok = lstsq_drop(X, y, drop)
        assert ok
        assert refit_without(ds, drop).theta == pytest.approx(ref, rel=1e-9)


def test_downdate_single_matches_refit(rng):
    for _ in range(20):
        X, y = random_dataset(rng, n=20, p=3)
        ds = Dataset(X, y, ("a", "b", "c"))
        full = fit(ds)
        for n in range(20):
            down = downdate_single(full, ds, n)
            ref = refit_without(ds, (n,)).theta
            assert np.linalg.norm(down - ref) <= 1e-10 * max(
                1.0, np.linalg.norm(ref)
            )


def test_downdate_single_zero_residual_row_no_change():
    ds = make_dataset(np.array([[1.0], [2.0], [3.0]]), [2.0, 4.0, 6.0])
    full = fit(ds)
    assert downdate_single(full, ds, 0) == pytest.approx([2.0])


def test_leverage_identities(rng):
    for _ in range(10):
        X, y = random_dataset(rng)
        ds = Dataset(X, y, tuple(f"c{j}" for j in range(X.shape[1])))
        result = fit(ds)
        p = X.shape[1]
        assert result.leverages.sum() == pytest.approx(p, abs=1e-8 * p)
        assert np.all(result.leverages >= -1e-10)
        assert np.all(result.leverages <= 1 + 1e-10)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_permutation_invariance(seed):
    rng = np.random.default_rng(seed)
    X, y = random_dataset(rng, n=15, p=3)
    ds = Dataset(X, y, ("a", "b", "c"))
    base = fit(ds)
    perm = rng.permutation(15)
    ds_p = Dataset(X[perm], y[perm], ("a", "b", "c"))
    permuted = fit(ds_p)
    assert permuted.theta == pytest.approx(base.theta, abs=1e-12)
    assert permuted.residuals == pytest.approx(base.residuals[perm], abs=1e-10)
    assert permuted.leverages == pytest.approx(base.leverages[perm], abs=1e-10)


def test_weighted_fit_equals_subset_fit(rng):
    X, y = random_dataset(rng, n=25, p=4)
    names = tuple(f"c{j}" for j in range(4))
    ds = Dataset(X, y, names)
    drop = (3, 11, 19)
    via_weights = fit(ds, indicator_weights(25, drop))
    ref, _ = lstsq_drop(X, y, drop)
    assert via_weights.theta == pytest.approx(ref, rel=1e-9)
    assert via_weights.n_active == 22
    # residuals are populated for dropped rows too
    assert np.isfinite(via_weights.residuals[list(drop)]).all()


def test_make_dataset_intercept_column():
    ds = make_dataset(np.array([[1.0], [2.0], [3.0]]), [1.0, 2.0, 4.0],
                      add_intercept=True)
    assert ds.has_intercept
    assert ds.column_names[-1] == "intercept"
    assert np.all(ds.X[:, -1] == 1.0)
    assert ds.coef_index("intercept") == 1


def test_dataset_validation_errors():
    with pytest.raises(NonFiniteError):
        Dataset(np.array([[1.0], [np.nan], [2.0]]), np.zeros(3), ("a",))
    with pytest.raises(ValueError):
        Dataset(np.ones((2, 2)), np.zeros(2), ("a", "b"))  # N <= P
    with pytest.raises(ValueError):
        Dataset(np.ones((3, 2)), np.zeros(3), ("a", "a"))
    with pytest.raises(KeyError):
        make_dataset(np.ones((3, 1)), np.zeros(3)).coef_index("missing")


def test_rank_deficient_raises():
    X = np.array([[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]])
    ds = Dataset(X, np.array([1.0, 2.0, 3.0]), ("a", "b"))
    with pytest.raises(RankDeficientError):
        fit(ds)


def test_leverage_one_downdate_refused():
    # Only row 0 carries the second coordinate, so its leverage is 1.
    X = np.array([[0.0, 1.0], [1.0, 0.0], [2.0, 0.0], [3.0, 0.0]])
    y = np.array([1.0, 1.0, 2.0, 3.0])
    ds = Dataset(X, y, ("a", "b"))
    full = fit(ds)
    assert 0 in full.leverage_one_rows()
    with pytest.raises(LeverageOneError):
        downdate_single(full, ds, 0)


def test_coefficient_after_drop_estimable_vs_unidentified():
    X = np.array([[0.0, 1.0], [1.0, 0.0], [2.0, 0.0], [3.0, 0.0]])
    y = np.array([1.0, 1.0, 2.0, 3.0])
    ds = Dataset(X, y, ("a", "b"))
    # dropping row 0 kills column b: coefficient b unidentified,
    # coefficient a still estimable
    value_b, ill_b = coefficient_after_drop(ds, (0,), 1)
    assert ill_b and np.isnan(value_b)
    value_a, ill_a = coefficient_after_drop(ds, (0,), 0)
    assert not ill_a
    ref, _ = lstsq_drop(X, y, (0,))
    assert value_a == pytest.approx(ref[0], rel=1e-10)


def test_dropset_validation():
    with pytest.raises(ValueError):
        DropSet((1, 1), budget=3)
    with pytest.raises(ValueError):
        DropSet((1, 2, 3), budget=2)
    assert len(DropSet((4, 2), budget=2)) == 2
