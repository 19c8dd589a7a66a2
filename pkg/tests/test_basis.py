import numpy as np
import pytest

from prspline import (BasisSpec, DesignMatrix, DimensionError, DomainError, design_matrix,
                      lmax, min_initial_knots, place_knots, predict)


def test_lmax_matches_closed_form():
    assert lmax(256) == pytest.approx(11.2465937833, abs=1e-9)
    assert lmax(2048) == pytest.approx(14.2465937833, abs=1e-9)


def test_min_initial_knots():
    assert min_initial_knots(2048) == 432
    assert min_initial_knots(256) == 69
    assert min_initial_knots(100) == 31


def test_min_initial_knots_needs_enough_points():
    with pytest.raises(DomainError):
        min_initial_knots(14)


def test_lmax_rejects_bad_alpha():
    with pytest.raises(DomainError):
        lmax(100, alpha=1.0)


def test_place_knots_uses_order_statistics():
    x = np.arange(10, 0, -1, dtype=float)  # unsorted on purpose
    assert place_knots(x, 4) == (2.0, 4.0, 6.0, 8.0)


def test_place_knots_collapses_ties():
    x = np.r_[np.zeros(5), np.ones(5)]
    assert place_knots(x, 3) == (0.0, 1.0)


@pytest.mark.parametrize("k", [0, 10, 11])
def test_place_knots_rejects_bad_counts(k):
    with pytest.raises(DomainError):
        place_knots(np.arange(10.0), k)


def test_place_knots_rejects_empty_sample():
    with pytest.raises(DomainError):
        place_knots([], 1)


def test_basis_spec_validation():
    with pytest.raises(DomainError):
        BasisSpec(3, (0.5, 0.5))
    with pytest.raises(DomainError):
        BasisSpec(0, ())
    spec = BasisSpec(3, (0.2, 0.4))
    assert spec.dimension == 5
    assert BasisSpec.from_dict(spec.to_dict()) == spec


def test_design_matrix_linear_truncated_powers():
    X = design_matrix([0.0, 1.0, 2.0], BasisSpec(2, (0.5,)))
    np.testing.assert_array_equal(X.values, [[1, 0, 0], [1, 1, 0.5], [1, 2, 1.5]])
    np.testing.assert_array_equal(X.penalized, [False, False, True])
    np.testing.assert_array_equal(X.knot_columns, [2])


def test_design_matrix_order_one_is_a_step_basis():
    X = design_matrix([0.0, 0.5, 1.0], BasisSpec(1, (0.5,)))
    np.testing.assert_array_equal(X.values, [[1, 0], [1, 0], [1, 1]])


def test_design_matrix_shape_for_quadratic_spline():
    x = np.linspace(0, 1, 50)
    spec = BasisSpec(3, place_knots(x, 7))
    X = design_matrix(x, spec)
    assert X.values.shape == (50, 10)
    assert X.knot_columns.size == 7


def test_predict_evaluates_the_basis():
    spec = BasisSpec(2, (0.5,))
    values = predict([1.0, 2.0, -4.0], spec, [0.0, 0.5, 1.0])
    np.testing.assert_allclose(values, [1.0, 2.0, 1.0])


def test_predict_rejects_wrong_coefficient_count():
    with pytest.raises(DimensionError):
        predict([1.0, 2.0], BasisSpec(2, (0.5,)), [0.0])


def test_design_matrix_mask_must_match_columns():
    with pytest.raises(DimensionError):
        DesignMatrix(np.ones((3, 2)), [True])


@pytest.mark.parametrize("order", [2, 3, 4])
def test_spline_is_continuous_at_its_knots(order):
    rng = np.random.default_rng(order)
    spec = BasisSpec(order, (0.2, 0.45, 0.7))
    coeffs = rng.normal(size=spec.dimension)
    eps = 1e-9
    for t in spec.knots:
        left, right = predict(coeffs, spec, [t - eps, t + eps])
        assert right == pytest.approx(left, abs=1e-6)


@pytest.mark.parametrize("order", [1, 2, 3, 4])
def test_spline_is_a_polynomial_between_knots(order):
    rng = np.random.default_rng(10 + order)
    spec = BasisSpec(order, (0.2, 0.45, 0.7))
    coeffs = rng.normal(size=spec.dimension)
    edges = (0.0,) + spec.knots + (1.0,)
    for lo, hi in zip(edges[:-1], edges[1:]):
        x = np.linspace(lo, hi, order + 3)[1:-1]
        # order-th differences of a degree order-1 polynomial on an even grid vanish
        np.testing.assert_allclose(np.diff(predict(coeffs, spec, x), n=order), 0.0, atol=1e-9)


def test_knots_stay_inside_the_data():
    rng = np.random.default_rng(5)
    for _ in range(50):
        n = int(rng.integers(10, 300))
        x = rng.normal(size=n) * rng.uniform(0.1, 10)
        k = int(rng.integers(1, n))
        knots = np.array(place_knots(x, k))
        assert knots.min() >= x.min()
        assert knots.max() <= x.max()
        assert np.all(np.diff(knots) > 0)


def test_min_initial_knots_never_decreases_with_n():
    counts = [min_initial_knots(n) for n in range(15, 5000)]
    assert np.all(np.diff(counts) >= 0)
