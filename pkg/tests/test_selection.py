import math

import numpy as np
import pytest

from prspline import (BasisSpec, DesignMatrix, DimensionError, DomainError, FitConfig,
                      GammaSpec, ScadParams, default_lambda_grid, design_matrix,
                      effective_params, generate_dataset, get_example, lqa_fit, mgcv_score,
                      penalty_weights, place_knots, prec_score, resolve_gamma, select_lambda)


def example_problem(k=20, seed=11):
    example = get_example(1)
    x, y = generate_dataset(example, seed)
    basis = BasisSpec(3, place_knots(x, k))
    X = design_matrix(x, basis)
    return x, y, basis, X, penalty_weights(X)


def orthonormal_problem(n=40, d=6, seed=2):
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.normal(size=(n, d)))
    X = DesignMatrix(np.sqrt(n) * q, np.r_[False, np.ones(d - 1, bool)])
    y = X.values @ np.r_[1.0, 0.5, -0.3, 0.2, 0.8, -0.6] + rng.normal(0, 0.05, n)
    return X, y, np.ones(d - 1)


def test_effective_params_without_penalty_is_the_rank():
    rng = np.random.default_rng(0)
    for _ in range(100):
        n = int(rng.integers(10, 40))
        d = int(rng.integers(1, 12))
        r = int(rng.integers(1, d + 1))
        X = rng.normal(size=(n, r)) @ rng.normal(size=(r, d))
        rank = np.linalg.matrix_rank(X)
        assert effective_params(X, np.zeros(d)) == pytest.approx(rank, abs=1e-8)


@pytest.mark.parametrize("c", [0.0, 0.01, 0.5, 3.0])
def test_effective_params_ridge_closed_form(c):
    n = 25
    assert effective_params(np.eye(n), np.full(n, c)) == pytest.approx(n / (1 + n * c), abs=1e-10)


def test_effective_params_validation():
    with pytest.raises(DomainError):
        effective_params(np.eye(3), [-1.0, 0.0, 0.0])
    with pytest.raises(DimensionError):
        effective_params(np.eye(3), [0.0, 0.0])
    assert effective_params(np.empty((5, 0)), []) == 0.0


def test_mgcv_score():
    assert mgcv_score(10.0, 100, 5.0, 2.0) == pytest.approx(0.1 / 0.81)
    assert mgcv_score(10.0, 100, 50.0, 2.0) == math.inf
    assert mgcv_score(10.0, 100, 60.0, 2.0) == math.inf


def test_prec_score():
    assert prec_score(10.0, 100, 5.0, 2.0, 0.5) == pytest.approx(0.2)
    with pytest.raises(DomainError):
        prec_score(10.0, 100, 5.0, 2.0, 0.0)


def test_gamma_parsing():
    assert GammaSpec.parse("2.5") == GammaSpec("constant", 2.5)
    assert GammaSpec.parse("ln(n)/2").kind == "ln_n_over_2"
    assert GammaSpec.parse("ln(k)").kind == "ln_k"
    assert GammaSpec.parse("ln_k_over_2").label == "ln(k)/2"
    with pytest.raises(DomainError):
        GammaSpec.parse("0.5")
    with pytest.raises(DomainError):
        GammaSpec.parse("sqrt(n)")


def test_resolve_gamma():
    assert resolve_gamma(GammaSpec.parse("2.5"), 256, 60) == 2.5
    assert resolve_gamma(GammaSpec.parse("ln(n)/2"), 256, 60) == pytest.approx(math.log(256) / 2)
    assert resolve_gamma(GammaSpec.parse("ln(n)"), 256, 60) == pytest.approx(math.log(256))
    assert resolve_gamma(GammaSpec.parse("ln(k)/2"), 256, 60) == pytest.approx(math.log(60) / 2)


def test_default_grid_on_orthonormal_design():
    X, y, weights = orthonormal_problem()
    grid = default_lambda_grid(X, y, weights)

    z = X.values.T @ y / X.n_rows
    lam_max = 1.05 * np.max(np.abs(z[1:]))
    assert grid.size == 41
    assert grid[0] == 0.0
    assert np.all(np.diff(grid) > 0)
    assert grid[-1] == pytest.approx(lam_max)
    assert grid[1] == pytest.approx(lam_max * 1e-3)


def test_select_lambda_picks_the_minimum_score():
    _, y, basis, X, weights = example_problem()
    result = select_lambda(X, y, weights, basis=basis)

    finite = np.isfinite(result.scores)
    assert finite[result.best_index]
    assert result.scores[result.best_index] == np.min(result.scores[finite])
    assert result.best_lambda == result.lambda_grid[result.best_index]
    assert result.best_fit.params.lam == result.best_lambda
    assert result.best_fit.n_active_knots < 20
    assert result.gamma_resolved == 2.5


def test_ties_go_to_the_larger_lambda():
    X, y, weights = orthonormal_problem()
    lam_max = default_lambda_grid(X, y, weights)[-1]
    result = select_lambda(X, y, weights, grid=[3 * lam_max, 5 * lam_max])

    assert result.scores[0] == result.scores[1]
    assert result.best_lambda == 5 * lam_max


def test_prec_estimates_sigma2_from_the_unpenalized_fit():
    _, y, basis, X, weights = example_problem()
    result = select_lambda(X, y, weights, criterion="prec", basis=basis)

    fit0 = lqa_fit(X, y, ScadParams(0.0), weights)
    expected = fit0.residual_sum_squares / (X.n_rows - fit0.effective_params)
    assert result.sigma2_used == pytest.approx(expected)


def test_prec_with_known_sigma2():
    _, y, basis, X, weights = example_problem()
    result = select_lambda(X, y, weights, criterion="prec", sigma2=0.09, basis=basis)
    assert result.sigma2_used == 0.09


def test_infinite_scores_are_reported_as_null():
    x = np.linspace(0, 1, 30)
    y = np.sin(3 * x)
    basis = BasisSpec(3, place_knots(x, 20))
    X = design_matrix(x, basis)
    weights = penalty_weights(X)
    lam_max = default_lambda_grid(X, y, weights)[-1]

    result = select_lambda(X, y, weights, grid=[0.0, 1e6 * lam_max],
                           gamma_spec=GammaSpec.parse("2"))

    path = result.to_dict()["path"]
    assert path[0]["score"] is None
    assert path[1]["score"] is not None
    assert not any(p["failed"] for p in path)
    assert result.best_lambda == 1e6 * lam_max


def test_grid_must_be_ascending():
    X, y, weights = orthonormal_problem()
    with pytest.raises(DomainError):
        select_lambda(X, y, weights, grid=[1.0, 0.5])
    with pytest.raises(DomainError):
        select_lambda(X, y, weights, criterion="aic")


def test_parallel_cold_starts_cover_the_same_grid():
    X, y, weights = orthonormal_problem()
    grid = default_lambda_grid(X, y, weights, size=8)
    config = FitConfig(max_iterations=20000, convergence_tol=1e-12)

    serial = select_lambda(X, y, weights, grid=grid, config=config)
    parallel = select_lambda(X, y, weights, grid=grid, config=config, workers=2)

    np.testing.assert_array_equal(parallel.lambda_grid, serial.lambda_grid)
    assert parallel.best_lambda == serial.best_lambda
    np.testing.assert_allclose(parallel.scores, serial.scores, rtol=1e-6)


def test_effective_params_shrink_as_the_penalty_grows():
    rng = np.random.default_rng(6)
    for _ in range(20):
        X = rng.normal(size=(30, 8))
        sigma = rng.uniform(size=8)
        values = [effective_params(X, t * sigma) for t in np.r_[0.0, np.geomspace(1e-4, 1e3, 30)]]
        assert np.all(np.diff(values) <= 1e-10)
        bumped = sigma.copy()
        bumped[int(rng.integers(8))] += 1.0
        assert effective_params(X, bumped) <= effective_params(X, sigma) + 1e-10


def test_scores_increase_with_the_residual_sum():
    rss = np.linspace(0.5, 50.0, 100)
    mgcv = [mgcv_score(r, 100, 12.0, 2.5) for r in rss]
    prec = [prec_score(r, 100, 12.0, 2.5, 0.3) for r in rss]
    assert np.all(np.diff(mgcv) > 0)
    assert np.all(np.diff(prec) > 0)
