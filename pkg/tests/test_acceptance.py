"""Monte Carlo reproduction checks. Run with `pytest --runslow`."""

import numpy as np
import pytest

import simulate
from prspline import (BasisSpec, design_matrix, default_additive_spec, fit_additive,
                      penalty_weights, place_knots, select_lambda)

pytestmark = pytest.mark.slow

WORKERS = 4
REFERENCE = simulate.StudyConfig(knots=60)


def median_mse(example_id, config, replicates=100):
    return simulate.run_study(example_id, config, replicates, base_seed=1000,
                              workers=WORKERS).median_mse_x1000


def test_example_1_reference_band():
    assert 4.0 <= median_mse(1, REFERENCE) <= 7.5


def test_example_2_reference_band():
    assert 7.0 <= median_mse(2, REFERENCE) <= 12.5


def test_initial_knot_count_barely_matters():
    medians = np.array([median_mse(1, simulate.StudyConfig(knots=k))
                        for k in (30, 60, 90, 120, 150)])
    centre = np.median(medians)
    assert np.all(np.abs(medians - centre) <= 0.3 * centre)


def test_mgcv_needs_inflation_and_prec_does_not_care():
    mgcv_1 = median_mse(1, simulate.StudyConfig(knots=60, gamma="1.0"))
    mgcv_25 = median_mse(1, REFERENCE)
    assert mgcv_1 >= 1.25 * mgcv_25

    prec = [median_mse(1, simulate.StudyConfig(knots=60, criterion="prec", gamma=g))
            for g in ("2.5", "3.5", "7")]
    for i, first in enumerate(prec):
        for second in prec[i + 1:]:
            assert abs(first - second) < 0.25 * min(first, second)


@pytest.mark.parametrize("example_id, low, high", [(3, 35.0, 90.0), (4, 120.0, 280.0)])
def test_large_examples_smoke(example_id, low, high):
    config = simulate.StudyConfig()
    assert config.initial_knots(2048) == 432
    assert low <= median_mse(example_id, config, replicates=10) <= high


def test_pure_line_keeps_few_knots():
    sparse = 0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        x = np.sort(rng.uniform(size=256))
        y = 1.0 + 2.0 * x + rng.normal(0, 0.3, 256)
        basis = BasisSpec(2, place_knots(x, 30))
        X = design_matrix(x, basis)
        result = select_lambda(X, y, penalty_weights(X), basis=basis)
        sparse += result.best_fit.n_active_knots <= 2
    assert sparse >= 90


def test_irrelevant_additive_component_is_dropped():
    dropped = 0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        data = rng.uniform(size=(200, 2))
        y = 1.0 + 2.0 * data[:, 0] + rng.normal(0, 0.3, 200)
        fit = fit_additive(data, y, default_additive_spec(data))
        dropped += fit.n_active_knots[1] == 0
    assert dropped >= 80
