import numpy as np
import pytest

from prspline import (BasisSpec, DomainError, EXAMPLES, ExampleSpec, ScadParams, benchmarks,
                      design_matrix, generate_dataset, get_example, lqa_fit, mse,
                      penalty_weights, place_knots)


def test_heavisine_midpoint():
    assert benchmarks.test_function(3, 0.5) == pytest.approx(-4.4)


def test_doppler_vanishes_at_the_ends():
    assert benchmarks.test_function(4, 0.0) == 0.0
    assert benchmarks.test_function(4, 1.0) == pytest.approx(0.0, abs=1e-12)


def test_bump_signals_at_the_centre():
    # u = 0 at t = 1/2
    assert benchmarks.test_function(1, 0.5) == pytest.approx(2.0)
    assert benchmarks.test_function(2, 0.5) == pytest.approx(2.0)


@pytest.mark.parametrize("example_id", sorted(EXAMPLES))
def test_signal_to_noise_ratios(example_id):
    example = get_example(example_id)
    assert benchmarks.sd_ratio(example) == pytest.approx(example.target_sd_ratio, abs=0.05)


def test_unknown_example_and_domain():
    with pytest.raises(DomainError):
        get_example(5)
    with pytest.raises(DomainError):
        benchmarks.test_function(1, 1.5)


def test_table_of_examples():
    assert [(e.sigma, e.n, e.replicates) for e in EXAMPLES.values()] == [
        (0.3, 256, 400), (0.4, 256, 400), (1.0, 2048, 31), (1.0, 2048, 31),
    ]


def test_datasets_are_determined_by_the_seed():
    example = get_example(1)
    x1, y1 = generate_dataset(example, 42)
    x2, y2 = generate_dataset(example, 42)
    x3, _ = generate_dataset(example, 43)

    np.testing.assert_array_equal(x1, x2)
    np.testing.assert_array_equal(y1, y2)
    assert not np.array_equal(x1, x3)
    assert x1.size == 256
    assert np.all(np.diff(x1) >= 0)
    assert x1.min() >= 0.0 and x1.max() <= 1.0


def test_equispaced_design():
    example = get_example(3)
    x, _ = generate_dataset(example, 0, equispaced=True)
    np.testing.assert_allclose(x, (np.arange(1, 2049) - 0.5) / 2048)


def test_noise_free_dataset():
    example = ExampleSpec(2, "noise-free", 0.0, 50, 1, 0.0)
    x, y = generate_dataset(example, 1)
    np.testing.assert_array_equal(y, benchmarks.test_function(2, x))


def test_noise_variance():
    example = ExampleSpec(2, "large", 0.4, 10_000, 1, 3.16)
    x, y = generate_dataset(example, 3)
    noise = y - benchmarks.test_function(2, x)
    assert np.var(noise) == pytest.approx(0.16, rel=0.05)


def test_mse_against_the_truth():
    example = get_example(1)
    x = np.linspace(0, 1, 101)
    f = benchmarks.test_function(1, x)
    assert mse(f, example, x) == 0.0
    assert mse(f + 0.1, example, x) == pytest.approx(0.01)


def test_mse_accepts_a_fit():
    example = get_example(2)
    x, y = generate_dataset(example, 9)
    basis = BasisSpec(3, place_knots(x, 20))
    X = design_matrix(x, basis)
    fit = lqa_fit(X, y, ScadParams(0.0), penalty_weights(X), basis=basis)
    assert mse(fit, example, x) == pytest.approx(mse(fit.predict(x), example, x))
    assert 0.0 < mse(fit, example, x) < 0.16
