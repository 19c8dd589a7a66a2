import numpy as np
import pytest

from prspline import (DomainError, ScadParams, ScadPenalty, scad_derivative,
                      scad_threshold, scad_value)


def test_derivative_pieces():
    params = ScadParams(1.0)
    assert scad_derivative(0.0, params) == 1.0
    assert scad_derivative(0.5, params) == 1.0
    assert scad_derivative(2.0, params) == pytest.approx(1.7 / 2.7)
    assert scad_derivative(4.0, params) == 0.0


def test_value_is_continuous_at_the_breakpoints():
    params = ScadParams(1.0)
    eps = 1e-9
    for t in (1.0, 3.7):
        assert scad_value(t - eps, params) == pytest.approx(scad_value(t + eps, params), abs=1e-8)
    assert scad_value(1.0, params) == pytest.approx(1.0)
    assert scad_value(10.0, params) == pytest.approx(4.7 / 2)


def test_value_derivative_agree_numerically():
    params = ScadParams(0.7)
    theta = np.linspace(0.01, 4.0, 200)
    h = 1e-6
    numeric = (scad_value(theta + h, params) - scad_value(theta - h, params)) / (2 * h)
    np.testing.assert_allclose(numeric, scad_derivative(theta, params), atol=1e-5)


def test_negative_argument_is_rejected():
    with pytest.raises(DomainError):
        scad_value(-0.1, ScadParams(1.0))
    with pytest.raises(DomainError):
        scad_derivative(np.array([0.1, -0.1]), ScadParams(1.0))


def test_params_validation():
    with pytest.raises(DomainError):
        ScadParams(-1.0)
    with pytest.raises(DomainError):
        ScadParams(1.0, a=2.0)
    assert ScadParams(1.0).with_lambda(2.0) == ScadParams(2.0, 3.7)


def test_threshold_pieces():
    params = ScadParams(1.0)
    assert scad_threshold(0.5, params) == 0.0
    assert scad_threshold(1.5, params) == pytest.approx(0.5)
    assert scad_threshold(-1.5, params) == pytest.approx(-0.5)
    assert scad_threshold(3.0, params) == pytest.approx((2.7 * 3.0 - 3.7) / 1.7)
    assert scad_threshold(5.0, params) == 5.0


def test_scalar_in_scalar_out():
    assert isinstance(scad_threshold(0.3, ScadParams(1.0)), float)
    assert isinstance(scad_value(np.float64(0.3), ScadParams(1.0)), float)


@pytest.mark.parametrize("lam", [0.1, 0.5, 1.0, 2.0])
def test_threshold_matches_brute_force_minimizer(lam):
    params = ScadParams(lam)
    steps = int(round(6 * lam / 1e-4))
    theta = np.arange(-steps, steps + 1) * 1e-4
    penalty = scad_value(np.abs(theta), params)
    z = np.linspace(-5 * lam, 5 * lam, 400)
    brute = np.array([theta[np.argmin(0.5 * (zi - theta) ** 2 + penalty)] for zi in z])
    np.testing.assert_allclose(scad_threshold(z, params), brute, atol=2e-4)


def test_penalty_object_delegates():
    penalty = ScadPenalty(ScadParams(0.5))
    assert penalty.lam == 0.5
    assert penalty.value(1.0) == scad_value(1.0, ScadParams(0.5))
    assert penalty.derivative(1.0) == scad_derivative(1.0, ScadParams(0.5))
    assert penalty.threshold(1.0) == scad_threshold(1.0, ScadParams(0.5))


@pytest.mark.parametrize("lam", [0.05, 1.0, 7.0])
def test_threshold_is_odd(lam):
    params = ScadParams(lam)
    z = np.linspace(0.0, 5 * lam, 301)
    np.testing.assert_allclose(scad_threshold(-z, params), -scad_threshold(z, params),
                               rtol=0, atol=1e-12)


@pytest.mark.parametrize("lam", [0.05, 1.0, 7.0])
def test_threshold_and_derivative_are_continuous_at_the_breakpoints(lam):
    params = ScadParams(lam)
    eps = 1e-9 * lam
    for t in (lam, 2 * lam, params.a * lam):
        left = scad_threshold(t - eps, params)
        right = scad_threshold(t + eps, params)
        assert right == pytest.approx(left, abs=1e-7 * lam)
    for t in (lam, params.a * lam):
        left = scad_derivative(t - eps, params)
        right = scad_derivative(t + eps, params)
        assert right == pytest.approx(left, abs=1e-7 * lam)
