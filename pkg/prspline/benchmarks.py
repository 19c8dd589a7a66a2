"""The four benchmark signals, their noise levels and dataset generation."""

from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import DimensionError, DomainError
from .solver import PenalizedFit


@dataclass(frozen=True)
class ExampleSpec:
    """Signal id, noise level, sample size and default replicate count."""
    id: int
    name: str
    sigma: float
    n: int
    replicates: int
    target_sd_ratio: float


EXAMPLES = {
    1: ExampleSpec(1, "sine-bump", 0.3, 256, 400, 2.80),
    2: ExampleSpec(2, "line-bump", 0.4, 256, 400, 3.16),
    3: ExampleSpec(3, "heavisine", 1.0, 2048, 31, 6.54),
    4: ExampleSpec(4, "doppler", 1.0, 2048, 31, 6.36),
}


def get_example(example_id: int) -> ExampleSpec:
    try:
        return EXAMPLES[int(example_id)]
    except (KeyError, ValueError, TypeError):
        raise DomainError(
            f"unknown example {example_id!r}; choose one of {sorted(EXAMPLES)}"
        ) from None


def test_function(example_id: int, t):
    """
    Value of benchmark signal `example_id` at t in [0, 1].

    1: sin(2u) + 2 exp(-16 u^2), u = 4t - 2
    2: u + 2 exp(-16 u^2), u = 4t - 2
    3: 2.2 (4 sin(4 pi t) - sgn(t - 0.3) - sgn(0.72 - t))
    4: 22 sqrt(t (1 - t)) sin(2 pi 1.05 / (t + 0.05))
    """
    example_id = get_example(example_id).id
    t = np.asarray(t, dtype=float)
    if np.any((t < 0.0) | (t > 1.0)):
        raise DomainError("benchmark signals are defined on [0, 1]")

    u = 4.0 * t - 2.0
    if example_id == 1:
        values = np.sin(2.0 * u) + 2.0 * np.exp(-16.0 * u ** 2)
    elif example_id == 2:
        values = u + 2.0 * np.exp(-16.0 * u ** 2)
    elif example_id == 3:
        values = 2.2 * (4.0 * np.sin(4.0 * np.pi * t) - np.sign(t - 0.3) - np.sign(0.72 - t))
    else:
        values = 22.0 * np.sqrt(t * (1.0 - t)) * np.sin(2.0 * np.pi * 1.05 / (t + 0.05))
    return float(values) if values.ndim == 0 else values


# pytest would otherwise collect this as a test
test_function.__test__ = False


def sd_ratio(example: ExampleSpec, grid_size: int = 100_000) -> float:
    """SD(f)/sigma with f sampled at the midpoints of a uniform grid."""
    t = (np.arange(1, grid_size + 1) - 0.5) / grid_size
    return float(np.std(test_function(example.id, t)) / example.sigma)


def design_points(example: ExampleSpec, rng: np.random.Generator,
                  equispaced: bool = False) -> np.ndarray:
    if equispaced:
        return (np.arange(1, example.n + 1) - 0.5) / example.n
    return np.sort(rng.uniform(0.0, 1.0, example.n))


def generate_dataset(example: ExampleSpec, seed: int,
                     equispaced: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Sorted design points and y = f(x) + N(0, sigma^2) noise, fixed by seed."""
    rng = np.random.default_rng(seed)
    x = design_points(example, rng, equispaced)
    noise = rng.normal(0.0, example.sigma, example.n)
    return x, test_function(example.id, x) + noise


def mse(fitted: Union[PenalizedFit, np.ndarray], example: ExampleSpec, x) -> float:
    """(1/n) sum (f_hat(x_i) - f(x_i))^2 over the design points."""
    x = np.asarray(x, dtype=float).ravel()
    values = fitted.predict(x) if isinstance(fitted, PenalizedFit) \
        else np.asarray(fitted, dtype=float).ravel()
    if values.size != x.size:
        raise DimensionError(f"{values.size} fitted values for {x.size} design points")
    error = values - test_function(example.id, x)
    return float(np.mean(error ** 2))
