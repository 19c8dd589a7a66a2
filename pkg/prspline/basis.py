"""Knot placement and the truncated power basis."""

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionError, DomainError


@dataclass(frozen=True)
class BasisSpec:
    """Spline order p and interior knots t_1 < ... < t_k."""
    order: int
    knots: tuple[float, ...] = ()

    def __post_init__(self):
        if int(self.order) != self.order or self.order < 1:
            raise DomainError(f"spline order must be an integer >= 1, got {self.order}")
        knots = tuple(float(t) for t in self.knots)
        if any(b <= a for a, b in zip(knots, knots[1:])):
            raise DomainError("knots must be strictly increasing")
        object.__setattr__(self, "order", int(self.order))
        object.__setattr__(self, "knots", knots)

    @property
    def n_knots(self) -> int:
        return len(self.knots)

    @property
    def dimension(self) -> int:
        return self.order + len(self.knots)

    def to_dict(self) -> dict:
        return {"order": self.order, "knots": list(self.knots)}

    @classmethod
    def from_dict(cls, data: dict) -> "BasisSpec":
        return cls(order=int(data["order"]), knots=tuple(data.get("knots", ())))


@dataclass(frozen=True)
class DesignMatrix:
    """
    Design matrix plus a mask of the penalized (truncated power) columns.

    Univariate designs have p unpenalized monomial columns followed by k
    penalized knot columns. Additive designs interleave blocks, so the
    column roles are carried explicitly.
    """
    values: np.ndarray
    penalized: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2:
            raise DimensionError("design values must be a 2-D array")
        penalized = np.asarray(self.penalized, dtype=bool)
        if penalized.shape != (values.shape[1],):
            raise DimensionError("penalized mask must have one entry per column")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "penalized", penalized)

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_columns(self) -> int:
        return self.values.shape[1]

    @property
    def knot_columns(self) -> np.ndarray:
        """Column indices of the penalized columns, in order."""
        return np.flatnonzero(self.penalized)


def lmax(n: int, alpha: float = 0.1) -> float:
    """
    Expected length of the longest positive or negative run in n trials
    with run probability alpha: -log2{-(1/n) ln(1 - alpha)}.
    """
    if n < 1:
        raise DomainError(f"sample size must be >= 1, got {n}")
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    return -math.log2(-math.log1p(-alpha) / n)


def min_initial_knots(n: int, alpha: float = 0.1, divisor: float = 3.0) -> int:
    """Minimum initial knot count floor(n * divisor / L_max) + 1."""
    if n < 15:
        raise DomainError(f"the knot-count rule needs n >= 15, got {n}")
    return int(math.floor(n * divisor / lmax(n, alpha))) + 1


def place_knots(x: Sequence[float], k: int) -> tuple[float, ...]:
    """
    Knots at the order statistics x_(floor(n*i/(k+1))), i = 1..k.

    Tied design points can produce repeated knots; those are collapsed, so
    fewer than k knots may come back.
    """
    xs = np.sort(np.asarray(x, dtype=float).ravel())
    n = xs.size
    if n == 0:
        raise DomainError("cannot place knots on an empty sample")
    if k < 1:
        raise DomainError(f"knot count must be >= 1, got {k}")
    if k >= n:
        raise DomainError(f"knot count {k} would exhaust a sample of size {n}")

    i = np.arange(1, k + 1)
    index = np.clip((n * i) // (k + 1), 1, n)
    return tuple(float(t) for t in np.unique(xs[index - 1]))


def monomials(x: np.ndarray, order: int, start: int = 0) -> np.ndarray:
    """Columns x^start, ..., x^(order-1)."""
    return np.column_stack([x ** j for j in range(start, order)]) if order > start \
        else np.empty((x.size, 0))


def truncated_powers(x: np.ndarray, knots: Sequence[float], order: int) -> np.ndarray:
    """Columns (x - t)_+^(order-1); order 1 gives steps that jump at each knot."""
    knots = np.asarray(knots, dtype=float)
    if knots.size == 0:
        return np.empty((x.size, 0))
    shifted = x[:, None] - knots[None, :]
    if order == 1:
        return (shifted > 0).astype(float)
    return np.clip(shifted, 0.0, None) ** (order - 1)


def design_matrix(x: Sequence[float], spec: BasisSpec) -> DesignMatrix:
    """Truncated power design {1, x, ..., x^(p-1), (x - t_j)_+^(p-1)}."""
    x = np.asarray(x, dtype=float).ravel()
    values = np.hstack([
        monomials(x, spec.order),
        truncated_powers(x, spec.knots, spec.order),
    ])
    penalized = np.r_[np.zeros(spec.order, bool), np.ones(spec.n_knots, bool)]
    return DesignMatrix(values, penalized)


def predict(coeffs: Sequence[float], spec: BasisSpec, x: Sequence[float]) -> np.ndarray:
    """Evaluate the spline with the given coefficients at x."""
    coeffs = np.asarray(coeffs, dtype=float).ravel()
    if coeffs.size != spec.dimension:
        raise DimensionError(
            f"expected {spec.dimension} coefficients for order {spec.order} "
            f"with {spec.n_knots} knots, got {coeffs.size}"
        )
    return design_matrix(x, spec).values @ coeffs
