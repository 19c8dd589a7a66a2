"""SCAD penalty: value, derivative and the scalar thresholding rule."""

from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class ScadParams:
    """Penalty level lam >= 0 and shape a > 2."""
    lam: float
    a: float = 3.7

    def __post_init__(self):
        if not self.lam >= 0.0:
            raise DomainError(f"lambda must be >= 0, got {self.lam}")
        if not self.a > 2.0:
            raise DomainError(f"SCAD shape a must exceed 2, got {self.a}")

    def with_lambda(self, lam: float) -> "ScadParams":
        return ScadParams(lam=float(lam), a=self.a)


def _abs_argument(theta):
    theta = np.asarray(theta, dtype=float)
    if np.any(theta < 0):
        raise DomainError("the penalty is defined for |coefficient| >= 0 only")
    return theta


def _out(values):
    return float(values) if np.ndim(values) == 0 else values


def scad_derivative(theta, params: ScadParams):
    """p'(theta); at theta = 0 the right limit lam is returned."""
    theta = _abs_argument(theta)
    lam, a = params.lam, params.a
    # lam * (a*lam - theta)_+ / ((a-1)*lam), written without dividing by lam
    tail = np.maximum(a * lam - theta, 0.0) / (a - 1.0)
    return _out(np.where(theta <= lam, lam, tail))


def scad_value(theta, params: ScadParams):
    """p(theta), the antiderivative of scad_derivative with p(0) = 0."""
    theta = _abs_argument(theta)
    lam, a = params.lam, params.a
    middle = -(theta ** 2 - 2.0 * a * lam * theta + lam ** 2) / (2.0 * (a - 1.0))
    plateau = (a + 1.0) * lam ** 2 / 2.0
    return _out(np.where(
        theta <= lam, lam * theta,
        np.where(theta <= a * lam, middle, plateau),
    ))


def scad_threshold(z, params: ScadParams):
    """Minimizer of (z - theta)^2 / 2 + p(|theta|)."""
    z = np.asarray(z, dtype=float)
    lam, a = params.lam, params.a
    size = np.abs(z)
    sign = np.sign(z)
    soft = sign * np.maximum(size - lam, 0.0)
    middle = ((a - 1.0) * z - sign * a * lam) / (a - 2.0)
    return _out(np.where(
        size <= 2.0 * lam, soft,
        np.where(size <= a * lam, middle, z),
    ))


class Penalty(ABC):
    """Base class for penalties usable by the LQA solver."""

    @abstractmethod
    def value(self, theta):
        """Penalty at |coefficient| theta."""

    @abstractmethod
    def derivative(self, theta):
        """Derivative at |coefficient| theta (right limit at 0)."""

    @abstractmethod
    def threshold(self, z):
        """Solution of the one-dimensional penalized least-squares problem."""

    @property
    @abstractmethod
    def lam(self) -> float:
        """Penalty level."""


class ScadPenalty(Penalty):
    """SCAD penalty bound to fixed parameters."""

    def __init__(self, params: ScadParams):
        self.params = params

    @property
    def lam(self) -> float:
        return self.params.lam

    def value(self, theta):
        return scad_value(theta, self.params)

    def derivative(self, theta):
        return scad_derivative(theta, self.params)

    def threshold(self, z):
        return scad_threshold(z, self.params)

    def __repr__(self):
        return f"ScadPenalty(lam={self.params.lam:g}, a={self.params.a:g})"
