"""Additive spline models fitted with one global penalty level."""

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .basis import (BasisSpec, DesignMatrix, min_initial_knots, monomials,
                    place_knots, truncated_powers)
from .errors import DimensionError, DomainError
from .penalty import ScadParams
from .selection import GammaSpec, SelectionResult, select_lambda
from .solver import FitConfig, PenalizedFit, lqa_fit, penalty_weights


@dataclass(frozen=True)
class AdditiveSpec:
    """One basis per covariate; the constant terms merge into one intercept."""
    components: tuple[BasisSpec, ...]

    def __post_init__(self):
        components = tuple(self.components)
        if not components:
            raise DomainError("an additive model needs at least one component")
        object.__setattr__(self, "components", components)

    @property
    def n_components(self) -> int:
        return len(self.components)

    def to_dict(self) -> dict:
        return {"components": [c.to_dict() for c in self.components]}

    @classmethod
    def from_dict(cls, data: dict) -> "AdditiveSpec":
        return cls(tuple(BasisSpec.from_dict(c) for c in data["components"]))


def _as_data(data, spec: AdditiveSpec) -> np.ndarray:
    data = np.asarray(data, dtype=float)
    if data.ndim == 1:
        data = data.reshape(-1, 1)
    if data.ndim != 2 or data.shape[1] != spec.n_components:
        raise DimensionError(
            f"expected {spec.n_components} covariate columns, got shape {data.shape}"
        )
    return data


def component_block(x: np.ndarray, spec: BasisSpec) -> np.ndarray:
    """[x, ..., x^(p-1), truncated powers] for one covariate."""
    return np.hstack([monomials(x, spec.order, start=1),
                      truncated_powers(x, spec.knots, spec.order)])


def component_columns(spec: AdditiveSpec) -> list[np.ndarray]:
    """Column indices of each component block in the stacked design."""
    blocks = []
    start = 1
    for component in spec.components:
        width = component.order - 1 + component.n_knots
        blocks.append(np.arange(start, start + width))
        start += width
    return blocks


def additive_design(data, spec: AdditiveSpec) -> DesignMatrix:
    """Columns [1 | block_1 | ... | block_J]; only truncated powers are penalized."""
    data = _as_data(data, spec)
    values = [np.ones((data.shape[0], 1))]
    penalized = [False]
    for j, component in enumerate(spec.components):
        values.append(component_block(data[:, j], component))
        penalized += [False] * (component.order - 1) + [True] * component.n_knots
    return DesignMatrix(np.hstack(values), np.array(penalized))


def default_additive_spec(data, order: int = 3, alpha: float = 0.1,
                          divisor: float = 3.0, n_knots: Optional[int] = None) -> AdditiveSpec:
    """Per-variable knots at order statistics; counts from the minimum-knot rule."""
    data = np.asarray(data, dtype=float)
    if data.ndim == 1:
        data = data.reshape(-1, 1)
    k = n_knots or min_initial_knots(data.shape[0], alpha, divisor)
    return AdditiveSpec(tuple(
        BasisSpec(order, place_knots(data[:, j], k)) for j in range(data.shape[1])
    ))


@dataclass
class AdditiveFit:
    """Intercept plus centered component functions."""
    spec: AdditiveSpec
    intercept: float
    blocks: list[np.ndarray]
    active_knots: list[np.ndarray]
    component_means: np.ndarray
    centered: np.ndarray
    fit: Optional[PenalizedFit] = None
    selection: Optional[SelectionResult] = None
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.fit is not None and not self.diagnostics:
            self.diagnostics = {
                "lambda": self.fit.params.lam,
                "a": self.fit.params.a,
                "iterations": self.fit.iterations,
                "converged": self.fit.converged,
                "effective_params": float(self.fit.effective_params),
                "rss": float(self.fit.residual_sum_squares),
            }

    @property
    def fitted_values(self) -> np.ndarray:
        return self.intercept + self.centered.sum(axis=1)

    @property
    def n_active_knots(self) -> list[int]:
        return [int(len(a)) for a in self.active_knots]

    def to_dict(self) -> dict:
        components = []
        for j, component in enumerate(self.spec.components):
            entry = component.to_dict()
            entry.update({
                "coefficients": [float(b) for b in self.blocks[j]],
                "active_knots": [int(i) for i in self.active_knots[j]],
                "mean": float(self.component_means[j]),
            })
            components.append(entry)
        data = {"model": "additive", "intercept": float(self.intercept),
                "components": components}
        data.update(self.diagnostics)
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "AdditiveFit":
        spec = AdditiveSpec.from_dict(data)
        entries = data["components"]
        return cls(
            spec=spec,
            intercept=float(data["intercept"]),
            blocks=[np.asarray(c["coefficients"], dtype=float) for c in entries],
            active_knots=[np.asarray(c.get("active_knots", []), dtype=int) for c in entries],
            component_means=np.array([float(c.get("mean", 0.0)) for c in entries]),
            centered=np.empty((0, spec.n_components)),
            diagnostics={k: v for k, v in data.items()
                         if k not in ("model", "intercept", "components")},
        )


def component_values(fit: AdditiveFit, data) -> np.ndarray:
    """Centered component functions at the given covariate rows (n x J)."""
    data = _as_data(data, fit.spec)
    columns = [
        component_block(data[:, j], component) @ fit.blocks[j] - fit.component_means[j]
        for j, component in enumerate(fit.spec.components)
    ]
    return np.column_stack(columns)


def predict_additive(fit: AdditiveFit, data) -> np.ndarray:
    """Intercept plus the centered components at new covariate rows."""
    return fit.intercept + component_values(fit, data).sum(axis=1)


def fit_additive(data, y, spec: Optional[AdditiveSpec] = None,
                 params: Optional[ScadParams] = None, config: Optional[FitConfig] = None,
                 criterion: str = "mgcv", gamma_spec: Optional[GammaSpec] = None,
                 lam: Optional[float] = None, grid: Optional[Sequence[float]] = None,
                 sigma2: Optional[float] = None, workers: int = 1) -> AdditiveFit:
    """
    Fit the stacked additive design under one global lambda.

    With lam given the fit is made at that level; otherwise lambda is chosen
    by select_lambda. Component functions are then centered over the sample
    and their means moved into the intercept.
    """
    data = np.asarray(data, dtype=float)
    if data.ndim == 1:
        data = data.reshape(-1, 1)
    spec = spec or default_additive_spec(data)
    params = params or ScadParams(0.0)
    X = additive_design(data, spec)
    weights = penalty_weights(X)

    selection = None
    if lam is not None:
        fit = lqa_fit(X, y, params.with_lambda(lam), weights, config)
    else:
        selection = select_lambda(X, y, weights, params, grid, criterion,
                                  gamma_spec, sigma2, config, workers)
        fit = selection.best_fit

    beta = fit.coefficients
    blocks, actives, raw = [], [], []
    offset = 0
    for columns, component in zip(component_columns(spec), spec.components):
        blocks.append(beta[columns].copy())
        raw.append(X.values[:, columns] @ beta[columns])
        in_block = (fit.active_knots >= offset) & (fit.active_knots < offset + component.n_knots)
        actives.append(fit.active_knots[in_block] - offset)
        offset += component.n_knots

    raw = np.column_stack(raw)
    means = raw.mean(axis=0)
    return AdditiveFit(
        spec=spec,
        intercept=float(beta[0] + means.sum()),
        blocks=blocks,
        active_knots=actives,
        component_means=means,
        centered=raw - means,
        fit=fit,
        selection=selection,
    )
