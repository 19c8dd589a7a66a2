"""Penalized least squares by the local quadratic approximation (LQA)."""

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import linalg

from .basis import BasisSpec, DesignMatrix, predict
from .errors import DimensionError, DomainError, NumericalError
from .penalty import Penalty, ScadPenalty, ScadParams

logger = logging.getLogger(__name__)

# Singular values below this fraction of the largest are treated as zero.
PINV_RTOL = 1e-10


@dataclass(frozen=True)
class FitConfig:
    """Stopping and stabilization settings for lqa_fit."""
    max_iterations: int = 100
    convergence_tol: float = 1e-6
    zero_clamp: float = 1e-6
    ridge_jitter: float = 1e-10

    def __post_init__(self):
        if self.max_iterations < 1:
            raise DomainError("max_iterations must be >= 1")
        if not (self.convergence_tol > 0 and self.zero_clamp > 0):
            raise DomainError("convergence_tol and zero_clamp must be positive")
        if self.ridge_jitter < 0:
            raise DomainError("ridge_jitter must be nonnegative")

    @classmethod
    def from_dict(cls, data: Optional[dict]) -> "FitConfig":
        data = data or {}
        return cls(
            max_iterations=int(data.get("max_iterations", cls.max_iterations)),
            convergence_tol=float(data.get("convergence_tol", cls.convergence_tol)),
            zero_clamp=float(data.get("zero_clamp", cls.zero_clamp)),
            ridge_jitter=float(data.get("ridge_jitter", cls.ridge_jitter)),
        )

    def to_dict(self) -> dict:
        return {
            "max_iterations": self.max_iterations,
            "convergence_tol": self.convergence_tol,
            "zero_clamp": self.zero_clamp,
            "ridge_jitter": self.ridge_jitter,
        }


@dataclass
class PenalizedFit:
    """Result of one penalized fit at a fixed penalty level."""
    coefficients: np.ndarray
    active_knots: np.ndarray
    weights: np.ndarray
    params: ScadParams
    iterations: int
    objective: float
    effective_params: float
    residual_sum_squares: float
    converged: bool = True
    objective_path: list[float] = field(default_factory=list)
    basis: Optional[BasisSpec] = None

    @property
    def n_active_knots(self) -> int:
        return int(len(self.active_knots))

    @property
    def selected_knots(self) -> tuple[float, ...]:
        """Locations of the surviving knots (univariate fits only)."""
        if self.basis is None:
            return ()
        return tuple(self.basis.knots[i] for i in self.active_knots)

    def predict(self, x: Sequence[float]) -> np.ndarray:
        if self.basis is None:
            raise DomainError("this fit carries no basis; evaluate it through its design")
        return predict(self.coefficients, self.basis, x)

    def to_dict(self) -> dict:
        data = {}
        if self.basis is not None:
            data.update(self.basis.to_dict())
        data.update({
            "coefficients": [float(b) for b in self.coefficients],
            "active_knots": [int(i) for i in self.active_knots],
            "weights": [float(w) for w in self.weights],
            "lambda": self.params.lam,
            "a": self.params.a,
            "iterations": self.iterations,
            "converged": self.converged,
            "objective": float(self.objective),
            "effective_params": float(self.effective_params),
            "rss": float(self.residual_sum_squares),
        })
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "PenalizedFit":
        basis = BasisSpec.from_dict(data) if "order" in data else None
        return cls(
            coefficients=np.asarray(data["coefficients"], dtype=float),
            active_knots=np.asarray(data.get("active_knots", []), dtype=int),
            weights=np.asarray(data.get("weights", []), dtype=float),
            params=ScadParams(lam=float(data["lambda"]), a=float(data.get("a", 3.7))),
            iterations=int(data.get("iterations", 0)),
            objective=float(data.get("objective", np.nan)),
            effective_params=float(data.get("effective_params", np.nan)),
            residual_sum_squares=float(data.get("rss", np.nan)),
            converged=bool(data.get("converged", True)),
            basis=basis,
        )


def penalty_weights(X: DesignMatrix) -> np.ndarray:
    """
    Weights w_j = [((1/n) X^T X)^+_jj]^(-1/2) for the penalized columns.

    The pseudo-inverse comes from a thin SVD of X / sqrt(n) with singular
    values below PINV_RTOL times the largest dropped. A column that is
    numerically zero, or whose diagonal entry is not positive, gets weight 0
    and is reported as degenerate.
    """
    if X.n_columns == 0:
        raise DimensionError("design has no columns")
    if X.n_rows < 1:
        raise DimensionError("design has no rows")

    _, s, Vt = linalg.svd(X.values / np.sqrt(X.n_rows), full_matrices=False)
    keep = s > PINV_RTOL * s[0] if s[0] > 0 else np.zeros(s.size, bool)
    diagonal = np.sum((Vt[keep].T / s[keep]) ** 2, axis=1)[X.knot_columns]
    norms = np.linalg.norm(X.values, axis=0)

    weights = np.zeros(diagonal.size)
    usable = (diagonal > 0) & (norms[X.knot_columns] > PINV_RTOL * norms.max())
    weights[usable] = diagonal[usable] ** -0.5
    if not usable.all():
        logger.warning(
            "%d penalized column(s) have a degenerate weight: %s",
            int((~usable).sum()), np.flatnonzero(~usable).tolist(),
        )
    return weights


def _as_array(X) -> np.ndarray:
    return X.values if isinstance(X, DesignMatrix) else np.asarray(X, dtype=float)


def initial_coefficients(X, y, ridge_jitter: float = 1e-10) -> np.ndarray:
    """
    Minimum-norm least-squares coefficients from a thin SVD.

    Singular values below ridge_jitter times the largest are treated as zero.
    """
    A = _as_array(X)
    y = np.asarray(y, dtype=float).ravel()
    if A.shape[0] != y.size:
        raise DimensionError(f"design has {A.shape[0]} rows but y has {y.size} values")

    U, s, Vt = linalg.svd(A, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros(A.shape[1])
    keep = s > ridge_jitter * s[0]
    return Vt[keep].T @ ((U[:, keep].T @ y) / s[keep])


def objective(beta, X: DesignMatrix, y, params: ScadParams, weights,
              penalty: Optional[Penalty] = None) -> float:
    """
    ||y - X beta||^2 + 2n * sum_j p(|w_j beta_j|) over the knot columns.

    This is twice the criterion whose stationary points the ridge iteration
    of `lqa_fit` reaches, so it decreases along the iteration.
    """
    penalty = penalty or ScadPenalty(params)
    beta = np.asarray(beta, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    weights = np.asarray(weights, dtype=float).ravel()
    if beta.size != X.n_columns or y.size != X.n_rows:
        raise DimensionError("coefficients, design and response do not agree")
    if weights.size != X.knot_columns.size:
        raise DimensionError("one weight per penalized column is required")

    residual = y - X.values @ beta
    standardized = np.abs(weights * beta[X.knot_columns])
    return float(residual @ residual + 2.0 * X.n_rows * np.sum(penalty.value(standardized)))


def _clamp(beta, active, knot_columns, weights, tol):
    """Fix small standardized knot coefficients at zero for the rest of the fit."""
    live = active[knot_columns]
    if not live.any():
        return False
    size = np.abs(weights * beta[knot_columns])
    scale = max(1.0, float(size[live].max()))
    drop = live & (size < tol * scale)
    active[knot_columns[drop]] = False
    beta[knot_columns[drop]] = 0.0
    return bool(drop.any())


def _clamp_at_zero_optimum(beta, active, knot_columns, weights, lam, X, y, gram):
    """
    Zero the knots inside the linear part of the penalty on which zero
    minimizes the criterion along that coordinate: |x_j^T r_(-j)| <= n lam w_j,
    with r_(-j) the residual leaving column j out.
    """
    live = active[knot_columns]
    if not live.any():
        return False
    columns = knot_columns[live]
    w = weights[live]
    beta_j = beta[columns]
    residual = y - X.values @ beta
    partial = X.values[:, columns].T @ residual + gram[columns, columns] * beta_j
    drop = (np.abs(w * beta_j) < lam) & (np.abs(partial) <= X.n_rows * lam * w)
    if not drop.any():
        return False
    active[columns[drop]] = False
    beta[columns[drop]] = 0.0
    return True


def _lqa_diagonal(beta, active, knot_columns, weights, penalty) -> np.ndarray:
    """Diagonal of Sigma: w_j^2 p'(|w_j beta_j|) / |w_j beta_j| on active knots."""
    sigma = np.zeros(beta.size)
    live = active[knot_columns]
    columns = knot_columns[live]
    w = weights[live]
    size = np.abs(w * beta[columns])
    sigma[columns] = w ** 2 * np.asarray(penalty.derivative(size)) / size
    return sigma


def _ridge_solve(gram, ridge, rhs) -> np.ndarray:
    system = gram + np.diag(ridge)
    try:
        solution = linalg.cho_solve(linalg.cho_factor(system), rhs)
    except linalg.LinAlgError:
        logger.debug("Cholesky failed on a %d-column system, using pinvh", rhs.size)
        solution = linalg.pinvh(system, atol=0.0, rtol=PINV_RTOL) @ rhs
    if not np.all(np.isfinite(solution)):
        raise NumericalError("the LQA ridge system could not be solved")
    return solution


def _lqa_step(beta, active, knot_columns, weights, penalty, gram, xty, n) -> np.ndarray:
    sigma = _lqa_diagonal(beta, active, knot_columns, weights, penalty)
    columns = np.flatnonzero(active)
    updated = np.zeros_like(beta)
    if columns.size:
        updated[columns] = _ridge_solve(
            gram[np.ix_(columns, columns)], n * sigma[columns], xty[columns]
        )
    return updated


def lqa_fit(X: DesignMatrix, y, params: ScadParams, weights,
            config: Optional[FitConfig] = None, beta0=None,
            penalty: Optional[Penalty] = None,
            basis: Optional[BasisSpec] = None) -> PenalizedFit:
    """
    Minimize the SCAD-penalized least-squares criterion by repeated ridge
    solves on the active columns.

    Each iteration clamps small standardized knot coefficients to zero, and
    knots for which zero is already the coordinate-wise optimum, then builds
    Sigma at the current coefficients and solves
    (X_a^T X_a + n Sigma_a) beta_a = X_a^T y. A clamped knot never returns.
    Monomial columns are never penalized or clamped. The returned
    coefficients are the iterate with the lowest objective, so the objective
    never ends above its value at the start. With lam = 0 the least-squares
    fit is returned as is.
    """
    from .selection import effective_params

    config = config or FitConfig()
    penalty = penalty or ScadPenalty(params)
    y = np.asarray(y, dtype=float).ravel()
    weights = np.asarray(weights, dtype=float).ravel()
    n = X.n_rows
    knot_columns = X.knot_columns
    if y.size != n:
        raise DimensionError(f"design has {n} rows but y has {y.size} values")
    if weights.size != knot_columns.size:
        raise DimensionError(
            f"expected {knot_columns.size} penalty weights, got {weights.size}"
        )

    gram = X.values.T @ X.values
    xty = X.values.T @ y
    active = np.ones(X.n_columns, dtype=bool)

    if penalty.lam == 0.0:
        beta = initial_coefficients(X, y, config.ridge_jitter)
        e = effective_params(X.values, np.zeros(X.n_columns))
        value = objective(beta, X, y, params, weights, penalty)
        return _assemble(beta, active, knot_columns, weights, params, 0, [value],
                         e, X, y, True, basis)

    if beta0 is None:
        beta = initial_coefficients(X, y, config.ridge_jitter)
    else:
        beta = np.array(beta0, dtype=float).ravel()
        if beta.size != X.n_columns:
            raise DimensionError("starting coefficients do not match the design")

    degenerate = knot_columns[weights <= 0]
    active[degenerate] = False
    beta[degenerate] = 0.0

    history = [objective(beta, X, y, params, weights, penalty)]
    best = (history[0], beta.copy(), active.copy())
    converged = False
    iterations = 0
    for iterations in range(1, config.max_iterations + 1):
        _clamp(beta, active, knot_columns, weights, config.zero_clamp)
        _clamp_at_zero_optimum(beta, active, knot_columns, weights, penalty.lam, X, y, gram)
        updated = _lqa_step(beta, active, knot_columns, weights, penalty, gram, xty, n)
        change = float(np.max(np.abs(updated - beta) / (1.0 + np.abs(beta))))
        beta = updated

        history.append(objective(beta, X, y, params, weights, penalty))
        if history[-1] > history[-2] + 1e-8 * (1.0 + abs(history[-2])):
            logger.debug("objective rose from %.10g to %.10g at iteration %d (lambda=%g)",
                         history[-2], history[-1], iterations, penalty.lam)
        if history[-1] <= best[0]:
            best = (history[-1], beta.copy(), active.copy())
        if change < config.convergence_tol:
            converged = True
            break

    if not converged:
        logger.warning("LQA stopped after %d iterations without converging (lambda=%g)",
                       iterations, penalty.lam)

    # Knots dropped by the final clamp are solved out of the remaining columns.
    while (_clamp(beta, active, knot_columns, weights, config.zero_clamp)
           | _clamp_at_zero_optimum(beta, active, knot_columns, weights, penalty.lam,
                                    X, y, gram)):
        beta = _lqa_step(beta, active, knot_columns, weights, penalty, gram, xty, n)

    final = objective(beta, X, y, params, weights, penalty)
    if final > best[0] + 1e-10 * (1.0 + abs(best[0])):
        logger.debug("returning an earlier iterate: objective %.10g < %.10g (lambda=%g)",
                     best[0], final, penalty.lam)
        final, beta, active = best

    # Projection at the returned coefficients.
    sigma = _lqa_diagonal(beta, active, knot_columns, weights, penalty)
    columns = np.flatnonzero(active)
    e = effective_params(X.values[:, columns], sigma[columns])
    history.append(final)
    return _assemble(beta, active, knot_columns, weights, params, iterations, history,
                     e, X, y, converged, basis)


def _assemble(beta, active, knot_columns, weights, params, iterations, history,
              e, X, y, converged, basis) -> PenalizedFit:
    residual = y - X.values @ beta
    return PenalizedFit(
        coefficients=beta,
        active_knots=np.flatnonzero(active[knot_columns]),
        weights=weights,
        params=params,
        iterations=iterations,
        objective=history[-1],
        effective_params=e,
        residual_sum_squares=float(residual @ residual),
        converged=converged,
        objective_path=history,
        basis=basis,
    )
