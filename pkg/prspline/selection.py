"""Effective parameters, MGCV and PREC scores, and the lambda search."""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import linalg

from .basis import BasisSpec, DesignMatrix
from .errors import DimensionError, DomainError, NumericalError, SplineError
from .penalty import ScadParams
from .solver import FitConfig, PenalizedFit, PINV_RTOL, initial_coefficients, lqa_fit

logger = logging.getLogger(__name__)

CRITERIA = ("mgcv", "prec")

# Inflation-factor forms and their printed labels.
GAMMA_LABELS = {
    "ln_n_over_2": "ln(n)/2",
    "ln_n": "ln(n)",
    "ln_k_over_2": "ln(k)/2",
    "ln_k": "ln(k)",
}


@dataclass(frozen=True)
class GammaSpec:
    """Inflation factor: a constant or one of the ln(n), ln(k) forms."""
    kind: str = "constant"
    value: float = 2.5

    def __post_init__(self):
        if self.kind != "constant" and self.kind not in GAMMA_LABELS:
            raise DomainError(f"unknown inflation factor kind {self.kind!r}")
        if self.kind == "constant" and not self.value >= 1.0:
            raise DomainError(f"a constant inflation factor must be >= 1, got {self.value}")

    @classmethod
    def parse(cls, text) -> "GammaSpec":
        """Read '2.5', 'ln(n)/2', 'ln(k)', 'ln_n_over_2' and the like."""
        if isinstance(text, GammaSpec):
            return text
        label = str(text).strip().lower().replace(" ", "")
        for kind, printed in GAMMA_LABELS.items():
            if label in (kind, printed):
                return cls(kind=kind)
        try:
            return cls(kind="constant", value=float(label))
        except ValueError:
            raise DomainError(f"cannot read inflation factor {text!r}") from None

    @property
    def label(self) -> str:
        if self.kind == "constant":
            return f"{self.value:g}"
        return GAMMA_LABELS[self.kind]


def resolve_gamma(spec: GammaSpec, n: int, k: int) -> float:
    """Numeric inflation factor for sample size n and initial knot count k."""
    if spec.kind == "constant":
        return float(spec.value)
    if spec.kind.startswith("ln_n"):
        base = math.log(n)
    else:
        base = math.log(k)
    return base / 2.0 if spec.kind.endswith("over_2") else base


def effective_params(X_active, sigma) -> float:
    """
    e = tr[X (X^T X + n Sigma)^+ X^T] for a diagonal Sigma >= 0.

    With A = [X; sqrt(n Sigma)] = U S V^T, the trace is the squared norm of
    the first n rows of U over the kept singular values. Singular values
    below PINV_RTOL times the largest are dropped, so Sigma = 0 counts the
    rank of X.
    """
    X = np.asarray(X_active, dtype=float)
    if X.ndim != 2:
        raise DimensionError("active design must be 2-D")
    n, d = X.shape
    sigma = np.asarray(sigma, dtype=float)
    if sigma.ndim == 2:
        sigma = np.diag(sigma)
    if sigma.size != d:
        raise DimensionError(f"Sigma has {sigma.size} entries for {d} active columns")
    if np.any(sigma < 0):
        raise DomainError("Sigma must be nonnegative")
    if d == 0:
        return 0.0

    augmented = np.vstack([X, np.diag(np.sqrt(n * sigma))])
    if not np.all(np.isfinite(augmented)):
        raise NumericalError("regularized design is not finite")
    U, s, _ = linalg.svd(augmented, full_matrices=False)
    if s[0] == 0.0:
        return 0.0
    keep = s > PINV_RTOL * s[0]
    return float(np.sum(U[:n, keep] ** 2))


def mgcv_score(rss: float, n: int, e: float, gamma: float) -> float:
    """(rss/n) / (1 - gamma*e/n)^2, or +inf once gamma*e reaches n."""
    denominator = 1.0 - gamma * e / n
    if denominator <= 0.0:
        return math.inf
    return (rss / n) / denominator ** 2


def prec_score(rss: float, n: int, e: float, gamma: float, sigma2: float) -> float:
    """rss/n + 2 gamma sigma^2 e / n."""
    if not sigma2 > 0.0:
        raise DomainError(f"error variance must be positive, got {sigma2}")
    return rss / n + 2.0 * gamma * sigma2 * e / n


def default_lambda_grid(X: DesignMatrix, y, weights, size: int = 40,
                        ratio: float = 1e-3, include_zero: bool = True,
                        beta0=None, ridge_jitter: float = 1e-10) -> np.ndarray:
    """
    `size` log-spaced values from lam_max*ratio to lam_max, plus 0.

    lam_max is 1.05 times the largest standardized least-squares knot
    coefficient |w_j beta_j|.
    """
    if size < 1:
        raise DomainError("grid size must be >= 1")
    if not 0.0 < ratio < 1.0:
        raise DomainError("grid ratio must lie in (0, 1)")
    if beta0 is None:
        beta0 = initial_coefficients(X, y, ridge_jitter)
    standardized = np.abs(np.asarray(weights) * beta0[X.knot_columns])
    lam_max = 1.05 * float(standardized.max()) if standardized.size else 0.0
    if lam_max <= 0.0:
        logger.warning("no penalized coefficient is nonzero; grid reduced to lambda = 0")
        return np.zeros(1)
    grid = np.geomspace(lam_max * ratio, lam_max, size)
    return np.r_[0.0, grid] if include_zero else grid


@dataclass
class SelectionResult:
    """Scores along the lambda grid and the chosen fit."""
    criterion: str
    gamma_resolved: float
    gamma_label: str
    lambda_grid: np.ndarray
    scores: np.ndarray
    best_lambda: float
    best_fit: PenalizedFit
    sigma2_used: Optional[float] = None
    effective_params: list[float] = field(default_factory=list)
    active_counts: list[int] = field(default_factory=list)
    iterations: list[int] = field(default_factory=list)

    @property
    def best_index(self) -> int:
        return int(np.flatnonzero(self.lambda_grid == self.best_lambda)[-1])

    def to_dict(self) -> dict:
        path = []
        for i, lam in enumerate(self.lambda_grid):
            score = float(self.scores[i])
            e = self.effective_params[i]
            path.append({
                "lambda": float(lam),
                "score": score if math.isfinite(score) else None,
                "effective_params": None if e is None else float(e),
                "active_knots": self.active_counts[i],
                "iterations": self.iterations[i],
                "failed": e is None,
            })
        return {
            "criterion": self.criterion,
            "gamma": self.gamma_resolved,
            "gamma_label": self.gamma_label,
            "best_lambda": float(self.best_lambda),
            "sigma2": self.sigma2_used,
            "path": path,
        }


def _fit_one(job):
    """Cold-start fit for one grid point; module level so workers can pickle it."""
    X, y, params, weights, config, basis = job
    try:
        return lqa_fit(X, y, params, weights, config, basis=basis)
    except (SplineError, linalg.LinAlgError) as e:
        logger.warning("fit failed at lambda=%g: %s", params.lam, e)
        return None


def _fit_path(X, y, params, weights, grid, config, basis, start):
    """Warm-started fits along an ascending grid."""
    fits = []
    previous = None
    for lam in grid:
        # Knots zeroed at the previous lambda restart from the least-squares value.
        beta0 = None if previous is None else np.where(previous != 0.0, previous, start)
        try:
            fit = lqa_fit(X, y, params.with_lambda(lam), weights, config,
                          beta0=beta0, basis=basis)
        except (SplineError, linalg.LinAlgError) as e:
            logger.warning("fit failed at lambda=%g: %s", lam, e)
            fits.append(None)
            continue
        fits.append(fit)
        previous = fit.coefficients
    return fits


def select_lambda(X: DesignMatrix, y, weights, params_template: Optional[ScadParams] = None,
                  grid: Optional[Sequence[float]] = None, criterion: str = "mgcv",
                  gamma_spec: Optional[GammaSpec] = None, sigma2: Optional[float] = None,
                  config: Optional[FitConfig] = None, workers: int = 1,
                  basis: Optional[BasisSpec] = None) -> SelectionResult:
    """
    Fit every grid point and keep the one minimizing MGCV or PREC.

    Ties go to the larger lambda. With workers > 1 the grid points are fitted
    from cold starts in separate processes. For PREC without sigma2 the error
    variance is estimated as RSS/(n - e) from the lambda = 0 fit.
    """
    criterion = criterion.lower()
    if criterion not in CRITERIA:
        raise DomainError(f"criterion must be one of {CRITERIA}, got {criterion!r}")
    params_template = params_template or ScadParams(0.0)
    gamma_spec = gamma_spec or GammaSpec()
    config = config or FitConfig()
    y = np.asarray(y, dtype=float).ravel()
    n = X.n_rows
    start = initial_coefficients(X, y, config.ridge_jitter)

    if grid is None:
        grid = default_lambda_grid(X, y, weights, beta0=start)
    grid = np.asarray(grid, dtype=float).ravel()
    if grid.size == 0:
        raise DomainError("lambda grid is empty")
    if np.any(np.diff(grid) < 0):
        raise DomainError("lambda grid must be sorted ascending")

    gamma = resolve_gamma(gamma_spec, n, max(X.knot_columns.size, 2))

    if workers > 1:
        jobs = [(X, y, params_template.with_lambda(lam), weights, config, basis)
                for lam in grid]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            fits = list(pool.map(_fit_one, jobs))
    else:
        fits = _fit_path(X, y, params_template, weights, grid, config, basis, start)

    if criterion == "prec" and sigma2 is None:
        sigma2 = _estimate_sigma2(X, y, params_template, weights, grid, fits, config)

    scores = np.full(grid.size, math.inf)
    for i, fit in enumerate(fits):
        if fit is None:
            continue
        if criterion == "mgcv":
            scores[i] = mgcv_score(fit.residual_sum_squares, n, fit.effective_params, gamma)
        else:
            scores[i] = prec_score(fit.residual_sum_squares, n, fit.effective_params,
                                   gamma, sigma2)

    best = None
    for i, score in enumerate(scores):
        if math.isfinite(score) and (best is None or score <= scores[best]):
            best = i
    if best is None:
        raise NumericalError("no lambda on the grid produced a finite score")

    return SelectionResult(
        criterion=criterion,
        gamma_resolved=gamma,
        gamma_label=gamma_spec.label,
        lambda_grid=grid,
        scores=scores,
        best_lambda=float(grid[best]),
        best_fit=fits[best],
        sigma2_used=sigma2,
        effective_params=[None if f is None else f.effective_params for f in fits],
        active_counts=[0 if f is None else f.n_active_knots for f in fits],
        iterations=[0 if f is None else f.iterations for f in fits],
    )


def _estimate_sigma2(X, y, params, weights, grid, fits, config) -> float:
    zero = np.flatnonzero(grid == 0.0)
    fit = fits[zero[0]] if zero.size else None
    if fit is None:
        fit = lqa_fit(X, y, params.with_lambda(0.0), weights, config)
    dof = X.n_rows - fit.effective_params
    if dof <= 0:
        raise NumericalError("the unpenalized fit leaves no residual degrees of freedom")
    return fit.residual_sum_squares / dof
