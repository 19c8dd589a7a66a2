"""Replicate studies on the benchmark signals: MSE and knot-selection summaries."""

import itertools
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd
from scipy import linalg

from prspline import (BasisSpec, DomainError, ExampleSpec, FitConfig, GammaSpec, ScadParams,
                      SplineError, NumericalError, default_lambda_grid, design_matrix,
                      generate_dataset, get_example, min_initial_knots, mse,
                      penalty_weights, place_knots, select_lambda)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class StudyConfig:
    """Everything that defines one cell of a study, apart from the seeds."""
    knots: Optional[int] = None
    order: int = 3
    criterion: str = "mgcv"
    gamma: str = "2.5"
    a: float = 3.7
    alpha: float = 0.1
    divisor: float = 3.0
    grid_size: int = 40
    grid_ratio: float = 1e-3
    equispaced: bool = False
    true_sigma: bool = False
    fit: FitConfig = field(default_factory=FitConfig)

    def __post_init__(self):
        # fail before any worker starts
        GammaSpec.parse(self.gamma)
        if self.knots is not None and self.knots < 1:
            raise DomainError(f"knot count must be >= 1, got {self.knots}")

    @property
    def design(self) -> str:
        return "equispaced" if self.equispaced else "uniform"

    @property
    def gamma_label(self) -> str:
        return GammaSpec.parse(self.gamma).label

    def initial_knots(self, n: int) -> int:
        return self.knots or min_initial_knots(n, self.alpha, self.divisor)

    @classmethod
    def from_dict(cls, data: dict) -> "StudyConfig":
        data = dict(data)
        knots = data.get("knots")
        fit = FitConfig.from_dict(data.get("fit"))
        return cls(
            knots=None if knots in (None, "auto") else int(knots),
            order=int(data.get("order", 3)),
            criterion=str(data.get("criterion", "mgcv")).lower(),
            gamma=str(data.get("gamma", "2.5")),
            a=float(data.get("a", 3.7)),
            alpha=float(data.get("alpha", 0.1)),
            divisor=float(data.get("divisor", 3.0)),
            grid_size=int(data.get("grid_size", 40)),
            grid_ratio=float(data.get("grid_ratio", 1e-3)),
            equispaced=bool(data.get("equispaced", data.get("design") == "equispaced")),
            true_sigma=bool(data.get("true_sigma", False)),
            fit=fit,
        )

    def to_dict(self) -> dict:
        return {
            "knots": self.knots if self.knots is not None else "auto",
            "order": self.order,
            "criterion": self.criterion,
            "gamma": self.gamma_label,
            "a": self.a,
            "alpha": self.alpha,
            "divisor": self.divisor,
            "grid_size": self.grid_size,
            "grid_ratio": self.grid_ratio,
            "design": self.design,
            "true_sigma": self.true_sigma,
            "fit": self.fit.to_dict(),
        }


@dataclass
class ReplicateResult:
    """Outcome of one simulated dataset; `error` is set when the fit failed."""
    seed: int
    mse: float = float("nan")
    knots_selected: int = 0
    iterations: int = 0
    best_lambda: float = float("nan")
    initial_knots: tuple[float, ...] = ()
    active_knots: tuple[int, ...] = ()
    error: Optional[str] = None

    @property
    def failed(self) -> bool:
        return self.error is not None


def fit_replicate(example: ExampleSpec, config: StudyConfig, seed: int) -> ReplicateResult:
    """Simulate one dataset, select lambda on the default grid and score the fit."""
    x, y = generate_dataset(example, seed, config.equispaced)
    basis = BasisSpec(config.order, place_knots(x, config.initial_knots(example.n)))
    X = design_matrix(x, basis)
    weights = penalty_weights(X)
    grid = default_lambda_grid(X, y, weights, size=config.grid_size, ratio=config.grid_ratio,
                               ridge_jitter=config.fit.ridge_jitter)
    sigma2 = example.sigma ** 2 if config.true_sigma and config.criterion == "prec" else None

    result = select_lambda(X, y, weights, ScadParams(0.0, config.a), grid,
                           config.criterion, GammaSpec.parse(config.gamma), sigma2,
                           config.fit, basis=basis)
    fit = result.best_fit
    return ReplicateResult(
        seed=seed,
        mse=mse(fit, example, x),
        knots_selected=fit.n_active_knots,
        iterations=fit.iterations,
        best_lambda=result.best_lambda,
        initial_knots=basis.knots,
        active_knots=tuple(int(i) for i in fit.active_knots),
    )


def run_replicate(job) -> ReplicateResult:
    """Worker entry point; module level so ProcessPoolExecutor can pickle it."""
    example, config, seed = job
    try:
        return fit_replicate(example, config, seed)
    except (SplineError, linalg.LinAlgError) as e:
        logger.warning("replicate with seed %d failed: %s", seed, e)
        return ReplicateResult(seed=seed, error=str(e))


@dataclass
class StudySummary:
    """Median and IQR of MSE x 1000 plus knot-selection tallies over replicates."""
    example: ExampleSpec
    config: StudyConfig
    results: list[ReplicateResult]
    median_mse_x1000: float
    iqr_mse_x1000: float
    q1_mse_x1000: float
    q3_mse_x1000: float
    knot_frequency: np.ndarray
    knot_locations: np.ndarray
    knot_count_histogram: dict[int, int]
    failures: int

    @property
    def seeds(self) -> list[int]:
        return [r.seed for r in self.results]

    @property
    def replicates(self) -> int:
        return len(self.results) - self.failures

    @classmethod
    def from_results(cls, example: ExampleSpec, config: StudyConfig,
                     results: list[ReplicateResult]) -> "StudySummary":
        results = sorted(results, key=lambda r: r.seed)
        good = [r for r in results if not r.failed]
        failures = len(results) - len(good)
        if not good:
            raise NumericalError(f"all {len(results)} replicates failed")
        if failures:
            logger.warning("%d of %d replicates failed and were excluded",
                           failures, len(results))

        scaled = np.array([r.mse for r in good]) * 1000.0
        q1, median, q3 = np.percentile(scaled, [25, 50, 75])

        width = max(len(r.initial_knots) for r in good)
        frequency = np.zeros(width, dtype=int)
        locations = np.full((len(good), width), np.nan)
        for row, r in enumerate(good):
            frequency[list(r.active_knots)] += 1
            locations[row, :len(r.initial_knots)] = r.initial_knots
        counts = np.bincount([r.knots_selected for r in good])
        histogram = {int(c): int(m) for c, m in enumerate(counts) if m}

        return cls(
            example=example,
            config=config,
            results=results,
            median_mse_x1000=float(median),
            iqr_mse_x1000=float(q3 - q1),
            q1_mse_x1000=float(q1),
            q3_mse_x1000=float(q3),
            knot_frequency=frequency,
            knot_locations=np.nanmean(locations, axis=0),
            knot_count_histogram=histogram,
            failures=failures,
        )

    def to_dict(self) -> dict:
        return {
            "example": self.example.id,
            "n": self.example.n,
            "sigma": self.example.sigma,
            "config": self.config.to_dict(),
            "replicates": self.replicates,
            "failures": self.failures,
            "seeds": self.seeds,
            "median_mse_x1000": self.median_mse_x1000,
            "iqr_mse_x1000": self.iqr_mse_x1000,
            "q1_mse_x1000": self.q1_mse_x1000,
            "q3_mse_x1000": self.q3_mse_x1000,
            "knot_frequency": [int(f) for f in self.knot_frequency],
            "knot_count_histogram": {str(k): v for k, v in self.knot_count_histogram.items()},
        }

    def replicate_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "seed": [r.seed for r in self.results],
            "mse": [r.mse for r in self.results],
            "knots_selected": [r.knots_selected for r in self.results],
            "iterations": [r.iterations for r in self.results],
            "best_lambda": [r.best_lambda for r in self.results],
            "error": [r.error or "" for r in self.results],
        })

    def knot_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "knot_index": np.arange(1, self.knot_frequency.size + 1),
            "knot_location": self.knot_locations,
            "frequency": self.knot_frequency,
        })

    def write(self, output_dir: Path, stem: Optional[str] = None) -> list[Path]:
        """Write <stem>_replicates.csv, <stem>_knots.csv and <stem>_summary.json."""
        output_dir = Path(output_dir)
        output_dir.mkdir(parents=True, exist_ok=True)
        stem = stem or self.stem
        paths = [output_dir / f"{stem}_replicates.csv",
                 output_dir / f"{stem}_knots.csv",
                 output_dir / f"{stem}_summary.json"]
        self.replicate_frame().to_csv(paths[0], index=False, float_format="%.17g")
        self.knot_frame().to_csv(paths[1], index=False, float_format="%.17g")
        paths[2].write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")
        return paths

    @property
    def stem(self) -> str:
        c = self.config
        k = c.initial_knots(self.example.n)
        gamma = c.gamma_label.replace("(", "").replace(")", "").replace("/", "_")
        return f"example{self.example.id}_{c.criterion}_g{gamma}_k{k}_p{c.order}_{c.design}"


def run_study(example, config: StudyConfig, replicates: Optional[int] = None,
              base_seed: int = 0, workers: int = 1) -> StudySummary:
    """
    Run `replicates` datasets with seeds base_seed, base_seed + 1, ...

    Results are keyed by seed, so the summary does not depend on `workers`.
    """
    if not isinstance(example, ExampleSpec):
        example = get_example(example)
    replicates = example.replicates if replicates is None else int(replicates)
    if replicates < 1:
        raise DomainError("replicates must be >= 1")

    jobs = [(example, config, base_seed + i) for i in range(replicates)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_replicate, jobs, chunksize=max(1, replicates // (4 * workers))))
    else:
        results = [run_replicate(job) for job in jobs]
    return StudySummary.from_results(example, config, results)


LIST_FIELDS = ("example", "knots", "criterion", "gamma", "order")


def expand_study(entries: list[dict], defaults: Optional[dict] = None,
                 overrides: Optional[dict] = None) -> list[tuple[int, int, StudyConfig]]:
    """
    Expand study entries into (example id, replicates, config) cells.

    Any of example, knots, criterion, gamma and order may be a list; every
    combination becomes a cell. Entries override `defaults` and `overrides`
    beat both.
    """
    defaults = defaults or {}
    overrides = overrides or {}
    cells = []
    for entry in entries:
        merged = {**defaults, **entry, **overrides}
        choices = [v if isinstance(v := merged.get(name), list) else [v]
                   for name in LIST_FIELDS]
        for combo in itertools.product(*choices):
            cell = {**merged, **dict(zip(LIST_FIELDS, combo))}
            example = get_example(cell.get("example"))
            replicates = int(cell.get("replicates") or example.replicates)
            cells.append((example.id, replicates, StudyConfig.from_dict(cell)))
    return cells


def run_grid(entries: list[dict], base_seed: int, workers: int = 1,
             defaults: Optional[dict] = None) -> list[StudySummary]:
    """Run every cell of a study grid with the same seeds."""
    summaries = []
    for example_id, replicates, config in expand_study(entries, defaults):
        summaries.append(run_study(example_id, config, replicates, base_seed, workers))
    return summaries

