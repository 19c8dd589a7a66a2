#!/usr/bin/env python3
"""Command-line front end: fit, select, predict, simulate, additive-fit and report."""

import argparse
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd
import yaml
from scipy import linalg

import db
import report
import simulate
from prspline import (AdditiveFit, BasisSpec, FitConfig, GammaSpec, NumericalError,
                      PenalizedFit, ScadParams, SplineError, default_lambda_grid,
                      design_matrix, fit_additive, default_additive_spec, get_example,
                      lqa_fit, min_initial_knots, penalty_weights, place_knots,
                      predict_additive, select_lambda)

# Used when config.yaml is missing or leaves a value out.
DEFAULTS = {
    "order": 3,
    "alpha": 0.1,
    "divisor": 3.0,
    "a": 3.7,
    "criterion": "mgcv",
    "gamma": "2.5",
    "grid_size": 40,
    "grid_ratio": 1e-3,
    "workers": 1,
    "output_dir": "results",
    "fit": {},
}

# Flags that, when given, override every cell of a named study.
STUDY_FLAGS = ("order", "knots", "alpha", "divisor", "a", "criterion", "gamma", "grid_size")

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NUMERICAL = 2
EXIT_FLAGS = 3


class InputError(Exception):
    """An input file is missing, unreadable or lacks required columns."""


class FlagError(Exception):
    """Command-line flags are missing, malformed or inconsistent."""


class ExitCodeParser(argparse.ArgumentParser):
    """ArgumentParser that raises FlagError instead of exiting with status 2."""

    def error(self, message):
        raise FlagError(message)


def load_config(path: Optional[Path] = None) -> dict:
    """Load configuration from config.yaml."""
    config_path = Path(path) if path else Path(__file__).parent / "config.yaml"

    if not config_path.exists():
        print(f"Warning: config file not found at {config_path}", file=sys.stderr)
        return {"defaults": dict(DEFAULTS), "studies": {}}

    try:
        with open(config_path) as f:
            data = yaml.safe_load(f) or {}
    except yaml.YAMLError as e:
        raise InputError(f"cannot parse {config_path}: {e}") from None

    defaults = dict(DEFAULTS)
    defaults.update(data.get("defaults") or {})
    return {"defaults": defaults, "studies": data.get("studies") or {}}


@dataclass
class RunConfig:
    """Resolved settings for one invocation."""
    subcommand: str
    input: Optional[Path] = None
    output: Optional[Path] = None
    curve: Optional[Path] = None
    model: Optional[Path] = None
    points: Optional[Path] = None
    output_dir: Path = Path("results")
    order: int = 3
    knots: Optional[int] = None
    alpha: float = 0.1
    divisor: float = 3.0
    a: float = 3.7
    criterion: str = "mgcv"
    gamma: str = "2.5"
    lam: Optional[float] = None
    grid_min: Optional[float] = None
    grid_max: Optional[float] = None
    grid_size: int = 40
    grid_ratio: float = 1e-3
    sigma2: Optional[float] = None
    seed: Optional[int] = None
    replicates: Optional[int] = None
    example: Optional[int] = None
    equispaced: bool = False
    true_sigma: bool = False
    workers: int = 1
    study: Optional[str] = None
    db: Optional[Path] = None
    fit: FitConfig = field(default_factory=FitConfig)
    studies: dict = field(default_factory=dict)
    defaults: dict = field(default_factory=dict)
    explicit: dict = field(default_factory=dict)

    @classmethod
    def from_args(cls, args: argparse.Namespace, config: dict) -> "RunConfig":
        """Flags override config.yaml defaults, which override built-in defaults."""
        defaults = config.get("defaults", DEFAULTS)

        def pick(name):
            value = getattr(args, name, None)
            return defaults.get(name, DEFAULTS.get(name)) if value is None else value

        knots = getattr(args, "knots", None)
        if knots is not None and knots != "auto":
            try:
                knots = int(knots)
            except ValueError:
                raise FlagError(f"--knots must be an integer or 'auto', got {knots!r}") from None
            if knots < 1:
                raise FlagError("--knots must be >= 1")
        if knots == "auto":
            knots = None

        try:
            gamma = GammaSpec.parse(pick("gamma")).label
            fit = FitConfig.from_dict(defaults.get("fit"))
        except SplineError as e:
            raise FlagError(str(e)) from None

        run_config = cls(
            subcommand=args.subcommand,
            input=getattr(args, "input", None),
            output=getattr(args, "output", None),
            curve=getattr(args, "curve", None),
            model=getattr(args, "model", None),
            points=getattr(args, "points", None),
            output_dir=Path(pick("output_dir")),
            order=int(pick("order")),
            knots=knots,
            alpha=float(pick("alpha")),
            divisor=float(pick("divisor")),
            a=float(pick("a")),
            criterion=str(pick("criterion")).lower(),
            gamma=gamma,
            lam=getattr(args, "lam", None),
            grid_min=getattr(args, "grid_min", None),
            grid_max=getattr(args, "grid_max", None),
            grid_size=int(pick("grid_size")),
            grid_ratio=float(pick("grid_ratio")),
            sigma2=getattr(args, "sigma2", None),
            seed=getattr(args, "seed", None),
            replicates=getattr(args, "replicates", None),
            example=getattr(args, "example", None),
            equispaced=bool(getattr(args, "equispaced", False)),
            true_sigma=bool(getattr(args, "true_sigma", False)),
            workers=int(pick("workers")),
            study=getattr(args, "study", None),
            db=getattr(args, "db", None),
            fit=fit,
            studies=config.get("studies", {}),
            defaults=defaults,
        )
        run_config.explicit = {
            name: getattr(run_config, name) for name in STUDY_FLAGS
            if getattr(args, name, None) is not None
        }
        run_config.validate()
        return run_config

    def validate(self):
        if self.order < 1:
            raise FlagError("--order must be >= 1")
        if self.criterion not in ("mgcv", "prec"):
            raise FlagError(f"--criterion must be mgcv or prec, got {self.criterion!r}")
        if self.lam is not None and self.lam < 0:
            raise FlagError("--lambda must be >= 0")
        if self.workers < 1:
            raise FlagError("--workers must be >= 1")
        if (self.grid_min is None) != (self.grid_max is None):
            raise FlagError("--grid-min and --grid-max go together")
        if self.grid_min is not None and not 0 < self.grid_min < self.grid_max:
            raise FlagError("need 0 < --grid-min < --grid-max")
        if self.sigma2 is not None and self.sigma2 <= 0:
            raise FlagError("--sigma2 must be positive")
        if self.subcommand == "simulate":
            if self.seed is None:
                raise FlagError("simulate requires --seed")
            if self.study is None and self.example is None:
                raise FlagError("simulate requires --example or --study")
            if self.replicates is not None and self.replicates < 1:
                raise FlagError("--replicates must be >= 1")


# --- input and output ---------------------------------------------------------

def read_table(path: Path, required: tuple[str, ...] = ()) -> pd.DataFrame:
    """Read a numeric CSV with a header row."""
    if path is None:
        raise FlagError("an input file is required")
    path = Path(path)
    if not path.exists():
        raise InputError(f"input file not found: {path}")
    try:
        frame = pd.read_csv(path, float_precision="round_trip")
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise InputError(f"cannot parse {path}: {e}") from None

    frame.columns = [str(c).strip() for c in frame.columns]
    missing = [c for c in required if c not in frame.columns]
    if missing:
        raise InputError(f"{path} is missing column(s): {', '.join(missing)}")
    try:
        frame = frame.astype(float)
    except ValueError:
        raise InputError(f"{path} contains non-numeric values") from None
    if frame.empty or frame.isna().any().any():
        raise InputError(f"{path} has no rows or contains missing values")
    return frame


def covariate_columns(frame: pd.DataFrame) -> list[str]:
    columns = [c for c in frame.columns if c != "y"]
    if not columns:
        raise InputError("no covariate columns besides y")
    return columns


def write_csv(frame: pd.DataFrame, path: Path):
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format="%.17g")


def write_json(data: dict, path: Path):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def read_model(path: Path) -> dict:
    if path is None:
        raise FlagError("--model is required")
    path = Path(path)
    if not path.exists():
        raise InputError(f"model file not found: {path}")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise InputError(f"cannot parse {path}: {e}") from None


def _outputs(config: RunConfig) -> tuple[Path, Path]:
    if config.output is None:
        raise FlagError("--output is required")
    output = Path(config.output)
    curve = Path(config.curve) if config.curve else output.with_name(output.stem + "_curve.csv")
    return output, curve


# --- subcommands --------------------------------------------------------------

def univariate_basis(x: np.ndarray, config: RunConfig) -> BasisSpec:
    k = config.knots or min_initial_knots(x.size, config.alpha, config.divisor)
    return BasisSpec(config.order, place_knots(x, k))


def lambda_grid(config: RunConfig, X, y, weights) -> np.ndarray:
    if config.grid_min is not None:
        return np.r_[0.0, np.geomspace(config.grid_min, config.grid_max, config.grid_size)]
    return default_lambda_grid(X, y, weights, size=config.grid_size, ratio=config.grid_ratio,
                               ridge_jitter=config.fit.ridge_jitter)


def cmd_fit(config: RunConfig) -> int:
    """Fit at a fixed lambda."""
    if config.lam is None:
        raise FlagError("fit requires --lambda")
    output, curve = _outputs(config)
    frame = read_table(config.input, ("x", "y"))
    x, y = frame["x"].to_numpy(), frame["y"].to_numpy()

    basis = univariate_basis(x, config)
    X = design_matrix(x, basis)
    weights = penalty_weights(X)
    fit = lqa_fit(X, y, ScadParams(config.lam, config.a), weights, config.fit, basis=basis)

    write_json({"model": "univariate", **fit.to_dict()}, output)
    write_csv(pd.DataFrame({"x": x, "f_hat": fit.predict(x)}), curve)
    print(f"  {basis.n_knots} initial knots, {fit.n_active_knots} kept at lambda={config.lam:g}")
    print(f"  Model: {output}")
    print(f"  Curve: {curve}")
    return EXIT_OK


def cmd_select(config: RunConfig) -> int:
    """Choose lambda by MGCV or PREC and fit there."""
    output, curve = _outputs(config)
    frame = read_table(config.input, ("x", "y"))
    x, y = frame["x"].to_numpy(), frame["y"].to_numpy()

    basis = univariate_basis(x, config)
    X = design_matrix(x, basis)
    weights = penalty_weights(X)
    grid = lambda_grid(config, X, y, weights)
    result = select_lambda(X, y, weights, ScadParams(0.0, config.a), grid, config.criterion,
                           GammaSpec.parse(config.gamma), config.sigma2, config.fit,
                           config.workers, basis=basis)
    fit = result.best_fit

    write_json({"model": "univariate", **fit.to_dict(), "selection": result.to_dict()}, output)
    write_csv(pd.DataFrame({"x": x, "f_hat": fit.predict(x)}), curve)
    print(f"  {config.criterion.upper()} with gamma={result.gamma_label}: "
          f"lambda={result.best_lambda:.6g}, {fit.n_active_knots} of {basis.n_knots} knots kept")
    print(f"  Model: {output}")
    print(f"  Curve: {curve}")
    return EXIT_OK


def cmd_predict(config: RunConfig) -> int:
    """Evaluate a saved univariate or additive model at new points."""
    if config.output is None:
        raise FlagError("--output is required")
    data = read_model(config.model)

    try:
        if data.get("model") == "additive" or "components" in data:
            fit = AdditiveFit.from_dict(data)
            frame = read_table(config.points)
            columns = covariate_columns(frame)
            values = predict_additive(fit, frame[columns].to_numpy())
            result = frame[columns].copy()
        else:
            fit = PenalizedFit.from_dict(data)
            frame = read_table(config.points, ("x",))
            values = fit.predict(frame["x"].to_numpy())
            result = frame[["x"]].copy()
    except (KeyError, TypeError) as e:
        raise InputError(f"model file lacks a required entry: {e}") from None

    result["f_hat"] = values
    write_csv(result, Path(config.output))
    print(f"  {len(result)} predictions written to {config.output}")
    return EXIT_OK


def cmd_additive_fit(config: RunConfig) -> int:
    """Fit an additive model under one global lambda."""
    output, curve = _outputs(config)
    frame = read_table(config.input, ("y",))
    columns = covariate_columns(frame)
    data, y = frame[columns].to_numpy(), frame["y"].to_numpy()

    spec = default_additive_spec(data, config.order, config.alpha, config.divisor, config.knots)
    grid = None
    if config.grid_min is not None:
        grid = np.r_[0.0, np.geomspace(config.grid_min, config.grid_max, config.grid_size)]
    fit = fit_additive(data, y, spec, ScadParams(0.0, config.a), config.fit, config.criterion,
                       GammaSpec.parse(config.gamma), config.lam, grid, config.sigma2,
                       config.workers)

    model = fit.to_dict()
    if fit.selection is not None:
        model["selection"] = fit.selection.to_dict()
    write_json(model, output)
    fitted = frame[columns].copy()
    fitted["f_hat"] = fit.fitted_values
    write_csv(fitted, curve)
    kept = ", ".join(f"{name}: {n}" for name, n in zip(columns, fit.n_active_knots))
    print(f"  lambda={fit.diagnostics['lambda']:.6g}; knots kept {kept}")
    print(f"  Model: {output}")
    print(f"  Fitted values: {curve}")
    return EXIT_OK


def cmd_simulate(config: RunConfig) -> int:
    """Run a replicate study or a named study grid from config.yaml."""
    if config.study is not None:
        if config.study not in config.studies:
            raise FlagError(f"unknown study {config.study!r}; "
                            f"available: {', '.join(sorted(config.studies)) or 'none'}")
        base = {k: v for k, v in config.defaults.items() if k not in ("workers", "output_dir")}
        overrides = dict(config.explicit)
        if config.equispaced:
            overrides["equispaced"] = True
        if config.true_sigma:
            overrides["true_sigma"] = True
        try:
            cells = simulate.expand_study(config.studies[config.study], base, overrides)
        except (SplineError, TypeError, ValueError) as e:
            raise InputError(f"study {config.study!r} is malformed: {e}") from None
        if config.replicates:
            cells = [(e, config.replicates, s) for e, _, s in cells]
    else:
        study = simulate.StudyConfig(
            knots=config.knots, order=config.order, criterion=config.criterion,
            gamma=config.gamma, a=config.a, alpha=config.alpha, divisor=config.divisor,
            grid_size=config.grid_size, grid_ratio=config.grid_ratio,
            equispaced=config.equispaced, true_sigma=config.true_sigma, fit=config.fit,
        )
        example = get_example(config.example)
        cells = [(example.id, config.replicates or example.replicates, study)]

    print(f"\nRunning {len(cells)} study cell(s) with base seed {config.seed}...")
    summaries = []
    for example_id, replicates, study in cells:
        example = get_example(example_id)
        print(f"  Example {example_id}, {study.criterion.upper()} gamma={study.gamma_label}, "
              f"{study.initial_knots(example.n)} knots, {replicates} replicates...",
              end=" ", flush=True)
        summary = simulate.run_study(example, study, replicates, config.seed, config.workers)
        paths = summary.write(config.output_dir)
        print(f"median {summary.median_mse_x1000:.2f} (IQR {summary.iqr_mse_x1000:.2f})")
        if summary.failures:
            print(f"    {summary.failures} replicate(s) failed")
        if config.db is not None:
            db.init_db(config.db)
            added = db.insert_summary(summary, config.db)
            print(f"    {added} new replicate(s) stored in {config.db}")
        summaries.append((summary, paths))

    print("\n" + "=" * 50)
    print(f"Studies complete: {len(summaries)} cell(s)")
    for summary, paths in summaries:
        print(f"  {paths[2]}: median {summary.median_mse_x1000:.2f}, "
              f"IQR {summary.iqr_mse_x1000:.2f}")
    print("=" * 50)
    return EXIT_OK


def cmd_report(config: RunConfig) -> int:
    if config.db is not None and not Path(config.db).exists():
        raise InputError(f"study database not found: {config.db}")
    output = Path(config.output) if config.output else config.output_dir / "report.html"
    report.generate_report(config.db, output)
    return EXIT_OK


HANDLERS = {
    "fit": cmd_fit,
    "select": cmd_select,
    "predict": cmd_predict,
    "simulate": cmd_simulate,
    "additive-fit": cmd_additive_fit,
    "report": cmd_report,
}


def run(config: RunConfig) -> int:
    """Run one subcommand and map failures to exit codes."""
    try:
        return HANDLERS[config.subcommand](config)
    except FlagError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_FLAGS
    except (NumericalError, linalg.LinAlgError) as e:
        print(f"Error: numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (InputError, SplineError, OSError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_INPUT


# --- argument parsing ---------------------------------------------------------

def _add_spline_flags(parser):
    parser.add_argument("--order", type=int, help="Spline order p (3 = quadratic)")
    parser.add_argument("--knots", help="Initial knot count, or 'auto' (default)")
    parser.add_argument("--alpha", type=float, help="Run probability for the knot-count rule")
    parser.add_argument("--divisor", type=float, help="Divisor of the knot-count rule")
    parser.add_argument("--a", type=float, help="SCAD shape parameter")


def _add_selection_flags(parser):
    parser.add_argument("--criterion", choices=["mgcv", "prec"], help="Selection criterion")
    parser.add_argument("--gamma", help="Inflation factor: a number or ln(n)/2, ln(n), ln(k)/2, ln(k)")
    parser.add_argument("--grid-size", type=int, help="Number of positive grid values")
    parser.add_argument("--workers", type=int, help="Worker processes")


def _add_data_grid_flags(parser):
    # single-dataset subcommands only
    parser.add_argument("--grid-min", type=float, help="Smallest positive lambda of the grid")
    parser.add_argument("--grid-max", type=float, help="Largest lambda of the grid")
    parser.add_argument("--sigma2", type=float, help="Error variance for PREC")


def build_parser() -> ExitCodeParser:
    parser = ExitCodeParser(description="Penalized regression splines with SCAD knot selection")
    parser.add_argument("--config", type=Path, help="Configuration file (default: config.yaml)")
    parser.add_argument("--verbose", "-v", action="store_true", help="Debug logging")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("fit", help="Fit at a fixed lambda")
    p.add_argument("--input", "-i", type=Path, required=True, help="CSV with columns x,y")
    p.add_argument("--output", "-o", type=Path, required=True, help="Model JSON")
    p.add_argument("--curve", type=Path, help="Fitted curve CSV (x,f_hat)")
    p.add_argument("--lambda", dest="lam", type=float, required=True, help="Penalty level")
    _add_spline_flags(p)

    p = sub.add_parser("select", help="Select lambda by MGCV or PREC")
    p.add_argument("--input", "-i", type=Path, required=True, help="CSV with columns x,y")
    p.add_argument("--output", "-o", type=Path, required=True, help="Model JSON")
    p.add_argument("--curve", type=Path, help="Fitted curve CSV (x,f_hat)")
    _add_spline_flags(p)
    _add_selection_flags(p)
    _add_data_grid_flags(p)

    p = sub.add_parser("predict", help="Evaluate a saved model")
    p.add_argument("--model", "-m", type=Path, required=True, help="Model JSON")
    p.add_argument("--points", "-p", type=Path, required=True,
                   help="CSV with column x (additive models: x1,...,xJ)")
    p.add_argument("--output", "-o", type=Path, required=True, help="Predictions CSV")

    p = sub.add_parser("additive-fit", help="Fit an additive model")
    p.add_argument("--input", "-i", type=Path, required=True, help="CSV with columns x1,...,xJ,y")
    p.add_argument("--output", "-o", type=Path, required=True, help="Model JSON")
    p.add_argument("--curve", type=Path, help="Fitted values CSV")
    p.add_argument("--lambda", dest="lam", type=float, help="Fixed penalty level (skips selection)")
    _add_spline_flags(p)
    _add_selection_flags(p)
    _add_data_grid_flags(p)

    p = sub.add_parser("simulate", help="Run replicate studies on the benchmark signals")
    p.add_argument("--example", type=int, choices=[1, 2, 3, 4], help="Benchmark signal")
    p.add_argument("--study", help="Named study grid from config.yaml")
    p.add_argument("--replicates", type=int, help="Replicates (default: per example)")
    p.add_argument("--seed", type=int, help="Base seed (required)")
    p.add_argument("--equispaced", action="store_true", help="Design points (i - 1/2)/n")
    p.add_argument("--true-sigma", action="store_true", help="Give PREC the true error variance")
    p.add_argument("--output-dir", type=Path, help="Directory for CSV and JSON summaries")
    p.add_argument("--db", type=Path, help="Also store replicates in this sqlite file")
    _add_spline_flags(p)
    _add_selection_flags(p)

    p = sub.add_parser("report", help="HTML tables of stored studies")
    p.add_argument("--db", type=Path, help="Study database (default: studies.db)")
    p.add_argument("--output", "-o", type=Path, help="Report HTML")

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(
            level=logging.DEBUG if args.verbose else logging.WARNING,
            format="%(levelname)s %(name)s: %(message)s",
        )
        config = RunConfig.from_args(args, load_config(args.config))
    except FlagError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_FLAGS
    except InputError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_INPUT

    return run(config)


if __name__ == "__main__":
    sys.exit(main())
