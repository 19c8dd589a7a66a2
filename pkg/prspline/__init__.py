"""Penalized regression splines with SCAD knot selection."""

from .errors import SplineError, DomainError, DimensionError, NumericalError
from .basis import (
    BasisSpec,
    DesignMatrix,
    lmax,
    min_initial_knots,
    place_knots,
    design_matrix,
    predict,
)
from .penalty import (
    ScadParams,
    Penalty,
    ScadPenalty,
    scad_value,
    scad_derivative,
    scad_threshold,
)
from .solver import (
    FitConfig,
    PenalizedFit,
    penalty_weights,
    initial_coefficients,
    objective,
    lqa_fit,
)
from .selection import (
    GammaSpec,
    SelectionResult,
    resolve_gamma,
    effective_params,
    mgcv_score,
    prec_score,
    default_lambda_grid,
    select_lambda,
)
from .additive import (
    AdditiveSpec,
    AdditiveFit,
    additive_design,
    default_additive_spec,
    fit_additive,
    predict_additive,
)
from .benchmarks import ExampleSpec, EXAMPLES, get_example, generate_dataset, mse

__all__ = [
    'SplineError',
    'DomainError',
    'DimensionError',
    'NumericalError',
    'BasisSpec',
    'DesignMatrix',
    'lmax',
    'min_initial_knots',
    'place_knots',
    'design_matrix',
    'predict',
    'ScadParams',
    'Penalty',
    'ScadPenalty',
    'scad_value',
    'scad_derivative',
    'scad_threshold',
    'FitConfig',
    'PenalizedFit',
    'penalty_weights',
    'initial_coefficients',
    'objective',
    'lqa_fit',
    'GammaSpec',
    'SelectionResult',
    'resolve_gamma',
    'effective_params',
    'mgcv_score',
    'prec_score',
    'default_lambda_grid',
    'select_lambda',
    'AdditiveSpec',
    'AdditiveFit',
    'additive_design',
    'default_additive_spec',
    'fit_additive',
    'predict_additive',
    'ExampleSpec',
    'EXAMPLES',
    'get_example',
    'generate_dataset',
    'mse',
]
