"""Copula density estimation with constrained, penalized tensor-product linear splines."""
from .basis import GramMatrix, KnotGrid, TensorBasis, gram_1d, gram_tensor, hat_1d, integral_1d
from .copulas import CopulaModel, l2_error
from .estimator import (CopulaDensityEstimate, SplineCopulaDensity, build_constraints,
                        fit_copula_density)
from .exceptions import (ConfigurationError, ConvergenceError, CopsplineError, DimensionError,
                         DomainError, EvaluationError, ParseError, UnsupportedOperationError)
from .moments import (EmpiricalCDF, ecdf_column, moment_vector, population_moments,
                      pseudo_observations)
from .penalty import BivariateMarginals, GridMarginal, PenaltyForm, assemble_penalty, eval_penalty
from .qp import QuadraticProgram, QpSolution, check_kkt, solve
from .quadrature import QuadratureRule

__version__ = "0.1.0"

__all__ = [
    "BivariateMarginals",
    "ConfigurationError",
    "ConvergenceError",
    "CopsplineError",
    "CopulaDensityEstimate",
    "CopulaModel",
    "DimensionError",
    "DomainError",
    "EmpiricalCDF",
    "EvaluationError",
    "GramMatrix",
    "GridMarginal",
    "KnotGrid",
    "ParseError",
    "PenaltyForm",
    "QpSolution",
    "QuadraticProgram",
    "QuadratureRule",
    "SplineCopulaDensity",
    "TensorBasis",
    "UnsupportedOperationError",
    "assemble_penalty",
    "build_constraints",
    "check_kkt",
    "ecdf_column",
    "eval_penalty",
    "fit_copula_density",
    "gram_1d",
    "gram_tensor",
    "hat_1d",
    "integral_1d",
    "l2_error",
    "moment_vector",
    "population_moments",
    "pseudo_observations",
    "solve",
]
