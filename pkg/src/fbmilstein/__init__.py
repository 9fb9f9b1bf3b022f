"""Numerics for SDEs driven by multidimensional fractional Brownian motion.

The package provides exact grid sampling of fBm, discrete increment calculus
and Hoelder norms, Levy-area approximations with Chen-relation composition,
first- and second-order solvers (including an implementable Milstein-type
scheme whose area terms are half products of increments), pathwise error
metrics, and a harness reproducing the associated strong convergence rates.
"""

__version__ = "0.1.0"

from .errors import DomainError, EmbeddingError, ParameterError
from .fbm import (FbmPath, fbm_covariance, increment_autocovariance,
                  interpolate_linear, sample_fbm, sample_fbm_batch,
                  scaling_selfsimilarity_test, subsample, with_time_column)
from .increments import (GridFunction1, GridIncrement2, delta1,
                         delta2_evaluate, holder_norm_c1, holder_norm_c2)
from .levyarea import (LevyAreaGrid, area_cross_covariance_converged,
                       area_cross_covariance_quadrature, area_fine_reference,
                       area_linear_interpolant, area_over, area_product,
                       chen_defect)
from .metrics import AlignedPair, fit_loglog_rate, holder_error, sup_error_on_grid
from .schemes import (BUILTIN_FIELDS, Trajectory, VectorField, davie_milstein,
                      d_operator, euler, make_field, simplified_milstein,
                      wong_zakai_solve)
from .harness import (EulerDivergenceReport, ExperimentConfig, RateReport,
                      run_euler_divergence, run_holder_optimality,
                      run_levy_area_rate, run_scheme_convergence,
                      run_wongzakai_gap)

__all__ = [
    "__version__",
    "DomainError", "EmbeddingError", "ParameterError",
    "FbmPath", "fbm_covariance", "increment_autocovariance",
    "interpolate_linear", "sample_fbm", "sample_fbm_batch",
    "scaling_selfsimilarity_test", "subsample", "with_time_column",
    "GridFunction1", "GridIncrement2", "delta1", "delta2_evaluate",
    "holder_norm_c1", "holder_norm_c2",
    "LevyAreaGrid", "area_cross_covariance_converged",
    "area_cross_covariance_quadrature", "area_fine_reference",
    "area_linear_interpolant", "area_over", "area_product", "chen_defect",
    "AlignedPair", "fit_loglog_rate", "holder_error", "sup_error_on_grid",
    "BUILTIN_FIELDS", "Trajectory", "VectorField", "davie_milstein",
    "d_operator", "euler", "make_field", "simplified_milstein",
    "wong_zakai_solve",
    "EulerDivergenceReport", "ExperimentConfig", "RateReport",
    "run_euler_divergence", "run_holder_optimality", "run_levy_area_rate",
    "run_scheme_convergence", "run_wongzakai_gap",
]
