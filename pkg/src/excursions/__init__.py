"""Stationary random fields, excursion-set geometry and CLT verification.

Modules
-------
models       covariance families, field specs, observation windows
simulate     circulant-embedding Gaussian, shot noise, white noise samplers
geometry     excursion volume, perimeter (marching squares), crossings
asymptotics  limit-theorem variances, covariance matrices, surface means
inference    block covariance estimator and the chi-square Gaussianity test
harness      Monte Carlo experiments with machine-readable reports
gridio       XGRD grid files and versioned JSON reports
"""

from ._kernels import backend as kernel_backend
from .asymptotics import (
    CovMatrix,
    QuadratureError,
    VarianceReport,
    asymptotic_cov_matrix,
    asymptotic_variance,
    asymptotic_variance_lattice,
    gaussian_indicator_cov,
    lattice_cov_matrix,
    lattice_level_covariance,
    level_covariance,
    mean_boundary_intrinsic_volume,
    mean_surface_area,
    windowed_variance,
    windowed_variance_lattice,
)
from .geometry import (
    ExcursionMeasurement,
    crossing_count,
    excursion_perimeter,
    excursion_volume,
    excursion_volumes,
    measure,
    sojourn_volume,
)
from .gridio import GridFormatError, read_grid, read_report, write_grid, write_report
from .harness import (
    ExperimentConfig,
    MCReport,
    load_experiment_config,
    parse_experiment_config,
    run_experiment,
)
from .inference import (
    DegenerateLevelError,
    EstimatorConfig,
    IllConditionedError,
    TestReport,
    default_levels,
    estimate_cov_matrix,
    gaussianity_statistic,
    gaussianity_test,
)
from .models import (
    CovarianceModel,
    GaussianFieldSpec,
    GridWindow,
    NonSmoothModelError,
    ShotNoiseSpec,
    cov_at,
    second_spectral_moment,
    tail_prob,
)
from .simulate import (
    EmbeddingError,
    FieldRealization,
    SeedSpec,
    simulate_gaussian,
    simulate_shot_noise,
    simulate_white_noise,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
