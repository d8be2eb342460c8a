"""Phase retrieval via MSE-optimal linear estimation.

Recovers a signal from squared-magnitude linear measurements by solving for
the affine estimator that is exactly MSE-optimal under a Gaussian prior,
with closed-form error prediction, iterative re-centering, a spectral
initializer, and classical baselines for comparison.
"""

from .baselines import (
    BaselineOptions,
    fienup,
    gerchberg_saxton,
    intensity_loss,
    wirtinger_flow,
)
from .exceptions import (
    ConfigError,
    DegenerateCovarianceError,
    DegenerateInitializerError,
    DimensionMismatchError,
    FieldMismatchError,
    InconsistentMomentsError,
    PhaselinError,
    PowerIterationError,
    SingularObservationCovarianceError,
    StepSizeError,
    UndefinedMetricError,
    ZeroInitialGuessError,
)
from .harness import (
    ExperimentConfig,
    MomentReport,
    MseCheckResult,
    ResultRecord,
    mse_check,
    parse_config,
    run_sweep,
    validate_moments,
    write_sweep_csv,
)
from .io import (
    format_matrix,
    load_matrix,
    load_vector,
    save_matrix,
    save_vector,
)
from .iterative import (
    FixedMatrix,
    FixedScaledIdentity,
    IterationRecord,
    IterationTrace,
    IterativeOptions,
    iterative_phaselin,
)
from .linear import (
    AffineEstimator,
    FoldedNormalMoments,
    PhasedMoments,
    build_estimator,
    cross_covariance,
    estimate,
    folded_normal_moments,
    observation_covariance,
    observation_mean,
    phased_moments,
    predicted_mse,
)
from .metrics import NmseResult, empirical_mse, n_mse
from .model import (
    NoiseSpec,
    ScalarField,
    SignalPrior,
    make_gaussian_matrix,
    measure,
    psd_factor,
    random_psd,
    sample_signal,
    spawn_rng,
)
from .spectral import SpectralOptions, spectral_initializer

__version__ = "0.1.0"

__all__ = [
    "AffineEstimator",
    "BaselineOptions",
    "ConfigError",
    "DegenerateCovarianceError",
    "DegenerateInitializerError",
    "DimensionMismatchError",
    "ExperimentConfig",
    "FieldMismatchError",
    "Fienup",
    "FixedMatrix",
    "FixedScaledIdentity",
    "FoldedNormalMoments",
    "GerchbergSaxton",
    "InconsistentMomentsError",
    "IterationRecord",
    "IterationTrace",
    "IterativeOptions",
    "IterativePhaseLin",
    "MomentReport",
    "MseCheckResult",
    "NmseResult",
    "NoiseSpec",
    "PhasedMoments",
    "PhaseLin",
    "PhaselinError",
    "PowerIterationError",
    "ResultRecord",
    "ScalarField",
    "SignalPrior",
    "SingularObservationCovarianceError",
    "SpectralInitializer",
    "SpectralOptions",
    "StepSizeError",
    "UndefinedMetricError",
    "WirtingerFlow",
    "ZeroInitialGuessError",
    "build_estimator",
    "cross_covariance",
    "empirical_mse",
    "estimate",
    "fienup",
    "folded_normal_moments",
    "format_matrix",
    "gerchberg_saxton",
    "intensity_loss",
    "iterative_phaselin",
    "load_matrix",
    "load_vector",
    "make_gaussian_matrix",
    "measure",
    "mse_check",
    "n_mse",
    "observation_covariance",
    "observation_mean",
    "parse_config",
    "phased_moments",
    "predicted_mse",
    "psd_factor",
    "random_psd",
    "run_sweep",
    "sample_signal",
    "save_matrix",
    "save_vector",
    "spawn_rng",
    "spectral_initializer",
    "validate_moments",
    "write_sweep_csv",
]

from .estimators import (  # noqa: E402  (imports sklearn; keep the light core importable first)
    Fienup as Fienup,
    GerchbergSaxton as GerchbergSaxton,
    IterativePhaseLin as IterativePhaseLin,
    PhaseLin as PhaseLin,
    SpectralInitializer as SpectralInitializer,
    WirtingerFlow as WirtingerFlow,
)
