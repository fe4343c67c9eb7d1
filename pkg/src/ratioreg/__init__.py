"""Ratio estimation for two proportional signals under Gaussian measurement noise."""

from .alignment import (
    AlignmentReport,
    InterpolatedSeries,
    SampleSeries,
    interpolate_disjoint,
    match_nearest_unique,
    pair_interpolated,
    pair_nearest_unique,
    pair_same_grid,
)
from .errors import (
    AlignmentError,
    CapacityError,
    CsvFormatError,
    DegenerateDenominatorError,
    ExtrapolationError,
    InputError,
    PremiseViolationError,
    RatioRegError,
)
from .estimators import (
    EstimatorKind,
    PairedObservations,
    Provenance,
    RatioEstimate,
    VarianceEstimate,
    Verdict,
    chebyshev_conditioning_bound,
    denominator,
    estimate_ratio,
    estimate_ratio_mismatched,
    estimate_ratio_naive,
    estimate_ratio_plugin,
    estimate_variance,
    norm_sq_moments,
    numerator_mse_exact,
    variance_estimator_mse_exact,
)
from .montecarlo import (
    HeavyTailReport,
    MeanFunction,
    ModelParams,
    ScalingFit,
    TrialReport,
    VarianceTrialReport,
    fit_power_law,
    heavy_tail_diagnostic,
    mismatched_time_experiment,
    offset_schedule,
    run_trials,
    run_variance_trials,
    scaling_fit,
    simulate,
)

__version__ = "0.1.0"
