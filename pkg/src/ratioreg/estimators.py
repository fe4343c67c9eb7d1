"""Ratio and noise-variance estimators with their closed-form moments.

Model: ``x_i = r f(t_i) + z_i`` and ``y_i = f(t_i) + w_i`` with independent
Gaussian noise of variances ``sigma1_sq`` and ``sigma2_sq``.  The corrected
estimator divides the cross product by ``||y||^2 - n sigma2_sq``, an unbiased
estimate of ``||f||^2``, instead of by ``||y||^2``.

Every reduction goes through :func:`math.fsum`.  Elementwise products are
rounded once and then summed exactly, so results do not depend on the
order of the samples.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateDenominatorError, InputError

__all__ = [
    "EstimatorKind",
    "Verdict",
    "Provenance",
    "PairedObservations",
    "RatioEstimate",
    "VarianceEstimate",
    "denominator",
    "estimate_ratio_naive",
    "estimate_ratio",
    "estimate_ratio_plugin",
    "estimate_variance",
    "norm_sq_moments",
    "numerator_mse_exact",
    "chebyshev_conditioning_bound",
    "variance_estimator_mse_exact",
]


class EstimatorKind(str, enum.Enum):
    NAIVE = "naive"
    CORRECTED = "corrected"
    MISMATCHED_TIME = "mismatched_time"


class Verdict(str, enum.Enum):
    PASSED = "passed"
    FAILED = "failed"
    NOT_CHECKED = "not_checked"


class Provenance(str, enum.Enum):
    SUPPLIED = "supplied"
    ESTIMATED = "estimated"


def _as_vector(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise InputError(f"{name} must be one-dimensional, got shape {arr.shape}")
    return arr


def _sum(values: np.ndarray) -> float:
    return math.fsum(values.tolist())


def _dot(a: np.ndarray, b: np.ndarray) -> float:
    return math.fsum((a * b).tolist())


def _check_nonneg(value: float, name: str) -> float:
    value = float(value)
    if not value >= 0.0 or math.isinf(value):
        raise InputError(f"{name} must be a finite nonnegative number, got {value!r}")
    return value


def _check_positive_int(value, name: str) -> int:
    if isinstance(value, bool) or int(value) != value or value < 1:
        raise InputError(f"{name} must be a positive integer, got {value!r}")
    return int(value)


@dataclass(frozen=True)
class PairedObservations:
    """Aligned observation vectors of common length ``n >= 2``.

    ``y_variance_factors`` is set when ``y`` was produced by interpolation.
    Point ``i`` then has noise variance ``sigma2_sq * y_variance_factors[i]``
    and the denominator subtracts ``sigma2_sq * sum(factors)`` in place of
    ``n * sigma2_sq``.
    """

    x: np.ndarray
    y: np.ndarray
    sigma1_sq: float | None = None
    sigma2_sq: float | None = None
    y_variance_factors: np.ndarray | None = None

    def __post_init__(self):
        x = _as_vector(self.x, "x")
        y = _as_vector(self.y, "y")
        if x.shape != y.shape:
            raise InputError(f"x and y lengths differ: {x.size} != {y.size}")
        if x.size < 2:
            raise InputError(f"need at least 2 paired observations, got {x.size}")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        for name in ("sigma1_sq", "sigma2_sq"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, _check_nonneg(value, name))
        if self.y_variance_factors is not None:
            factors = _as_vector(self.y_variance_factors, "y_variance_factors")
            if factors.shape != y.shape or np.any(factors < 0):
                raise InputError("y_variance_factors must be nonnegative with length n")
            object.__setattr__(self, "y_variance_factors", factors)

    @property
    def n(self) -> int:
        return int(self.x.size)

    def with_sigma2(self, sigma2_sq: float) -> "PairedObservations":
        return PairedObservations(
            self.x, self.y, self.sigma1_sq, sigma2_sq, self.y_variance_factors
        )


@dataclass(frozen=True)
class RatioEstimate:
    value: float
    denominator: float
    numerator: float
    estimator_kind: EstimatorKind
    n: int
    condition_beta: Verdict = Verdict.NOT_CHECKED
    beta: float | None = None
    sigma2_sq: float | None = None
    sigma2_provenance: Provenance | None = None

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "denominator": self.denominator,
            "numerator": self.numerator,
            "estimator_kind": self.estimator_kind.value,
            "n": self.n,
            "condition_beta": self.condition_beta.value,
            "beta": self.beta,
            "sigma2_sq": self.sigma2_sq,
            "sigma2_provenance": (
                None if self.sigma2_provenance is None else self.sigma2_provenance.value
            ),
        }


@dataclass(frozen=True)
class VarianceEstimate:
    value: float
    m: int
    differences_used: int = field(default=-1)

    def __post_init__(self):
        if self.differences_used == -1:
            object.__setattr__(self, "differences_used", self.m)


def denominator(y, sigma2_sq: float, variance_factors=None) -> float:
    """Return ``sum(y**2) - n * sigma2_sq``.

    The result is not clamped and may be zero or negative.  With
    ``variance_factors``, the ``n`` is replaced by their sum.
    """
    y = _as_vector(y, "y")
    if y.size == 0:
        raise InputError("y must not be empty")
    sigma2_sq = _check_nonneg(sigma2_sq, "sigma2_sq")
    if variance_factors is None:
        noise = y.size * sigma2_sq
    else:
        noise = sigma2_sq * _sum(_as_vector(variance_factors, "variance_factors"))
    return _dot(y, y) - noise


def estimate_ratio_naive(obs: PairedObservations) -> RatioEstimate:
    """Least-squares slope of x on y, ``<x, y> / ||y||^2``.

    It is biased toward zero because ``E||y||^2`` includes the noise energy.
    """
    norm_sq = _dot(obs.y, obs.y)
    if norm_sq == 0.0:
        raise DegenerateDenominatorError("y is identically zero")
    numerator = _dot(obs.x, obs.y)
    return RatioEstimate(
        value=numerator / norm_sq,
        denominator=norm_sq,
        numerator=numerator,
        estimator_kind=EstimatorKind.NAIVE,
        n=obs.n,
    )


def _corrected(
    x: np.ndarray,
    obs: PairedObservations,
    beta: float | None,
    kind: EstimatorKind,
    provenance: Provenance,
) -> RatioEstimate:
    if obs.sigma2_sq is None:
        raise InputError("sigma2_sq is required; supply it or use estimate_ratio_plugin")
    if beta is not None:
        beta = float(beta)
        if not beta > 0.0 or math.isinf(beta):
            raise InputError(f"beta must be a positive finite number, got {beta!r}")
    d = denominator(obs.y, obs.sigma2_sq, obs.y_variance_factors)
    if d == 0.0:
        raise DegenerateDenominatorError("denominator ||y||^2 - n*sigma2_sq is exactly zero")
    numerator = _dot(x, obs.y)
    if beta is None:
        verdict = Verdict.NOT_CHECKED
    else:
        verdict = Verdict.PASSED if abs(d) > beta * obs.n else Verdict.FAILED
    return RatioEstimate(
        value=numerator / d,
        denominator=d,
        numerator=numerator,
        estimator_kind=kind,
        n=obs.n,
        condition_beta=verdict,
        beta=beta,
        sigma2_sq=obs.sigma2_sq,
        sigma2_provenance=provenance,
    )


def estimate_ratio(
    obs: PairedObservations,
    beta: float | None = None,
    *,
    provenance: Provenance = Provenance.SUPPLIED,
) -> RatioEstimate:
    """Noise-corrected ratio estimate ``<x, y> / (||y||^2 - n sigma2_sq)``.

    Parameters
    ----------
    obs : PairedObservations
        Must carry ``sigma2_sq``.
    beta : float, optional
        If given, ``condition_beta`` records whether ``|D| > beta * n``.
        The estimate is returned either way; a failed verdict only means the
        conditional loss guarantee does not apply.
    provenance : Provenance
        Where ``sigma2_sq`` came from, copied into the result.

    Raises
    ------
    DegenerateDenominatorError
        If the denominator is exactly zero.
    """
    return _corrected(obs.x, obs, beta, EstimatorKind.CORRECTED, provenance)


def estimate_ratio_mismatched(
    x_shifted, obs: PairedObservations, beta: float | None = None
) -> RatioEstimate:
    """Corrected estimate using x observed on a shifted time grid.

    Only the numerator changes; ``obs.x`` is ignored in favour of
    ``x_shifted``.
    """
    x_shifted = _as_vector(x_shifted, "x_shifted")
    if x_shifted.shape != obs.y.shape:
        raise InputError("x_shifted must have the same length as y")
    return _corrected(x_shifted, obs, beta, EstimatorKind.MISMATCHED_TIME, Provenance.SUPPLIED)


def estimate_ratio_plugin(obs: PairedObservations, beta: float | None = None) -> RatioEstimate:
    """Corrected estimate with ``sigma2_sq`` taken from :func:`estimate_variance` on y."""
    sigma2_sq = estimate_variance(obs.y).value
    return estimate_ratio(obs.with_sigma2(sigma2_sq), beta, provenance=Provenance.ESTIMATED)


def estimate_variance(y) -> VarianceEstimate:
    """Difference-based noise variance estimate.

    Consecutive samples are paired as ``(y1, y2), (y3, y4), ...`` and
    ``sum(d_i**2) / (2m)`` is returned for ``m = n // 2``.  A trailing odd
    sample is dropped.  The mean function cancels to the extent that it
    changes little between the two samples of a pair.  Applied to the
    x channel it estimates ``sigma1_sq`` the same way.
    """
    y = _as_vector(y, "y")
    if y.size < 2:
        raise InputError(f"need at least 2 samples, got {y.size}")
    m = y.size // 2
    d = y[0 : 2 * m : 2] - y[1 : 2 * m : 2]
    return VarianceEstimate(value=_dot(d, d) / (2 * m), m=m, differences_used=int(d.size))


def norm_sq_moments(mu_norm_sq: float, sigma_sq: float, n: int) -> tuple[float, float]:
    """Mean and variance of ``||Z||^2`` for ``Z ~ N(mu, sigma_sq I_n)``."""
    mu_norm_sq = _check_nonneg(mu_norm_sq, "mu_norm_sq")
    sigma_sq = _check_nonneg(sigma_sq, "sigma_sq")
    n = _check_positive_int(n, "n")
    mean = mu_norm_sq + n * sigma_sq
    variance = 2 * n * sigma_sq**2 + 4 * sigma_sq * mu_norm_sq
    return mean, variance


def numerator_mse_exact(
    sigma1_sq: float, sigma2_sq: float, r: float, mu2_norm_sq: float, n: int
) -> float:
    """Exact ``E[(<X, Y> - r D)^2]``, the second moment of the loss numerator."""
    s1 = _check_nonneg(sigma1_sq, "sigma1_sq")
    s2 = _check_nonneg(sigma2_sq, "sigma2_sq")
    m2 = _check_nonneg(mu2_norm_sq, "mu2_norm_sq")
    n = _check_positive_int(n, "n")
    r = float(r)
    if not math.isfinite(r):
        raise InputError(f"r must be finite, got {r!r}")
    return s1 * m2 + n * s1 * s2 + 2 * n * r * r * s2 * s2 + r * r * s2 * m2


def chebyshev_conditioning_bound(
    alpha: float, sigma2_sq: float, mu2_norm_sq: float, n: int
) -> float:
    """Chebyshev upper bound on ``P(|D| <= alpha E[D])``, clamped to 1."""
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise InputError(f"alpha must lie in (0, 1), got {alpha!r}")
    s2 = _check_nonneg(sigma2_sq, "sigma2_sq")
    m2 = _check_nonneg(mu2_norm_sq, "mu2_norm_sq")
    if m2 == 0.0:
        raise InputError("mu2_norm_sq must be positive")
    n = _check_positive_int(n, "n")
    _, var_d = norm_sq_moments(m2, s2, n)
    return min(1.0, var_d / ((1.0 - alpha) ** 2 * m2 * m2))


def variance_estimator_mse_exact(nu_sq_sum: float, sigma_sq: float, m: int) -> float:
    """Exact MSE of :func:`estimate_variance` given the pair mean gaps.

    ``nu_sq_sum`` is ``sum((f(t_{2i-1}) - f(t_{2i}))**2)`` over the ``m`` pairs.
    """
    q = _check_nonneg(nu_sq_sum, "nu_sq_sum")
    s = _check_nonneg(sigma_sq, "sigma_sq")
    m = _check_positive_int(m, "m")
    return (q * q + 8 * s * q + 8 * m * s * s) / (4 * m * m)
