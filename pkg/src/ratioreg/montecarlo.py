"""Seeded simulation of the two-channel model and Monte Carlo aggregates.

Each trial draws its noise from a generator keyed by ``(seed, trial, channel)``,
so any subset of trials can be reproduced, or run in another process, without
replaying the others.  Per-trial results are gathered in trial order and
reduced with :func:`math.fsum`, so the reports do not depend on how the work
was split.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .alignment import SampleSeries
from .errors import DegenerateDenominatorError, InputError, PremiseViolationError
from .estimators import (
    PairedObservations,
    chebyshev_conditioning_bound,
    estimate_ratio,
    estimate_ratio_mismatched,
    estimate_ratio_naive,
    estimate_variance,
    variance_estimator_mse_exact,
)

MIN_TRIALS = 100
X_CHANNEL = 0
Y_CHANNEL = 1
DEFAULT_MISMATCH_CAP = 100.0
SMALL_DENOMINATOR_FRACTION = 0.1


# --------------------------------------------------------------------------
# model description
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class MeanFunction:
    """The unknown mean function: ``sin(t) + 2``, a constant, or a lookup table.

    Tables are linearly interpolated and refuse to extrapolate.
    """

    kind: str
    value: float = 0.0
    table_times: tuple = ()
    table_values: tuple = ()

    def __post_init__(self):
        if self.kind not in ("sin_plus_2", "constant", "table"):
            raise InputError(f"unknown mean function kind {self.kind!r}")
        if self.kind == "table":
            t = np.asarray(self.table_times, dtype=float)
            v = np.asarray(self.table_values, dtype=float)
            if t.size < 2 or t.shape != v.shape or not np.all(np.diff(t) > 0):
                raise InputError("table needs >= 2 strictly increasing times with matching values")

    @classmethod
    def sin_plus_2(cls) -> "MeanFunction":
        return cls("sin_plus_2")

    @classmethod
    def constant(cls, c: float) -> "MeanFunction":
        return cls("constant", value=float(c))

    @classmethod
    def table(cls, times, values) -> "MeanFunction":
        return cls(
            "table",
            table_times=tuple(float(t) for t in times),
            table_values=tuple(float(v) for v in values),
        )

    @classmethod
    def parse(cls, text: str) -> "MeanFunction":
        """Parse the CLI spelling: ``sin2`` or ``const:<c>``."""
        text = text.strip()
        if text in ("sin2", "sin_plus_2"):
            return cls.sin_plus_2()
        if text.startswith("const:"):
            try:
                return cls.constant(float(text[len("const:") :]))
            except ValueError:
                raise InputError(f"bad constant in mean function {text!r}") from None
        raise InputError(f"unknown mean function {text!r}; expected sin2 or const:<c>")

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.kind == "sin_plus_2":
            return np.sin(t) + 2.0
        if self.kind == "constant":
            return np.full(t.shape, self.value)
        tt = np.asarray(self.table_times)
        if t.size and (t.min() < tt[0] or t.max() > tt[-1]):
            raise InputError("mean-function table evaluated outside its time range")
        return np.interp(t, tt, np.asarray(self.table_values))

    def to_dict(self) -> dict:
        if self.kind == "sin_plus_2":
            return {"kind": "sin_plus_2"}
        if self.kind == "constant":
            return {"kind": "constant", "value": self.value}
        return {"kind": "table", "times": list(self.table_times), "values": list(self.table_values)}

    @classmethod
    def from_dict(cls, data) -> "MeanFunction":
        if isinstance(data, str):
            return cls.parse(data)
        kind = data.get("kind")
        if kind == "constant":
            return cls.constant(data["value"])
        if kind == "table":
            return cls.table(data["times"], data["values"])
        return cls(kind)


@dataclass(frozen=True)
class ModelParams:
    """Ground truth for a simulation.

    ``time_grid`` defaults to ``1..n``.  ``time_offset`` shifts only the
    x channel (``p_i = t_i + offset``).
    """

    r: float
    f: MeanFunction
    sigma1: float
    sigma2: float
    n: int
    time_grid: tuple | None = None
    time_offset: float = 0.0

    def __post_init__(self):
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 2:
            raise InputError(f"n must be an integer >= 2, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        for name in ("sigma1", "sigma2"):
            value = float(getattr(self, name))
            if not (value >= 0.0 and math.isfinite(value)):
                raise InputError(f"{name} must be finite and nonnegative, got {value!r}")
            object.__setattr__(self, name, value)
        if not math.isfinite(float(self.r)) or not math.isfinite(float(self.time_offset)):
            raise InputError("r and time_offset must be finite")
        if self.time_grid is not None:
            grid = tuple(float(t) for t in self.time_grid)
            if len(grid) != self.n:
                raise InputError(f"time_grid has {len(grid)} points, expected n={self.n}")
            if any(b <= a for a, b in zip(grid, grid[1:])):
                raise InputError("time_grid must be strictly increasing")
            object.__setattr__(self, "time_grid", grid)

    @property
    def times(self) -> np.ndarray:
        if self.time_grid is None:
            return np.arange(1, self.n + 1, dtype=float)
        return np.asarray(self.time_grid, dtype=float)

    @property
    def mu2(self) -> np.ndarray:
        return self.f(self.times)

    @property
    def mu2_shifted(self) -> np.ndarray:
        return self.f(self.times + self.time_offset)

    @property
    def mu2_norm_sq(self) -> float:
        mu = self.mu2
        return math.fsum((mu * mu).tolist())

    @property
    def mismatch_sq(self) -> float:
        """``||X - X'||^2 = r^2 sum (f(t_i) - f(t_i + offset))^2``; deterministic."""
        if self.time_offset == 0.0:
            return 0.0
        diff = self.mu2 - self.mu2_shifted
        return float(self.r) ** 2 * math.fsum((diff * diff).tolist())

    def with_n(self, n: int) -> "ModelParams":
        return replace(self, n=n, time_grid=None)

    def to_dict(self) -> dict:
        return {
            "r": float(self.r),
            "f": self.f.to_dict(),
            "sigma1": self.sigma1,
            "sigma2": self.sigma2,
            "n": self.n,
            "time_grid": None if self.time_grid is None else list(self.time_grid),
            "time_offset": float(self.time_offset),
        }


def offset_schedule(n: int, rule: str = "inv_sqrt_n", scale: float = 1.0) -> float:
    """Time offset for mismatched-grid runs at sample size ``n``.

    ``inv_sqrt_n`` and ``inv_n`` keep ``||X - X'||`` bounded for a smooth f
    as ``n`` grows.  ``fixed`` does not, and is meant for robustness runs.
    """
    if rule == "inv_sqrt_n":
        return scale / math.sqrt(n)
    if rule == "inv_n":
        return scale / n
    if rule == "fixed":
        return float(scale)
    raise InputError(f"unknown offset rule {rule!r}")


# --------------------------------------------------------------------------
# random streams
# --------------------------------------------------------------------------


def trial_generator(seed: int, trial: int, channel: int) -> np.random.Generator:
    """Independent generator for one (seed, trial, channel) cell."""
    if isinstance(seed, bool) or int(seed) != seed or seed < 0:
        raise InputError(f"seed must be a nonnegative integer, got {seed!r}")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), trial, channel])))


def _noise(seed: int, trial: int, channel: int, n: int, scale: float) -> np.ndarray:
    if scale == 0.0:
        return np.zeros(n)
    return scale * trial_generator(seed, trial, channel).standard_normal(n)


# --------------------------------------------------------------------------
# simulation
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Simulation:
    x_series: SampleSeries
    y_series: SampleSeries
    truth: dict
    x_unshifted: np.ndarray = field(repr=False, default=None)


def simulate(params: ModelParams, seed: int, trial: int = 0) -> Simulation:
    """Draw one realisation of both channels.

    ``x_series`` is observed at ``t_i + offset``.  ``x_unshifted`` holds the
    same x noise on the unshifted grid: the unobservable X that the shifted
    estimator is compared against.  Both share ``z``, so their difference is
    deterministic.
    """
    t = params.times
    mu2 = params.mu2
    z = _noise(seed, trial, X_CHANNEL, params.n, params.sigma1)
    w = _noise(seed, trial, Y_CHANNEL, params.n, params.sigma2)
    y = mu2 + w
    x_unshifted = params.r * mu2 + z
    if params.time_offset == 0.0:
        x = x_unshifted
    else:
        x = params.r * params.mu2_shifted + z
    truth = {
        "r": float(params.r),
        "mu2_norm_sq": params.mu2_norm_sq,
        "sigma1": params.sigma1,
        "sigma2": params.sigma2,
        "n": params.n,
        "seed": int(seed),
        "trial": int(trial),
        "f": params.f.to_dict(),
        "time_offset": float(params.time_offset),
        "mismatch_sq": params.mismatch_sq,
    }
    return Simulation(
        x_series=SampleSeries(t + params.time_offset, x),
        y_series=SampleSeries(t, y),
        truth=truth,
        x_unshifted=x_unshifted,
    )


# --------------------------------------------------------------------------
# trial loop
# --------------------------------------------------------------------------


def _trial_block(params: ModelParams, seed: int, start: int, stop: int, mismatched: bool):
    sigma2_sq = params.sigma2**2
    k = stop - start
    d = np.empty(k)
    r_hat = np.empty(k)
    naive = np.empty(k)
    r_mm = np.empty(k) if mismatched else None
    for idx, trial in enumerate(range(start, stop)):
        sim = simulate(params, seed, trial)
        obs = PairedObservations(sim.x_unshifted, sim.y_series.values, sigma2_sq=sigma2_sq)
        try:
            est = estimate_ratio(obs)
            d[idx] = est.denominator
            r_hat[idx] = est.value
            if mismatched:
                r_mm[idx] = estimate_ratio_mismatched(sim.x_series.values, obs).value
        except DegenerateDenominatorError:
            d[idx] = 0.0
            r_hat[idx] = math.inf
            if mismatched:
                r_mm[idx] = math.inf
        try:
            naive[idx] = estimate_ratio_naive(obs).value
        except DegenerateDenominatorError:
            naive[idx] = math.inf
    return d, r_hat, naive, r_mm


def _variance_block(params: ModelParams, seed: int, start: int, stop: int):
    out = np.empty(stop - start)
    mu2 = params.mu2
    for idx, trial in enumerate(range(start, stop)):
        y = mu2 + _noise(seed, trial, Y_CHANNEL, params.n, params.sigma2)
        out[idx] = estimate_variance(y).value
    return (out,)


def _run_blocks(func, args: tuple, trials: int, workers: int):
    if workers <= 1 or trials < 2 * workers:
        return func(*args, 0, trials)
    bounds = np.linspace(0, trials, workers + 1).astype(int)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [
            pool.submit(func, *args, int(lo), int(hi)) for lo, hi in zip(bounds[:-1], bounds[1:])
        ]
        parts = [fut.result() for fut in futures]
    return tuple(
        None if parts[0][i] is None else np.concatenate([p[i] for p in parts])
        for i in range(len(parts[0]))
    )


def _check_trials(trials) -> int:
    if isinstance(trials, bool) or int(trials) != trials or trials < MIN_TRIALS:
        raise InputError(f"trials must be an integer >= {MIN_TRIALS}, got {trials!r}")
    return int(trials)


def _mean(values: np.ndarray) -> float:
    return math.fsum(values.tolist()) / values.size


def _mean_se(values: np.ndarray) -> tuple[float, float]:
    if values.size == 0:
        return math.nan, math.nan
    mean = _mean(values)
    if values.size < 2 or not math.isfinite(mean):
        return mean, math.nan
    dev = values - mean
    var = math.fsum((dev * dev).tolist()) / (values.size - 1)
    return mean, math.sqrt(var / values.size)


@dataclass(frozen=True)
class TrialReport:
    """Monte Carlo aggregates for one sample size.

    Event rates count failures: ``cond_event_rate`` is the fraction of
    trials with ``|D| <= alpha ||mu2||^2`` and ``beta_event_rate`` the
    fraction with ``|D| <= beta n``.  ``uncond_mse`` is reported for
    completeness only.  It has no finite expectation and does not settle as
    trials grow.
    """

    n: int
    trials: int
    alpha: float
    beta: float | None
    c: float
    seed: int
    cond_mse: float | None
    uncond_mse: float
    cond_event_rate: float
    beta_event_rate: float | None
    consistency_rate: float
    naive_mean: float
    mismatched_cond_mse: float | None
    r: float = 0.0
    mu2_norm_sq: float = 0.0
    sigma2_sq: float = 0.0
    conditioned_trials: int = 0
    no_conditioned_trials: bool = False
    cond_mse_se: float | None = None
    cond_mean: float | None = None
    cond_mean_se: float | None = None
    naive_se: float = 0.0
    beta_cond_mse: float | None = None
    chebyshev_bound: float | None = None
    time_offset: float = 0.0
    mismatch_sq: float = 0.0
    max_loss: float = 0.0

    def to_dict(self) -> dict:
        return {k: _json_float(v) for k, v in asdict(self).items()}


def _json_float(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None if math.isnan(v) else ("inf" if v > 0 else "-inf")
    return v


def _none_if_nan(v: float) -> float | None:
    return None if math.isnan(v) else v


def aggregate_trials(params, trials, alpha, beta, c, seed, d, r_hat, naive, r_mm) -> TrialReport:
    r = float(params.r)
    n = params.n
    mu2_norm_sq = params.mu2_norm_sq
    loss = (r_hat - r) ** 2
    cond = np.abs(d) > alpha * mu2_norm_sq
    count = int(cond.sum())
    if count:
        cond_mse, cond_mse_se = _mean_se(loss[cond])
        cond_mean, cond_mean_se = _mean_se(r_hat[cond])
        mm = _mean(((r_mm - r) ** 2)[cond]) if r_mm is not None else None
    else:
        cond_mse = cond_mse_se = cond_mean = cond_mean_se = None
        mm = None
    beta_rate = beta_mse = None
    if beta is not None:
        bmask = np.abs(d) > beta * n
        beta_rate = 1.0 - bmask.sum() / trials
        beta_mse = _mean(loss[bmask]) if bmask.any() else None
    naive_mean, naive_se = _mean_se(naive)
    try:
        bound = chebyshev_conditioning_bound(alpha, params.sigma2**2, mu2_norm_sq, n)
    except InputError:
        bound = None
    threshold = c * math.log(n) / n
    return TrialReport(
        n=n,
        trials=trials,
        alpha=alpha,
        beta=beta,
        c=c,
        seed=int(seed),
        cond_mse=cond_mse,
        uncond_mse=_mean(loss),
        cond_event_rate=1.0 - count / trials,
        beta_event_rate=beta_rate,
        consistency_rate=float(np.count_nonzero(loss <= threshold)) / trials,
        naive_mean=naive_mean,
        mismatched_cond_mse=mm,
        r=r,
        mu2_norm_sq=mu2_norm_sq,
        sigma2_sq=params.sigma2**2,
        conditioned_trials=count,
        no_conditioned_trials=count == 0,
        cond_mse_se=None if cond_mse_se is None else _none_if_nan(cond_mse_se),
        cond_mean=cond_mean,
        cond_mean_se=None if cond_mean_se is None else _none_if_nan(cond_mean_se),
        naive_se=naive_se,
        beta_cond_mse=beta_mse,
        chebyshev_bound=bound,
        time_offset=float(params.time_offset),
        mismatch_sq=params.mismatch_sq,
        max_loss=float(loss.max()),
    )


def _check_alpha(alpha) -> float:
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise InputError(f"alpha must lie in (0, 1), got {alpha!r}")
    return alpha


def _check_positive(value, name: str) -> float:
    value = float(value)
    if not (value > 0.0 and math.isfinite(value)):
        raise InputError(f"{name} must be positive and finite, got {value!r}")
    return value


def _trial_block_mm(params, seed, start, stop):
    return _trial_block(params, seed, start, stop, True)


def _trial_block_plain(params, seed, start, stop):
    return _trial_block(params, seed, start, stop, False)


def trial_arrays(params: ModelParams, trials: int, seed: int, *, mismatched=False, workers=1):
    """Per-trial ``(D, r_hat, naive, r_hat_shifted)`` arrays in trial order."""
    trials = _check_trials(trials)
    block = _trial_block_mm if mismatched else _trial_block_plain
    return _run_blocks(block, (params, seed), trials, workers)


def run_trials(
    params: ModelParams,
    trials: int = 2000,
    alpha: float = 0.5,
    beta: float | None = None,
    c: float = 1.0,
    seed: int = 0,
    *,
    workers: int = 1,
) -> TrialReport:
    """Run independent seeded trials at ``params.n`` and aggregate the losses.

    The oracle event ``|D| > alpha ||mu2||^2`` uses the true mean energy,
    which only a simulation knows.  The data-checkable event ``|D| > beta n``
    is evaluated on the same draws when ``beta`` is given.  With a nonzero
    ``params.time_offset`` the shifted-grid estimate is aggregated as well.
    If no trial meets the oracle event, ``cond_mse`` is ``None`` and
    ``no_conditioned_trials`` is set.
    """
    alpha = _check_alpha(alpha)
    c = _check_positive(c, "c")
    if beta is not None:
        beta = _check_positive(beta, "beta")
    trials = _check_trials(trials)
    mismatched = params.time_offset != 0.0
    block = _trial_block_mm if mismatched else _trial_block_plain
    d, r_hat, naive, r_mm = _run_blocks(block, (params, seed), trials, workers)
    return aggregate_trials(params, trials, alpha, beta, c, seed, d, r_hat, naive, r_mm)


def mismatched_time_experiment(
    params: ModelParams,
    trials: int = 2000,
    alpha: float = 0.5,
    seed: int = 0,
    *,
    beta: float | None = None,
    c: float = 1.0,
    max_mismatch_sq: float = DEFAULT_MISMATCH_CAP,
    workers: int = 1,
) -> TrialReport:
    """Compare the shifted-grid estimator with the aligned one on shared draws.

    Before any trial runs, ``||X - X'||^2`` is computed from ``f`` and the
    offset.  A value above ``max_mismatch_sq`` raises
    :class:`PremiseViolationError`, since the O(1/n) guarantee assumes the
    mismatch stays bounded.
    """
    alpha = _check_alpha(alpha)
    c = _check_positive(c, "c")
    if beta is not None:
        beta = _check_positive(beta, "beta")
    trials = _check_trials(trials)
    mismatch = params.mismatch_sq
    if mismatch > max_mismatch_sq:
        raise PremiseViolationError(
            f"||X - X'||^2 = {mismatch!r} exceeds the cap {max_mismatch_sq!r} "
            f"(n={params.n}, offset={params.time_offset!r})",
            value=mismatch,
        )
    d, r_hat, naive, r_mm = _run_blocks(_trial_block_mm, (params, seed), trials, workers)
    return aggregate_trials(params, trials, alpha, beta, c, seed, d, r_hat, naive, r_mm)


@dataclass(frozen=True)
class VarianceTrialReport:
    n: int
    m: int
    trials: int
    seed: int
    sigma_sq: float
    nu_sq_sum: float
    mean: float
    mean_se: float
    mse: float
    mse_se: float
    exact_mse: float

    def to_dict(self) -> dict:
        return {k: _json_float(v) for k, v in asdict(self).items()}


def run_variance_trials(
    params: ModelParams, trials: int = 2000, seed: int = 0, *, workers: int = 1
) -> VarianceTrialReport:
    """Monte Carlo loss of the difference-based estimator of ``sigma2**2``.

    The y-channel noise is the same stream :func:`run_trials` uses, so both
    reports describe the same draws.
    """
    trials = _check_trials(trials)
    (values,) = _run_blocks(_variance_block, (params, seed), trials, workers)
    sigma_sq = params.sigma2**2
    mu = params.mu2
    m = params.n // 2
    nu = mu[0 : 2 * m : 2] - mu[1 : 2 * m : 2]
    nu_sq_sum = math.fsum((nu * nu).tolist())
    mean, mean_se = _mean_se(values)
    mse, mse_se = _mean_se((values - sigma_sq) ** 2)
    return VarianceTrialReport(
        n=params.n,
        m=m,
        trials=trials,
        seed=int(seed),
        sigma_sq=sigma_sq,
        nu_sq_sum=nu_sq_sum,
        mean=mean,
        mean_se=mean_se,
        mse=mse,
        mse_se=mse_se,
        exact_mse=variance_estimator_mse_exact(nu_sq_sum, sigma_sq, m),
    )


# --------------------------------------------------------------------------
# scaling and tail diagnostics
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ScalingFit:
    exponent: float
    intercept: float
    r_squared: float

    def to_dict(self) -> dict:
        return asdict(self)


def fit_power_law(ns, values) -> ScalingFit:
    """Least-squares line through ``(log n, log value)``."""
    ns = np.asarray(ns, dtype=float)
    values = np.asarray(values, dtype=float)
    if ns.shape != values.shape or ns.ndim != 1:
        raise InputError("ns and values must be matching vectors")
    if np.unique(ns).size < 3:
        raise InputError(f"need at least 3 distinct n values, got {np.unique(ns).size}")
    if np.log10(ns.max() / ns.min()) < 2.0 - 1e-12:
        raise InputError("n values must span at least two decades")
    if np.any(values <= 0) or not np.all(np.isfinite(values)):
        raise InputError("values must be positive and finite to take logs")
    lx, ly = np.log(ns), np.log(values)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r_squared = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return ScalingFit(float(slope), float(intercept), r_squared)


def scaling_fit(reports, metric: str | None = None) -> ScalingFit:
    """Fit the loss exponent across reports at increasing ``n``.

    ``metric`` names the report attribute to fit.  It defaults to
    ``cond_mse`` for :class:`TrialReport` and ``mse`` for
    :class:`VarianceTrialReport`.
    """
    reports = list(reports)
    if len(reports) < 3:
        raise InputError(f"need at least 3 reports, got {len(reports)}")
    if metric is None:
        metric = "mse" if isinstance(reports[0], VarianceTrialReport) else "cond_mse"
    values = [getattr(rep, metric) for rep in reports]
    if any(v is None for v in values):
        raise InputError(f"some reports have no {metric}")
    return fit_power_law([rep.n for rep in reports], values)


@dataclass(frozen=True)
class HeavyTailReport:
    max_loss_ratio: float | None
    small_denominator_rate: float
    max_loss: float
    cond_mse: float | None
    uncond_mse: float
    trials: int
    n: int
    seed: int

    def to_dict(self) -> dict:
        return {k: _json_float(v) for k, v in asdict(self).items()}


def heavy_tail_diagnostic(
    params: ModelParams, trials: int = 100_000, seed: int = 0, alpha: float = 0.5
) -> HeavyTailReport:
    """Show how heavy the tail of the unconditional loss is.

    The result pairs the largest single-trial loss, relative to the
    conditional MSE, with the frequency of ``|D| <= 0.1 E[D]``.  Both grow
    when ``||mu2||^2`` is small against ``n sigma2^2``.  This illustrates the
    tail; it does not prove anything.
    """
    alpha = _check_alpha(alpha)
    trials = _check_trials(trials)
    d, r_hat, _, _ = _run_blocks(_trial_block_plain, (params, seed), trials, 1)
    r = float(params.r)
    mu2_norm_sq = params.mu2_norm_sq
    loss = (r_hat - r) ** 2
    cond = np.abs(d) > alpha * mu2_norm_sq
    cond_mse = _mean(loss[cond]) if cond.any() else None
    max_loss = float(loss.max())
    if cond_mse is None:
        ratio = None
    elif cond_mse == 0.0:
        ratio = 0.0 if max_loss == 0.0 else math.inf
    else:
        ratio = max_loss / cond_mse
    small = np.abs(d) <= SMALL_DENOMINATOR_FRACTION * mu2_norm_sq
    return HeavyTailReport(
        max_loss_ratio=ratio,
        small_denominator_rate=float(np.count_nonzero(small)) / trials,
        max_loss=max_loss,
        cond_mse=cond_mse,
        uncond_mse=_mean(loss),
        trials=trials,
        n=params.n,
        seed=int(seed),
    )
