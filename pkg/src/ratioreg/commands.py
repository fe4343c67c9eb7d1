"""Implementations behind the CLI subcommands.

Each ``cmd_*`` function takes plain arguments, performs file I/O and returns a
JSON-ready dict.  :mod:`ratioreg.cli` only parses arguments and maps results
to exit codes.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import csvio
from .alignment import pair_interpolated, pair_nearest_unique, pair_same_grid
from .errors import DegenerateDenominatorError, InputError, PremiseViolationError
from .estimators import (
    PairedObservations,
    Provenance,
    Verdict,
    chebyshev_conditioning_bound,
    estimate_ratio,
    estimate_variance,
)
from .montecarlo import (
    MeanFunction,
    ModelParams,
    aggregate_trials,
    fit_power_law,
    heavy_tail_diagnostic,
    mismatched_time_experiment,
    offset_schedule,
    run_variance_trials,
    simulate,
    trial_arrays,
)

SEED_ENV = "RATIOREG_SEED"
ALIGN_CHOICES = ("same", "nearest", "interp")
PREFIX_POINTS = 1000


def resolve_seed(seed: int) -> int:
    """Apply the ``RATIOREG_SEED`` environment override."""
    env = os.environ.get(SEED_ENV)
    if env is None or env.strip() == "":
        return int(seed)
    try:
        value = int(env)
    except ValueError:
        raise InputError(f"{SEED_ENV}={env!r} is not an integer") from None
    if value < 0:
        raise InputError(f"{SEED_ENV} must be nonnegative, got {value}")
    return value


# --------------------------------------------------------------------------
# estimate
# --------------------------------------------------------------------------


def _grow(partials: list, x: float) -> None:
    # Shewchuk's exact accumulation; fsum(partials) is the exactly rounded sum
    i = 0
    for y in partials:
        if abs(x) < abs(y):
            x, y = y, x
        hi = x + y
        lo = y - (hi - x)
        if lo:
            partials[i] = lo
            i += 1
        x = hi
    partials[i:] = [x]


def prefix_curve(obs: PairedObservations, sigma2_sq: float, stride: int | None = None):
    """``(k, r_hat on the first k pairs)`` for ``k = 2, 2 + stride, ..., n``.

    The last entry is always ``k = n``.  A prefix whose denominator is exactly
    zero is reported as ``None``.  Each entry equals :func:`estimate_ratio`
    on the prefix bit for bit; the sums are accumulated exactly in one pass.
    """
    n = obs.n
    if stride is None:
        stride = max(1, n // PREFIX_POINTS)
    if stride < 1:
        raise InputError(f"stride must be >= 1, got {stride}")
    ks = list(range(2, n + 1, stride))
    if ks[-1] != n:
        ks.append(n)
    sigma2_sq = float(sigma2_sq)
    factors = None if obs.y_variance_factors is None else obs.y_variance_factors.tolist()
    xy = (obs.x * obs.y).tolist()
    yy = (obs.y * obs.y).tolist()
    p_xy, p_yy, p_f = [], [], []
    curve = []
    done = 0
    for k in ks:
        for i in range(done, k):
            _grow(p_xy, xy[i])
            _grow(p_yy, yy[i])
            if factors is not None:
                _grow(p_f, factors[i])
        done = k
        noise = k * sigma2_sq if factors is None else sigma2_sq * math.fsum(p_f)
        d = math.fsum(p_yy) - noise
        curve.append([k, None if d == 0.0 else math.fsum(p_xy) / d])
    return curve


def _align(x_series, y_series, align: str, tol: float):
    if align == "same":
        return pair_same_grid(x_series, y_series, tol)
    if align == "nearest":
        return pair_nearest_unique(x_series, y_series)
    if align == "interp":
        return pair_interpolated(x_series, y_series)
    raise InputError(f"unknown alignment {align!r}; expected one of {ALIGN_CHOICES}")


def cmd_estimate(
    x_path,
    y_path,
    *,
    sigma2_sq: float | None = None,
    beta: float | None = None,
    align: str = "same",
    tol: float = 0.0,
    stride: int | None = None,
) -> dict:
    """Align two CSV channels and estimate their ratio.

    Without ``sigma2_sq``, the difference-based estimate on the full y series
    (in time order) is used and the provenance is recorded as ``estimated``.
    An exactly zero denominator produces a report with ``ratio = None`` and a
    failed verdict rather than an exception.
    """
    x_series = csvio.read_series(x_path)
    y_series = csvio.read_series(y_path)
    obs, alignment = _align(x_series, y_series, align, tol)
    if sigma2_sq is None:
        sigma2_sq = estimate_variance(y_series.values).value
        provenance = Provenance.ESTIMATED
    else:
        provenance = Provenance.SUPPLIED
    obs = obs.with_sigma2(sigma2_sq)
    report = {
        "schema_version": csvio.SCHEMA_VERSION,
        "command": "estimate",
        "n": obs.n,
        "sigma2_sq": obs.sigma2_sq,
        "sigma2_provenance": provenance.value,
        "beta": beta,
        "max_time_gap": alignment.max_time_gap,
        "alignment": alignment.to_dict(),
    }
    try:
        est = estimate_ratio(obs, beta, provenance=provenance)
    except DegenerateDenominatorError as exc:
        report.update(
            ratio=None,
            denominator=0.0,
            numerator=float(np.dot(obs.x, obs.y)),
            condition_beta=Verdict.FAILED.value,
            degenerate=True,
            error=str(exc),
            prefix_curve=prefix_curve(obs, sigma2_sq, stride),
        )
        return report
    report.update(
        ratio=est.value,
        denominator=est.denominator,
        numerator=est.numerator,
        condition_beta=est.condition_beta.value,
        degenerate=False,
        prefix_curve=prefix_curve(obs, sigma2_sq, stride),
    )
    return report


# --------------------------------------------------------------------------
# variance / simulate
# --------------------------------------------------------------------------


def cmd_variance(y_path) -> dict:
    series = csvio.read_series(y_path)
    est = estimate_variance(series.values)
    return {
        "schema_version": csvio.SCHEMA_VERSION,
        "command": "variance",
        "n": len(series),
        "m": est.m,
        "sigma2_sq": est.value,
    }


def cmd_simulate(params: ModelParams, seed: int, out_dir) -> dict:
    """Write ``x.csv``, ``y.csv`` and ``truth.json`` into ``out_dir``."""
    seed = resolve_seed(seed)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    sim = simulate(params, seed)
    csvio.write_series(out_dir / "x.csv", sim.x_series)
    csvio.write_series(out_dir / "y.csv", sim.y_series)
    truth = {"schema_version": csvio.SCHEMA_VERSION, "command": "simulate", **sim.truth}
    csvio.write_json(out_dir / "truth.json", truth)
    return truth


# --------------------------------------------------------------------------
# verify
# --------------------------------------------------------------------------


def _loss_floor(r: float) -> float:
    # Squared losses below this are rounding noise in r_hat.
    return (1e-9 * max(1.0, abs(r))) ** 2


@dataclass
class VerifyConfig:
    seed: int = 0
    r: float = 10.0
    f: MeanFunction = field(default_factory=MeanFunction.sin_plus_2)
    sigma1: float = 1.0
    sigma2: float = 1.0
    n_grid: tuple = (100, 1000, 10000)
    trials: int = 2000
    alpha: float = 0.5
    beta: float | None = None
    c: float = 1.0
    chebyshev_alphas: tuple = (0.25, 0.5, 0.75)
    exponent_range: tuple = (-1.3, -0.7)
    min_r_squared: float = 0.9
    min_consistency_rate: float = 0.99
    slack_se: float = 3.0
    variance: dict | None = field(
        default_factory=lambda: {
            "f": "const:1",
            "sigma2": 1.0,
            "trials": 2000,
            "rel_tol": 0.10,
            "exponent_range": [-1.2, -0.8],
        }
    )
    mismatched: dict | None = field(
        default_factory=lambda: {
            "offset_rule": "inv_n",
            "offset_scale": 1.0,
            "max_mismatch_sq": 100.0,
            "factor": 2.0,
        }
    )
    heavy_tail: dict | None = field(
        default_factory=lambda: {
            "f": "const:0.1",
            "r": 10.0,
            "sigma1": 1.0,
            "sigma2": 1.0,
            "n": 20,
            "trials": 100_000,
            "min_ratio": 1000.0,
        }
    )
    workers: int = 1

    @classmethod
    def from_dict(cls, data: dict) -> "VerifyConfig":
        data = dict(data)
        data.pop("schema_version", None)
        model = data.pop("model", None) or {}
        known = set(cls.__dataclass_fields__)
        unknown = (set(data) | set(model)) - known
        if unknown:
            raise InputError(f"unknown verify config keys: {sorted(unknown)}")
        merged = {**model, **data}
        if "f" in merged:
            merged["f"] = MeanFunction.from_dict(merged["f"])
        for key in ("n_grid", "chebyshev_alphas", "exponent_range"):
            if key in merged:
                merged[key] = tuple(merged[key])
        cfg = cls(**merged)
        if len(cfg.n_grid) < 3:
            raise InputError("n_grid needs at least 3 points")
        return cfg

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "model": {
                "r": self.r,
                "f": self.f.to_dict(),
                "sigma1": self.sigma1,
                "sigma2": self.sigma2,
            },
            "n_grid": list(self.n_grid),
            "trials": self.trials,
            "alpha": self.alpha,
            "beta": self.beta,
            "c": self.c,
            "chebyshev_alphas": list(self.chebyshev_alphas),
            "exponent_range": list(self.exponent_range),
            "min_r_squared": self.min_r_squared,
            "min_consistency_rate": self.min_consistency_rate,
            "slack_se": self.slack_se,
            "variance": self.variance,
            "mismatched": self.mismatched,
            "heavy_tail": self.heavy_tail,
            "workers": self.workers,
        }


def _criterion(name: str, passed: bool, **measured) -> dict:
    return {"name": name, "passed": bool(passed), **measured}


def _binomial_se(p: float, trials: int) -> float:
    p = min(max(p, 0.0), 1.0)
    return math.sqrt(p * (1.0 - p) / trials)


def _scaling_criterion(name, ns, values, lo, hi, min_r2, floor) -> dict:
    if all(v is not None and v <= floor for v in values):
        return _criterion(name, True, exponent=None, r_squared=None, values=values, note="zero loss")
    try:
        fit = fit_power_law(ns, values)
    except InputError as exc:
        return _criterion(name, False, exponent=None, r_squared=None, values=values, error=str(exc))
    ok = lo <= fit.exponent <= hi and fit.r_squared >= min_r2
    return _criterion(name, ok, exponent=fit.exponent, r_squared=fit.r_squared, values=values)


def cmd_verify(config: VerifyConfig) -> dict:
    """Run the Monte Carlo checks over ``config.n_grid`` and grade each one."""
    seed = resolve_seed(config.seed)
    base = ModelParams(config.r, config.f, config.sigma1, config.sigma2, int(config.n_grid[0]))
    floor = _loss_floor(config.r)
    k = config.slack_se
    criteria = []
    reports = []
    cheb_rows = []
    beta_rows = []
    for n in config.n_grid:
        params = base.with_n(int(n))
        d, r_hat, naive, _ = trial_arrays(params, config.trials, seed, workers=config.workers)
        rep = aggregate_trials(
            params, config.trials, config.alpha, config.beta, config.c, seed, d, r_hat, naive, None
        )
        reports.append(rep)
        for a in config.chebyshev_alphas:
            sub = aggregate_trials(params, config.trials, a, None, config.c, seed, d, r_hat, naive, None)
            bound = sub.chebyshev_bound
            ok = bound is not None and sub.cond_event_rate <= bound + k * _binomial_se(bound, config.trials)
            cheb_rows.append({"n": n, "alpha": a, "rate": sub.cond_event_rate, "bound": bound, "passed": ok})
        if config.beta is not None:
            alpha_eff = config.beta * n / rep.mu2_norm_sq
            if 0.0 < alpha_eff < 1.0:
                bound = chebyshev_conditioning_bound(alpha_eff, rep.sigma2_sq, rep.mu2_norm_sq, n)
                ok = rep.beta_event_rate <= bound + k * _binomial_se(bound, config.trials)
            else:
                bound, ok = None, False
            beta_rows.append({"n": n, "rate": rep.beta_event_rate, "bound": bound, "passed": ok})

    ns = [rep.n for rep in reports]
    cond = [rep.cond_mse for rep in reports]
    lo, hi = config.exponent_range
    criteria.append(
        _scaling_criterion("conditional_mse_scaling", ns, cond, lo, hi, config.min_r_squared, floor)
    )

    rates = [rep.consistency_rate for rep in reports]
    monotone = all(
        later >= earlier - k * math.hypot(
            _binomial_se(earlier, config.trials), _binomial_se(later, config.trials)
        )
        for earlier, later in zip(rates, rates[1:])
    )
    criteria.append(
        _criterion(
            "consistency",
            monotone and rates[-1] >= config.min_consistency_rate,
            rates=rates,
            non_decreasing=monotone,
            final_rate=rates[-1],
            required=config.min_consistency_rate,
        )
    )
    criteria.append(
        _criterion("chebyshev_bound", all(row["passed"] for row in cheb_rows), points=cheb_rows)
    )
    if config.beta is not None:
        criteria.append(
            _criterion("beta_bound", all(row["passed"] for row in beta_rows), points=beta_rows)
        )

    if config.variance is not None:
        criteria.append(_verify_variance(config, seed, floor))
    if config.mismatched is not None:
        criteria.append(_verify_mismatched(config, base, reports, seed, floor))
    if config.heavy_tail is not None:
        criteria.append(_verify_heavy_tail(config, seed))

    return {
        "schema_version": csvio.SCHEMA_VERSION,
        "command": "verify",
        "seed": seed,
        "config": config.to_dict(),
        "reports": [rep.to_dict() for rep in reports],
        "criteria": criteria,
        "passed": all(c["passed"] for c in criteria),
    }


def _verify_variance(config: VerifyConfig, seed: int, floor: float) -> dict:
    spec = config.variance
    f = MeanFunction.from_dict(spec.get("f", "const:1"))
    sigma2 = float(spec.get("sigma2", 1.0))
    trials = int(spec.get("trials", config.trials))
    rel_tol = float(spec.get("rel_tol", 0.10))
    lo, hi = spec.get("exponent_range", (-1.2, -0.8))
    rows = []
    for n in config.n_grid:
        params = ModelParams(0.0, f, 0.0, sigma2, int(n))
        rep = run_variance_trials(params, trials, seed, workers=config.workers)
        if rep.exact_mse == 0.0:
            ok = rep.mse <= floor
        else:
            ok = abs(rep.mse - rep.exact_mse) <= rel_tol * rep.exact_mse
        rows.append({"n": rep.n, "mse": rep.mse, "exact_mse": rep.exact_mse, "passed": ok})
    scaling = _scaling_criterion(
        "variance_scaling",
        [row["n"] for row in rows],
        [row["mse"] for row in rows],
        lo,
        hi,
        0.0,
        floor,
    )
    return _criterion(
        "variance_estimator",
        all(row["passed"] for row in rows) and scaling["passed"],
        points=rows,
        exponent=scaling.get("exponent"),
    )


def _verify_mismatched(config, base: ModelParams, reports, seed: int, floor: float) -> dict:
    spec = config.mismatched
    rule = spec.get("offset_rule", "inv_n")
    scale = float(spec.get("offset_scale", 1.0))
    cap = float(spec.get("max_mismatch_sq", 100.0))
    factor = float(spec.get("factor", 2.0))
    rows = []
    for rep0 in reports:
        n = rep0.n
        params = ModelParams(
            base.r, base.f, base.sigma1, base.sigma2, n, time_offset=offset_schedule(n, rule, scale)
        )
        try:
            rep = mismatched_time_experiment(
                params, config.trials, config.alpha, seed, c=config.c,
                max_mismatch_sq=cap, workers=config.workers,
            )
        except PremiseViolationError as exc:
            return _criterion("mismatched_time", False, error=str(exc), mismatch_sq=exc.value, n=n)
        mm, ref = rep.mismatched_cond_mse, rep0.cond_mse
        if mm is None or ref is None:
            ok = False
        elif mm <= floor and ref <= floor:
            ok = True
        else:
            ok = ref > 0 and 1.0 / factor <= mm / ref <= factor
        rows.append(
            {"n": n, "offset": params.time_offset, "mismatch_sq": rep.mismatch_sq,
             "mismatched_cond_mse": mm, "cond_mse": ref, "passed": ok}
        )
    lo, hi = config.exponent_range
    scaling = _scaling_criterion(
        "mismatched_scaling",
        [row["n"] for row in rows],
        [row["mismatched_cond_mse"] for row in rows],
        lo, hi, config.min_r_squared, floor,
    )
    return _criterion(
        "mismatched_time",
        all(row["passed"] for row in rows) and scaling["passed"],
        points=rows,
        exponent=scaling.get("exponent"),
    )


def _verify_heavy_tail(config: VerifyConfig, seed: int) -> dict:
    spec = config.heavy_tail
    params = ModelParams(
        float(spec.get("r", config.r)),
        MeanFunction.from_dict(spec.get("f", "const:0.1")),
        float(spec.get("sigma1", 1.0)),
        float(spec.get("sigma2", 1.0)),
        int(spec.get("n", 20)),
    )
    rep = heavy_tail_diagnostic(params, int(spec.get("trials", 100_000)), seed, config.alpha)
    min_ratio = float(spec.get("min_ratio", 1000.0))
    ok = rep.max_loss_ratio is not None and rep.max_loss_ratio > min_ratio
    return _criterion("heavy_tail", ok, **rep.to_dict(), required_ratio=min_ratio)
