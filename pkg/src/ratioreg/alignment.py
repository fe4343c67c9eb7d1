"""Pair two time series observed on different grids.

Every method here uses each observed point at most once.  Reusing a point
would correlate the noise of two outputs and break the independence the
ratio estimator relies on.
"""

from __future__ import annotations

import bisect
import enum
import heapq
from dataclasses import dataclass

import numpy as np

from .errors import AlignmentError, CapacityError, ExtrapolationError, InputError
from .estimators import PairedObservations

__all__ = [
    "AlignmentMethod",
    "SampleSeries",
    "InterpolatedSeries",
    "AlignmentReport",
    "pair_same_grid",
    "match_nearest_unique",
    "pair_nearest_unique",
    "interpolate_disjoint",
    "pair_interpolated",
]


class AlignmentMethod(str, enum.Enum):
    SAME_GRID = "same_grid"
    NEAREST_UNIQUE = "nearest_unique"
    INTERPOLATE_DISJOINT = "interpolate_disjoint"


@dataclass(frozen=True)
class SampleSeries:
    """One channel: strictly increasing times and their observed values."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if times.ndim != 1 or values.ndim != 1:
            raise InputError("times and values must be one-dimensional")
        if times.size != values.size:
            raise InputError(f"times/values length mismatch: {times.size} != {values.size}")
        if times.size < 1:
            raise InputError("a series needs at least one sample")
        if not np.all(np.isfinite(times)):
            raise InputError("times must be finite")
        if times.size > 1 and not np.all(np.diff(times) > 0):
            bad = int(np.argmin(np.diff(times) > 0)) + 1
            raise InputError(f"times must be strictly increasing (violated at index {bad})")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return int(self.times.size)


@dataclass(frozen=True)
class InterpolatedSeries(SampleSeries):
    """Interpolated series with its per-point provenance.

    ``source_pairs[k]`` holds the two observed indices used for output ``k``.
    ``weights[k]`` is the weight on the second of them.  ``variance_factors[k]``
    equals ``(1 - w)**2 + w**2``, the factor that scales the noise variance.
    """

    source_pairs: tuple[tuple[int, int], ...] = ()
    weights: np.ndarray | None = None
    variance_factors: np.ndarray | None = None


@dataclass(frozen=True)
class AlignmentReport:
    pairs: tuple
    max_time_gap: float
    points_reused: int
    method: AlignmentMethod
    dropped_a: int = 0
    dropped_b: int = 0

    def to_dict(self) -> dict:
        return {
            "method": self.method.value,
            "n_pairs": len(self.pairs),
            "max_time_gap": self.max_time_gap,
            "points_reused": self.points_reused,
            "dropped_a": self.dropped_a,
            "dropped_b": self.dropped_b,
        }


def _count_reused(indices) -> int:
    seen: set = set()
    reused = 0
    for idx in indices:
        if idx in seen:
            reused += 1
        seen.add(idx)
    return reused


def _check_no_reuse(a_indices, b_indices) -> int:
    reused = _count_reused(a_indices) + _count_reused(b_indices)
    if reused:
        raise AlignmentError(f"internal error: {reused} observed points reused")
    return reused


def pair_same_grid(a: SampleSeries, b: SampleSeries, tol: float = 0.0):
    """Pair two equal-length series index by index.

    Raises :class:`AlignmentError` naming the worst index when any time gap
    exceeds ``tol``.  ``tol=math.inf`` accepts any gaps.
    """
    tol = float(tol)
    if not tol >= 0.0:
        raise InputError(f"tol must be nonnegative, got {tol!r}")
    if len(a) != len(b):
        raise InputError(f"series lengths differ: {len(a)} != {len(b)}")
    gaps = np.abs(a.times - b.times)
    max_gap = float(gaps.max())
    # gaps equal up to rounding are ties; name the first of them
    worst = int(np.argmax(gaps >= max_gap * (1.0 - 1e-12)))
    if max_gap > tol:
        raise AlignmentError(
            f"time gap {max_gap!r} at index {worst} exceeds tolerance {tol!r}", index=worst
        )
    idx = list(range(len(a)))
    reused = _check_no_reuse(idx, idx)
    report = AlignmentReport(
        pairs=tuple((i, i) for i in idx),
        max_time_gap=max_gap,
        points_reused=reused,
        method=AlignmentMethod.SAME_GRID,
    )
    return PairedObservations(a.values, b.values), report


def _greedy_matching(ta: np.ndarray, tb: np.ndarray) -> list[tuple[int, int]]:
    # The globally closest unused cross pair is always adjacent in the merged
    # order of the unused points, so a heap of adjacent cross pairs suffices.
    merged = sorted(
        [(float(t), 0, i) for i, t in enumerate(ta)] + [(float(t), 1, j) for j, t in enumerate(tb)]
    )
    size = len(merged)
    prev = list(range(-1, size - 1))
    nxt = list(range(1, size + 1))
    alive = [True] * size
    heap: list = []

    def push(p: int, q: int) -> None:
        if 0 <= p < size and 0 <= q < size and merged[p][1] != merged[q][1]:
            pa, pb = (p, q) if merged[p][1] == 0 else (q, p)
            gap = abs(merged[q][0] - merged[p][0])
            heapq.heappush(heap, (gap, merged[pa][2], merged[pb][2], p, q))

    for k in range(size - 1):
        push(k, k + 1)

    matches = []
    while heap:
        _, ia, jb, p, q = heapq.heappop(heap)
        if not (alive[p] and alive[q] and nxt[p] == q):
            continue
        matches.append((ia, jb))
        alive[p] = alive[q] = False
        left, right = prev[p], nxt[q]
        if left >= 0:
            nxt[left] = right
        if right < size:
            prev[right] = left
        push(left, right)
    return matches


def match_nearest_unique(a: SampleSeries, b: SampleSeries) -> AlignmentReport:
    """Greedy one-to-one matching, repeatedly taking the globally closest unused pair.

    Matching stops when one series is exhausted.  Surplus points are dropped
    and counted.  Pairs are listed in time order of ``a``.
    """
    matches = sorted(_greedy_matching(a.times, b.times))
    ia = [i for i, _ in matches]
    jb = [j for _, j in matches]
    reused = _check_no_reuse(ia, jb)
    gaps = np.abs(a.times[ia] - b.times[jb])
    return AlignmentReport(
        pairs=tuple(matches),
        max_time_gap=float(gaps.max()) if gaps.size else 0.0,
        points_reused=reused,
        method=AlignmentMethod.NEAREST_UNIQUE,
        dropped_a=len(a) - len(matches),
        dropped_b=len(b) - len(matches),
    )


def pair_nearest_unique(a: SampleSeries, b: SampleSeries):
    """Pair two series with :func:`match_nearest_unique`.

    Raises :class:`AlignmentError` (with the report attached) when fewer than
    two pairs can be formed.
    """
    report = match_nearest_unique(a, b)
    if len(report.pairs) < 2:
        raise AlignmentError(
            f"only {len(report.pairs)} pair(s) could be formed; need at least 2",
            report=report,
        )
    ia = [i for i, _ in report.pairs]
    jb = [j for _, j in report.pairs]
    return PairedObservations(a.values[ia], b.values[jb]), report


def interpolate_disjoint(series: SampleSeries, targets) -> InterpolatedSeries:
    """Linearly interpolate ``series`` at ``targets`` without reusing any point.

    Targets are processed in increasing order.  Each one consumes the
    leftmost pair of consecutive still-unused observations that brackets it.
    If no unused pair brackets the target, the nearest unused pair is taken
    and the weight is clamped to [0, 1], so no value is ever extrapolated.

    Raises
    ------
    CapacityError
        If ``len(series) < 2 * len(targets)``.
    ExtrapolationError
        If a target is outside ``[times[0], times[-1]]``.
    """
    targets = np.asarray(targets, dtype=float)
    if targets.ndim != 1 or targets.size < 1:
        raise InputError("targets must be a non-empty one-dimensional vector")
    if targets.size > 1 and not np.all(np.diff(targets) > 0):
        raise InputError("targets must be strictly increasing")
    if len(series) < 2 * targets.size:
        raise CapacityError(
            f"{targets.size} targets need {2 * targets.size} observed points, "
            f"series has {len(series)}"
        )
    lo, hi = series.times[0], series.times[-1]
    outside = np.flatnonzero((targets < lo) | (targets > hi))
    if outside.size:
        k = int(outside[0])
        raise ExtrapolationError(
            f"target {targets[k]!r} at index {k} is outside [{lo!r}, {hi!r}]", index=k
        )

    free = list(range(len(series)))
    free_times = series.times.tolist()
    out = np.empty(targets.size)
    weights = np.empty(targets.size)
    pairs = []
    for k, tau in enumerate(targets.tolist()):
        p = bisect.bisect_left(free_times, tau)
        if p == 0:
            j = 0
        elif p == len(free_times):
            j = p - 2
        else:
            j = p - 1
        i0, i1 = free[j], free[j + 1]
        t0, t1 = free_times[j], free_times[j + 1]
        w = min(1.0, max(0.0, (tau - t0) / (t1 - t0)))
        v0, v1 = series.values[i0], series.values[i1]
        if w == 0.0:
            out[k] = v0
        elif w == 1.0:
            out[k] = v1
        else:
            out[k] = (1.0 - w) * v0 + w * v1
        weights[k] = w
        pairs.append((i0, i1))
        del free[j : j + 2]
        del free_times[j : j + 2]

    _check_no_reuse([i for pair in pairs for i in pair], [])
    return InterpolatedSeries(
        times=targets,
        values=out,
        source_pairs=tuple(pairs),
        weights=weights,
        variance_factors=(1.0 - weights) ** 2 + weights**2,
    )


def pair_interpolated(a: SampleSeries, b: SampleSeries):
    """Interpolate ``b`` onto the times of ``a`` and pair the results.

    The returned observations carry ``y_variance_factors`` so the corrected
    denominator stays unbiased.
    """
    interp = interpolate_disjoint(b, a.times)
    gaps = [
        max(abs(t - b.times[i0]), abs(t - b.times[i1]))
        for t, (i0, i1) in zip(a.times.tolist(), interp.source_pairs)
    ]
    report = AlignmentReport(
        pairs=tuple((i, pair) for i, pair in enumerate(interp.source_pairs)),
        max_time_gap=float(max(gaps)) if gaps else 0.0,
        points_reused=0,
        method=AlignmentMethod.INTERPOLATE_DISJOINT,
        dropped_a=0,
        dropped_b=len(b) - 2 * len(a),
    )
    obs = PairedObservations(a.values, interp.values, y_variance_factors=interp.variance_factors)
    return obs, report

