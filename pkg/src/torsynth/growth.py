"""Historical growth metrics: relay count, mean weight, and the annual
horizontal/vertical growth rates derived from them."""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from datetime import datetime, timedelta
from typing import Optional, Sequence

from .errors import ParameterError
from .model import Consensus

DEFAULT_DELTA_T = timedelta(days=365)
DEFAULT_SNAP_TOLERANCE = timedelta(hours=36)
DEFAULT_SMOOTHING_WINDOW = timedelta(days=90)


@dataclass(frozen=True)
class BaseMetricPoint:
    """Relay count n and average weight per relay b at time t."""

    t: datetime
    n: float
    b: float


@dataclass(frozen=True)
class GrowthPoint:
    """Growth rates around t; 1.0 means neither growth nor shrinkage."""

    t: datetime
    horizontal: float
    vertical: float


@dataclass(frozen=True)
class GrowthSeries:
    base: tuple[BaseMetricPoint, ...]
    rates: tuple[GrowthPoint, ...]
    delta_t: timedelta
    skipped: tuple[datetime, ...] = ()


def base_metrics(consensus: Consensus) -> BaseMetricPoint:
    """n = relay count, b = total weight / n, t = valid-after."""
    if len(consensus) == 0:
        raise ParameterError("cannot compute base metrics of an empty consensus")
    n = len(consensus)
    return BaseMetricPoint(
        t=consensus.valid_after, n=float(n), b=consensus.total_weight / n
    )


def _nearest(
    times: Sequence[datetime],
    points: Sequence[BaseMetricPoint],
    target: datetime,
    tolerance: timedelta,
) -> Optional[BaseMetricPoint]:
    idx = bisect.bisect_left(times, target)
    best: Optional[BaseMetricPoint] = None
    for j in (idx - 1, idx):
        if 0 <= j < len(points):
            if best is None or abs(points[j].t - target) < abs(best.t - target):
                best = points[j]
    if best is not None and abs(best.t - target) <= tolerance:
        return best
    return None


def growth_rates(
    series: Sequence[BaseMetricPoint],
    delta_t: timedelta = DEFAULT_DELTA_T,
    snap_tolerance: timedelta = DEFAULT_SNAP_TOLERANCE,
) -> GrowthSeries:
    """Centered growth rates H(t) = n(t+dt/2)/n(t-dt/2), V likewise on b.

    Rates are evaluated at every candidate time a sample can serve as a
    window endpoint for (each t_i +- delta_t/2). Both endpoints snap to
    the nearest sample within ``snap_tolerance``; windows with a missing
    endpoint are undefined rather than interpolated. Points with a zero
    denominator are skipped and reported via ``GrowthSeries.skipped``.
    """
    if delta_t <= timedelta(0):
        raise ParameterError("delta_t must be positive")
    points = sorted(series, key=lambda p: p.t)
    for prev, cur in zip(points, points[1:]):
        if prev.t >= cur.t:
            raise ParameterError(f"duplicate sample timestamp {cur.t}")
    times = [p.t for p in points]
    half = delta_t / 2
    candidates = sorted({t + half for t in times} | {t - half for t in times})

    rates: list[GrowthPoint] = []
    skipped: list[datetime] = []
    for t in candidates:
        before = _nearest(times, points, t - half, snap_tolerance)
        after = _nearest(times, points, t + half, snap_tolerance)
        if before is None or after is None:
            continue
        if before.n == 0 or before.b == 0:
            skipped.append(t)
            continue
        rates.append(
            GrowthPoint(
                t=t,
                horizontal=after.n / before.n,
                vertical=after.b / before.b,
            )
        )
    return GrowthSeries(
        base=tuple(points),
        rates=tuple(rates),
        delta_t=delta_t,
        skipped=tuple(skipped),
    )


def moving_average(
    series: Sequence[tuple[datetime, float]], window: timedelta
) -> list[tuple[datetime, float]]:
    """Time-based centered moving average; output timestamps equal input's."""
    points = sorted(series, key=lambda p: p[0])
    times = [t for t, _ in points]
    values = [v for _, v in points]
    half = window / 2
    out: list[tuple[datetime, float]] = []
    for t, _ in points:
        lo = bisect.bisect_left(times, t - half)
        hi = bisect.bisect_right(times, t + half)
        chunk = values[lo:hi]
        out.append((t, sum(chunk) / len(chunk)))
    return out
