"""Similarity metrics between consensuses: weight CDFs and the per-rank
deviation of sorted weights, normalized by the reference mean weight."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .model import Consensus


@dataclass(frozen=True)
class DeviationReport:
    """Per-rank weight deviations (percent) and their median."""

    per_rank_deviations: tuple[float, ...]
    median_deviation: float
    n_compared: int
    cdf_scaled: tuple[tuple[int, float], ...]
    cdf_reference: tuple[tuple[int, float], ...]


def weight_cdf(
    consensus: Consensus, upper_clip: float | None = None
) -> list[tuple[int, float]]:
    """Empirical CDF of relay weights as (weight, cumulative share) points.

    ``upper_clip`` truncates the emitted points at the given quantile for
    plot readability; it never affects any metric.
    """
    if len(consensus) == 0:
        raise ParameterError("cannot compute the CDF of an empty consensus")
    weights = sorted(r.weight for r in consensus.relays)
    n = len(weights)
    keep = n
    if upper_clip is not None:
        if not 0 < upper_clip <= 1:
            raise ParameterError(f"upper_clip must be in (0, 1], got {upper_clip}")
        keep = int(upper_clip * n + 1e-9)
    points: list[tuple[int, float]] = []
    for i, w in enumerate(weights[:keep]):
        share = (i + 1) / n
        if points and points[-1][0] == w:
            points[-1] = (w, share)
        else:
            points.append((w, share))
    return points


def per_rank_deviation(scaled: Consensus, reference: Consensus) -> DeviationReport:
    """Rank-by-rank comparison of the two weight distributions.

    Both weight lists are sorted ascending; when sizes differ, each is
    resampled to the smaller size by linear quantile interpolation. The
    deviation at rank i is |a_i - b_i| scaled to the reference's mean
    relay weight, in percent.
    """
    if len(scaled) == 0 or len(reference) == 0:
        raise ParameterError("both consensuses must be non-empty")
    a = np.sort([r.weight for r in scaled.relays]).astype(float)
    b = np.sort([r.weight for r in reference.relays]).astype(float)
    m = min(len(a), len(b))
    if len(a) != len(b):
        quantiles = np.linspace(0.0, 1.0, m) if m > 1 else np.array([0.5])
        a = np.quantile(a, quantiles)
        b = np.quantile(b, quantiles)

    mean_ref = float(np.mean([r.weight for r in reference.relays]))
    if mean_ref == 0:
        raise ParameterError("reference consensus has zero mean weight")
    deviations = np.abs(a - b) / mean_ref * 100.0

    return DeviationReport(
        per_rank_deviations=tuple(float(d) for d in deviations),
        median_deviation=float(np.median(deviations)),
        n_compared=m,
        cdf_scaled=tuple(weight_cdf(scaled)),
        cdf_reference=tuple(weight_cdf(reference)),
    )
