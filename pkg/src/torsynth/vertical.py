"""Vertical scaling: new weights for existing relays.

Three weight maps are supported: a uniform factor, per-quantile factors
(by weight rank), and per-role factors with group balancing between
guard-only, exit-only, and guard-and-exit relays.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import InfeasibleBalanceError, ParameterError
from .model import Consensus, Relay, RelayRole, group_weights, role_of, scale_weight


@dataclass(frozen=True)
class RoleFactors:
    """Requested group factors for middle, guard, and exit capacity."""

    f_middle: float
    f_guard: float
    f_exit: float

    def __post_init__(self) -> None:
        if min(self.f_middle, self.f_guard, self.f_exit) < 0:
            raise ParameterError("role factors must be non-negative")


@dataclass(frozen=True)
class ResolvedGroupFactors:
    """Per-relay factors per role group (M, G, E, D) after balancing."""

    fbar_m: float
    fbar_g: float
    fbar_e: float
    fbar_d: float

    def for_role(self, role: RelayRole) -> float:
        return {
            RelayRole.MIDDLE: self.fbar_m,
            RelayRole.GUARD_ONLY: self.fbar_g,
            RelayRole.EXIT_ONLY: self.fbar_e,
            RelayRole.GUARD_AND_EXIT: self.fbar_d,
        }[role]


def _require_nonempty(consensus: Consensus) -> None:
    if len(consensus) == 0:
        raise ParameterError("cannot scale an empty consensus")


def scale_uniform(consensus: Consensus, factor: float) -> Consensus:
    """Multiply every relay's weight by ``factor``."""
    _require_nonempty(consensus)
    if factor <= 0:
        raise ParameterError(f"uniform factor must be > 0, got {factor}")
    return consensus.with_relays(
        relay.with_weight(scale_weight(relay.weight, factor))
        for relay in consensus.relays
    )


def scale_by_quantile(consensus: Consensus, factors: list[float]) -> Consensus:
    """Scale relays by their weight rank.

    Relays sorted by weight (ties by fingerprint) are split into
    ``len(factors)`` contiguous buckets of near-equal size, larger buckets
    first; bucket k is scaled by factors[k]. Relay order and identities
    are unchanged.
    """
    _require_nonempty(consensus)
    if not factors:
        raise ParameterError("quantile factor list must be non-empty")
    if min(factors) < 0:
        raise ParameterError("quantile factors must be non-negative")

    ranked = sorted(consensus.relays, key=lambda r: (r.weight, r.fingerprint))
    n, k = len(ranked), len(factors)
    base, remainder = divmod(n, k)
    factor_for: dict[str, float] = {}
    start = 0
    for bucket, factor in enumerate(factors):
        size = base + (1 if bucket < remainder else 0)
        for relay in ranked[start : start + size]:
            factor_for[relay.fingerprint] = factor
        start += size

    return consensus.with_relays(
        relay.with_weight(scale_weight(relay.weight, factor_for[relay.fingerprint]))
        for relay in consensus.relays
    )


def derive_group_factors(
    w_g: float, w_e: float, w_d: float, f_guard: float, f_exit: float
) -> ResolvedGroupFactors:
    """Balance guard/exit group factors across the shared guard-and-exit group.

    The guard-and-exit group gets the smaller of the two factors; the
    other side's per-relay factor is then the unique value keeping that
    side's total at its requested multiple:

        f_guard * (w_G + w_D) = w_G * fbar_G + w_D * fbar_D
        f_exit  * (w_E + w_D) = w_E * fbar_E + w_D * fbar_D

    fbar_m is returned as 1.0 and is meant to be overridden by the caller
    (middle relays need no balancing).
    """
    if min(w_g, w_e, w_d) < 0:
        raise ParameterError("group weights must be non-negative")
    if min(f_guard, f_exit) < 0:
        raise ParameterError("role factors must be non-negative")

    fbar_d = min(f_guard, f_exit)
    if f_guard <= f_exit:
        fbar_g = f_guard
        residual = f_exit * (w_e + w_d) - fbar_d * w_d
        if w_e > 0:
            fbar_e = residual / w_e
        elif abs(residual) < 1e-12 * max(1.0, w_d):
            fbar_e = f_exit
        else:
            raise InfeasibleBalanceError(
                "cannot realize exit factor: exit-only group has zero weight"
            )
    else:
        fbar_e = f_exit
        residual = f_guard * (w_g + w_d) - fbar_d * w_d
        if w_g > 0:
            fbar_g = residual / w_g
        elif abs(residual) < 1e-12 * max(1.0, w_d):
            fbar_g = f_guard
        else:
            raise InfeasibleBalanceError(
                "cannot realize guard factor: guard-only group has zero weight"
            )
    return ResolvedGroupFactors(fbar_m=1.0, fbar_g=fbar_g, fbar_e=fbar_e, fbar_d=fbar_d)


def resolve_role_factors(
    consensus: Consensus, factors: RoleFactors
) -> ResolvedGroupFactors:
    """Derive per-relay factors for a consensus from requested role factors."""
    _, w_g, w_e, w_d = group_weights(consensus)
    resolved = derive_group_factors(w_g, w_e, w_d, factors.f_guard, factors.f_exit)
    return ResolvedGroupFactors(
        fbar_m=factors.f_middle,
        fbar_g=resolved.fbar_g,
        fbar_e=resolved.fbar_e,
        fbar_d=resolved.fbar_d,
    )


def scale_by_role(consensus: Consensus, factors: RoleFactors) -> Consensus:
    """Scale each relay by the balanced factor of its role group.

    The summed weight of Guard-flagged relays ends up at f_guard times its
    original total, and of Exit-flagged relays at f_exit times, up to
    rounding (at most 0.5 per relay in the group).
    """
    _require_nonempty(consensus)
    resolved = resolve_role_factors(consensus, factors)

    def new_weight(relay: Relay) -> int:
        return scale_weight(relay.weight, resolved.for_role(role_of(relay)))

    return consensus.with_relays(
        relay.with_weight(new_weight(relay)) for relay in consensus.relays
    )
