"""Horizontal scaling: synthesize new relays from sampled base relays.

New relays copy their base relay's weight, flags, and preserved lines,
get fresh identities, addresses drawn from the base relay's AS, and
family memberships reproducing the original family statistics.
"""

from __future__ import annotations

import base64
import ipaddress
import itertools
import logging
import math
import random
from dataclasses import dataclass, replace
from typing import Optional, Sequence

from .consensus_io import AsnTable
from .errors import AddressExhaustionError, ParameterError, UnknownAsnError
from .model import Consensus, FamilyPartition, Relay, group_counts, role_of
from .vertical import ResolvedGroupFactors, RoleFactors, derive_group_factors

logger = logging.getLogger(__name__)

_ADDRESS_RETRIES = 256


@dataclass(frozen=True)
class HorizontalConfig:
    """Parameters of one horizontal scaling run."""

    f: float
    seed: int
    p_new: float = 0.5
    role_weights: Optional[RoleFactors] = None

    def __post_init__(self) -> None:
        if self.f <= 1:
            raise ParameterError(f"horizontal factor must be > 1, got {self.f}")
        if not 0 <= self.p_new <= 1:
            raise ParameterError(f"p_new must be in [0, 1], got {self.p_new}")
        if not 0 <= self.seed < 2**64:
            raise ParameterError("seed must be an unsigned 64-bit integer")


@dataclass(frozen=True)
class FamilyStats:
    """Empirical family statistics of a consensus.

    ``same_as_defined`` is False when the consensus has no family pairs at
    all, in which case ``p_same_as`` is reported as 0 by convention.
    """

    p_fam: float
    p_same_as: float
    size_distribution: tuple[int, ...]
    same_as_defined: bool = True


def compute_family_stats(
    consensus: Consensus, partition: FamilyPartition
) -> FamilyStats:
    """p_fam, p_same_as, and the family-size multiset of a consensus.

    Relays without an ASN annotation count as pairwise different-AS.
    """
    if len(consensus) == 0:
        raise ParameterError("cannot compute family stats of an empty consensus")
    asn_of = {r.fingerprint: r.asn for r in consensus.relays}

    in_family = sum(1 for r in consensus.relays if r.fingerprint in partition)
    p_fam = in_family / len(consensus)

    total_pairs = 0
    same_as_pairs = 0
    sizes: list[int] = []
    for members in partition.groups().values():
        present = sorted(fp for fp in members if fp in asn_of)
        sizes.append(len(present))
        for a, b in itertools.combinations(present, 2):
            total_pairs += 1
            if asn_of[a] is not None and asn_of[a] == asn_of[b]:
                same_as_pairs += 1

    return FamilyStats(
        p_fam=p_fam,
        p_same_as=same_as_pairs / total_pairs if total_pairs else 0.0,
        size_distribution=tuple(sorted(sizes)),
        same_as_defined=total_pairs > 0,
    )


def derive_role_sampling_weights(
    n_g: int, n_e: int, n_d: int, role_weights: RoleFactors
) -> ResolvedGroupFactors:
    """Balance role weights over relay counts instead of bandwidth totals."""
    resolved = derive_group_factors(
        n_g, n_e, n_d, role_weights.f_guard, role_weights.f_exit
    )
    return replace(resolved, fbar_m=role_weights.f_middle)


def sample_base_relays(
    consensus: Consensus,
    count: int,
    factors: Optional[ResolvedGroupFactors],
    rng: random.Random,
) -> list[Relay]:
    """Draw base relays with replacement, optionally role-weighted."""
    if count < 1:
        raise ParameterError(f"sample count must be >= 1, got {count}")
    if len(consensus) == 0:
        raise ParameterError("cannot sample from an empty consensus")
    if factors is None:
        return rng.choices(consensus.relays, k=count)
    weights = [factors.for_role(role_of(r)) for r in consensus.relays]
    if sum(weights) <= 0:
        raise ParameterError("all sampling weights are zero")
    return rng.choices(consensus.relays, weights=weights, k=count)


def generate_identity(
    existing_fingerprints: set[str],
    existing_nicknames: set[str],
    rng: random.Random,
) -> tuple[str, str]:
    """Fresh (fingerprint, nickname) pair, collision-free by retry."""
    while True:
        fingerprint = f"{rng.getrandbits(160):040X}"
        if fingerprint not in existing_fingerprints:
            break
    while True:
        nickname = "syn" + f"{rng.getrandbits(32):08x}"
        if nickname not in existing_nicknames:
            break
    return fingerprint, nickname


def _usable_range(network: ipaddress.IPv4Network) -> tuple[int, int]:
    """(first usable host as int, usable count); skips network/broadcast."""
    if network.prefixlen >= 31:
        return int(network.network_address), network.num_addresses
    return int(network.network_address) + 1, network.num_addresses - 2


def _draw_address(
    networks: Sequence[ipaddress.IPv4Network],
    exclude: set[str],
    rng: random.Random,
) -> str:
    ranges = [_usable_range(n) for n in networks]
    total = sum(count for _, count in ranges)
    if total <= 0:
        raise AddressExhaustionError("prefix set has no usable addresses")

    for _ in range(_ADDRESS_RETRIES):
        offset = rng.randrange(total)
        for first, count in ranges:
            if offset < count:
                candidate = str(ipaddress.IPv4Address(first + offset))
                break
            offset -= count
        if candidate not in exclude:
            return candidate

    # Space is nearly full (or tiny): fall back to exhaustive choice.
    if total > 1 << 20:
        raise AddressExhaustionError("address sampling failed to find a free address")
    remaining = [
        str(ipaddress.IPv4Address(first + off))
        for first, count in ranges
        for off in range(count)
        if str(ipaddress.IPv4Address(first + off)) not in exclude
    ]
    if not remaining:
        raise AddressExhaustionError("no unused address left in the candidate space")
    return rng.choice(remaining)


def generate_ip_in_as(
    table: AsnTable, asn: int, exclude: set[str], rng: random.Random
) -> str:
    """Uniform host address inside one of the AS's prefixes.

    Prefixes are picked with probability proportional to their usable
    address-space size.
    """
    prefixes = table.prefixes_of(asn)
    if not prefixes:
        raise UnknownAsnError(f"AS{asn} has no prefixes in the table")
    return _draw_address(prefixes, exclude, rng)


def generate_ip_in_slash16(
    address: str, exclude: set[str], rng: random.Random
) -> str:
    """Uniform address in the /16 of ``address`` (fallback without AS data)."""
    subnet = ipaddress.IPv4Network(f"{address}/16", strict=False)
    return _draw_address([subnet], exclude, rng)


def assign_families(
    new_relays: Sequence[Relay],
    consensus: Consensus,
    partition: FamilyPartition,
    stats: FamilyStats,
    p_new: float,
    rng: random.Random,
) -> FamilyPartition:
    """Extend the partition with family memberships for the new relays.

    Each new relay independently joins a family with probability p_fam.
    Family-bound relays go to a brand-new family with probability p_new,
    otherwise they adopt the family of a reference relay sampled from the
    original in-family relays; with probability p_same_as that draw is
    restricted to relays in the new relay's AS (unrestricted fallback when
    none exists). New families are filled sequentially from sizes drawn
    out of the observed size distribution; a trailing one-member family is
    dissolved.
    """
    if not 0 <= p_new <= 1:
        raise ParameterError(f"p_new must be in [0, 1], got {p_new}")
    in_family_originals = [
        r for r in consensus.relays if r.fingerprint in partition
    ]
    if stats.p_fam > 0 and p_new < 1 and not in_family_originals:
        logger.warning(
            "original consensus has no families; routing all family-bound "
            "relays to new families"
        )

    assignment = dict(partition.assignment)
    existing_ids = set(assignment.values())
    fam_counter = itertools.count()
    open_family: Optional[tuple[str, int, list[str]]] = None

    def fresh_family_id() -> str:
        while True:
            fam_id = f"synfam{next(fam_counter):05d}"
            if fam_id not in existing_ids:
                return fam_id

    for relay in new_relays:
        if rng.random() >= stats.p_fam:
            continue
        join_new = not in_family_originals or rng.random() < p_new
        if not join_new:
            candidates = in_family_originals
            if rng.random() < stats.p_same_as and relay.asn is not None:
                same_as = [c for c in candidates if c.asn == relay.asn]
                if same_as:
                    candidates = same_as
            reference = rng.choice(candidates)
            assignment[relay.fingerprint] = assignment[reference.fingerprint]
            continue

        if open_family is None:
            size = (
                rng.choice(stats.size_distribution)
                if stats.size_distribution
                else 2
            )
            open_family = (fresh_family_id(), max(size, 2), [])
        fam_id, target, members = open_family
        members.append(relay.fingerprint)
        assignment[relay.fingerprint] = fam_id
        if len(members) >= target:
            open_family = None

    if open_family is not None and len(open_family[2]) == 1:
        del assignment[open_family[2][0]]
    return FamilyPartition(assignment)


def scale_horizontal(
    consensus: Consensus,
    partition: FamilyPartition,
    table: AsnTable,
    config: HorizontalConfig,
) -> tuple[Consensus, FamilyPartition]:
    """Grow the consensus to round(f * |C|) relays.

    Fully deterministic given ``config.seed``: base sampling, identities,
    addresses, and family assignment all consume a single seeded stream in
    a fixed order. Original relays are returned unmodified.
    """
    if len(consensus) == 0:
        raise ParameterError("cannot scale an empty consensus")
    n_new = int(math.floor((config.f - 1) * len(consensus) + 0.5))
    if n_new < 1:
        raise ParameterError(f"factor {config.f} yields no new relays")

    factors: Optional[ResolvedGroupFactors] = None
    if config.role_weights is not None:
        _, n_g, n_e, n_d = group_counts(consensus)
        factors = derive_role_sampling_weights(n_g, n_e, n_d, config.role_weights)

    rng = random.Random(config.seed)
    bases = sample_base_relays(consensus, n_new, factors, rng)

    fingerprints = {r.fingerprint for r in consensus.relays}
    nicknames = {r.nickname for r in consensus.relays}
    used_addresses = {r.address for r in consensus.relays}

    new_relays: list[Relay] = []
    for b in bases:
        fingerprint, nickname = generate_identity(fingerprints, nicknames, rng)
        fingerprints.add(fingerprint)
        nicknames.add(nickname)
        digest = base64.b64encode(rng.getrandbits(160).to_bytes(20, "big")).decode(
            "ascii"
        ).rstrip("=")

        if b.asn is not None:
            # Retry guards against nested foreign prefixes capturing the draw.
            for _ in range(_ADDRESS_RETRIES):
                address = generate_ip_in_as(table, b.asn, used_addresses, rng)
                if table.lookup(address) == b.asn:
                    break
                used_addresses.add(address)
            else:
                raise AddressExhaustionError(
                    f"cannot draw an address resolving to AS{b.asn}"
                )
        else:
            address = generate_ip_in_slash16(b.address, used_addresses, rng)
        used_addresses.add(address)

        new_relays.append(
            replace(
                b,
                fingerprint=fingerprint,
                nickname=nickname,
                address=address,
                digest=digest,
                asn=table.lookup(address),
                family=None,
            )
        )

    stats = compute_family_stats(consensus, partition)
    extended = assign_families(
        new_relays, consensus, partition, stats, config.p_new, rng
    )
    new_relays = [
        replace(r, family=extended.family_of(r.fingerprint)) for r in new_relays
    ]
    scaled = consensus.with_relays((*consensus.relays, *new_relays))
    return scaled, extended
