"""Core domain types: relays, consensuses, roles, and relay families."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace
from datetime import datetime
from enum import Enum
from typing import Iterable, Optional

from .errors import TorsynthError

FINGERPRINT_RE = re.compile(r"^[0-9A-F]{40}$")
NICKNAME_RE = re.compile(r"^[A-Za-z0-9]{1,19}$")


class RelayRole(Enum):
    """Exclusive role groups: middle, guard-only, exit-only, guard-and-exit."""

    MIDDLE = "middle"
    GUARD_ONLY = "guard_only"
    EXIT_ONLY = "exit_only"
    GUARD_AND_EXIT = "guard_and_exit"


@dataclass(frozen=True)
class Relay:
    """One router entry of a consensus.

    ``weight`` is the integer consensus weight ("w Bandwidth=..."), used
    interchangeably with bandwidth/capacity throughout the package.
    """

    fingerprint: str
    nickname: str
    address: str
    or_port: int
    weight: int
    flags: frozenset[str] = frozenset()
    dir_port: int = 0
    digest: str = ""
    published: str = "2020-01-01 00:00:00"
    # "w" line arguments other than Bandwidth, kept for round-tripping.
    weight_extras: tuple[str, ...] = ()
    # Unknown relay-level lines ("v", "pr", "a", ...), re-emitted verbatim.
    extra_lines: tuple[str, ...] = ()
    asn: Optional[int] = None
    family: Optional[str] = None

    def __post_init__(self) -> None:
        if not FINGERPRINT_RE.match(self.fingerprint):
            raise TorsynthError(
                f"invalid fingerprint {self.fingerprint!r}: "
                "expected 40 uppercase hex characters"
            )
        if not NICKNAME_RE.match(self.nickname):
            raise TorsynthError(
                f"relay {self.fingerprint}: invalid nickname {self.nickname!r}"
            )
        if self.weight < 0:
            raise TorsynthError(
                f"relay {self.fingerprint}: negative weight {self.weight}"
            )

    def with_weight(self, weight: int) -> "Relay":
        return replace(self, weight=weight)


@dataclass(frozen=True)
class Consensus:
    """A timestamped relay set plus opaque preamble/footer lines."""

    valid_after: datetime
    relays: tuple[Relay, ...]
    preamble: tuple[str, ...] = ()
    footer: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for relay in self.relays:
            if relay.fingerprint in seen:
                raise TorsynthError(
                    f"duplicate fingerprint {relay.fingerprint} in consensus"
                )
            seen.add(relay.fingerprint)

    def __len__(self) -> int:
        return len(self.relays)

    @property
    def total_weight(self) -> int:
        return sum(r.weight for r in self.relays)

    def with_relays(self, relays: Iterable[Relay]) -> "Consensus":
        return replace(self, relays=tuple(relays))


def role_of(relay: Relay) -> RelayRole:
    """Map a relay to its exclusive role group.

    A BadExit-flagged relay does not count as an exit: clients will not
    pick it for the exit position, so for scaling purposes it is a middle
    (or guard-only) relay.
    """
    is_guard = "Guard" in relay.flags
    is_exit = "Exit" in relay.flags and "BadExit" not in relay.flags
    if is_guard and is_exit:
        return RelayRole.GUARD_AND_EXIT
    if is_guard:
        return RelayRole.GUARD_ONLY
    if is_exit:
        return RelayRole.EXIT_ONLY
    return RelayRole.MIDDLE


def group_weights(consensus: Consensus) -> tuple[int, int, int, int]:
    """Total consensus weight per role group, ordered (M, G, E, D)."""
    totals = {role: 0 for role in RelayRole}
    for relay in consensus.relays:
        totals[role_of(relay)] += relay.weight
    return (
        totals[RelayRole.MIDDLE],
        totals[RelayRole.GUARD_ONLY],
        totals[RelayRole.EXIT_ONLY],
        totals[RelayRole.GUARD_AND_EXIT],
    )


def group_counts(consensus: Consensus) -> tuple[int, int, int, int]:
    """Relay count per role group, ordered (M, G, E, D)."""
    counts = {role: 0 for role in RelayRole}
    for relay in consensus.relays:
        counts[role_of(relay)] += 1
    return (
        counts[RelayRole.MIDDLE],
        counts[RelayRole.GUARD_ONLY],
        counts[RelayRole.EXIT_ONLY],
        counts[RelayRole.GUARD_AND_EXIT],
    )


def scale_weight(weight: int, factor: float) -> int:
    """Round ``weight * factor`` half away from zero.

    A strictly positive weight scaled by a strictly positive factor never
    becomes 0 (floored at 1), so no relay silently drops out of weighted
    selection.
    """
    scaled = weight * factor
    rounded = int(math.floor(abs(scaled) + 0.5))
    if rounded == 0 and weight > 0 and factor > 0:
        return 1
    return rounded


class _UnionFind:
    """Union-find over fingerprints with path compression."""

    def __init__(self) -> None:
        self._parent: dict[str, str] = {}

    def find(self, item: str) -> str:
        parent = self._parent.setdefault(item, item)
        if parent == item:
            return item
        root = self.find(parent)
        self._parent[item] = root
        return root

    def union(self, a: str, b: str) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self._parent[rb] = ra


@dataclass(frozen=True)
class FamilyPartition:
    """Disjoint relay families as fingerprint -> family-id assignment.

    Family identifiers are opaque. Every group has size >= 2; a singleton
    "family" is equivalent to no family and is never stored.
    """

    assignment: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        sizes: dict[str, int] = {}
        for fam in self.assignment.values():
            sizes[fam] = sizes.get(fam, 0) + 1
        for fam, size in sizes.items():
            if size < 2:
                raise TorsynthError(f"family {fam!r} has only {size} member")

    def __len__(self) -> int:
        return len(self.assignment)

    def __contains__(self, fingerprint: str) -> bool:
        return fingerprint in self.assignment

    def family_of(self, fingerprint: str) -> Optional[str]:
        return self.assignment.get(fingerprint)

    def groups(self) -> dict[str, frozenset[str]]:
        members: dict[str, set[str]] = {}
        for fp, fam in self.assignment.items():
            members.setdefault(fam, set()).add(fp)
        return {fam: frozenset(fps) for fam, fps in members.items()}


def build_family_partition(
    declared_pairs: Iterable[tuple[str, str]], consensus: Consensus
) -> FamilyPartition:
    """Connected components of the mutual family-declaration graph.

    ``declared_pairs`` are directed (declarer, declared) entries; an edge
    exists only where both directions were declared, matching deployed Tor
    semantics. The family relation is then taken as transitive, i.e. the
    components of that graph. Singleton components are dropped.
    """
    known = {r.fingerprint for r in consensus.relays}
    directed: set[tuple[str, str]] = set()
    for declarer, declared in declared_pairs:
        for fp in (declarer, declared):
            if fp not in known:
                raise TorsynthError(
                    f"family declaration references unknown fingerprint {fp}"
                )
        if declarer != declared:
            directed.add((declarer, declared))

    uf = _UnionFind()
    touched: set[str] = set()
    for a, b in directed:
        if (b, a) in directed:
            uf.union(a, b)
            touched.update((a, b))

    components: dict[str, set[str]] = {}
    for fp in touched:
        components.setdefault(uf.find(fp), set()).add(fp)

    assignment: dict[str, str] = {}
    for members in components.values():
        if len(members) < 2:
            continue
        fam_id = min(members)
        for fp in members:
            assignment[fp] = fam_id
    return FamilyPartition(assignment)
