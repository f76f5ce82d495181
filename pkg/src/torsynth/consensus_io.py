"""Parse and serialize Tor v3 network-status consensuses and sidecar files.

Sidecars are a prefix-to-ASN table ("<CIDR> <ASN>" lines) and a family
declarations file (whitespace-separated fingerprints, first one declaring).
"""

from __future__ import annotations

import base64
import binascii
import ipaddress
import re
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from typing import Iterable, Optional

from .errors import (
    MalformedDocumentError,
    RelayParseError,
    SerializationError,
    TableLoadError,
)
from .model import FINGERPRINT_RE, Consensus, FamilyPartition, Relay

_VALID_AFTER_RE = re.compile(r"^valid-after (\d{4}-\d{2}-\d{2}) (\d{2}:\d{2}:\d{2})$")


def _decode_identity(b64: str) -> str:
    padded = b64 + "=" * (-len(b64) % 4)
    try:
        raw = base64.b64decode(padded, validate=True)
    except binascii.Error as exc:
        raise MalformedDocumentError(f"bad identity digest {b64!r}") from exc
    if len(raw) != 20:
        raise MalformedDocumentError(f"identity digest {b64!r} is not 20 bytes")
    return raw.hex().upper()


def _encode_identity(fingerprint: str) -> str:
    return base64.b64encode(bytes.fromhex(fingerprint)).decode("ascii").rstrip("=")


def parse_consensus(text: bytes | str) -> Consensus:
    """Parse a v3 network-status consensus document.

    Requires "valid-after" plus per-relay "r"/"s"/"w Bandwidth=" lines.
    Unknown preamble/footer lines and unknown relay-level lines are kept
    verbatim so the document round-trips.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    lines = text.splitlines()

    preamble: list[str] = []
    footer: list[str] = []
    relays: list[Relay] = []
    seen: set[str] = set()
    valid_after: Optional[datetime] = None

    i = 0
    while i < len(lines) and not lines[i].startswith("r "):
        preamble.append(lines[i])
        match = _VALID_AFTER_RE.match(lines[i])
        if match:
            valid_after = datetime.strptime(
                f"{match.group(1)} {match.group(2)}", "%Y-%m-%d %H:%M:%S"
            ).replace(tzinfo=timezone.utc)
        i += 1
    if valid_after is None:
        raise MalformedDocumentError("no valid-after line found")

    while i < len(lines):
        line = lines[i]
        if line.startswith(("directory-footer", "directory-signature")):
            footer = lines[i:]
            break
        if not line.startswith("r "):
            raise MalformedDocumentError(f"unexpected line outside relay entry: {line!r}")

        parts = line.split(" ")
        if len(parts) != 9:
            raise MalformedDocumentError(f"malformed r line: {line!r}")
        _, nickname, identity, digest, date, time_, address, or_port, dir_port = parts
        fingerprint = _decode_identity(identity)
        if fingerprint in seen:
            raise MalformedDocumentError(f"duplicate fingerprint {fingerprint}")
        seen.add(fingerprint)

        flags: frozenset[str] = frozenset()
        weight: Optional[int] = None
        weight_extras: tuple[str, ...] = ()
        extra_lines: list[str] = []
        i += 1
        while i < len(lines):
            entry_line = lines[i]
            if entry_line.startswith("r ") or entry_line.startswith(
                ("directory-footer", "directory-signature")
            ):
                break
            if entry_line.startswith("s ") or entry_line == "s":
                flags = frozenset(entry_line.split(" ")[1:])
            elif entry_line.startswith("w "):
                args = entry_line.split(" ")[1:]
                extras = []
                for arg in args:
                    if arg.startswith("Bandwidth="):
                        weight = int(arg.removeprefix("Bandwidth="))
                    else:
                        extras.append(arg)
                weight_extras = tuple(extras)
                if weight is None:
                    raise RelayParseError(
                        f"relay {nickname} ({fingerprint}): w line without Bandwidth"
                    )
            else:
                extra_lines.append(entry_line)
            i += 1

        if weight is None:
            raise RelayParseError(
                f"relay {nickname} ({fingerprint}): missing w Bandwidth line"
            )
        relays.append(
            Relay(
                fingerprint=fingerprint,
                nickname=nickname,
                address=address,
                or_port=int(or_port),
                weight=weight,
                flags=flags,
                dir_port=int(dir_port),
                digest=digest,
                published=f"{date} {time_}",
                weight_extras=weight_extras,
                extra_lines=tuple(extra_lines),
            )
        )

    return Consensus(
        valid_after=valid_after,
        relays=tuple(relays),
        preamble=tuple(preamble),
        footer=tuple(footer),
    )


def _relay_lines(relay: Relay) -> list[str]:
    try:
        ipaddress.IPv4Address(relay.address)
    except ValueError as exc:
        raise SerializationError(
            f"relay {relay.fingerprint}: invalid IPv4 address {relay.address!r}"
        ) from exc
    if not 0 <= relay.or_port <= 65535 or not 0 <= relay.dir_port <= 65535:
        raise SerializationError(f"relay {relay.fingerprint}: port out of range")

    lines = [
        f"r {relay.nickname} {_encode_identity(relay.fingerprint)} {relay.digest} "
        f"{relay.published} {relay.address} {relay.or_port} {relay.dir_port}"
    ]
    # dir-spec entry order: r, a, s, v/pr/..., w, p.
    lines += [ln for ln in relay.extra_lines if ln.startswith("a ")]
    lines.append("s " + " ".join(sorted(relay.flags)))
    lines += [
        ln for ln in relay.extra_lines if not ln.startswith(("a ", "p "))
    ]
    w_line = f"w Bandwidth={relay.weight}"
    if relay.weight_extras:
        w_line += " " + " ".join(relay.weight_extras)
    lines.append(w_line)
    lines += [ln for ln in relay.extra_lines if ln.startswith("p ")]
    return lines


def serialize_consensus(consensus: Consensus) -> bytes:
    """Emit a v3 consensus document, relays in ascending fingerprint order.

    The preamble is preserved with valid-after refreshed from the model;
    footer lines (including signatures) are preserved as opaque text.
    """
    stamp = consensus.valid_after.strftime("%Y-%m-%d %H:%M:%S")
    lines: list[str] = []
    for line in consensus.preamble:
        if _VALID_AFTER_RE.match(line):
            lines.append(f"valid-after {stamp}")
        else:
            lines.append(line)
    for relay in sorted(consensus.relays, key=lambda r: r.fingerprint):
        lines.extend(_relay_lines(relay))
    lines.extend(consensus.footer)
    return ("\n".join(lines) + "\n").encode("utf-8")


@dataclass(frozen=True)
class AsnTable:
    """Longest-prefix-match table from IPv4 prefixes to AS numbers."""

    entries: tuple[tuple[ipaddress.IPv4Network, int], ...]

    def __post_init__(self) -> None:
        by_length: dict[int, dict[int, int]] = {}
        inventory: dict[int, list[ipaddress.IPv4Network]] = {}
        for network, asn in self.entries:
            bucket = by_length.setdefault(network.prefixlen, {})
            key = int(network.network_address)
            if key in bucket:
                raise TableLoadError(f"duplicate prefix {network}")
            bucket[key] = asn
            inventory.setdefault(asn, []).append(network)
        object.__setattr__(self, "_by_length", by_length)
        object.__setattr__(self, "_inventory", inventory)

    def lookup(self, address: str) -> Optional[int]:
        """Return the AS of the most specific covering prefix, if any."""
        addr = int(ipaddress.IPv4Address(address))
        by_length: dict[int, dict[int, int]] = getattr(self, "_by_length")
        for length in sorted(by_length, reverse=True):
            masked = addr & (0xFFFFFFFF << (32 - length)) if length else 0
            asn = by_length[length].get(masked)
            if asn is not None:
                return asn
        return None

    def prefixes_of(self, asn: int) -> tuple[ipaddress.IPv4Network, ...]:
        inventory: dict[int, list[ipaddress.IPv4Network]] = getattr(self, "_inventory")
        return tuple(inventory.get(asn, ()))


def load_asn_table(text: str | Iterable[str]) -> AsnTable:
    """Load "<IPv4>/<masklen> <ASN>" lines; "#" comments and blanks allowed."""
    if isinstance(text, str):
        text = text.splitlines()
    entries: list[tuple[ipaddress.IPv4Network, int]] = []
    for lineno, raw in enumerate(text, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise TableLoadError(f"line {lineno}: expected '<CIDR> <ASN>', got {raw!r}")
        try:
            network = ipaddress.IPv4Network(parts[0], strict=True)
            asn = int(parts[1])
        except ValueError as exc:
            raise TableLoadError(f"line {lineno}: {exc}") from exc
        if asn < 0:
            raise TableLoadError(f"line {lineno}: negative ASN {asn}")
        entries.append((network, asn))
    return AsnTable(tuple(entries))


def annotate_asns(consensus: Consensus, table: AsnTable) -> Consensus:
    """Set each relay's asn from the table; no match leaves it absent."""
    return consensus.with_relays(
        replace(relay, asn=table.lookup(relay.address)) for relay in consensus.relays
    )


@dataclass(frozen=True)
class FamilyDeclarations:
    """Raw family lines: (declaring fingerprint, fingerprints it names)."""

    entries: tuple[tuple[str, tuple[str, ...]], ...]

    def pairs(self) -> list[tuple[str, str]]:
        return [(declarer, named) for declarer, names in self.entries for named in names]


def load_family_declarations(text: str | Iterable[str]) -> FamilyDeclarations:
    """Load family lines: declarer fingerprint then the fingerprints it names."""
    if isinstance(text, str):
        text = text.splitlines()
    entries: list[tuple[str, tuple[str, ...]]] = []
    for lineno, raw in enumerate(text, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fingerprints = line.split()
        for fp in fingerprints:
            if not FINGERPRINT_RE.match(fp):
                raise TableLoadError(f"line {lineno}: invalid fingerprint {fp!r}")
        entries.append((fingerprints[0], tuple(fingerprints[1:])))
    return FamilyDeclarations(tuple(entries))


def serialize_family_partition(partition: FamilyPartition) -> str:
    """Write a partition as mutual declarations in the sidecar format."""
    lines = []
    for _, members in sorted(partition.groups().items()):
        ordered = sorted(members)
        for fp in ordered:
            others = [other for other in ordered if other != fp]
            lines.append(" ".join([fp, *others]))
    return "\n".join(lines) + ("\n" if lines else "")
