import random
from datetime import datetime, timezone
from pathlib import Path

import pytest

from torsynth.model import Consensus, Relay

DATA_DIR = Path(__file__).parent / "data"
EXCERPT_PATH = DATA_DIR / "consensus-excerpt.txt"

VALID_AFTER = datetime(2020, 1, 15, 12, 0, 0, tzinfo=timezone.utc)


def make_relay(index: int, weight: int = 100, flags=(), address=None, **kwargs) -> Relay:
    """Deterministic relay with a fingerprint derived from ``index``."""
    return Relay(
        fingerprint=f"{index:040X}",
        nickname=f"relay{index}",
        address=address or f"10.{(index >> 8) % 256}.{index % 256}.1",
        or_port=9001,
        weight=weight,
        flags=frozenset(flags),
        **kwargs,
    )


def make_consensus(relays, valid_after=VALID_AFTER, **kwargs) -> Consensus:
    return Consensus(valid_after=valid_after, relays=tuple(relays), **kwargs)


def random_consensus(n: int, seed: int = 0, max_weight: int = 100_000) -> Consensus:
    """Random consensus with a realistic mix of roles."""
    rng = random.Random(seed)
    relays = []
    for i in range(n):
        flags = {"Running", "Valid", "Fast"}
        roll = rng.random()
        if roll < 0.25:
            flags.add("Guard")
        elif roll < 0.45:
            flags.add("Exit")
        elif roll < 0.55:
            flags.update(("Guard", "Exit"))
        relays.append(
            make_relay(i, weight=rng.randrange(1, max_weight), flags=flags)
        )
    return make_consensus(relays)


@pytest.fixture(scope="session")
def excerpt_text() -> bytes:
    return EXCERPT_PATH.read_bytes()


@pytest.fixture(scope="session")
def excerpt_consensus(excerpt_text):
    from torsynth.consensus_io import parse_consensus

    return parse_consensus(excerpt_text)
