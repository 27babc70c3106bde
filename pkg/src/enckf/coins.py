"""Seeded, purpose-tagged randomness streams.

Every random draw in the package flows through a CoinStream so that a run is
fully determined by its scenario seeds.  Streams are tagged with a purpose
("keygen", "encryption-randomness", "noise", "simulator") and keyed by a seed;
identical (seed, purpose) always replays the identical sequence.  Crypto and
simulation randomness never share a stream, which keeps protocol runs
replayable when only one of the two is varied.
"""

from __future__ import annotations

import hashlib
import random

import numpy as np

PURPOSES = ("keygen", "encryption-randomness", "noise", "simulator")


def _material(seed, purpose: str) -> bytes:
    if isinstance(seed, bytes):
        raw = seed
    else:
        raw = str(seed).encode()
    return hashlib.sha256(purpose.encode() + b"|" + raw).digest()


class CoinStream:
    """Deterministic random source; single-owner, never shared across threads."""

    def __init__(self, seed, purpose: str):
        self.purpose = purpose
        self._seed_material = _material(seed, purpose)
        self._rng = random.Random(int.from_bytes(self._seed_material, "big"))

    @property
    def fingerprint(self) -> str:
        """Hex digest identifying the stream's seed material."""
        return self._seed_material.hex()

    def child(self, label: str, purpose: str | None = None) -> "CoinStream":
        """Derive an independent stream for a sub-task (per party, per field)."""
        return CoinStream(self._seed_material + b"/" + label.encode(),
                          purpose if purpose is not None else self.purpose)

    def getrandbits(self, k: int) -> int:
        return self._rng.getrandbits(k)

    def randrange(self, a: int, b: int | None = None) -> int:
        return self._rng.randrange(a, b)

    def numpy_rng(self) -> np.random.Generator:
        """A numpy Generator derived from (but independent of) the int stream."""
        digest = hashlib.sha256(self._seed_material + b"/numpy").digest()
        return np.random.default_rng(int.from_bytes(digest[:16], "big"))
