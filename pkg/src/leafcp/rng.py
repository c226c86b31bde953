"""Deterministic, splittable random streams.

Every stochastic operation in the package draws from an ``RngStream``
identified by a (seed, stream_id) pair. Child streams are derived by hashing
a purpose label into a fresh 64-bit stream id, so concurrent units of work
(replications, per-tree subsampling) never share generator state. The
underlying generator is Philox, a counter-based generator whose output is
reproducible across platforms.

Label collisions are possible in principle (64-bit digest, so probability
~n^2 / 2^65 for n distinct labels under one parent) but are negligible for
the label counts used here.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RngStream:
    """Value-type handle for a reproducible random sequence."""

    seed: int
    stream_id: int = 0

    def derive(self, label: str) -> "RngStream":
        """Child stream deterministic in (parent stream_id, label)."""
        payload = f"{self.stream_id}:{label}".encode("utf-8")
        digest = hashlib.blake2b(payload, digest_size=8).digest()
        return RngStream(self.seed, int.from_bytes(digest, "little"))

    def generator(self) -> np.random.Generator:
        key = np.array([self.seed % 2**64, self.stream_id % 2**64],
                       dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))
