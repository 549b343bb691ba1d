"""Named, seeded random streams.

Every source of randomness in a scenario (placement, mobility, phases,
nonces, padding, cover frames, traffic payloads, attacker emissions) pulls
from its own stream, derived from the scenario seed and a label. Two runs
with the same seed therefore produce identical byte streams per concern,
no matter how the consumers interleave.
"""

from __future__ import annotations

import hashlib
import random


def derive_stream(seed: int, label: str) -> random.Random:
    """Return an independent PRNG stream for (seed, label)."""
    digest = hashlib.sha256(f"{seed}/{label}".encode()).digest()
    return random.Random(int.from_bytes(digest, "big"))


def derive_seed(seed: int, index: int) -> int:
    """Seed for the index-th point of a sweep grid."""
    return seed + index
