"""Deterministic, hierarchically labeled random number streams.

Every stochastic routine in the package consumes an explicit
``numpy.random.Generator`` derived from the run seed and a label path such
as ``("trial", 7, "BI")``.  Streams for different paths are statistically
independent, and the stream for a given path never changes when more paths
(e.g. additional trials) are added to a run.
"""

from __future__ import annotations

import hashlib

import numpy as np

_WORD = 2 ** 64


def _token(part) -> int:
    """Stable 64-bit token for one path element (int or string label)."""
    if isinstance(part, (int, np.integer)) and not isinstance(part, bool):
        return int(part) % _WORD
    digest = hashlib.sha256(str(part).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def seed_sequence(seed: int, *path) -> np.random.SeedSequence:
    """SeedSequence keyed by (seed, path); equal inputs give equal state."""
    return np.random.SeedSequence([seed % _WORD] + [_token(p) for p in path])


def rng_stream(seed: int, *path) -> np.random.Generator:
    """Independent deterministic generator for the labeled path."""
    return np.random.default_rng(seed_sequence(seed, *path))
