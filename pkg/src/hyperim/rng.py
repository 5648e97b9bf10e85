"""Reproducible randomness: named substreams off one master seed.

Two layers:
  * derive_seed / generator — coarse streams (one per model draw, per
    propagation instance, per evaluation round, ...) via SHA-256 of the
    (master, *path) tuple. Stable across platforms and numpy versions.
  * splitmix-style hashing (hash_u64 / uniform01) — fine-grained,
    vectorizable streams used in hot loops (per-edge cascade coins,
    per-positive negative draws). Counter-based, so consumers never share
    mutable state and results are independent of evaluation order.
"""

from __future__ import annotations

import hashlib

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_U64 = np.uint64
_INV_2_53 = float(2.0**-53)


def derive_seed(master: int, *path) -> int:
    """Derive a 63-bit stream seed from a master seed and a stream path.

    `path` components may be strings or integers (numpy integers are
    canonicalized); the mapping is injective on the canonical repr and
    stable forever (SHA-256 based).
    """
    canon = tuple(int(p) if isinstance(p, (int, np.integer)) else str(p)
                  for p in path)
    tag = repr((int(master),) + canon).encode("utf-8")
    digest = hashlib.sha256(tag).digest()
    return int.from_bytes(digest[:8], "little") >> 1


def generator(master: int, *path) -> np.random.Generator:
    """A numpy Generator seeded from the named substream."""
    return np.random.default_rng(derive_seed(master, *path))


def _splitmix(z):
    z = z + _GOLDEN
    z = (z ^ (z >> _U64(30))) * _MIX1
    z = (z ^ (z >> _U64(27))) * _MIX2
    return z ^ (z >> _U64(31))


def hash_u64(seed: int, *parts):
    """Mix an integer seed with scalar-or-array components into uint64 words.

    All arithmetic wraps mod 2^64; scalar parts fold into the running hash,
    array parts broadcast it elementwise.
    """
    with np.errstate(over="ignore"):
        h = _splitmix(_U64(seed & 0xFFFFFFFFFFFFFFFF))
        for p in parts:
            if isinstance(p, np.ndarray):
                h = _splitmix(h ^ p.astype(_U64, copy=False))
            else:
                h = _splitmix(h ^ _U64(int(p) & 0xFFFFFFFFFFFFFFFF))
        return h


def uniform01(words):
    """Map uint64 words to floats in [0, 1) with 53-bit resolution."""
    return (words >> _U64(11)).astype(np.float64) * _INV_2_53
