"""Deterministic random number generation shared by every backend.

All randomness in this package flows through a splitmix64 stream: the state
advances by a fixed odd constant per draw and the output is a finalizer hash
of the state.  The generator is tiny, has no platform-dependent behaviour,
and is easy to reimplement identically inside a numba kernel, a vectorized
numpy loop, and plain Python, which is what makes bit-identical runs across
backends possible.

Generator identity string (recorded in experiment metadata): "splitmix64-v1".
"""

from __future__ import annotations

import hashlib

import numpy as np

GENERATOR_ID = "splitmix64-v1"

MASK64 = 0xFFFFFFFFFFFFFFFF
GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

# float conversion uses the top 53 bits: u53 = (u >> 11) * 2**-53 in [0, 1)
U53_SCALE = 2.0 ** -53


def mix64(z: int) -> int:
    """splitmix64 finalizer on a 64-bit integer."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return (z ^ (z >> 31)) & MASK64


def _token64(token) -> int:
    """Map a seed-derivation token to 64 bits, stably across platforms."""
    if isinstance(token, (int, np.integer)):
        return int(token) & MASK64
    if isinstance(token, str):
        digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
        return int.from_bytes(digest, "little")
    raise TypeError(f"seed token must be int or str, got {type(token).__name__}")


def derive_seed(master: int, *tokens) -> int:
    """Derive a child seed from a master seed and a sequence of tokens.

    Scheme: h = mix64(master); then for each token h = mix64(h ^ token64),
    where ints map to their low 64 bits and strings to the low 8 bytes of
    their blake2b digest.  Documented so any output row can be re-derived.
    """
    h = mix64(_token64(master))
    for t in tokens:
        h = mix64(h ^ _token64(t))
    return h


class SplitMix64:
    """Scalar splitmix64 stream; the Python-side twin of the kernel stream."""

    def __init__(self, seed: int):
        self.state = int(seed) & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN) & MASK64
        return mix64(self.state)

    def next_unit(self) -> float:
        """Uniform double in [0, 1) from the top 53 bits of one draw."""
        return (self.next_u64() >> 11) * U53_SCALE

    def next_below(self, n: int) -> int:
        """Uniform-ish integer in [0, n) via modulo (bias < n / 2**64)."""
        return self.next_u64() % n


def binomial_cdf_table(n: int, p: float) -> np.ndarray:
    """Cumulative Binomial(n, p) table used for mutation-count inversion.

    Built once per ground-set size with the stable pmf recurrence and shared
    verbatim by all backends, so inversion results agree bit for bit.
    """
    if n < 1:
        raise ValueError("n must be positive")
    pmf = np.empty(n + 1, dtype=np.float64)
    q = 1.0 - p
    pmf[0] = q ** n
    if q == 0.0:
        pmf[:] = 0.0
        pmf[n] = 1.0
    else:
        ratio = p / q
        for i in range(n):
            pmf[i + 1] = pmf[i] * ((n - i) / (i + 1)) * ratio
    cdf = np.cumsum(pmf)
    cdf[-1] = 1.0
    return np.minimum(cdf, 1.0)
