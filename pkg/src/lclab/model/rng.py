"""Deterministic 64-bit random number generation for toy-model weights.

The exact algorithm (so results can be reproduced in any language):

* splitmix64 -- the standard finalizer-style generator. Given a 64-bit
  state s, each step does s += 0x9E3779B97F4A7C15 and returns
  mix(s) where mix(z): z ^= z>>30; z *= 0xBF58476D1CE4E5B9;
  z ^= z>>27; z *= 0x94D049BB133111EB; z ^= z>>31.
* xoshiro256** -- state (s0, s1, s2, s3); output rotl(s1*5, 7)*9;
  update t = s1<<17; s2^=s0; s3^=s1; s1^=s2; s0^=s3; s2^=t;
  s3 = rotl(s3, 45).
* Lane-parallel stream: N_LANES = 64 independent xoshiro256** states.
  The state words are taken from a single splitmix64 sequence started at
  the stream seed: lane L consumes words 4L .. 4L+3. Outputs are
  emitted round-robin -- one round produces the next output of every
  lane in lane order, so output index i comes from lane i % 64.
* Uniforms in (0, 1]: u = ((x >> 11) + 1) * 2^-53.
* Normals: Box-Muller on consecutive uniform pairs (u1, u2):
  z0 = sqrt(-2 ln u1) cos(2 pi u2), z1 = sqrt(-2 ln u1) sin(2 pi u2).
  Output order is z0, z1, z0, z1, ...
* Per-name streams: stream_seed(master, name) =
  splitmix64_mix(master XOR fnv1a64(name-utf8)) so tensors are
  independent of generation order.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1
N_LANES = 64


def splitmix64_mix(z: int) -> int:
    """The splitmix64 output mix applied to a single 64-bit value."""
    z &= _MASK
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & _MASK
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & _MASK
    return z ^ (z >> 31)


def splitmix64_sequence(seed: int, n: int) -> np.ndarray:
    """First n outputs of splitmix64 started at `seed`."""
    out = np.empty(n, dtype=np.uint64)
    s = seed & _MASK
    for i in range(n):
        s = (s + 0x9E3779B97F4A7C15) & _MASK
        out[i] = splitmix64_mix(s)
    return out


def fnv1a64(name: str) -> int:
    """FNV-1a hash of the UTF-8 bytes of `name`."""
    h = 0xCBF29CE484222325
    for b in name.encode("utf-8"):
        h = ((h ^ b) * 0x100000001B3) & _MASK
    return h


def stream_seed(master_seed: int, name: str) -> int:
    return splitmix64_mix((master_seed & _MASK) ^ fnv1a64(name))


def _rotl(x: np.ndarray, k: int) -> np.ndarray:
    return (x << np.uint64(k)) | (x >> np.uint64(64 - k))


class Xoshiro256StarStar:
    """Lane-parallel xoshiro256** stream (see module docstring)."""

    def __init__(self, seed: int):
        words = splitmix64_sequence(seed, 4 * N_LANES).reshape(N_LANES, 4)
        self._s = [words[:, i].copy() for i in range(4)]
        self._buf = np.empty(0, dtype=np.uint64)

    def _rounds(self, n_rounds: int) -> np.ndarray:
        s0, s1, s2, s3 = self._s
        out = np.empty((n_rounds, N_LANES), dtype=np.uint64)
        with np.errstate(over="ignore"):
            for r in range(n_rounds):
                out[r] = _rotl(s1 * np.uint64(5), 7) * np.uint64(9)
                t = s1 << np.uint64(17)
                s2 = s2 ^ s0
                s3 = s3 ^ s1
                s1 = s1 ^ s2
                s0 = s0 ^ s3
                s2 = s2 ^ t
                s3 = _rotl(s3, 45)
        self._s = [s0, s1, s2, s3]
        return out

    def next_uint64(self, n: int) -> np.ndarray:
        while self._buf.size < n:
            need = n - self._buf.size
            rounds = -(-need // N_LANES)
            fresh = self._rounds(rounds).reshape(-1)
            self._buf = np.concatenate([self._buf, fresh])
        out, self._buf = self._buf[:n], self._buf[n:]
        return out

    def uniforms(self, n: int) -> np.ndarray:
        """Uniform doubles in (0, 1]."""
        x = self.next_uint64(n)
        return ((x >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0**-53

    def normals(self, n: int) -> np.ndarray:
        """Standard normal doubles via Box-Muller."""
        n_pairs = -(-n // 2)
        u = self.uniforms(2 * n_pairs).reshape(n_pairs, 2)
        r = np.sqrt(-2.0 * np.log(u[:, 0]))
        phi = 2.0 * np.pi * u[:, 1]
        z = np.empty(2 * n_pairs, dtype=np.float64)
        z[0::2] = r * np.cos(phi)
        z[1::2] = r * np.sin(phi)
        return z[:n]

    def randint_below(self, bound: int) -> int:
        """One integer in [0, bound) by modulo reduction.

        The modulo bias is irrelevant here; what matters is that the
        mapping is fixed and documented.
        """
        return int(self.next_uint64(1)[0] % np.uint64(bound))
