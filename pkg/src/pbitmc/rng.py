"""Pluggable pseudorandom streams, one per p-bit.

Kinds
-----
``xoshiro128plus``  the 128-bit xoshiro generator used by the hardware
                    design; 32-bit output word.
``lfsr16``          Galois linear feedback shift register, taps
                    (16, 14, 13, 11), mask 0xB400, maximal period 2^16-1.
                    Deliberately weak: kept to demonstrate its bias.
``lfsr32``          Galois LFSR, taps (32, 22, 2, 1), mask 0x80200003,
                    maximal period 2^32-1.
``mt_reference``    Mersenne-twister reference generator (numpy
                    RandomState), modelling the software baseline.  One
                    generator per run rather than per p-bit.

Streams are keyed by (kind, seed, stream_id); identical keys give
bit-identical sequences.  Uniform outputs map the full generator word to
[0, 1) as word / 2^width, which is exact in double precision for all
widths used here.  Stream states are derived from (seed, stream_id) with
the splitmix64 mixing function, so any stream can be constructed O(1)
without touching its neighbours.
"""

from __future__ import annotations

import numpy as np

KINDS = ("xoshiro128plus", "lfsr16", "lfsr32", "mt_reference")

LFSR16_TAPS = (16, 14, 13, 11)
LFSR16_MASK = np.uint16(0xB400)
LFSR32_TAPS = (32, 22, 2, 1)
LFSR32_MASK = np.uint32(0x80200003)

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)

_U32_NORM = float(2.0 ** -32)
_U16_NORM = float(2.0 ** -16)


def _splitmix64(x: np.ndarray) -> np.ndarray:
    z = x.astype(np.uint64, copy=True)
    z ^= z >> np.uint64(30)
    z *= _MIX1
    z ^= z >> np.uint64(27)
    z *= _MIX2
    z ^= z >> np.uint64(31)
    return z


def mix_seed(seed: int, stream_id, k: int = 0) -> np.ndarray:
    """k-th splitmix64 output word for stream (seed, stream_id)."""
    sid = np.asarray(stream_id, dtype=np.uint64)
    base = np.uint64(seed & 0xFFFFFFFFFFFFFFFF)
    ctr = base + (np.uint64(3) * sid + np.uint64(k + 1)) * _GOLDEN
    return _splitmix64(ctr)


class StreamBank:
    """Vectorised bank of independent streams advanced in lockstep.

    ``stream_ids`` may have any shape; every call to :meth:`uniforms`
    advances each stream once and returns an array of the same shape.
    The per-stream sequences depend only on (kind, seed, stream_id).
    """

    def __init__(self, kind: str, seed: int, stream_ids):
        if kind not in ("xoshiro128plus", "lfsr16", "lfsr32"):
            raise ValueError(f"StreamBank does not support kind {kind!r}")
        self.kind = kind
        self.seed = int(seed)
        sids = np.asarray(stream_ids, dtype=np.uint64)
        self.shape = sids.shape
        w1 = mix_seed(seed, sids, 0)
        w2 = mix_seed(seed, sids, 1)
        if kind == "xoshiro128plus":
            self._s = [
                (w1 & np.uint64(0xFFFFFFFF)).astype(np.uint32),
                (w1 >> np.uint64(32)).astype(np.uint32),
                (w2 & np.uint64(0xFFFFFFFF)).astype(np.uint32),
                (w2 >> np.uint64(32)).astype(np.uint32),
            ]
            dead = (self._s[0] | self._s[1] | self._s[2] | self._s[3]) == 0
            if np.any(dead):
                self._s[0][dead] = np.uint32(1)
        elif kind == "lfsr16":
            state = (w1 & np.uint64(0xFFFF)).astype(np.uint16)
            state[state == 0] = (w1[state == 0] >> np.uint64(16)).astype(np.uint16)
            state[state == 0] = np.uint16(0xACE1)
            self._s = [state]
        else:  # lfsr32
            state = (w1 & np.uint64(0xFFFFFFFF)).astype(np.uint32)
            state[state == 0] = (w1[state == 0] >> np.uint64(32)).astype(np.uint32)
            state[state == 0] = np.uint32(0xACE1)
            self._s = [state]

    def _next_words(self) -> np.ndarray:
        if self.kind == "xoshiro128plus":
            s0, s1, s2, s3 = self._s
            out = s0 + s3
            t = s1 << np.uint32(9)
            s2 = s2 ^ s0
            s3 = s3 ^ s1
            s1 = s1 ^ s2
            s0 = s0 ^ s3
            s2 = s2 ^ t
            s3 = (s3 << np.uint32(11)) | (s3 >> np.uint32(21))
            self._s = [s0, s1, s2, s3]
            return out
        if self.kind == "lfsr16":
            s = self._s[0]
            lsb = s & np.uint16(1)
            s = (s >> np.uint16(1)) ^ (LFSR16_MASK * lsb)
            self._s[0] = s
            return s
        s = self._s[0]
        lsb = s & np.uint32(1)
        s = (s >> np.uint32(1)) ^ (LFSR32_MASK * lsb)
        self._s[0] = s
        return s

    def uniforms(self) -> np.ndarray:
        """Advance every stream once; uniform [0, 1) array, bank-shaped."""
        words = self._next_words()
        norm = _U16_NORM if self.kind == "lfsr16" else _U32_NORM
        return words.astype(np.float64) * norm


class RngStream:
    """Scalar view of one stream; same sequence as the bank column with
    the same (kind, seed, stream_id)."""

    def __init__(self, kind: str, seed: int, stream_id: int):
        if kind not in KINDS:
            raise ValueError(f"unknown rng kind {kind!r}")
        self.kind = kind
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        if kind == "mt_reference":
            self._mt = np.random.RandomState(
                int(mix_seed(seed, stream_id)) & 0xFFFFFFFF)
            self._bank = None
        else:
            self._bank = StreamBank(kind, seed, np.array([stream_id]))
            self._mt = None

    def next_uniform(self) -> float:
        if self._mt is not None:
            return float(self._mt.random_sample())
        return float(self._bank.uniforms()[0])

    def next_exponential(self, mean: float) -> float:
        """Strictly positive exponential variate with the given mean."""
        if self._mt is not None:
            u = self._mt.random_sample()
            gap = -mean * np.log1p(-u)
            return float(gap) if gap > 0 else mean * 1e-18
        word = float(self._bank._next_words()[0])
        width = 16 if self.kind == "lfsr16" else 32
        u = (word + 0.5) * (2.0 ** -width)   # in (0, 1): log never hits 0
        return float(-mean * np.log(u))


def split(seed: int, stream_id: int, kind: str = "xoshiro128plus") -> RngStream:
    """Independent stream for (seed, stream_id)."""
    return RngStream(kind, seed, stream_id)


def mt_run_generator(seed: int, run_id: int) -> np.random.RandomState:
    """Per-run Mersenne-twister generator for the mt_reference kind."""
    return np.random.RandomState(int(mix_seed(seed, run_id)) & 0xFFFFFFFF)
