"""Counter-based pseudo-random streams.

Every value produced here is a pure function of a 64-bit key and a set of
integer counters (word symbols, point indices, level numbers).  There is no
sequential generator state, so results do not depend on evaluation order or
on how work is split across threads, and any part of a stream can be
regenerated in isolation.

The mixing function is the splitmix64 finalizer.  Two lanes with independent
initial states are carried along every symbol chain, giving 128 bits of
effective state per word, and per-coordinate outputs are formed by combining
both lanes under distinct counter offsets.  Statistical quality (uniformity,
independence across words and coordinates) is enforced by the test suite
rather than assumed.
"""

import hashlib

import numpy as np

U64 = np.uint64

_MIX1 = U64(0xBF58476D1CE4E5B9)
_MIX2 = U64(0x94D049BB133111EB)
_GAMMA = U64(0x9E3779B97F4A7C15)
_GAMMA2 = U64(0xD1B54A32D192ED03)
_LANE_A = U64(0x8E9FCB8C61D92F21)
_LANE_B = U64(0x36C64F7B81D466D5)
_COORD_A = U64(0xA24BAED4963EE407)
_COORD_B = U64(0x9FB21C651E98DF25)

_INV_2_53 = 2.0 ** -53


def mix64(x):
    """splitmix64 finalizer applied elementwise to a uint64 array."""
    x = np.asarray(x, dtype=np.uint64).copy()
    with np.errstate(over="ignore"):
        x ^= x >> U64(30)
        x *= _MIX1
        x ^= x >> U64(27)
        x *= _MIX2
        x ^= x >> U64(31)
    return x


def derive_key(seed, label):
    """Derive an independent 64-bit stream key from a master seed and a label.

    Uses keyed BLAKE2b so distinct labels give unrelated streams; this runs
    once per subsystem, never in a hot loop.
    """
    seed_bytes = (int(seed) & 0xFFFFFFFFFFFFFFFF).to_bytes(8, "little")
    digest = hashlib.blake2b(label.encode("utf-8"), key=seed_bytes, digest_size=8)
    return int.from_bytes(digest.digest(), "little")


def root_states(key, count=1):
    """Initial two-lane states for `count` parallel chains sharing one key."""
    base = np.full(count, U64(int(key) & 0xFFFFFFFFFFFFFFFF), dtype=np.uint64)
    return mix64(base ^ _LANE_A), mix64(base ^ _LANE_B)


def offset_states(key, indices):
    """Two-lane states for chains keyed by (key, index), e.g. one per trial."""
    idx = np.asarray(indices, dtype=np.uint64)
    with np.errstate(over="ignore"):
        base = U64(int(key) & 0xFFFFFFFFFFFFFFFF) + (idx + U64(1)) * _GAMMA
    return mix64(base ^ _LANE_A), mix64(base ^ _LANE_B)


def advance(states, symbols):
    """Advance chain states by one word symbol (1-based, scalar or array)."""
    a, b = states
    sym = np.asarray(symbols, dtype=np.uint64)
    with np.errstate(over="ignore"):
        a2 = mix64(a ^ (sym * _GAMMA + _GAMMA2))
        b2 = mix64(b + sym * _GAMMA2 + _GAMMA)
    return a2, b2


def unit_uniforms(states, ncoords):
    """Per-state uniforms in [0, 1), shape (len(states), ncoords).

    Coordinate c combines both lanes under distinct offsets, so coordinates
    of one word and words along one chain are decorrelated.
    """
    a, b = states
    out = np.empty(a.shape + (ncoords,), dtype=np.float64)
    for c in range(ncoords):
        off = U64(c + 1)
        with np.errstate(over="ignore"):
            v = mix64(a + off * _COORD_A) ^ mix64(b + off * _COORD_B)
        out[..., c] = (v >> U64(11)).astype(np.float64) * _INV_2_53
    return out


def indexed_uniforms(key, indices, counter):
    """Uniform in [0, 1) addressed by (key, index, counter).

    Used for per-point word sampling: point i, level j reads the value at
    (key, i, j) regardless of which other points are being processed.
    """
    idx = np.asarray(indices, dtype=np.uint64)
    with np.errstate(over="ignore"):
        h = mix64(U64(int(key) & 0xFFFFFFFFFFFFFFFF) + (idx + U64(1)) * _GAMMA)
        v = mix64(h ^ (U64(int(counter) + 1) * _GAMMA2))
    return (v >> U64(11)).astype(np.float64) * _INV_2_53
