"""Random almost self-affine constructions: displacement fields and clouds.

A realization omega assigns every finite word w an independent uniform
displacement omega_w in the centered box D = [-R, R]^N.  A point of the
attractor is the convergent series

    Pi(i) = omega_{i|1} + T_{i|1} omega_{i|2} + T_{i|1}T_{i|2} omega_{i|3} + ...

truncated here at depth K with an explicit tail bound.  Displacements are
pure functions of (seed, word) via counter-based streams, so the same
omega realization is seen by every point, in any order, on any number of
threads; that is the whole reproducibility story.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import counterrng as crng
from .errors import InvalidInputError, ResourceLimitError
from .measures import log_prob_tables
from .linalg import contraction_bounds

_MAX_POINTS = 50_000_000
_WORD_LABEL = "sampler/words"
_FIELD_LABEL = "sampler/field"


def truncation_tail(a_plus, region_radius, dim, K):
    """Bound on |Pi - Pi_K|: sum of the dropped series terms.

    Each dropped term T_{i|j-1} omega_{i|j} with j > K has norm at most
    a_plus^j * R * sqrt(N); summing the geometric tail gives
    a_plus^K * R * sqrt(N) / (1 - a_plus).
    """
    return a_plus ** K * region_radius * math.sqrt(dim) / (1.0 - a_plus)


@dataclass(frozen=True)
class DisplacementField:
    """One omega realization: seed plus the displacement region.

    region is the centered box of half-width region_radius; displacements
    are uniform on it and independent across words.
    """

    seed: int
    region_radius: float = 1.0

    def __post_init__(self):
        if not 0 <= self.seed < 2 ** 64:
            raise InvalidInputError("seed must fit in 64 bits")
        if not self.region_radius > 0:
            raise InvalidInputError("region_radius must be positive")

    def key(self):
        return crng.derive_key(self.seed, _FIELD_LABEL)


def displacement(fld, word, dim):
    """The displacement vector omega_word, uniform on the region box."""
    if len(word) == 0:
        raise InvalidInputError("displacements are indexed by nonempty words")
    states = crng.root_states(fld.key(), 1)
    for sym in word:
        states = crng.advance(states, np.array([sym], dtype=np.uint64))
    u = crng.unit_uniforms(states, dim)[0]
    return (2.0 * u - 1.0) * fld.region_radius


@dataclass(frozen=True, eq=False)
class CloudPoint:
    position: np.ndarray
    word_prefix: tuple
    truncation_bound: float


@dataclass(frozen=True, eq=False)
class Cloud:
    """Array-backed point cloud plus the metadata needed to reuse it."""

    positions: np.ndarray
    words: np.ndarray
    truncation_bound: float
    seed: int
    depth: int
    region_radius: float
    model_tag: str = field(default="", compare=False)

    def __len__(self):
        return self.positions.shape[0]

    @property
    def dim(self):
        return self.positions.shape[1]

    def __getitem__(self, i):
        return CloudPoint(
            position=self.positions[i],
            word_prefix=tuple(int(s) for s in self.words[i]),
            truncation_bound=self.truncation_bound,
        )

    def points(self):
        for i in range(len(self)):
            yield self[i]


def _advance_through(fld, word):
    states = crng.root_states(fld.key(), 1)
    for sym in word:
        states = crng.advance(states, np.array([sym], dtype=np.uint64))
    return states


def project(ifs, fld, word, K):
    """Depth-K partial sum of the displacement series along `word`."""
    if K < 1:
        raise InvalidInputError(f"depth must be >= 1, got K={K}")
    if K > len(word):
        raise InvalidInputError(
            f"word of length {len(word)} is shorter than depth K={K}"
        )
    dim = ifs.dim
    states = crng.root_states(fld.key(), 1)
    pos = np.zeros(dim)
    prefix = np.eye(dim)
    for j in range(K):
        sym = word[j]
        states = crng.advance(states, np.array([sym], dtype=np.uint64))
        u = crng.unit_uniforms(states, dim)[0]
        omega = (2.0 * u - 1.0) * fld.region_radius
        pos = pos + prefix @ omega
        prefix = prefix @ ifs.matrix(sym)
    _, a_plus = contraction_bounds(ifs)
    bound = truncation_tail(a_plus, fld.region_radius, dim, K)
    return CloudPoint(
        position=pos, word_prefix=tuple(word[:K]), truncation_bound=bound
    )


def _sample_words_indexed(model, key, start, count, depth):
    """Depth-`depth` words for points start..start+count-1.

    Symbol j of point i depends only on (key, i, j), so any contiguous or
    interleaved chunking reproduces the same words.
    """
    log_init, log_trans = log_prob_tables(model)
    init_cdf = np.cumsum(np.exp(log_init))
    trans_cdf = np.cumsum(np.exp(log_trans), axis=1)
    init_cdf[-1] = trans_cdf[:, -1] = 1.0
    m = init_cdf.size
    idx = np.arange(start, start + count, dtype=np.uint64)
    words = np.empty((count, depth), dtype=np.uint8)
    u = crng.indexed_uniforms(key, idx, 0)
    words[:, 0] = np.searchsorted(init_cdf, u, side="right")
    for j in range(1, depth):
        u = crng.indexed_uniforms(key, idx, j)
        rows = trans_cdf[words[:, j - 1]]
        words[:, j] = np.clip(
            (u[:, np.newaxis] >= rows).sum(axis=1), 0, m - 1
        )
    words += 1
    return words


def _project_block(ifs, fld, words):
    """Vectorized series evaluation for a block of equal-depth words."""
    count, depth = words.shape
    dim = ifs.dim
    mats = ifs.matrix_stack()
    states = crng.root_states(fld.key(), count)
    pos = np.zeros((count, dim))
    prefix = np.broadcast_to(np.eye(dim), (count, dim, dim)).copy()
    for j in range(depth):
        states = crng.advance(states, words[:, j].astype(np.uint64))
        u = crng.unit_uniforms(states, dim)
        omega = (2.0 * u - 1.0) * fld.region_radius
        pos += np.einsum("nij,nj->ni", prefix, omega)
        if j + 1 < depth:
            prefix = np.matmul(prefix, mats[words[:, j] - 1])
    return pos


def _cloud_chunk(ifs, model, fld, start, count, K, word_key):
    words = _sample_words_indexed(model, word_key, start, count, K)
    return words, _project_block(ifs, fld, words)


def sample_cloud(ifs, model, fld, n, K, threads=1, chunk=65536):
    """n points of the truncated random construction under one field.

    Words are drawn from the model with per-point indexed streams, then
    projected through the shared displacement field; the output is
    identical for any thread count, and extending n keeps the existing
    points unchanged.
    """
    if n < 1:
        raise InvalidInputError(f"need n >= 1 points, got {n}")
    if n > _MAX_POINTS:
        raise ResourceLimitError(f"{n} points exceeds the {_MAX_POINTS} cap")
    if K < 1:
        raise InvalidInputError(f"depth must be >= 1, got K={K}")
    if model.m != ifs.m:
        raise InvalidInputError(
            f"model has {model.m} symbols but the system has {ifs.m} maps"
        )
    word_key = crng.derive_key(fld.seed, _WORD_LABEL)
    starts = list(range(0, n, chunk))
    pieces = [None] * len(starts)

    def run(i):
        start = starts[i]
        pieces[i] = _cloud_chunk(
            ifs, model, fld, start, min(chunk, n - start), K, word_key
        )

    if threads > 1 and len(starts) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(run, range(len(starts))))
    else:
        for i in range(len(starts)):
            run(i)
    words = np.concatenate([p[0] for p in pieces], axis=0)
    positions = np.concatenate([p[1] for p in pieces], axis=0)
    _, a_plus = contraction_bounds(ifs)
    bound = truncation_tail(a_plus, fld.region_radius, ifs.dim, K)
    return Cloud(
        positions=positions, words=words, truncation_bound=bound,
        seed=fld.seed, depth=K, region_radius=fld.region_radius,
    )


def attractor_radius(ifs, region_radius):
    """Radius of a ball at the origin containing every construction point."""
    _, a_plus = contraction_bounds(ifs)
    return region_radius * math.sqrt(ifs.dim) / (1.0 - a_plus)


def default_depth(ifs, region_radius, r_min):
    """Smallest K whose truncation bound is below r_min / 10."""
    _, a_plus = contraction_bounds(ifs)
    K = 1
    while truncation_tail(a_plus, region_radius, ifs.dim, K) >= r_min / 10.0:
        K += 1
        if K > 10_000:
            raise ResourceLimitError(
                "no feasible truncation depth below the requested scale"
            )
    return K


def write_cloud(path, cloud):
    """Text table: header lines with metadata, then one point per row."""
    header = (
        f"seed={cloud.seed} depth={cloud.depth} dim={cloud.dim} "
        f"n={len(cloud)} region_radius={cloud.region_radius!r} "
        f"truncation_bound={cloud.truncation_bound!r} "
        f"model={cloud.model_tag or 'unknown'}"
    )
    with open(path, "w") as fh:
        fh.write("# affdims cloud v1\n")
        fh.write(f"# {header}\n")
        for row in cloud.positions:
            fh.write(" ".join(f"{x:.17g}" for x in row) + "\n")


def read_cloud(path):
    """Read a cloud table written by write_cloud (words are not stored)."""
    with open(path) as fh:
        magic = fh.readline()
        if not magic.startswith("# affdims cloud v1"):
            raise InvalidInputError(f"{path} is not a cloud table")
        meta = {}
        for part in fh.readline().lstrip("# ").split():
            k, _, v = part.partition("=")
            meta[k] = v
        positions = np.loadtxt(fh, ndmin=2)
    n = int(meta["n"])
    if positions.shape != (n, int(meta["dim"])):
        raise InvalidInputError(
            f"{path}: expected {n} x {meta['dim']} table, got "
            f"{positions.shape[0]} x {positions.shape[1]}"
        )
    return Cloud(
        positions=positions,
        words=np.zeros((n, 0), dtype=np.uint8),
        truncation_bound=float(meta["truncation_bound"]),
        seed=int(meta["seed"]),
        depth=int(meta["depth"]),
        region_radius=float(meta["region_radius"]),
        model_tag=meta.get("model", ""),
    )
