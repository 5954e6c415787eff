"""Shared builders for randomized test systems."""

import numpy as np

from affdims import AffineIFS, BernoulliModel


def random_contraction(rng, dim, max_norm=0.9):
    """Random matrix rescaled so its operator norm is below max_norm."""
    raw = rng.standard_normal((dim, dim))
    norm = np.linalg.norm(raw, ord=2)
    scale = max_norm * rng.uniform(0.2, 1.0) / norm
    return raw * scale


def random_ifs(rng, m, dim, max_norm=0.9):
    return AffineIFS(maps=tuple(random_contraction(rng, dim, max_norm) for _ in range(m)))


def random_probs(rng, m):
    p = rng.uniform(0.1, 1.0, size=m)
    return tuple(p / p.sum())


def random_bernoulli(rng, m):
    return BernoulliModel(probs=random_probs(rng, m))


def diag_ifs(*diagonals):
    return AffineIFS(maps=tuple(np.diag(d) for d in diagonals))
