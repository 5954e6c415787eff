"""Linear contractions and the singular value function.

For a nonsingular contracting linear map T on R^N with singular values
alpha_1 >= ... >= alpha_N, the singular value function is

    phi^s(T) = alpha_1 * ... * alpha_{j-1} * alpha_j^(s - j + 1)

for j - 1 < s <= j (j = ceil(s)), and phi^s(T) = (alpha_1 ... alpha_N)^(s/N)
= |det T|^(s/N) for s > N.  It is continuous and strictly decreasing in s,
and submultiplicative in T: phi^s(TU) <= phi^s(T) phi^s(U).

Everything here is dimension-generic; N = 1 and N = 2 use closed forms, and
larger N falls back to LAPACK.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

_SINGULAR_TOL = 1e-14


@dataclass(frozen=True)
class LinearContraction:
    """An invertible linear map with operator norm strictly below 1.

    Parameters
    ----------
    matrix : array_like, shape (N, N)
        The matrix of the map.  Must be nonsingular and contracting.
    """

    matrix: np.ndarray

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=np.float64)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise InvalidInputError(f"matrix must be square, got shape {mat.shape}")
        mat = mat.copy()
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)
        alphas = singular_values(mat)
        if alphas[-1] <= _SINGULAR_TOL:
            raise InvalidInputError(
                f"matrix is singular (smallest singular value {alphas[-1]:.3e})"
            )
        if alphas[0] >= 1.0:
            raise InvalidInputError(
                f"matrix is not contracting (largest singular value {alphas[0]:.6f})"
            )
        object.__setattr__(self, "_alphas", alphas)

    @property
    def dim(self):
        return self.matrix.shape[0]

    @property
    def alphas(self):
        """Singular values in decreasing order."""
        return self._alphas


@dataclass(frozen=True)
class AffineIFS:
    """A finite family of linear contractions indexed by symbols 1..m.

    The family defines the linear parts of an iterated construction; random
    translation parts are supplied separately by a displacement field.
    """

    maps: tuple

    def __post_init__(self):
        maps = tuple(
            t if isinstance(t, LinearContraction) else LinearContraction(t)
            for t in self.maps
        )
        if len(maps) < 2:
            raise InvalidInputError(f"need at least 2 maps, got {len(maps)}")
        dims = {t.dim for t in maps}
        if len(dims) != 1:
            raise InvalidInputError(f"maps act on mixed dimensions {sorted(dims)}")
        object.__setattr__(self, "maps", maps)

    @property
    def m(self):
        return len(self.maps)

    @property
    def dim(self):
        return self.maps[0].dim

    def matrix(self, symbol):
        """Matrix of the map for a 1-based symbol."""
        if not 1 <= symbol <= self.m:
            raise InvalidInputError(f"symbol {symbol} outside 1..{self.m}")
        return self.maps[symbol - 1].matrix

    def matrix_stack(self):
        """All map matrices as one (m, N, N) array."""
        return np.stack([t.matrix for t in self.maps])


def _as_matrix(T):
    if isinstance(T, LinearContraction):
        return T.matrix
    return np.asarray(T, dtype=np.float64)


def singular_values(T):
    """Singular values of a square matrix, decreasing.

    N = 1 and N = 2 use closed forms (the 2x2 case recovers the smaller
    value from |det| / alpha_1, which stays accurate when the matrix is
    nearly rank-deficient); larger N uses LAPACK's SVD.
    """
    mat = _as_matrix(T)
    n = mat.shape[0]
    if n == 1:
        return np.array([abs(mat[0, 0])])
    if n == 2:
        return _sv2(mat[np.newaxis])[0]
    return np.linalg.svd(mat, compute_uv=False)


def _sv2(mats):
    """Closed-form singular values for a stack of 2x2 matrices."""
    a00 = mats[..., 0, 0]
    a01 = mats[..., 0, 1]
    a10 = mats[..., 1, 0]
    a11 = mats[..., 1, 1]
    # Eigenvalues of T T^t via mean +/- radius; alpha_2 from the determinant.
    p = a00 * a00 + a01 * a01
    q = a10 * a10 + a11 * a11
    rr = a00 * a10 + a01 * a11
    mean = 0.5 * (p + q)
    rad = np.hypot(0.5 * (p - q), rr)
    alpha1 = np.sqrt(mean + rad)
    det = np.abs(a00 * a11 - a01 * a10)
    with np.errstate(divide="ignore", invalid="ignore"):
        alpha2 = np.where(alpha1 > 0.0, det / np.where(alpha1 > 0.0, alpha1, 1.0), 0.0)
    return np.stack([alpha1, alpha2], axis=-1)


def singular_values_stack(mats):
    """Singular values for a stack of square matrices, shape (..., N)."""
    mats = np.asarray(mats, dtype=np.float64)
    n = mats.shape[-1]
    if n == 1:
        return np.abs(mats[..., 0, :])
    if n == 2:
        return _sv2(mats)
    return np.linalg.svd(mats, compute_uv=False)


def log_phi_stack(alphas, s):
    """log phi^s from stacked singular values (..., N), vectorized over words.

    Singular values must be positive; use only on products of nonsingular
    contractions.
    """
    n = alphas.shape[-1]
    if s <= 0.0:
        raise InvalidInputError(f"phi^s needs s > 0, got {s}")
    logs = np.log(alphas)
    if s > n:
        return logs.sum(axis=-1) * (s / n)
    j = math.ceil(s)
    head = logs[..., : j - 1].sum(axis=-1)
    return head + (s - j + 1) * logs[..., j - 1]


def phi_s(T, s):
    """The singular value function phi^s(T).

    Parameters
    ----------
    T : LinearContraction or array_like
        The map, or directly its matrix.
    s : float
        Positive exponent; branches switch at integer s and the product
        form takes over for s > N.
    """
    if isinstance(T, LinearContraction):
        alphas = T.alphas
    else:
        alphas = singular_values(T)
    if np.any(alphas <= 0.0):
        raise InvalidInputError("phi^s requires a nonsingular matrix")
    return float(np.exp(log_phi_stack(alphas, s)))


def compose(ifs, word):
    """Product matrix T_{i_1} ... T_{i_k} for a word; identity if empty."""
    mat = np.eye(ifs.dim)
    for sym in word:
        mat = mat @ ifs.matrix(sym)
    return mat


def contraction_bounds(ifs):
    """(a_minus, a_plus): the extreme singular values over the family.

    a_minus is the smallest alpha_N, a_plus the largest alpha_1; both lie in
    (0, 1) and sandwich every singular value of every finite composition via
    a_minus^k <= alpha_j(T_w) <= a_plus^k for |w| = k.
    """
    a_minus = min(t.alphas[-1] for t in ifs.maps)
    a_plus = max(t.alphas[0] for t in ifs.maps)
    return float(a_minus), float(a_plus)
