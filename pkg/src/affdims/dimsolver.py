"""Theoretical q-dimensions from singular-value moment sums.

The central object is the level sum

    Phi_k(s, q) = sum over words i of length k of
                  phi^s(T_i)^(1 - q) * mu(C_i)^q,

whose growth rate lambda(s) = lim_k Phi_k(s, q)^(1/k) is strictly
increasing in s (phi^s decreases and 1 - q < 0).  The q-dimension d_q is
the root of lambda(s) = 1; below it the level sums decay geometrically,
above they diverge.

For Bernoulli models Phi_k is supermultiplicative, and for the Markov
family it is after weighting by the quasi-Bernoulli constant, so
max_k Phi_k^(1/k) converges to the limit monotonically from below; the
solver bisects on that certified lower bound.  Setting q = 0 and dropping
the measure recovers the affinity (box-counting) sums, which are
submultiplicative instead, with the inequalities reversed.

All accumulation is in log space.  Enumeration is vectorized level by
level; one-shot sums beyond the in-memory chunk stream over prefix
subtrees.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .codespace import cut_set
from .errors import InvalidInputError, NoRootError, ResourceLimitError
from .linalg import compose, log_phi_stack, phi_s, singular_values_stack
from .measures import cylinder_mass, log_prob_tables, product_ratio_bounds

_CHUNK_TERMS = 1 << 16
_DEFAULT_MAX_TERMS = 20_000_000
_SOLVER_MAX_TERMS = 250_000


def _check_q(q):
    if not q > 1.0:
        raise InvalidInputError(f"moment sums need q > 1, got q={q}")


class _Levels:
    """Per-level singular values and log cylinder masses up to k_max.

    Matrices and masses do not depend on (s, q), so one build serves every
    bisection step; a level evaluation is then a single vectorized
    phi-and-dot pass.
    """

    def __init__(self, ifs, model, k_max, max_terms=_SOLVER_MAX_TERMS):
        if k_max < 1:
            raise InvalidInputError(f"k_max must be >= 1, got {k_max}")
        if ifs.m ** k_max > max_terms:
            raise ResourceLimitError(
                f"level {k_max} holds {ifs.m ** k_max} words, over the "
                f"budget of {max_terms}"
            )
        m = ifs.m
        base = ifs.matrix_stack()
        if model is not None:
            log_init, log_trans = log_prob_tables(model)
        else:
            log_init = np.zeros(m)
            log_trans = np.zeros((m, m))
        mats = base.copy()
        logmass = log_init.copy()
        lasts = np.arange(m)
        self.alphas = [singular_values_stack(mats)]
        self.logmass = [logmass]
        for _ in range(1, k_max):
            mats = np.matmul(
                mats[:, np.newaxis, :, :], base[np.newaxis, :, :, :]
            ).reshape(-1, ifs.dim, ifs.dim)
            logmass = (logmass[:, np.newaxis] + log_trans[lasts, :]).reshape(-1)
            lasts = np.tile(np.arange(m), lasts.shape[0])
            self.alphas.append(singular_values_stack(mats))
            self.logmass.append(logmass)
        self.k_max = k_max

    def log_level_sum(self, s, q, k):
        terms = (1.0 - q) * log_phi_stack(self.alphas[k - 1], s) \
            + q * self.logmass[k - 1]
        return float(logsumexp(terms))


def _suffix_table(ifs, model, depth):
    m = ifs.m
    base = ifs.matrix_stack()
    _, log_trans = log_prob_tables(model)
    mats = base.copy()
    internal = np.zeros(m)
    firsts = np.arange(m)
    lasts = np.arange(m)
    for _ in range(1, depth):
        mats = np.matmul(
            mats[:, np.newaxis, :, :], base[np.newaxis, :, :, :]
        ).reshape(-1, ifs.dim, ifs.dim)
        internal = (internal[:, np.newaxis] + log_trans[lasts, :]).reshape(-1)
        firsts = np.repeat(firsts, m)
        lasts = np.tile(np.arange(m), lasts.shape[0])
    return mats, internal, firsts, lasts


def _iter_level(ifs, model, k):
    """Yield (matrix stack, log mass) chunks covering all level-k words."""
    m = ifs.m
    log_init, log_trans = log_prob_tables(model)
    b = max(1, min(k, int(math.log(_CHUNK_TERMS) / math.log(m))))
    mats, internal, firsts, lasts = _suffix_table(ifs, model, b)
    if k == b:
        yield mats, log_init[firsts] + internal
        return
    base = ifs.matrix_stack()
    prefix_len = k - b
    # DFS over prefixes with incremental product / mass stacks.
    symbols = [0] * prefix_len
    prods = []
    masses = []
    for d in range(prefix_len):
        prev = prods[d - 1] if d else np.eye(ifs.dim)
        prods.append(prev @ base[0])
        prev_mass = masses[d - 1] + log_trans[symbols[d - 1], 0] if d \
            else log_init[0]
        masses.append(prev_mass)
    while True:
        pmat, pmass, plast = prods[-1], masses[-1], symbols[-1]
        yield pmat @ mats, pmass + log_trans[plast, firsts] + internal
        # Odometer increment.
        d = prefix_len - 1
        while d >= 0 and symbols[d] == m - 1:
            d -= 1
        if d < 0:
            return
        symbols[d] += 1
        del prods[d:], masses[d:]
        for e in range(d, prefix_len):
            if e > d:
                symbols[e] = 0
            prev = prods[e - 1] if e else np.eye(ifs.dim)
            prods.append(prev @ base[symbols[e]])
            prev_mass = masses[e - 1] + log_trans[symbols[e - 1], symbols[e]] \
                if e else log_init[symbols[e]]
            masses.append(prev_mass)


def log_moment_sum(ifs, model, s, q, k, max_terms=_DEFAULT_MAX_TERMS):
    """log Phi_k(s, q), streamed in chunks within the term budget."""
    _check_q(q)
    if k < 1:
        raise InvalidInputError(f"level must be >= 1, got {k}")
    if ifs.m ** k > max_terms:
        raise ResourceLimitError(
            f"level {k} holds {ifs.m ** k} words, over the budget of {max_terms}"
        )
    pieces = []
    for mats, logmass in _iter_level(ifs, model, k):
        terms = (1.0 - q) * log_phi_stack(singular_values_stack(mats), s) \
            + q * logmass
        pieces.append(logsumexp(terms))
    return float(logsumexp(pieces))


def moment_sum(ifs, model, s, q, k, max_terms=_DEFAULT_MAX_TERMS):
    """Phi_k(s, q) = sum over level-k words of phi^s(T_i)^(1-q) mu(C_i)^q."""
    return float(np.exp(log_moment_sum(ifs, model, s, q, k, max_terms)))


@dataclass(frozen=True)
class MomentSumTable:
    """Level sums Phi_1..Phi_k_max at fixed (s, q)."""

    s: float
    q: float
    sums: tuple

    @property
    def k_max(self):
        return len(self.sums)


def moment_table(ifs, model, s, q, k_max, max_terms=_SOLVER_MAX_TERMS):
    """All level sums up to k_max at fixed (s, q)."""
    _check_q(q)
    levels = _Levels(ifs, model, k_max, max_terms)
    sums = tuple(
        float(np.exp(levels.log_level_sum(s, q, k)))
        for k in range(1, k_max + 1)
    )
    return MomentSumTable(s=float(s), q=float(q), sums=sums)


def _log_growth(levels, s, q, log_weight):
    """Certified lower bound of log lambda(s): max_k of weighted sums."""
    best = -np.inf
    for k in range(1, levels.k_max + 1):
        val = (levels.log_level_sum(s, q, k) + log_weight) / k
        if val > best:
            best = val
    return best


def growth_rate(ifs, model, s, q, k_max=None, max_terms=_SOLVER_MAX_TERMS):
    """Estimate of lim_k Phi_k(s, q)^(1/k).

    Uses the supermultiplicative lower bound max_k (w Phi_k)^(1/k), where
    the weight w is 1 for Bernoulli models and the q-th power of the
    quasi-Bernoulli concatenation bound for Markov models; the bound
    increases to the true limit as k_max grows.
    """
    _check_q(q)
    k_max = k_max or _default_k_max(ifs.m, max_terms)
    levels = _Levels(ifs, model, k_max, max_terms)
    c_min, _ = product_ratio_bounds(model)
    return float(np.exp(_log_growth(levels, s, q, q * math.log(c_min))))


def _default_k_max(m, max_terms):
    return max(1, int(math.log(max_terms) / math.log(m)))


@dataclass(frozen=True)
class DimensionResult:
    """Root of the growth-rate equation with solver diagnostics.

    bracket holds the final (s_lo, s_hi) with growth below 1 on the left
    and above 1 on the right; value is the bracket midpoint.
    """

    value: float
    q: float
    bracket: tuple
    depth: int
    iterations: int
    growth_lo: float
    growth_hi: float


def _bisect_root(growth_fn, dim, tol, increasing):
    s_lo, s_hi = 1e-6, 2.0 * dim
    g_lo = growth_fn(s_lo)
    g_hi = growth_fn(s_hi)
    sign = 1.0 if increasing else -1.0
    if sign * (g_lo - 1.0) >= 0.0:
        raise NoRootError(
            f"no bracket: growth at s={s_lo} is already {g_lo:.6g}"
        )
    expansions = 0
    while sign * (g_hi - 1.0) <= 0.0:
        expansions += 1
        if expansions > 3:
            raise NoRootError(
                f"no bracket: growth at s={s_hi} is still {g_hi:.6g}"
            )
        s_hi *= 2.0
        g_hi = growth_fn(s_hi)
    iterations = max(1, math.ceil(math.log2((s_hi - s_lo) / tol)))
    for _ in range(iterations):
        mid = 0.5 * (s_lo + s_hi)
        g_mid = growth_fn(mid)
        if sign * (g_mid - 1.0) < 0.0:
            s_lo, g_lo = mid, g_mid
        else:
            s_hi, g_hi = mid, g_mid
        if s_hi - s_lo <= tol:
            break
    return s_lo, s_hi, g_lo, g_hi, iterations


def d_q_minus(ifs, model, q, tol=1e-4, k_max=None, max_terms=_SOLVER_MAX_TERMS):
    """The q-dimension: unique root of lim Phi_k(s, q)^(1/k) = 1.

    Bisects on the supermultiplicative lower-bound growth estimate at depth
    k_max; the bracket narrows to width tol around the root.
    """
    _check_q(q)
    k_max = k_max or _default_k_max(ifs.m, max_terms)
    levels = _Levels(ifs, model, k_max, max_terms)
    c_min, _ = product_ratio_bounds(model)
    log_w = q * math.log(c_min)

    def g(s):
        return float(np.exp(_log_growth(levels, s, q, log_w)))

    s_lo, s_hi, g_lo, g_hi, iters = _bisect_root(g, ifs.dim, tol, True)
    return DimensionResult(
        value=0.5 * (s_lo + s_hi), q=float(q), bracket=(s_lo, s_hi),
        depth=k_max, iterations=iters, growth_lo=g_lo, growth_hi=g_hi,
    )


def affinity_dimension(ifs, tol=1e-4, k_max=None, max_terms=_SOLVER_MAX_TERMS):
    """Root of the plain singular-value sums sum phi^s(T_i) over levels.

    These sums are submultiplicative (growth decreasing in s), so the
    per-level estimates approach the limit from above; the bisection uses
    the smallest computed level estimate.
    """
    k_max = k_max or _default_k_max(ifs.m, max_terms)
    levels = _Levels(ifs, None, k_max, max_terms)

    def g(s):
        best = np.inf
        for k in range(1, k_max + 1):
            best = min(best, levels.log_level_sum(s, 0.0, k) / k)
        return float(np.exp(best))

    s_lo, s_hi, g_lo, g_hi, iters = _bisect_root(g, ifs.dim, tol, False)
    return DimensionResult(
        value=0.5 * (s_lo + s_hi), q=0.0, bracket=(s_lo, s_hi),
        depth=k_max, iterations=iters, growth_lo=g_lo, growth_hi=g_hi,
    )


def dq_identical_selfadjoint(alphas, probs, q):
    """Closed-form d_q when all maps equal one self-adjoint contraction.

    Solves phi^d(T) = (sum_i p_i^q)^(1/(q-1)) branch by branch; alphas are
    the eigenvalue magnitudes of the repeated map, decreasing.
    """
    _check_q(q)
    alphas = np.asarray(alphas, dtype=np.float64)
    probs = np.asarray(probs, dtype=np.float64)
    log_t = float(np.log(np.sum(probs ** q)) / (q - 1.0))
    logs = np.log(alphas)
    cum = 0.0
    for j, la in enumerate(logs, start=1):
        if log_t >= cum + la:
            return float(j - 1 + (log_t - cum) / la)
        cum += la
    return float(alphas.size * log_t / cum)


@dataclass(frozen=True)
class CutSetSum:
    r: float
    value: float
    size: int


def d_q_plus_cutset(ifs, model, q, s, rho=0.5, l_max=8, max_size=250000):
    """Moment sums over the cut sets J^s(rho^l) for l = 1..l_max.

    Reported as diagnostics: bounded sums down the ladder support s below
    the upper dimension, growth indicates s above it.  No root finding is
    attempted on these.
    """
    _check_q(q)
    out = []
    for level in range(1, l_max + 1):
        r = rho ** level
        words = cut_set(ifs, s, r, max_size=max_size)
        total = 0.0
        for w in words:
            total += phi_s(compose(ifs, w), s) ** (1.0 - q) \
                * cylinder_mass(model, w) ** q
        out.append(CutSetSum(r=r, value=total, size=len(words)))
    return out


@dataclass(frozen=True)
class PhaseScan:
    """d_q along a q-grid with slope-discontinuity flags."""

    qs: tuple
    values: tuple
    kink_qs: tuple
    threshold: float


def phase_transition_scan(ifs, model, q_grid, tol=1e-4, k_max=None,
                          max_terms=_SOLVER_MAX_TERMS):
    """Solve d_q along a grid and flag slope discontinuities.

    A kink is flagged where the jump between adjacent secant slopes
    exceeds five times the noise floor implied by the solver tolerance
    (each solved value is only known to within tol, so each slope carries
    up to 2 tol / dq of slack).
    """
    qs = [float(x) for x in q_grid]
    if len(qs) < 3:
        raise InvalidInputError("need at least 3 grid points to flag kinks")
    if any(b <= a for a, b in zip(qs, qs[1:])):
        raise InvalidInputError("q grid must be strictly increasing")
    k_max = k_max or _default_k_max(ifs.m, max_terms)
    levels = _Levels(ifs, model, k_max, max_terms)
    c_min, _ = product_ratio_bounds(model)

    values = []
    for q in qs:
        log_w = q * math.log(c_min)

        def g(s, _q=q, _w=log_w):
            return float(np.exp(_log_growth(levels, s, _q, _w)))

        s_lo, s_hi, *_ = _bisect_root(g, ifs.dim, tol, True)
        values.append(0.5 * (s_lo + s_hi))

    steps = np.diff(qs)
    slopes = np.diff(values) / steps
    jumps = np.abs(np.diff(slopes))
    noise = 4.0 * tol / steps.min()
    threshold = 5.0 * noise
    # One flag per contiguous run above threshold, at the largest jump.
    kinks = []
    i = 0
    while i < jumps.size:
        if jumps[i] > threshold:
            j = i
            while j + 1 < jumps.size and jumps[j + 1] > threshold:
                j += 1
            best = i + int(np.argmax(jumps[i : j + 1]))
            kinks.append(qs[best + 1])
            i = j + 1
        else:
            i += 1
    return PhaseScan(
        qs=tuple(qs), values=tuple(values), kink_qs=tuple(kinks),
        threshold=float(threshold),
    )
