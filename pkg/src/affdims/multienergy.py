"""Multienergy integrals and the bounds that control them.

The central quantity is the nested integral

    I = int [ int...int k(i_1, ..., i_n, j)^{-1} dmu(i_1)...dmu(i_n) ]^{(q-1)/n} dmu(j)

where k is the product of phi^s over the join vertices of the n + 1 rays.
Finiteness of I for s near the theoretical dimension is what drives the
almost-sure lower bounds, so this module makes it observable: a Monte
Carlo estimator, an exact evaluator truncated at cylinder depth D, the
per-join-class product bound, the geometric-decay criterion on the level
sums, and a direct simulation of the transversality expectation bound.

Truncation convention: rays are represented by depth-D words; rays whose
words coincide have joins deeper than D, and the truncated kernel merges
them at depth D (a leaf shared by t rays contributes phi^{t-1}, matching
t - 1 unresolved join points).  The truncated integral is therefore
monotone nondecreasing in D.
"""

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.stats import linregress

from . import counterrng as crng
from .codespace import all_words, canonical_join_class, join_set
from .dimsolver import _Levels
from .errors import (
    DepthInsufficientError,
    InvalidInputError,
    ResourceLimitError,
)
from .linalg import compose, contraction_bounds, log_phi_stack, phi_s, \
    singular_values
from .measures import cylinder_mass, sample_words
from .sampler import truncation_tail

_MC_LABEL = "multienergy/mc"
_TRANS_LABEL = "multienergy/transversality"
_MAX_TREE_VERTICES = 20_000


def _check_s(s, dim, allow_dim=True):
    hi = dim if allow_dim else dim - 1e-12
    if not 0.0 < s <= hi:
        raise InvalidInputError(f"need s in (0, {dim}], got s={s}")
    if float(s) == int(s):
        raise InvalidInputError(
            f"s={s} is an integer; the transversality bounds behind these "
            "integrals require non-integer s"
        )


class _PhiCache:
    """log phi^s(T_w) by word, with incremental matrix products."""

    def __init__(self, ifs, s):
        self.ifs = ifs
        self.s = s
        self._mats = {(): np.eye(ifs.dim)}
        self._logphi = {(): 0.0}

    def mat(self, word):
        word = tuple(word)
        got = self._mats.get(word)
        if got is None:
            got = self.mat(word[:-1]) @ self.ifs.matrix(word[-1])
            self._mats[word] = got
        return got

    def log_phi(self, word):
        word = tuple(word)
        got = self._logphi.get(word)
        if got is None:
            alphas = singular_values(self.mat(word))
            got = float(log_phi_stack(alphas[np.newaxis, :], self.s)[0])
            self._logphi[word] = got
        return got


def _log_kernel(cache, words):
    """log of the depth-truncated join kernel of a multiset of equal-depth words.

    Recursively descends the trie of the words: a vertex whose rays split
    into r child groups contributes r - 1 copies of phi at that vertex, and
    a full-depth word shared by t rays contributes t - 1 copies (the
    merged unresolved joins).  For distinct, diverging rays this equals
    the plain join-set kernel.
    """
    depth = len(words[0])
    total = 0.0

    def descend(prefix, group):
        nonlocal total
        d = len(prefix)
        if d == depth:
            if len(group) > 1:
                total += (len(group) - 1) * cache.log_phi(prefix)
            return
        branches = {}
        for w in group:
            branches.setdefault(w[d], []).append(w)
        if len(branches) > 1:
            total += (len(branches) - 1) * cache.log_phi(prefix)
        for sym, sub in branches.items():
            descend(prefix + (sym,), sub)

    descend((), [tuple(w) for w in words])
    return total


@dataclass(frozen=True)
class MultiEnergyEstimate:
    value: float
    stderr: float
    n: int
    s: float
    q: float
    outer_power: float
    sample_count: int
    truncation_depth: int
    failures: int = 0


def _check_nq(n, q):
    if n < 1:
        raise InvalidInputError(f"spread parameter must be >= 1, got n={n}")
    if not 1.0 < q <= n + 1.0:
        raise InvalidInputError(f"need 1 < q <= n + 1 = {n + 1}, got q={q}")


def mc_multienergy(ifs, model, s, n, q, samples, depth, seed=0,
                   inner=64, batches=32, unresolved="resample"):
    """Monte Carlo estimate of the order-n multienergy integral.

    For each outer ray j, an inner batch of `inner` independent n-tuples
    estimates the bracketed integral, the power (q-1)/n is applied to the
    inner mean, and outer draws are averaged; stderr comes from the spread
    across independent batches.

    unresolved controls rays that collide at `depth`: "resample" redraws
    the tuple up to 3 times and then discards it (counted in failures;
    above 1% of tuples the run aborts), "collapse" keeps it under the
    depth-truncated kernel, which is the exact estimand of
    exact_truncated_multienergy.
    """
    _check_nq(n, q)
    _check_s(s, ifs.dim)
    if unresolved not in ("resample", "collapse"):
        raise InvalidInputError(f"unknown unresolved mode {unresolved!r}")
    if samples < batches:
        raise InvalidInputError(
            f"need at least one outer draw per batch: {samples} < {batches}"
        )
    outer_per_batch = samples // batches
    power = (q - 1.0) / n
    cache = _PhiCache(ifs, s)
    batch_means = []
    failures = 0
    attempts = 0
    for b in range(batches):
        rng = np.random.default_rng(crng.derive_key(seed, f"{_MC_LABEL}/{b}"))
        outer_words = sample_words(model, outer_per_batch, depth, rng)
        vals = []
        for o in range(outer_per_batch):
            j_word = tuple(int(x) for x in outer_words[o])
            inner_words = sample_words(model, inner * n, depth, rng)
            inner_words = inner_words.reshape(inner, n, depth)
            bracket_terms = []
            for rep in range(inner):
                tup = [tuple(int(x) for x in inner_words[rep, l])
                       for l in range(n)] + [j_word]
                attempts += 1
                if unresolved == "resample":
                    tries = 0
                    while len(set(tup)) < n + 1 and tries < 3:
                        redraw = sample_words(model, n, depth, rng)
                        tup = [tuple(int(x) for x in redraw[l])
                               for l in range(n)] + [j_word]
                        tries += 1
                    if len(set(tup)) < n + 1:
                        failures += 1
                        continue
                bracket_terms.append(math.exp(-_log_kernel(cache, tup)))
            if bracket_terms:
                vals.append(np.mean(bracket_terms) ** power)
        if not vals:
            raise DepthInsufficientError(
                f"every tuple of a batch unresolved at depth {depth}"
            )
        batch_means.append(np.mean(vals))
    if unresolved == "resample" and failures > 0.01 * attempts:
        raise DepthInsufficientError(
            f"{failures} of {attempts} tuples unresolved at depth {depth}; "
            "increase depth"
        )
    batch_means = np.asarray(batch_means)
    return MultiEnergyEstimate(
        value=float(batch_means.mean()),
        stderr=float(batch_means.std(ddof=1) / math.sqrt(batches)),
        n=n, s=float(s), q=float(q), outer_power=power,
        sample_count=outer_per_batch * batches,
        truncation_depth=depth, failures=failures,
    )


def _compositions(total, parts):
    if parts == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for tail in _compositions(total - head, parts - 1):
            yield (head,) + tail


def exact_truncated_multienergy(ifs, model, s, n, q, depth):
    """Exact depth-D truncation of the order-n multienergy integral.

    Sums over all (n + 1)-tuples of depth-D cylinders with the truncated
    kernel, the outer power applied exactly per outer cylinder.  Runs in
    O(m^D) tree vertices via a rays-per-subtree recursion rather than the
    m^{D(n+1)} tuple enumeration.
    """
    _check_nq(n, q)
    _check_s(s, ifs.dim)
    m = ifs.m
    if depth < 1:
        raise InvalidInputError(f"depth must be >= 1, got {depth}")
    if (n + 1) * depth * math.log(m) > 60.0:
        raise ResourceLimitError(
            f"(n+1) * depth * log(m) = {(n + 1) * depth * math.log(m):.1f} "
            "exceeds the enumeration budget of 60"
        )
    n_vertices = (m ** (depth + 1) - 1) // (m - 1)
    if n_vertices > _MAX_TREE_VERTICES:
        raise ResourceLimitError(
            f"depth {depth} needs {n_vertices} tree vertices, over the "
            f"budget of {_MAX_TREE_VERTICES}"
        )
    init = np.asarray(model.initial_probs())
    trans = np.asarray(model.transition_probs())
    cache = _PhiCache(ifs, s)
    fact = [math.factorial(t) for t in range(n + 1)]

    # W[word][t]: sum over placements of t inner rays inside the subtree
    # at `word` of (conditional masses) * (kernel factors inside), with
    # the factor of `word` itself included.
    W = {}

    def edge_probs(word):
        return init if len(word) == 0 else trans[word[-1] - 1]

    def build(word):
        phi_inv = math.exp(-cache.log_phi(word))
        if len(word) == depth:
            W[word] = [1.0] + [phi_inv ** (t - 1) for t in range(1, n + 1)]
            return
        kids = [word + (c,) for c in range(1, m + 1)]
        for kid in kids:
            build(kid)
        probs = edge_probs(word)
        out = [1.0] + [0.0] * n
        for t in range(1, n + 1):
            acc = 0.0
            for comp in _compositions(t, m):
                coeff = fact[t]
                term = 1.0
                occ = 0
                for c, tc in enumerate(comp):
                    coeff //= fact[tc]
                    if tc:
                        occ += 1
                        term *= probs[c] ** tc * W[kids[c]][tc]
                acc += coeff * term * phi_inv ** (occ - 1)
            out[t] = acc
        W[word] = out

    build(())

    power = (q - 1.0) / n
    total = 0.0

    def walk(word, logmass):
        nonlocal total
        if len(word) == depth:
            # Combine down the path of the outer ray j = word.
            G = [math.exp(-cache.log_phi(word)) ** t for t in range(n + 1)]
            for d in range(depth - 1, -1, -1):
                v = word[:d]
                cstar = word[d] - 1
                phi_inv = math.exp(-cache.log_phi(v))
                probs = edge_probs(v)
                kids = [v + (c,) for c in range(1, m + 1)]
                G2 = [0.0] * (n + 1)
                for t in range(n + 1):
                    acc = 0.0
                    for comp in _compositions(t, m):
                        coeff = fact[t]
                        term = 1.0
                        occ = 1
                        for c, tc in enumerate(comp):
                            coeff //= fact[tc]
                            if c == cstar:
                                term *= probs[c] ** tc * G[tc]
                            elif tc:
                                occ += 1
                                term *= probs[c] ** tc * W[kids[c]][tc]
                        acc += coeff * term * phi_inv ** (occ - 1)
                    G2[t] = acc
                G = G2
            total += math.exp(logmass) * G[n] ** power
            return
        probs = edge_probs(word)
        for c in range(1, m + 1):
            walk(word + (c,), logmass + math.log(probs[c - 1]))

    walk((), 0.0)
    return float(total)


def check_prop71_bound(ifs, model, s, q, join_class, depth):
    """Test the per-class product bound on the restricted multienergy sum.

    lhs sums kernel^{-1} * masses over ordered tuples of distinct depth-D
    rays below the class root whose join set falls in the class; rhs is
    the closed-form product over the class levels.  Returns (lhs, rhs,
    holds) with holds = lhs <= rhs up to 1e-9 relative slack.
    """
    n = join_class.spread
    if n < 2:
        raise InvalidInputError(f"class spread must be >= 2, got {n}")
    if n > q:
        raise InvalidInputError(
            f"class spread {n} exceeds q={q}; the bound requires q >= spread"
        )
    root = join_class.root
    if max(join_class.levels) >= depth:
        raise InvalidInputError(
            f"depth {depth} cannot resolve a class with a join at level "
            f"{max(join_class.levels)}"
        )
    cache = _PhiCache(ifs, s)
    suffixes = all_words(ifs.m, depth - len(root))
    rays = [root + suf for suf in suffixes]
    lhs = 0.0
    n_fact = math.factorial(n)
    for combo in combinations(rays, n):
        cls = canonical_join_class(join_set(combo, root=root))
        if cls != join_class:
            continue
        logmass = sum(math.log(cylinder_mass(model, w)) for w in combo)
        lhs += n_fact * math.exp(logmass - _log_kernel(cache, list(combo)))
    rhs = _prop71_rhs(ifs, model, s, q, join_class, cache)
    return lhs, rhs, bool(lhs <= rhs * (1.0 + 1e-9))


def _prop71_rhs(ifs, model, s, q, join_class, cache):
    root = join_class.root
    n = join_class.spread
    out = cylinder_mass(model, root) ** ((q - n) / (q - 1.0))
    for level in join_class.levels:
        S = 0.0
        for suf in all_words(ifs.m, level - len(root)):
            u = root + suf
            S += math.exp((1.0 - q) * cache.log_phi(u)) \
                * cylinder_mass(model, u) ** q
        out *= S ** (1.0 / (q - 1.0))
    return out


@dataclass(frozen=True)
class ClassBoundRow:
    join_class: object
    lhs: float
    rhs: float
    holds: bool


def prop71_survey(ifs, model, s, q, depth, max_spread=4, root=()):
    """Product-bound check over every join class realized at this depth.

    Enumerates all tuples of 2..max_spread distinct depth-D rays below the
    root in one sweep, accumulates the restricted sums per canonical
    class, and compares each against its closed-form bound.  Spreads above
    q are skipped (outside the bound's hypothesis).
    """
    if max_spread < 2:
        raise InvalidInputError("survey needs max_spread >= 2")
    cache = _PhiCache(ifs, s)
    root = tuple(root)
    rays = [root + suf for suf in all_words(ifs.m, depth - len(root))]
    rows = []
    for n in range(2, max_spread + 1):
        if n > q:
            continue
        n_fact = math.factorial(n)
        sums = {}
        classes = {}
        for combo in combinations(rays, n):
            cls = canonical_join_class(join_set(combo, root=root))
            key = (cls.root, cls.encoding())
            logmass = sum(
                math.log(cylinder_mass(model, w)) for w in combo
            )
            term = n_fact * math.exp(logmass - _log_kernel(cache, list(combo)))
            sums[key] = sums.get(key, 0.0) + term
            classes[key] = cls
        for key in sorted(sums):
            cls = classes[key]
            lhs = sums[key]
            rhs = _prop71_rhs(ifs, model, s, q, cls, cache)
            rows.append(ClassBoundRow(
                join_class=cls, lhs=lhs, rhs=rhs,
                holds=bool(lhs <= rhs * (1.0 + 1e-9)),
            ))
    return rows


@dataclass(frozen=True)
class DecayCheck:
    lambda_fit: float
    geometric: bool
    slope: float
    stderr: float


def check_decay_criterion(ifs, model, s, q, k_max, max_terms=250000):
    """Fit log Phi_k(s, q) against k and flag geometric decay.

    A negative fitted slope with margin (2 stderr plus a small absolute
    floor) predicts a finite multienergy integral; the fitted
    lambda = exp(slope) is exact for identical-map systems.
    """
    if k_max < 3:
        raise InvalidInputError(f"need k_max >= 3 levels, got {k_max}")
    levels = _Levels(ifs, model, k_max, max_terms)
    ks = np.arange(1, k_max + 1, dtype=np.float64)
    logs = np.array([levels.log_level_sum(s, q, int(k)) for k in ks])
    fit = linregress(ks, logs)
    margin = 2.0 * fit.stderr + 1e-3
    return DecayCheck(
        lambda_fit=float(np.exp(fit.slope)),
        geometric=bool(fit.slope < -margin),
        slope=float(fit.slope),
        stderr=float(fit.stderr),
    )


def simulate_transversality(ifs, fld, u, v, s, trials, seed_offset=0):
    """Empirical mean of |Pi(u) - Pi(v)|^{-s} against the meet-point bound.

    Draws `trials` independent displacement realizations from the field's
    seed, evaluates both truncated projections under each, and returns
    (empirical mean, phi^s(T_{u and v})^{-1}).  The transversality bound
    says the ratio of the two stays bounded as the meet deepens; the
    constant is not computed here, only observed.
    """
    u, v = tuple(u), tuple(v)
    if u == v:
        raise InvalidInputError("need two distinct rays")
    if len(u) != len(v):
        raise InvalidInputError("rays must share a common depth")
    _check_s(s, ifs.dim, allow_dim=False)
    if trials < 1:
        raise InvalidInputError(f"need at least 1 trial, got {trials}")
    meet = ()
    for a, b in zip(u, v):
        if a != b:
            break
        meet = meet + (a,)
    if len(meet) == len(u):
        raise InvalidInputError("rays do not diverge within their length")
    key = crng.derive_key(fld.seed, _TRANS_LABEL)
    idx = np.arange(seed_offset, seed_offset + trials, dtype=np.uint64)

    def positions(word):
        states = crng.offset_states(key, idx)
        pos = np.zeros((trials, ifs.dim))
        prefix = np.eye(ifs.dim)
        for sym in word:
            states = crng.advance(
                states, np.full(trials, sym, dtype=np.uint64)
            )
            omega = (2.0 * crng.unit_uniforms(states, ifs.dim) - 1.0) \
                * fld.region_radius
            pos += omega @ prefix.T
            prefix = prefix @ ifs.matrix(sym)
        return pos

    gaps = np.linalg.norm(positions(u) - positions(v), axis=1)
    empirical = float(np.mean(gaps ** (-s)))
    bound = 1.0 / phi_s(compose(ifs, meet), s)
    return empirical, bound


def resolution_depth(ifs, fld, r_min):
    """Depth at which truncation error drops below a target scale."""
    _, a_plus = contraction_bounds(ifs)
    K = 1
    while truncation_tail(a_plus, fld.region_radius, ifs.dim, K) >= r_min:
        K += 1
        if K > 10_000:
            raise ResourceLimitError("target scale unreachable by truncation")
    return K
