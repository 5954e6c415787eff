"""Words, cylinders, join sets, and cut sets on the m-ary code space.

Words are tuples of 1-based symbols from {1, ..., m}.  A "ray" is a finite
word standing in for an infinite sequence; operations that compare rays
require them to be long enough that no ray is a prefix of another.

The join set of n rays collects their pairwise meet points: each vertex v
that is the exact meet of at least one pair enters with multiplicity r - 1,
where r is the number of child subtrees of v occupied by the rays (the
largest number of rays that pairwise meet exactly at v).  Total multiplicity
is always n - 1, and the vertex set is closed under pairwise meets.

A join class is a join set up to automorphisms of the rooted tree, i.e. up
to permuting child subtrees below the root; the canonical form is a
recursive child-sorted encoding.
"""

import math
from dataclasses import dataclass

from .errors import InvalidInputError, ResourceLimitError
from .linalg import compose, phi_s, singular_values


def wedge(u, v):
    """Longest common prefix of two words."""
    u, v = tuple(u), tuple(v)
    k = 0
    for a, b in zip(u, v):
        if a != b:
            break
        k += 1
    return u[:k]


def is_prefix(u, v):
    """True if u is a (non-strict) prefix of v."""
    u, v = tuple(u), tuple(v)
    return len(u) <= len(v) and v[: len(u)] == u


def all_words(m, k):
    """All words of length k over {1..m} in lexicographic order."""
    if k == 0:
        return [()]
    words = [()]
    for _ in range(k):
        words = [w + (c,) for w in words for c in range(1, m + 1)]
    return words


@dataclass(frozen=True)
class JoinSet:
    """A multiset of tree vertices closed under pairwise meets.

    Parameters
    ----------
    root : tuple
        Vertex below which the whole configuration lives; every vertex must
        extend it.  The root itself may or may not be a vertex.
    vertices : tuple of (word, multiplicity)
        Distinct vertices with positive multiplicities, stored sorted.
    """

    root: tuple
    vertices: tuple

    def __post_init__(self):
        root = tuple(self.root)
        verts = {tuple(w): int(mult) for w, mult in self.vertices}
        if any(mult < 1 for mult in verts.values()):
            raise InvalidInputError("vertex multiplicities must be >= 1")
        for w in verts:
            if not is_prefix(root, w):
                raise InvalidInputError(f"vertex {w} does not extend root {root}")
        words = sorted(verts)
        for i, u in enumerate(words):
            for v in words[i + 1 :]:
                if wedge(u, v) not in verts:
                    raise InvalidInputError(
                        f"not meet-closed: wedge of {u} and {v} missing"
                    )
        object.__setattr__(self, "root", root)
        object.__setattr__(
            self, "vertices", tuple((w, verts[w]) for w in words)
        )

    @property
    def total_multiplicity(self):
        return sum(mult for _, mult in self.vertices)

    @property
    def spread(self):
        """Number of rays that would produce this join set: points + 1."""
        return self.total_multiplicity + 1

    def levels(self):
        """Sorted multiset of vertex depths, counted with multiplicity."""
        out = []
        for w, mult in self.vertices:
            out.extend([len(w)] * mult)
        return tuple(sorted(out))


def join_set(words, root=()):
    """Join set of n distinct rays.

    Parameters
    ----------
    words : sequence of words
        At least two rays, pairwise distinct, each long enough that no ray
        is a prefix of another (otherwise the meet is unresolved and an
        error is raised).
    root : tuple, optional
        Root vertex; all rays must extend it.
    """
    rays = [tuple(w) for w in words]
    if len(rays) < 2:
        raise InvalidInputError(f"need at least 2 rays, got {len(rays)}")
    root = tuple(root)
    for r in rays:
        if not is_prefix(root, r):
            raise InvalidInputError(f"ray {r} does not extend root {root}")
    meet_points = set()
    for i, u in enumerate(rays):
        for v in rays[i + 1 :]:
            w = wedge(u, v)
            if len(w) == len(u) or len(w) == len(v):
                raise InvalidInputError(
                    f"rays {u} and {v} do not diverge within their length; "
                    "extend them to resolve the join"
                )
            meet_points.add(w)
    verts = []
    for v in meet_points:
        children = {r[len(v)] for r in rays if is_prefix(v, r)}
        verts.append((v, len(children) - 1))
    return JoinSet(root=root, vertices=tuple(verts))


def multienergy_kernel(ifs, s, words):
    """Product of phi^s over the join vertices of a family of rays.

    A single ray has an empty join set and kernel 1.  Vertices are weighted
    by multiplicity, so n rays contribute n - 1 factors in total.
    """
    rays = [tuple(w) for w in words]
    if len(rays) == 0:
        raise InvalidInputError("need at least one ray")
    if len(rays) == 1:
        return 1.0
    return kernel_of_join_set(ifs, s, join_set(rays))


def kernel_of_join_set(ifs, s, jset):
    """Kernel value for an explicit join set."""
    out = 1.0
    for w, mult in jset.vertices:
        out *= phi_s(compose(ifs, w), s) ** mult
    return out


def cut_set(ifs, s, r, max_size=250000):
    """The stopping set J^s(r): minimal words with alpha_j(T_w) <= r.

    With j = ceil(s), descends the tree and keeps each word at the first
    level where the j-th singular value of the composed map drops to r or
    below.  Every infinite ray passes through exactly one member, and each
    member w satisfies a_minus * r < alpha_j(T_w) <= r.
    """
    n = ifs.dim
    if not 0.0 < s <= n:
        raise InvalidInputError(f"cut sets need 0 < s <= {n}, got s={s}")
    if not 0.0 < r < 1.0:
        raise InvalidInputError(f"radius must lie in (0, 1), got {r}")
    j = math.ceil(s)
    out = []
    stack = [((), compose(ifs, ()))]
    while stack:
        word, mat = stack.pop()
        for c in range(1, ifs.m + 1):
            w2 = word + (c,)
            m2 = mat @ ifs.matrix(c)
            alpha = singular_values(m2)[j - 1]
            if alpha <= r:
                out.append(w2)
            else:
                stack.append((w2, m2))
            if len(out) + len(stack) > max_size:
                raise ResourceLimitError(
                    f"cut set for r={r} exceeds budget of {max_size} words"
                )
    out.sort()
    return out


# ---------------------------------------------------------------------------
# Join classes: join sets up to root-preserving tree automorphisms.


@dataclass(frozen=True)
class JoinClass:
    """A join set up to child-permuting automorphisms below its root.

    canonical_form is a concrete representative rooted at the same root;
    two join sets are related by an automorphism iff their classes compare
    equal.  levels is the absolute depth multiset, spread the ray count.
    """

    root: tuple
    canonical_form: JoinSet
    spread: int
    levels: tuple

    def encoding(self):
        """Root-relative canonical encoding (hashable, root-independent)."""
        return _encode_join_set(self.canonical_form)


def _encode_join_set(jset):
    verts = dict(jset.vertices)
    words = sorted(verts)
    rootlen = len(jset.root)
    children = {w: [] for w in words}
    tops = []
    for w in words:
        parent = None
        for v in words:
            if v != w and is_prefix(v, w):
                if parent is None or len(v) > len(parent):
                    parent = v
        if parent is None:
            tops.append(w)
        else:
            children[parent].append(w)

    def enc(w):
        kids = tuple(sorted(enc(u) for u in children[w]))
        return (len(w) - rootlen, verts[w], kids)

    return tuple(sorted(enc(t) for t in tops))


def _realize_encoding(encoding, root):
    verts = {}

    def place(parent_word, parent_depth, node, branch):
        depth, mult, kids = node
        if depth == parent_depth:
            word = parent_word
        else:
            word = parent_word + (branch,) + (1,) * (depth - parent_depth - 1)
        verts[word] = verts.get(word, 0) + mult
        for idx, kid in enumerate(kids):
            place(word, depth, kid, idx + 1)

    for idx, node in enumerate(encoding):
        place(tuple(root), 0, node, idx + 1)
    return JoinSet(root=tuple(root), vertices=tuple(verts.items()))


def canonical_join_class(jset):
    """Canonical class of a join set under root-preserving automorphisms.

    The representative re-lays the same tree shape below the original root
    with child subtrees in canonical order, so equal classes have equal
    representatives.
    """
    encoding = _encode_join_set(jset)
    rep = _realize_encoding(encoding, jset.root)
    return JoinClass(
        root=jset.root,
        canonical_form=rep,
        spread=jset.spread,
        levels=jset.levels(),
    )


# ---------------------------------------------------------------------------
# Counting join configurations with a prescribed level multiset.


def _multiset_partitions(items, max_parts):
    """Unordered partitions of a sorted tuple into <= max_parts nonempty parts.

    Yields partitions as tuples of sorted tuples; duplicates may repeat
    (callers dedupe on the derived encodings).
    """
    if not items:
        yield ()
        return
    if max_parts <= 0:
        return
    first, rest = items[0], items[1:]
    # Subsets of rest joining `first` in its part, then recurse on the rest.
    n = len(rest)
    for mask in range(1 << n):
        part = [first] + [rest[i] for i in range(n) if mask >> i & 1]
        remainder = tuple(rest[i] for i in range(n) if not mask >> i & 1)
        for tail in _multiset_partitions(remainder, max_parts - 1):
            yield (tuple(part),) + tail


def _class_shapes(levels, m, _cache=None):
    """Canonical encodings of ray-realizable join classes with these levels.

    A shape is realizable in the m-ary tree iff at each vertex the number
    of occupied child subtrees, multiplicity + 1, is at most m, and its
    subtree children fit among those slots.
    """
    if _cache is None:
        _cache = {}
    key = (tuple(levels), m)
    if key in _cache:
        return _cache[key]
    lv = tuple(sorted(levels))
    top = lv[0]
    mu = sum(1 for x in lv if x == top)
    rest = lv[mu:]
    shapes = set()
    slots = mu + 1
    if slots <= m:
        for parts in _multiset_partitions(rest, slots):
            choice_sets = [
                sorted(_class_shapes(p, m, _cache)) for p in parts
            ]
            if any(not cs for cs in choice_sets):
                continue
            stack = [()]
            for cs in choice_sets:
                stack = [got + (c,) for got in stack for c in cs]
            for combo in stack:
                # One encoding node per child part; each part's shape is a
                # single-top encoding (tuple of length 1).
                kids = tuple(sorted(node for shape in combo for node in shape))
                shapes.add(((top, mu, kids),))
    _cache[key] = shapes
    return shapes


def count_join_configurations(levels, m=2, max_n=6, max_depth=8):
    """Number of distinct join classes with the given level multiset.

    Counts classes of join sets rooted at the tree origin that arise as the
    join of n + 1 distinct rays in the m-ary tree, where n = len(levels) is
    the number of join points counted with multiplicity.  The count is
    always at most (n - 1)!.

    Parameters
    ----------
    levels : sequence of int
        Nonnegative vertex depths, repetitions allowed.
    m : int
        Arity of the tree (default binary).
    """
    lv = tuple(sorted(int(x) for x in levels))
    n = len(lv)
    if n < 1:
        raise InvalidInputError("need at least one level")
    if any(x < 0 for x in lv):
        raise InvalidInputError(f"levels must be nonnegative, got {lv}")
    if m < 2:
        raise InvalidInputError(f"tree arity must be >= 2, got {m}")
    if n > max_n:
        raise ResourceLimitError(f"{n} levels exceeds the limit of {max_n}")
    if lv[-1] > max_depth:
        raise ResourceLimitError(
            f"level {lv[-1]} exceeds the depth limit of {max_depth}"
        )
    return len(_class_shapes(lv, m))
