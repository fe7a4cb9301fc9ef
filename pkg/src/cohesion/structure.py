"""Point-like sets, their laminar family, quotients and sub-spaces."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .spaces import (
    DissimilaritySpace,
    TiePolicy,
    TripletComparisonSpace,
    ValidationError,
    induced_triplet,
)

WEIGHTED_TOL = 1e-12


class CapabilityError(RuntimeError):
    """Requested enumeration is too large for exhaustive search."""


def _as_triplets(space, policy=None):
    if isinstance(space, DissimilaritySpace):
        return induced_triplet(space, policy)
    return space


def _tol(space):
    return 0.0 if space.backend == "lazy" else WEIGHTED_TOL


def _outside_mask(n, members):
    inside = np.zeros(n, dtype=bool)
    inside[members] = True
    return ~(inside[:, None] & inside[None, :])


def is_point_like(space, subset, tol=None, _slabs=None):
    """True iff every member of ``subset`` answers every outside query alike.

    ``T({x, y}, z) == T({x', y}, z)`` must hold for all ``x, x'`` in the set
    and all ``y, z`` not both in it. Comparison is exact for induced spaces
    and within ``1e-12`` for dense weighted spaces unless ``tol`` is given.
    """
    space = _as_triplets(space)
    members = sorted({int(i) for i in subset})
    if not members:
        raise ValidationError("point-like test needs a non-empty set")
    if len(members) == 1 or len(members) == space.n:
        return True
    tol = _tol(space) if tol is None else tol
    mask = _outside_mask(space.n, members)
    slab = _slabs if _slabs is not None else space.pair_slab
    ref = slab(members[0])[mask]
    for x in members[1:]:
        if np.max(np.abs(slab(x)[mask] - ref)) > tol:
            return False
    return True


@dataclass(frozen=True)
class PointLikeFamily:
    """Laminar family of point-like sets; ``parents[i]`` is the index of the
    smallest strict superset of ``sets[i]`` (``None`` for the whole set)."""

    labels: tuple
    sets: tuple
    parents: tuple

    def __contains__(self, subset):
        return frozenset(subset) in self.sets

    def __len__(self):
        return len(self.sets)

    def children(self, i):
        return [j for j, par in enumerate(self.parents) if par == i]

    @property
    def root(self):
        return self.parents.index(None)

    def is_laminar(self):
        return is_laminar(self.sets)


def is_laminar(sets):
    sets = list(sets)
    for a, b in itertools.combinations(sets, 2):
        if a & b and not (a <= b or b <= a):
            return False
    return True


def _build_family(labels, found):
    sets = sorted(set(found), key=lambda s: (len(s), sorted(s)))
    if not is_laminar(sets):
        raise AssertionError("point-like family is not laminar")
    parents = []
    for i, s in enumerate(sets):
        parent = None
        for j in range(i + 1, len(sets)):
            if s < sets[j]:
                parent = j
                break
        parents.append(parent)
    return PointLikeFamily(tuple(labels), tuple(sets), tuple(parents))


def _prefixes(d, x):
    # members of a point-like set are strictly closer to x than any outsider
    order = np.argsort(d[x], kind="stable")
    return [frozenset(int(i) for i in order[:k]) for k in range(1, len(order) + 1)]


def enumerate_point_like(space, brute_force_cap=16, policy: TiePolicy = None, method="auto"):
    """All point-like subsets of ``space`` as a :class:`PointLikeFamily`.

    For distance-induced spaces a point-like set containing ``x`` must hold
    every point at least as close to ``x`` as its farthest member, so only
    the prefixes of each point's distance ordering are tested
    (``method="prefix"``, O(n^2) candidates).
    General triplet spaces fall back to testing every subset
    (``method="brute"``), allowed up to ``brute_force_cap`` points.
    """
    t = _as_triplets(space, policy)
    n = t.n
    if method == "auto":
        method = "prefix" if t.dissimilarity is not None else "brute"
    slabs = _slab_cache(t)
    if method == "prefix":
        if t.dissimilarity is None:
            raise ValidationError("prefix enumeration needs a distance-induced space")
        d = t.dissimilarity.d
        cands = {c for x in range(n) for c in _prefixes(d, x)}
        found = [c for c in cands if _ball_around_each(d, c) and is_point_like(t, c, _slabs=slabs)]
    elif method == "brute":
        if n > brute_force_cap:
            raise CapabilityError(
                f"{n} points exceed the exhaustive enumeration cap of {brute_force_cap}; "
                "query specific sets with is_point_like instead")
        found = [frozenset(c) for r in range(1, n + 1) for c in itertools.combinations(range(n), r)
                 if is_point_like(t, c, _slabs=slabs)]
    else:
        raise ValueError(f"unknown enumeration method {method!r}")
    return _build_family(t.labels, found)


def _ball_around_each(d, members):
    # necessary: the set is a strict prefix of every member's ordering
    if len(members) in (1, d.shape[0]):
        return True
    inside = np.zeros(d.shape[0], dtype=bool)
    inside[list(members)] = True
    rows = d[inside]
    return bool(np.all(rows[:, inside].max(axis=1) < rows[:, ~inside].min(axis=1)))


def _slab_cache(t):
    if t.n <= 160:
        full = t.tensor()
        return full.__getitem__
    return t.pair_slab


@dataclass(frozen=True)
class PointLikePartition:
    blocks: tuple  # tuple of frozensets

    def block_of(self, n):
        out = np.empty(n, dtype=int)
        for b, block in enumerate(self.blocks):
            out[list(block)] = b
        return out


def make_partition(space, blocks, check=True):
    """Validated :class:`PointLikePartition` from an iterable of index sets."""
    blocks = tuple(frozenset(int(i) for i in b) for b in blocks)
    n = space.n
    seen = sorted(i for b in blocks for i in b)
    if seen != list(range(n)) or any(not b for b in blocks):
        raise ValidationError("blocks do not partition the index set")
    blocks = tuple(sorted(blocks, key=min))
    if check:
        t = _as_triplets(space)
        for b in blocks:
            if not is_point_like(t, b):
                names = ", ".join(t.labels[i] for i in sorted(b))
                raise ValidationError(f"block {{{names}}} is not point-like")
    return PointLikePartition(blocks)


def point_like_partitions(family: PointLikeFamily, limit=None):
    """Every partition of the whole set into members of ``family``.

    Each node's maximal proper subsets cover it (the family holds all
    singletons), so a node is either kept whole or replaced by a partition of
    each of its children.
    """
    memo = {}

    def parts(i):
        if i in memo:
            return memo[i]
        out = [(family.sets[i],)]
        kids = family.children(i)
        if kids:
            for combo in itertools.product(*(parts(k) for k in kids)):
                out.append(tuple(b for piece in combo for b in piece))
                if limit is not None and len(out) >= limit:
                    break
        memo[i] = out
        return out

    result = [PointLikePartition(tuple(sorted(p, key=min))) for p in parts(family.root)]
    result.sort(key=lambda q: -len(q.blocks))
    return result[:limit] if limit is not None else result


@dataclass(frozen=True)
class XTransformation:
    """Shrink each block by ``alphas[i]`` in (0, 1], stretch across blocks by ``beta`` >= 1."""

    partition: PointLikePartition
    alphas: tuple
    beta: float = 1.0

    def __post_init__(self):
        if len(self.alphas) != len(self.partition.blocks):
            raise ValidationError("one alpha per block is required")
        if any(not 0 < a <= 1 for a in self.alphas):
            raise ValidationError("block factors must lie in (0, 1]")
        if not self.beta >= 1:
            raise ValidationError("cross-block factor must be >= 1")


def apply_x_transformation(space: DissimilaritySpace, t: XTransformation, policy: TiePolicy = None):
    tri = induced_triplet(space, policy)
    for b in t.partition.blocks:
        if not is_point_like(tri, b):
            raise ValidationError("X-transformation requires a point-like partition")
    block = t.partition.block_of(space.n)
    scale = np.where(block[:, None] == block[None, :], np.asarray(t.alphas)[block][:, None], t.beta)
    return space.with_distances(space.d * scale)


@dataclass(frozen=True)
class QuotientSpace:
    partition: PointLikePartition
    representatives: tuple
    pbar: np.ndarray
    space: TripletComparisonSpace


def quotient(space, partition: PointLikePartition, reps=None, check=True):
    """Quotient on one representative per block carrying the block's mass."""
    t = _as_triplets(space)
    blocks = partition.blocks
    if reps is None:
        reps = tuple(min(b) for b in blocks)
    reps = tuple(int(r) for r in reps)
    if len(reps) != len(blocks):
        raise ValidationError("one representative per block is required")
    for r, b in zip(reps, blocks):
        if r not in b:
            raise ValidationError(f"representative {t.labels[r]} lies outside its block")
    if check:
        for b in blocks:
            if not is_point_like(t, b):
                raise ValidationError("quotient requires a point-like partition")
    pbar = np.array([t.p[list(b)].sum() for b in blocks])
    return QuotientSpace(partition, reps, pbar, t.restrict(reps, pbar))


def subspace(space, subset):
    """Sub-space on ``subset`` with masses renormalised to sum to one."""
    t = _as_triplets(space)
    idx = sorted({int(i) for i in subset})
    if not idx:
        raise ValidationError("sub-space needs a non-empty set")
    m = t.p[idx].sum()
    if m <= 0:
        raise ValidationError("sub-space has zero mass; renormalisation undefined")
    return t.restrict(idx, t.p[idx] / m)
