"""Cohesion matrices, local depth and community graphs."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .spaces import DissimilaritySpace, TiePolicy, TripletComparisonSpace, ValidationError, induced_triplet


class InconsistencyError(RuntimeError):
    """A local mass vanished where the axioms forbid it."""


@dataclass(frozen=True)
class CohesionMatrix:
    """``values[x, w]`` is the cohesion of ``w`` to the focal point ``x``."""

    labels: tuple
    values: np.ndarray
    p: np.ndarray

    @property
    def n(self):
        return len(self.labels)

    def weighted_mean(self):
        return float(self.p @ self.values @ self.p)

    def __getitem__(self, key):
        return self.values[key]


@dataclass(frozen=True)
class LocalDepthVector:
    labels: tuple
    generalized: np.ndarray
    legacy: np.ndarray = None


@dataclass
class CommunityGraph:
    labels: tuple
    threshold: float
    edges: list = field(default_factory=list)  # (x, w, weight, strong)
    communities: list = field(default_factory=list)

    @property
    def strong_edges(self):
        return [e for e in self.edges if e[3]]


def local_mass(space: TripletComparisonSpace, x, y):
    """``U(x, y) = sum_z (T({x, z}, y) + T({y, z}, x)) p_z``."""
    return float(sum((space.value(x, z, y) + space.value(y, z, x)) * space.p[z] for z in range(space.n)))


def local_mass_row(space: TripletComparisonSpace, x):
    """Vector ``U(x, .)`` in O(n^2)."""
    p = space.p
    return p @ space.pair_slab(x) + space.outlier_slab(x) @ p


def local_mass_matrix(space: TripletComparisonSpace):
    return np.stack([local_mass_row(space, x) for x in range(space.n)])


def _cohesion_row(space, x):
    p = space.p
    s = space.pair_slab(x)
    u = p @ s + space.outlier_slab(x) @ p
    live = p > 0
    bad = live & (u <= 0)
    if bad.any():
        y = int(np.flatnonzero(bad)[0])
        raise InconsistencyError(f"local mass U({space.labels[x]}, {space.labels[y]}) = 0 with positive mass")
    weight = np.zeros_like(p)
    weight[live] = p[live] / u[live]
    return s @ weight


def cohesion_matrix(space: TripletComparisonSpace, threads=None):
    """Cohesion matrix ``C[x, w] = sum_y T({x, w}, y) p_y / U(x, y)``.

    Rows are independent; ``threads`` > 1 evaluates them on a thread pool.
    Opposing points of zero mass contribute nothing.
    """
    n = space.n
    if threads is None or threads == 1 or n < 64:
        rows = [_cohesion_row(space, x) for x in range(n)]
    else:
        threads = threads if threads > 0 else os.cpu_count()
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(lambda x: _cohesion_row(space, x), range(n)))
    values = np.stack(rows) if rows else np.zeros((0, 0))
    values.setflags(write=False)
    return CohesionMatrix(space.labels, values, space.p)


def cohesion(space, policy: TiePolicy = None, threads=None):
    """Convenience wrapper accepting a dissimilarity or triplet space."""
    if isinstance(space, DissimilaritySpace):
        space = induced_triplet(space, policy)
    return cohesion_matrix(space, threads)


def legacy_cohesion(space: DissimilaritySpace):
    """Original unweighted cohesion ``C_{x,w}`` built from local sets.

    ``C_{x,w} = 1/(n-1) sum_{y != x} 1(d(w,x) < d(w,y) and w in U_xy) / #U_xy``
    with ``U_xy = {z : min(d(x,z), d(y,z)) < d(x,y)}``.
    """
    n = space.n
    if n < 2:
        raise ValidationError("legacy cohesion needs at least two points")
    if not np.allclose(space.p, 1.0 / n, rtol=0, atol=1e-15):
        raise ValidationError("legacy cohesion is defined for uniform masses only")
    induced_triplet(space, TiePolicy("strict"))
    d = space.d
    out = np.zeros((n, n))
    for x in range(n):
        for y in range(n):
            if y == x:
                continue
            local = np.minimum(d[x], d[y]) < d[x, y]
            closer = d[:, x] < d[:, y]
            out[x] += (local & closer) / local.sum()
    return out / (n - 1)


def legacy_to_generalized(legacy, n):
    """Map legacy cohesion to the generalized (uniform-mass) values.

    ``C(x, w) = (n - 1) C_{x,w} + 1(x = w) / 2``. The self term comes from the
    opposing point ``y = x``, which the legacy sum leaves out.
    """
    return (n - 1) * np.asarray(legacy) + 0.5 * np.eye(n)


def local_depth(c: CohesionMatrix, space: DissimilaritySpace = None):
    """Mass-weighted local depth; the legacy row sums are added when ``space`` is given."""
    gen = c.values @ c.p
    leg = legacy_cohesion(space).sum(axis=1) if space is not None else None
    return LocalDepthVector(c.labels, gen, leg)


def default_threshold(c: CohesionMatrix):
    """Half the mass-weighted mean self-cohesion."""
    return 0.5 * float(np.diag(c.values) @ c.p)


def community_graph(c: CohesionMatrix, threshold=None):
    """Symmetrised cohesion graph with strong/weak edge flags.

    Edge weight is ``min(C(x, w), C(w, x))``; only positive weights become
    edges. Communities are the connected components of the strong edges.
    """
    tau = default_threshold(c) if threshold is None else float(threshold)
    v = np.asarray(c.values)
    sym = np.minimum(v, v.T)
    iu, ju = np.triu_indices(c.n, k=1)
    w = sym[iu, ju]
    keep = w > 0
    strong = keep & (w >= tau)
    edges = [(int(a), int(b), float(x), bool(s)) for a, b, x, s, k in zip(iu, ju, w, strong, keep) if k]
    adj = coo_matrix((np.ones(strong.sum()), (iu[strong], ju[strong])), shape=(c.n, c.n))
    _, comp = connected_components(adj, directed=False)
    groups = {}
    for i, k in enumerate(comp):
        groups.setdefault(int(k), []).append(i)
    communities = sorted(groups.values(), key=lambda g: g[0])
    return CommunityGraph(c.labels, tau, edges, communities)
