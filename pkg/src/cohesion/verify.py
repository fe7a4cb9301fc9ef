"""Executable property checks for cohesion.

Every check returns a :class:`CheckResult`; violations are data, not
exceptions. Checks raise only when their precondition fails, naming a
witness.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
from numba import njit

from .core import CohesionMatrix, cohesion_matrix, local_mass_matrix
from .spaces import DissimilaritySpace, TiePolicy, ValidationError, induced_triplet
from .structure import PointLikePartition, quotient, subspace

SUM_TOL = 1e-12
RATIO_TOL = 1e-10
ORACLE_MAX_N = 2000


@dataclass
class CheckResult:
    name: str
    passed: bool
    max_residual: float
    tolerance: float
    details: list = field(default_factory=list)

    def to_dict(self):
        return asdict(self)


def _result(name, residuals, tol, details=None, max_details=20):
    """Fold residuals into a result; ``details`` are (description, residual) pairs."""
    residuals = np.asarray(list(residuals), dtype=float).ravel()
    worst = float(residuals.max()) if residuals.size else 0.0
    bad = [(str(what), float(r)) for what, r in (details or []) if not r <= tol]
    passed = worst <= tol and not bad
    return CheckResult(name, bool(passed), worst, tol, bad[:max_details])


def _as_triplets(space, policy=None):
    if isinstance(space, DissimilaritySpace):
        return induced_triplet(space, policy)
    return space


# -- brute-force oracle -----------------------------------------------------------

@njit(cache=True)
def _t_induced(d, x, y, z, eps):
    if x == y and y == z:
        return 1.0 / 3.0
    if x == y:
        return 1.0
    if z == x or z == y:
        return 0.0
    a = d[x, y]
    b = d[x, z]
    c = d[y, z]
    m = min(a, min(b, c))
    if a > m + eps:
        return 0.0
    k = 1.0
    if b <= m + eps:
        k += 1.0
    if c <= m + eps:
        k += 1.0
    return 1.0 / k


@njit(cache=True)
def _oracle_induced(d, p, eps):
    n = d.shape[0]
    out = np.zeros((n, n))
    for x in range(n):
        for y in range(n):
            if p[y] == 0.0:
                continue
            u = 0.0
            for z in range(n):
                u += (_t_induced(d, x, z, y, eps) + _t_induced(d, y, z, x, eps)) * p[z]
            for w in range(n):
                out[x, w] += _t_induced(d, x, w, y, eps) / u * p[y]
    return out


@njit(cache=True)
def _oracle_dense(t, p):
    # t[x, w, y] = T({x, w}, y)
    n = t.shape[0]
    out = np.zeros((n, n))
    for x in range(n):
        for y in range(n):
            if p[y] == 0.0:
                continue
            u = 0.0
            for z in range(n):
                u += (t[x, z, y] + t[y, z, x]) * p[z]
            for w in range(n):
                out[x, w] += t[x, w, y] / u * p[y]
    return out


def brute_force_cohesion(space) -> CohesionMatrix:
    """Cohesion by direct triple summation over scalar triplet values.

    Shares no code with the vectorised kernel. Induced spaces re-evaluate
    each comparison from the distances; dense spaces read the stored tensor.
    """
    t = _as_triplets(space)
    if t.n > ORACLE_MAX_N:
        raise ValidationError(f"brute-force oracle limited to {ORACLE_MAX_N} points")
    p = np.ascontiguousarray(t.p, dtype=float)
    if t.dissimilarity is not None:
        d = np.ascontiguousarray(t.dissimilarity.d)
        values = _oracle_induced(d, p, float(t.policy.epsilon))
    else:
        values = _oracle_dense(np.ascontiguousarray(t.tensor()), p)
    return CohesionMatrix(t.labels, values, t.p)


def check_kernel_oracle(space, threads=None, tol=SUM_TOL):
    t = _as_triplets(space)
    fast = cohesion_matrix(t, threads).values
    slow = brute_force_cohesion(t).values
    return _result("kernel_matches_oracle", np.abs(fast - slow), tol)


# -- basic properties -------------------------------------------------------------

def check_average_half(c: CohesionMatrix, p=None, tol=RATIO_TOL):
    """Mass-weighted mean cohesion equals one half."""
    p = c.p if p is None else np.asarray(p, dtype=float)
    r = abs(float(p @ np.asarray(c.values) @ p) - 0.5)
    return _result("average_half", [r], tol)


def check_self_dominance(c: CohesionMatrix):
    """``C(x, x) > C(x, w)`` for every ``w != x`` of positive mass."""
    v = np.asarray(c.values)
    gap = np.diag(v)[:, None] - v
    mask = (c.p[None, :] > 0) & ~np.eye(c.n, dtype=bool)
    bad = [((c.labels[x], c.labels[w]), 1.0) for x, w in np.argwhere(mask & (gap <= 0))]
    return _result("self_dominance", [0.0], 0.0, bad)


def check_point_like_dominance(c: CohesionMatrix, sets):
    """For point-like ``X``: ``C(x, x') > C(x, w)`` with ``x, x'`` in ``X``, ``w`` outside of positive mass."""
    v = np.asarray(c.values)
    bad = []
    for s in sets:
        inside = np.zeros(c.n, dtype=bool)
        inside[list(s)] = True
        outside = ~inside & (c.p > 0)
        if len(s) == c.n or not outside.any():
            continue
        rows = v[inside]
        low = rows[:, inside].min(axis=1)
        high = rows[:, outside].max(axis=1)
        for x, lo, hi in zip(np.flatnonzero(inside), low, high):
            if not lo > hi:
                bad.append(((c.labels[x], sorted(s)), float(hi - lo)))
    return _result("point_like_dominance", [0.0], 0.0, bad)


def check_nonnegative(c: CohesionMatrix):
    neg = np.maximum(-np.asarray(c.values), 0.0)
    return _result("nonnegative", neg, 0.0)


# -- outliers -----------------------------------------------------------------------

def mutually_outlying(space: DissimilaritySpace, x, z):
    """Every third point is closer to ``x`` or to ``z`` than they are to each other."""
    if x == z:
        raise ValidationError("mutual outlying needs two distinct points")
    return _outlying_witness(space.d, x, z) is None


def _outlying_witness(d, x, z):
    near = np.minimum(d[x], d[z]) < d[x, z]
    if near.all():
        return None
    return int(np.flatnonzero(~near)[0])


def check_outlier_influence(space: DissimilaritySpace, z, policy: TiePolicy = None, tol=RATIO_TOL):
    """Adding an outlier ``z`` shifts cohesion by exactly its mass.

    Compared with the space without ``z`` (masses renormalised):
    ``C(x, z) = C(z, x) = 0``; ``C(x, w)`` grows by ``p_z`` when ``w`` is
    closer to ``x`` than to ``z`` and is otherwise unchanged. The outlier's
    own self-cohesion is ``1/2 + (1 - p_z)`` (``1`` if ``p_z = 0``).

    Requires ``(x, z)`` mutually outlying for every ``x != z``.
    """
    d = space.d
    for x in range(space.n):
        if x != z:
            y = _outlying_witness(d, x, z)
            if y is not None:
                raise ValidationError(
                    f"{space.labels[x]} and {space.labels[z]} are not mutually outlying "
                    f"(witness {space.labels[y]})")
    t = induced_triplet(space, policy)
    c = cohesion_matrix(t).values
    rest = [i for i in range(space.n) if i != z]
    if not rest:
        return _result("outlier_influence", [], tol)
    sub = cohesion_matrix(subspace(t, rest)).values
    pz = float(space.p[z])
    idx = np.asarray(rest)
    shift = np.where(d[np.ix_(idx, idx)].T < d[idx, z][None, :], pz, 0.0)  # [x, w]: d(w, x) < d(w, z)
    res = [np.abs(c[np.ix_(idx, idx)] - (sub + shift)).ravel(),
           np.abs(c[idx, z]), np.abs(c[z, idx]),
           [abs(c[z, z] - ((0.5 if pz > 0 else 0.0) + 1.0 - pz))]]
    return _result("outlier_influence", np.concatenate([np.ravel(r) for r in res]), tol)


def check_outlier_bounds(space: DissimilaritySpace, outliers, policy: TiePolicy = None, tol=RATIO_TOL):
    """Bounds for a group of outliers ``Z`` far from the rest ``X``.

    ``C(x, z) <= p_Z / (1 - p_Z)`` and
    ``p_Z <= C(x, w) - C_X(x, w) <= p_Z / (1 - p_Z)`` for ``x, w`` in ``X``.
    """
    d = space.d
    zs = sorted({int(z) for z in outliers})
    xs = [i for i in range(space.n) if i not in zs]
    if not xs:
        raise ValidationError("outlier bounds need at least one non-outlier")
    if zs:
        inner = d[np.ix_(xs, xs)].max()
        cross = d[np.ix_(xs, zs)]
        if not inner < cross.min():
            a, b = np.unravel_index(np.argmin(cross), cross.shape)
            raise ValidationError(
                f"outliers not separated: d({space.labels[xs[a]]}, {space.labels[zs[b]]}) = {cross.min()} "
                f"<= within-group maximum {inner}")
    t = induced_triplet(space, policy)
    c = cohesion_matrix(t).values
    cx = cohesion_matrix(subspace(t, xs)).values
    pz = space.mass(zs)
    upper = pz / (1.0 - pz)
    diff = c[np.ix_(xs, xs)] - cx
    to_out = c[np.ix_(xs, zs)] if zs else np.zeros(1)
    res = np.concatenate([(to_out - upper).ravel(), (pz - diff).ravel(), (diff - upper).ravel()])
    out = _result("outlier_bounds", np.maximum(res, 0.0), tol)
    out.details.append(("max_outlier_cohesion", float(to_out.max())))
    out.details.append(("upper_bound", upper))
    return out


# -- quotients ------------------------------------------------------------------------

def check_local_mass_quotient(space, partition: PointLikePartition, reps=None, tol=SUM_TOL):
    """Local mass splits into block-internal and quotient parts.

    ``U(x, y) = m(X_i) U_{X_i}(x, y)`` inside a block and
    ``U(x, y) = U_q(rep_i, rep_j)`` across blocks.
    """
    t = _as_triplets(space)
    u = local_mass_matrix(t)
    q = quotient(t, partition, reps)
    uq = local_mass_matrix(q.space)
    block = partition.block_of(t.n)
    res = [np.abs(u - uq[np.ix_(block, block)])[block[:, None] != block[None, :]]]
    for b in partition.blocks:
        idx = sorted(b)
        m = t.mass(idx)
        if m > 0:
            ub = local_mass_matrix(subspace(t, idx))
            res.append(np.abs(u[np.ix_(idx, idx)] - m * ub).ravel())
        else:
            res.append(np.abs(u[np.ix_(idx, idx)]).ravel())
    return _result("local_mass_quotient", np.concatenate(res), tol)


def check_quotient_fractal(space, partition: PointLikePartition, reps=None, tol=RATIO_TOL):
    """Cohesion on a point-like partition is determined by the quotient.

    Across blocks ``C(x, w) = C_q(i, j)``; inside block ``i``
    ``C(x, w) = C_q(i, i) + C_{X_i}(x, w) - 1/2``; block sums
    ``sum C(x, w) p_x p_w = C_q(i, j) pbar_i pbar_j``.
    """
    t = _as_triplets(space)
    c = cohesion_matrix(t).values
    q = quotient(t, partition, reps)
    cq = cohesion_matrix(q.space).values
    block = partition.block_of(t.n)
    cross = block[:, None] != block[None, :]
    res = [np.abs(c - cq[np.ix_(block, block)])[cross]]
    for i, b in enumerate(partition.blocks):
        idx = sorted(b)
        if t.mass(idx) > 0:
            cb = cohesion_matrix(subspace(t, idx)).values
            res.append(np.abs(c[np.ix_(idx, idx)] - (cq[i, i] + cb - 0.5)).ravel())
    weighted = c * np.outer(t.p, t.p)
    nb = len(partition.blocks)
    agg = np.zeros((nb, nb))
    np.add.at(agg, (block[:, None], block[None, :]), weighted)
    res.append(np.abs(agg - cq * np.outer(q.pbar, q.pbar)).ravel())
    return _result("quotient_fractal", np.concatenate(res), tol)


def check_representative_independence(space, partition: PointLikePartition, trials=5, seed=0):
    t = _as_triplets(space)
    rng = np.random.default_rng(seed)
    base = quotient(t, partition).space.tensor()
    res = []
    for _ in range(trials):
        reps = [int(rng.choice(sorted(b))) for b in partition.blocks]
        res.append(np.abs(quotient(t, partition, reps, check=False).space.tensor() - base).ravel())
    return _result("representative_independence", np.concatenate(res) if res else [], 0.0)


# -- worked example ------------------------------------------------------------------

ORDERING_POINTS = np.array([[0.0, 0.0], [4.0, 0.0], [0.0, 5.0], [6.0, 0.0]])


def ordering_space(p):
    q = (1.0 - p) / 3.0
    return DissimilaritySpace.from_coords(ORDERING_POINTS, [q, q, q, p], ["x1", "x2", "x3", "x4"])


def check_ordering_example(grid=None, tol=RATIO_TOL):
    """Nearer is not always more cohesive.

    With ``x4`` of mass ``p``: ``C(x1, x2) = 1/3`` for all ``p`` and
    ``C(x1, x3) = p``, so the cohesion order flips exactly when ``p > 1/3``
    although ``d(x1, x2) < d(x1, x3)``.
    """
    grid = np.round(np.arange(0.05, 0.951, 0.05), 10) if grid is None else grid
    res, bad = [], []
    for p in grid:
        c = cohesion_matrix(induced_triplet(ordering_space(p))).values
        res += [abs(c[0, 1] - 1.0 / 3.0), abs(c[0, 2] - p)]
        if not np.isclose(p, 1.0 / 3.0, rtol=0, atol=tol):
            if (c[0, 1] < c[0, 2]) != (p > 1.0 / 3.0):
                bad.append((f"order reversal at p={p}", 1.0))
    return _result("ordering_example", res, tol, bad)


# -- suites -------------------------------------------------------------------------

def run_checks(space, *, policy: TiePolicy = None, outliers=None, partition=None,
               family=None, oracle_max_n=300, threads=None):
    """Run every check applicable to ``space``.

    ``outliers`` enables the outlier-bound check; a single outlier or any
    point mutually outlying with all others also gets the influence check.
    """
    from .structure import enumerate_point_like, point_like_partitions

    dis = space if isinstance(space, DissimilaritySpace) else space.dissimilarity
    t = _as_triplets(space, policy)
    c = cohesion_matrix(t, threads)
    results = [check_average_half(c), check_nonnegative(c), check_self_dominance(c)]
    if t.n <= oracle_max_n:
        results.append(check_kernel_oracle(t, threads))
    if family is None and (t.dissimilarity is not None or t.n <= 12):
        family = enumerate_point_like(t)
    if family is not None:
        results.append(check_point_like_dominance(c, family.sets))
        if partition is None:
            parts = [q for q in point_like_partitions(family, limit=64) if 1 < len(q.blocks) < t.n]
            partition = max(parts, key=lambda q: len(q.blocks)) if parts else None
    if partition is not None:
        results.append(check_local_mass_quotient(t, partition))
        results.append(check_quotient_fractal(t, partition))
        results.append(check_representative_independence(t, partition))
    if dis is not None:
        if outliers is not None:
            results.append(check_outlier_bounds(dis, outliers, policy))
        for z in range(dis.n):
            if dis.n > 1 and all(x == z or _outlying_witness(dis.d, x, z) is None for x in range(dis.n)):
                results.append(check_outlier_influence(dis, z, policy))
                results[-1].name = f"outlier_influence[{dis.labels[z]}]"
    return results
