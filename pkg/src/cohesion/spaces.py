"""Dissimilarity spaces, triplet comparison spaces and their builders.

A triplet comparison function assigns to every unordered pair ``{x, y}`` and
third point ``z`` the weight ``T({x, y}, z)`` with which ``z`` is the outlier
of the triple. Spaces are immutable once built.

Two storage backends exist for :class:`TripletComparisonSpace`:

* ``lazy``: a retained :class:`DissimilaritySpace` plus a :class:`TiePolicy`;
  entries are recomputed from the distances on demand (O(n^2) memory).
* ``dense``: a packed array with one row per unordered pair ``i <= j`` and
  one column per third point (O(n^3) memory). Pair symmetry is structural.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

THIRD = 1.0 / 3.0
MASS_TOL = 1e-12
AXIOM_TOL = 1e-12


class ValidationError(ValueError):
    """Input data does not describe a valid space."""


class TieError(ValidationError):
    """Equal distances were found under the strict tie policy."""

    def __init__(self, triple, labels=None):
        self.triple = tuple(int(i) for i in triple)
        names = [labels[i] for i in self.triple] if labels is not None else self.triple
        x, y, z = names
        super().__init__(f"tie d({x},{y}) = d({x},{z}) under strict tie policy (triple {x}, {y}, {z})")


def _readonly(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def _default_labels(n):
    return tuple(str(i) for i in range(n))


def _check_mass(p, n):
    if p is None:
        return np.full(n, 1.0 / n)
    p = np.asarray(p, dtype=float).reshape(-1)
    if p.shape != (n,):
        raise ValidationError(f"mass vector has length {p.size}, expected {n}")
    if not np.all(np.isfinite(p)) or np.any(p < 0):
        raise ValidationError("masses must be finite and non-negative")
    if abs(p.sum() - 1.0) > MASS_TOL:
        raise ValidationError(f"masses sum to {p.sum()!r}, expected 1")
    return p


@dataclass(frozen=True)
class DissimilaritySpace:
    """Finite labelled point set with dissimilarity matrix ``d`` and masses ``p``."""

    d: np.ndarray
    p: np.ndarray = None
    labels: tuple = None
    coords: np.ndarray = None

    def __post_init__(self):
        d = np.asarray(self.d, dtype=float)
        if d.ndim != 2 or d.shape[0] != d.shape[1] or d.shape[0] < 1:
            raise ValidationError(f"dissimilarity matrix must be square and non-empty, got shape {d.shape}")
        n = d.shape[0]
        if not np.all(np.isfinite(d)):
            raise ValidationError("dissimilarity matrix has non-finite entries")
        if np.any(d < 0):
            i, j = np.argwhere(d < 0)[0]
            raise ValidationError(f"negative dissimilarity d[{i}][{j}] = {d[i, j]}")
        if not np.array_equal(d, d.T):
            i, j = np.argwhere(d != d.T)[0]
            raise ValidationError(f"dissimilarity matrix is not symmetric at ({i}, {j})")
        off = d + np.diag(np.full(n, np.inf))
        bad = np.diag(d)[:, None] >= off
        if bad.any():
            i, j = np.argwhere(bad)[0]
            raise ValidationError(f"self-dissimilarity d[{i}][{i}] is not strictly below d[{i}][{j}]")
        labels = _default_labels(n) if self.labels is None else tuple(str(s) for s in self.labels)
        if len(labels) != n:
            raise ValidationError(f"{len(labels)} labels given for {n} points")
        if len(set(labels)) != n:
            raise ValidationError("labels must be unique")
        object.__setattr__(self, "d", _readonly(d))
        object.__setattr__(self, "p", _readonly(_check_mass(self.p, n)))
        object.__setattr__(self, "labels", labels)
        if self.coords is not None:
            object.__setattr__(self, "coords", _readonly(np.atleast_2d(self.coords)))

    @classmethod
    def from_coords(cls, coords, p=None, labels=None, metric="euclidean"):
        coords = np.asarray(coords, dtype=float)
        if coords.ndim == 1:
            coords = coords[:, None]
        diff = coords[:, None, :] - coords[None, :, :]
        if metric == "euclidean":
            d = np.sqrt((diff ** 2).sum(axis=-1))
        elif metric == "manhattan":
            d = np.abs(diff).sum(axis=-1)
        else:
            raise ValidationError(f"unknown metric {metric!r}")
        return cls(d, p, labels, coords)

    @property
    def n(self):
        return self.d.shape[0]

    def mass(self, subset):
        return float(self.p[list(subset)].sum())

    def index(self, label):
        try:
            return self.labels.index(str(label))
        except ValueError:
            raise KeyError(f"unknown label {label!r}") from None

    def restrict(self, subset, p=None):
        """Sub-space on ``subset`` (indices, in the given order)."""
        idx = np.asarray(list(subset), dtype=int)
        if p is None:
            m = self.p[idx].sum()
            if m <= 0:
                raise ValidationError("subset has zero mass; cannot renormalise")
            p = self.p[idx] / m
        coords = None if self.coords is None else self.coords[idx]
        return DissimilaritySpace(self.d[np.ix_(idx, idx)], p, [self.labels[i] for i in idx], coords)

    def with_distances(self, d):
        return DissimilaritySpace(d, self.p, self.labels)


@dataclass(frozen=True)
class TiePolicy:
    """How equal distances inside a triple are resolved.

    ``strict`` rejects any shared-vertex tie ``d(x, y) == d(x, z)``;
    ``uniform`` splits the unit outlier weight equally among the pairs
    attaining the minimum distance. ``epsilon`` widens "equal" to
    ``|a - b| <= epsilon``.
    """

    mode: str = "uniform"
    epsilon: float = 0.0

    def __post_init__(self):
        if self.mode not in ("strict", "uniform"):
            raise ValidationError(f"tie policy must be 'strict' or 'uniform', got {self.mode!r}")
        if not self.epsilon >= 0:
            raise ValidationError("tie epsilon must be non-negative")


@dataclass
class AxiomReport:
    passed: bool
    violations: list = field(default_factory=list)

    def __bool__(self):
        return self.passed


def _pair_index(n):
    idx = np.empty((n, n), dtype=np.intp)
    iu, ju = np.triu_indices(n)
    k = np.arange(iu.size)
    idx[iu, ju] = k
    idx[ju, iu] = k
    return idx


class TripletComparisonSpace:
    """A triplet comparison function with a mass function.

    Use the builders :func:`induced_triplet`,
    :func:`aggregate_outlier_responses` and :func:`aggregate_standard_queries`
    or :meth:`from_tensor` rather than calling the constructor.
    """

    def __init__(self, labels, p, *, packed=None, dissimilarity=None, policy=None):
        self.labels = tuple(labels)
        self.p = p if not p.flags.writeable else _readonly(p)
        self.n = len(self.labels)
        self._packed = packed
        self._dissim = dissimilarity
        self._policy = policy
        self._pairs = _pair_index(self.n) if packed is not None else None

    def __repr__(self):
        return f"TripletComparisonSpace(n={self.n}, backend={self.backend!r})"

    @property
    def backend(self):
        return "dense" if self._packed is not None else "lazy"

    @property
    def dissimilarity(self):
        """The underlying :class:`DissimilaritySpace` for induced lazy spaces, else ``None``."""
        return self._dissim

    @property
    def policy(self):
        return self._policy

    @classmethod
    def from_tensor(cls, tensor, p=None, labels=None):
        """Dense space from a full ``n x n x n`` array ``tensor[x, y, z] = T({x, y}, z)``.

        Only pair symmetry is enforced here; run :func:`validate_axioms`
        to check the remaining axioms.
        """
        t = np.asarray(tensor, dtype=float)
        if t.ndim != 3 or len(set(t.shape)) != 1:
            raise ValidationError(f"triplet tensor must be n x n x n, got {t.shape}")
        if not np.array_equal(t, t.transpose(1, 0, 2)):
            raise ValidationError("triplet tensor is not symmetric in its pair arguments")
        n = t.shape[0]
        iu, ju = np.triu_indices(n)
        packed = _readonly(t[iu, ju, :])
        labels = _default_labels(n) if labels is None else tuple(str(s) for s in labels)
        return cls(labels, _check_mass(p, n), packed=packed)

    def mass(self, subset):
        return float(self.p[list(subset)].sum())

    def index(self, label):
        try:
            return self.labels.index(str(label))
        except ValueError:
            raise KeyError(f"unknown label {label!r}") from None

    def value(self, x, y, z):
        """``T({x, y}, z)`` for index arguments."""
        if self._packed is not None:
            return float(self._packed[self._pairs[x, y], z])
        return induced_value(self._dissim.d, x, y, z, self._policy.epsilon)

    def pair_slab(self, x):
        """``S[w, y] = T({x, w}, y)`` as an ``n x n`` array."""
        if self._packed is not None:
            return self._packed[self._pairs[x]]
        return _induced_pair_slab(self._dissim.d, x, self._policy.epsilon)

    def outlier_slab(self, x):
        """``O[y, z] = T({y, z}, x)`` as an ``n x n`` array."""
        if self._packed is not None:
            return self._packed[:, x][self._pairs]
        return _induced_outlier_slab(self._dissim.d, x, self._policy.epsilon)

    def tensor(self):
        """Full array ``F[x, w, y] = T({x, w}, y)``."""
        return np.stack([self.pair_slab(x) for x in range(self.n)])

    def to_dense(self):
        if self._packed is not None:
            return self
        t = self.tensor()
        iu, ju = np.triu_indices(self.n)
        return TripletComparisonSpace(self.labels, self.p, packed=_readonly(t[iu, ju, :]))

    def restrict(self, subset, p):
        """Space on ``subset`` (ordered indices) with triplet values unchanged and masses ``p``."""
        idx = np.asarray(list(subset), dtype=int)
        p = _check_mass(p, idx.size)
        labels = [self.labels[i] for i in idx]
        if self._dissim is not None:
            sub = self._dissim.restrict(idx, p)
            return TripletComparisonSpace(sub.labels, sub.p, dissimilarity=sub, policy=self._policy)
        rows = self._pairs[np.ix_(idx, idx)]
        iu, ju = np.triu_indices(idx.size)
        packed = self._packed[rows[iu, ju]][:, idx]
        return TripletComparisonSpace(labels, _readonly(p), packed=_readonly(packed))


# -- induced triplet function -------------------------------------------------

def induced_value(d, x, y, z, epsilon=0.0):
    """Scalar ``T({x, y}, z)`` induced by ``d`` with uniform tie splitting."""
    if x == y == z:
        return THIRD
    if x == y:
        return 1.0
    if z == x or z == y:
        return 0.0
    a, b, c = d[x, y], d[x, z], d[y, z]
    m = min(a, b, c)
    if a > m + epsilon:
        return 0.0
    return 1.0 / (1 + (b <= m + epsilon) + (c <= m + epsilon))


def _split(pair, other1, other2, epsilon):
    pair, other1, other2 = np.broadcast_arrays(pair, other1, other2)
    omin = np.minimum(other1, other2)
    if epsilon == 0.0:
        out = (pair < omin).astype(float)
        near = pair == omin
    else:
        out = (pair < omin - epsilon).astype(float)
        near = (pair <= omin + epsilon) & (out == 0.0)
    # pairs tied (within epsilon) with the minimum share the unit weight
    if near.any():
        a, b, c = pair[near], other1[near], other2[near]
        m = np.minimum(a, np.minimum(b, c)) + epsilon
        out[near] = 1.0 / (1.0 + (b <= m) + (c <= m))
    return out


def _induced_pair_slab(d, x, epsilon):
    # S[w, y] = T({x, w}, y): pair distance d[x, w], others d[x, y] and d[w, y]
    n = d.shape[0]
    row = d[x]
    s = _split(row[:, None], row[None, :], d, epsilon)
    s[x, :] = 1.0
    s[x, x] = THIRD
    s[:, x] = np.where(np.arange(n) == x, THIRD, 0.0)
    s[np.arange(n), np.arange(n)] = np.where(np.arange(n) == x, THIRD, 0.0)
    return s


def _induced_outlier_slab(d, x, epsilon):
    # O[y, z] = T({y, z}, x): pair distance d[y, z], others d[y, x] and d[z, x]
    n = d.shape[0]
    col = d[:, x]
    o = _split(d, col[:, None], col[None, :], epsilon)
    o[np.arange(n), np.arange(n)] = 1.0
    o[x, :] = 0.0
    o[:, x] = 0.0
    o[x, x] = THIRD
    return o


def _find_tie(d, epsilon):
    n = d.shape[0]
    for x in range(n):
        others = np.delete(np.arange(n), x)
        order = others[np.argsort(d[x, others], kind="stable")]
        gaps = np.diff(d[x, order])
        hit = np.flatnonzero(gaps <= epsilon)
        if hit.size:
            return x, order[hit[0]], order[hit[0] + 1]
    return None


def induced_triplet(space: DissimilaritySpace, policy: TiePolicy = None, dense=False):
    """Triplet comparison space induced by the distances of ``space``.

    For distinct ``x, y, z`` the pair ``{x, y}`` gets weight 1 when
    ``d(x, y) < min(d(x, z), d(y, z))``. Under the ``uniform`` policy, pairs
    tied at the minimum share the weight equally.

    Raises
    ------
    TieError
        Strict policy and some ``d(x, y) == d(x, z)`` for ``y != z``.
    """
    policy = policy or TiePolicy()
    if policy.mode == "strict":
        tie = _find_tie(space.d, policy.epsilon)
        if tie is not None:
            raise TieError(tie, space.labels)
    t = TripletComparisonSpace(space.labels, space.p, dissimilarity=space, policy=policy)
    return t.to_dense() if dense else t


# -- aggregated data ------------------------------------------------------------

def _resolve(labels, key):
    lookup = {s: i for i, s in enumerate(labels)}
    try:
        return lookup[str(key)]
    except KeyError:
        raise ValidationError(f"unknown label {key!r}") from None


def _degenerate_tensor(n):
    t = np.zeros((n, n, n))
    i = np.arange(n)
    t[i, i, :] = 1.0
    t[i, i, i] = THIRD
    return t


def _triples(n):
    for x in range(n):
        for y in range(x + 1, n):
            for z in range(y + 1, n):
                yield x, y, z


def aggregate_outlier_responses(labels: Sequence, responses: Iterable, p=None):
    """Dense space from crowdsourced "which two are most alike?" responses.

    ``responses`` holds ``(i, j, k, count)`` records: ``count`` respondents
    found ``i`` and ``j`` most alike, i.e. named ``k`` the outlier. Each
    triple's weights are the response proportions; triples with no response
    get 1/3 per assignment.
    """
    labels = tuple(str(s) for s in labels)
    n = len(labels)
    p = _check_mass(p, n)
    counts = {}
    for rec in responses:
        i, j, k, c = rec if len(rec) == 4 else (*rec, 1)
        i, j, k = (_resolve(labels, v) for v in (i, j, k))
        if len({i, j, k}) != 3:
            raise ValidationError(f"response ({labels[i]}, {labels[j]}, {labels[k]}) does not name three distinct points")
        if not c >= 0:
            raise ValidationError(f"negative response count {c!r}")
        key = tuple(sorted((i, j, k)))
        counts.setdefault(key, {}).setdefault(k, 0.0)
        counts[key][k] += float(c)
    t = _degenerate_tensor(n)
    for x, y, z in _triples(n):
        tally = counts.get((x, y, z), {})
        total = sum(tally.values())
        for a, b, out in ((x, y, z), (x, z, y), (y, z, x)):
            w = tally.get(out, 0.0) / total if total > 0 else THIRD
            t[a, b, out] = t[b, a, out] = w
    return TripletComparisonSpace.from_tensor(t, p, labels)


def aggregate_weights(labels: Sequence, entries: Iterable, p=None):
    """Dense space from directly given weights ``(i, j, k, w)`` meaning ``T({i, j}, k) = w``.

    Unspecified assignments of a partially given triple share the remainder
    ``1 - sum(given)`` equally; untouched triples get 1/3 each.
    """
    labels = tuple(str(s) for s in labels)
    n = len(labels)
    p = _check_mass(p, n)
    given = {}
    for i, j, k, w in entries:
        i, j, k = (_resolve(labels, v) for v in (i, j, k))
        if len({i, j, k}) != 3:
            raise ValidationError(f"entry ({labels[i]}, {labels[j]}, {labels[k]}) does not name three distinct points")
        if not 0.0 <= w <= 1.0:
            raise ValidationError(f"triplet weight {w!r} outside [0, 1]")
        given.setdefault(tuple(sorted((i, j, k))), {})[k] = float(w)
    t = _degenerate_tensor(n)
    for x, y, z in _triples(n):
        known = given.get((x, y, z), {})
        missing = [o for o in (x, y, z) if o not in known]
        rest = 1.0 - sum(known.values())
        if rest < -AXIOM_TOL or (not missing and abs(rest) > AXIOM_TOL):
            raise ValidationError(
                f"weights for triple ({labels[x]}, {labels[y]}, {labels[z]}) sum to {1 - rest!r}, expected 1")
        for a, b, out in ((y, z, x), (x, z, y), (x, y, z)):
            w = known[out] if out in known else max(rest, 0.0) / len(missing)
            t[a, b, out] = t[b, a, out] = w
    return TripletComparisonSpace.from_tensor(t, p, labels)


def standard_query_weight(pxyz, pyxz, pyzx, pzxy, pxzy, pzyx):
    """Outlier weight ``T({x, y}, z)`` from standard-query marginals.

    ``pabc`` is the probability that ``d(a, b) < d(a, c)``. Concordant
    answers give the pair its full weight; each of the two circular
    (disconcordant) rankings contributes a third.
    """
    return pxyz * pyxz + (pxyz * pyzx * pzxy + pxzy * pyxz * pzyx) / 3.0


def aggregate_standard_queries(labels: Sequence, marginals: Mapping, p=None, tol=1e-9):
    """Dense space from standard queries ``d(x, y) <? d(x, z)``.

    ``marginals[(x, y, z)]`` is the probability that ``d(x, y) < d(x, z)``.
    A missing marginal is filled from its complement ``1 - p[(x, z, y)]``;
    when both are missing the comparison is taken as undecided (1/2).
    """
    labels = tuple(str(s) for s in labels)
    n = len(labels)
    p = _check_mass(p, n)
    q = {}
    for key, v in marginals.items():
        x, y, z = (_resolve(labels, s) for s in key)
        if len({x, y, z}) != 3:
            raise ValidationError(f"marginal key {key!r} does not name three distinct points")
        v = float(v)
        if not 0.0 <= v <= 1.0:
            raise ValidationError(f"marginal p{key!r} = {v!r} outside [0, 1]")
        q[x, y, z] = v
    for (x, y, z), v in q.items():
        c = q.get((x, z, y))
        if c is not None and abs(v + c - 1.0) > tol:
            raise ValidationError(
                f"inconsistent marginals: p({labels[x]},{labels[y]},{labels[z]}) + "
                f"p({labels[x]},{labels[z]},{labels[y]}) = {v + c!r}")

    def m(a, b, c):
        if (a, b, c) in q:
            return q[a, b, c]
        if (a, c, b) in q:
            return 1.0 - q[a, c, b]
        return 0.5

    t = _degenerate_tensor(n)
    for x, y, z in _triples(n):
        for a, b, c in ((x, y, z), (x, z, y), (y, z, x)):
            w = standard_query_weight(m(a, b, c), m(b, a, c), m(b, c, a), m(c, a, b), m(a, c, b), m(c, b, a))
            t[a, b, c] = t[b, a, c] = w
    return TripletComparisonSpace.from_tensor(t, p, labels)


# -- axiom validation -------------------------------------------------------------

def validate_axioms(space: TripletComparisonSpace, sample=None, tol=AXIOM_TOL, seed=0, n_sample=2000):
    """Check the triplet axioms, range and degenerate entries.

    Dense spaces are checked on every triple. Lazy spaces are checked on all
    degenerate entries plus ``sample`` (an iterable of index triples) or
    ``n_sample`` random triples drawn with ``seed``.

    Violations are returned as ``(triple, axiom, residual)`` tuples where
    ``axiom`` is one of ``"outlier-in-pair"``, ``"sum-to-one"``,
    ``"range"``, ``"degenerate"``.
    """
    n = space.n
    violations = []
    i = np.arange(n)
    if space.backend == "dense":
        f = space.tensor()
        total = f + f.transpose(0, 2, 1) + f.transpose(2, 0, 1)
        res = np.abs(total - 1.0)
        for x, y, z in np.argwhere(res > tol):
            if x <= y <= z:
                violations.append(((int(x), int(y), int(z)), "sum-to-one", float(res[x, y, z])))
        lo = np.maximum(-f, f - 1.0)
        for x, y, z in np.argwhere(lo > tol):
            if x <= y:
                violations.append(((int(x), int(y), int(z)), "range", float(lo[x, y, z])))
        own = f[i[:, None], i[None, :], i[:, None]]
        own[i, i] = 0.0
        for x, y in np.argwhere(np.abs(own) > tol):
            violations.append(((int(x), int(y), int(x)), "outlier-in-pair", float(abs(own[x, y]))))
        degen = f[i, i, :] - 1.0
        degen[i, i] = f[i, i, i] - THIRD
        for x, y in np.argwhere(np.abs(degen) > tol):
            violations.append(((int(x), int(x), int(y)), "degenerate", float(abs(degen[x, y]))))
    else:
        for x in range(n):
            s = space.pair_slab(x)
            own = s[:, x].copy()
            own[x] = 0.0
            for y in np.flatnonzero(np.abs(own) > tol):
                violations.append(((x, int(y), x), "outlier-in-pair", float(abs(own[y]))))
            degen = s[x] - 1.0
            degen[x] = s[x, x] - THIRD
            for y in np.flatnonzero(np.abs(degen) > tol):
                violations.append(((x, x, int(y)), "degenerate", float(abs(degen[y]))))
        if sample is None:
            rng = np.random.default_rng(seed)
            sample = rng.integers(0, n, size=(n_sample, 3))
        for x, y, z in sample:
            x, y, z = int(x), int(y), int(z)
            vals = (space.value(x, y, z), space.value(x, z, y), space.value(y, z, x))
            r = abs(sum(vals) - 1.0)
            if r > tol:
                violations.append(((x, y, z), "sum-to-one", r))
            for v in vals:
                if v < -tol or v > 1 + tol:
                    violations.append(((x, y, z), "range", max(-v, v - 1.0)))
    return AxiomReport(not violations, violations)
