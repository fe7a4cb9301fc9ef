import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cohesion import (
    DissimilaritySpace,
    TiePolicy,
    TieError,
    TripletComparisonSpace,
    ValidationError,
    aggregate_outlier_responses,
    aggregate_standard_queries,
    aggregate_weights,
    induced_triplet,
    validate_axioms,
)
from cohesion.spaces import _degenerate_tensor, standard_query_weight

from conftest import THREE, random_space


class TestDissimilaritySpace:
    def test_uniform_default_mass(self):
        s = DissimilaritySpace(THREE)
        np.testing.assert_allclose(s.p, 1 / 3)
        assert s.labels == ("0", "1", "2")

    def test_mass_of_subset(self, three_point):
        assert three_point.mass([0, 2]) == pytest.approx(0.7)

    @pytest.mark.parametrize("d, msg", [
        ([[0, 1], [2, 0]], "symmetric"),
        ([[0, -1], [-1, 0]], "negative"),
        ([[1, 1], [1, 1]], "strictly below"),
        ([[0, 1, 2], [1, 0, 1]], "square"),
    ])
    def test_invalid_matrix(self, d, msg):
        with pytest.raises(ValidationError, match=msg):
            DissimilaritySpace(np.array(d, dtype=float))

    def test_invalid_mass(self):
        with pytest.raises(ValidationError):
            DissimilaritySpace(THREE, [0.5, 0.5, 0.5])
        with pytest.raises(ValidationError):
            DissimilaritySpace(THREE, [1.5, -0.5, 0.0])

    def test_duplicate_labels(self):
        with pytest.raises(ValidationError):
            DissimilaritySpace(THREE, labels=["a", "a", "b"])

    def test_read_only(self, three_point):
        with pytest.raises(ValueError):
            three_point.d[0, 1] = 5.0

    def test_restrict_renormalises(self, three_point):
        r = three_point.restrict([1, 2])
        np.testing.assert_allclose(r.p, [0.375, 0.625])
        assert r.labels == ("x2", "x3")

    def test_manhattan(self):
        s = DissimilaritySpace.from_coords([[0, 0], [1, 2]], metric="manhattan")
        assert s.d[0, 1] == 3.0


class TestInducedTriplet:
    def test_ordered_triple(self, three_point):
        t = induced_triplet(three_point)
        assert t.value(0, 1, 2) == 1.0
        assert t.value(0, 2, 1) == 0.0
        assert t.value(1, 2, 0) == 0.0

    def test_degenerate_entries(self, three_point):
        t = induced_triplet(three_point)
        for x, y in itertools.permutations(range(3), 2):
            assert t.value(x, x, y) == 1.0
            assert t.value(x, y, x) == 0.0
        for x in range(3):
            assert t.value(x, x, x) == pytest.approx(1 / 3, abs=0)

    def test_tie_uniform_split(self):
        d = np.array([[0, 1, 1], [1, 0, 2], [1, 2, 0]], dtype=float)  # d(x,y) = d(x,z) < d(y,z)
        t = induced_triplet(DissimilaritySpace(d))
        assert (t.value(0, 1, 2), t.value(0, 2, 1), t.value(1, 2, 0)) == (0.5, 0.5, 0.0)
        assert validate_axioms(t.to_dense()).passed

    def test_three_way_tie(self):
        d = 1.0 - np.eye(3)
        t = induced_triplet(DissimilaritySpace(d), dense=True)
        assert t.value(0, 1, 2) == pytest.approx(1 / 3)
        assert validate_axioms(t).passed

    def test_strict_rejects_tie(self):
        d = np.array([[0, 1, 1], [1, 0, 2], [1, 2, 0]], dtype=float)
        with pytest.raises(TieError, match="0"):
            induced_triplet(DissimilaritySpace(d), TiePolicy("strict"))

    def test_epsilon_widens_ties(self):
        d = np.array([[0, 1, 1.05], [1, 0, 2], [1.05, 2, 0]])
        exact = induced_triplet(DissimilaritySpace(d))
        loose = induced_triplet(DissimilaritySpace(d), TiePolicy(epsilon=0.1))
        assert exact.value(0, 1, 2) == 1.0
        assert loose.value(0, 1, 2) == 0.5
        with pytest.raises(TieError):
            induced_triplet(DissimilaritySpace(d), TiePolicy("strict", 0.1))

    def test_negative_epsilon(self):
        with pytest.raises(ValidationError):
            TiePolicy(epsilon=-1.0)

    def test_lazy_default_dense_on_request(self, three_point):
        assert induced_triplet(three_point).backend == "lazy"
        assert induced_triplet(three_point, dense=True).backend == "dense"

    def test_lazy_matches_dense_and_scalar(self, rng):
        s = random_space(rng, 9)
        lazy = induced_triplet(s)
        dense = induced_triplet(s, dense=True)
        np.testing.assert_array_equal(lazy.tensor(), dense.tensor())
        for x, y, z in itertools.product(range(9), repeat=3):
            assert lazy.value(x, y, z) == dense.tensor()[x, y, z]

    def test_slabs_match_tensor(self, rng):
        s = random_space(rng, 7)
        t = induced_triplet(s)
        f = t.tensor()
        for x in range(7):
            np.testing.assert_array_equal(t.pair_slab(x), f[x])
            np.testing.assert_array_equal(t.outlier_slab(x), f[:, :, x])

    @pytest.mark.parametrize("transform", [lambda d: d ** 3, lambda d: d + 1.0, np.sqrt])
    def test_monotone_invariance(self, rng, transform):
        s = random_space(rng, 10)
        d2 = transform(s.d)
        np.fill_diagonal(d2, 0.0)
        a = induced_triplet(s, dense=True).tensor()
        b = induced_triplet(s.with_distances(d2), dense=True).tensor()
        assert np.array_equal(a, b)

    def test_axioms_hold_random(self, rng):
        for _ in range(5):
            s = random_space(rng, int(rng.integers(2, 15)))
            assert validate_axioms(induced_triplet(s, dense=True)).passed
            assert validate_axioms(induced_triplet(s)).passed


class TestAggregation:
    def test_response_proportions(self):
        t = aggregate_outlier_responses(
            ["sq", "dot", "ring"], [("sq", "dot", "ring", 7), ("dot", "ring", "sq", 3)])
        assert t.value(0, 1, 2) == pytest.approx(0.7)
        assert t.value(1, 2, 0) == pytest.approx(0.3)
        assert t.value(0, 2, 1) == 0.0

    def test_unanswered_triple_is_third(self):
        t = aggregate_outlier_responses(list("abcd"), [("a", "b", "c")])
        for pair_out in [(0, 1, 3), (0, 3, 1), (1, 3, 0)]:
            assert t.value(*pair_out) == pytest.approx(1 / 3)

    def test_single_consistent_response_equals_induced(self, rng):
        s = random_space(rng, 5)
        responses = []
        for x, y, z in itertools.combinations(range(5), 3):
            pairs = {(x, y, z): s.d[x, y], (x, z, y): s.d[x, z], (y, z, x): s.d[y, z]}
            a, b, out = min(pairs, key=pairs.get)
            responses.append((a, b, out))
        t = aggregate_outlier_responses(s.labels, [tuple(s.labels[i] for i in r) for r in responses], s.p)
        np.testing.assert_array_equal(t.tensor(), induced_triplet(s).tensor())

    def test_response_errors(self):
        with pytest.raises(ValidationError):
            aggregate_outlier_responses(list("abc"), [("a", "a", "b")])
        with pytest.raises(ValidationError):
            aggregate_outlier_responses(list("abc"), [("a", "b", "q")])

    def test_weights_fill_remainder(self):
        t = aggregate_weights(list("abc"), [("a", "b", "c", 0.5)])
        assert t.value(0, 2, 1) == pytest.approx(0.25)
        assert t.value(1, 2, 0) == pytest.approx(0.25)

    def test_weights_inconsistent(self):
        with pytest.raises(ValidationError):
            aggregate_weights(list("abc"), [("a", "b", "c", 0.6), ("a", "c", "b", 0.6)])

    def test_standard_query_concordant(self):
        # d(a,b) smallest: a prefers b over c, b prefers a over c
        t = aggregate_standard_queries(list("abc"), {("a", "b", "c"): 1, ("b", "a", "c"): 1, ("c", "a", "b"): 1})
        assert t.value(0, 1, 2) == 1.0
        assert t.value(0, 2, 1) == 0.0 and t.value(1, 2, 0) == 0.0

    def test_standard_query_circular(self):
        t = aggregate_standard_queries(list("abc"), {("a", "b", "c"): 1, ("b", "c", "a"): 1, ("c", "a", "b"): 1})
        for e in [(0, 1, 2), (0, 2, 1), (1, 2, 0)]:
            assert t.value(*e) == pytest.approx(1 / 3)

    def test_standard_query_all_half(self):
        assert standard_query_weight(*[0.5] * 6) == pytest.approx(1 / 3)
        t = aggregate_standard_queries(list("abcd"), {})
        assert t.value(0, 1, 2) == pytest.approx(1 / 3)

    def test_standard_query_errors(self):
        with pytest.raises(ValidationError):
            aggregate_standard_queries(list("abc"), {("a", "b", "c"): 1.2})
        with pytest.raises(ValidationError):
            aggregate_standard_queries(list("abc"), {("a", "b", "c"): 0.7, ("a", "c", "b"): 0.7})

    def test_standard_query_identity_grid(self):
        grid = np.linspace(0, 1, 5)
        worst = 0.0
        for a, b, c in itertools.product(grid, repeat=3):
            # marginals for one triple: a = p_xyz, b = p_yzx, c = p_zxy
            px = dict(xyz=a, xzy=1 - a, yzx=b, yxz=1 - b, zxy=c, zyx=1 - c)
            s = (standard_query_weight(px["xyz"], px["yxz"], px["yzx"], px["zxy"], px["xzy"], px["zyx"])
                 + standard_query_weight(px["xzy"], px["zxy"], px["zyx"], px["yxz"], px["xyz"], px["yzx"])
                 + standard_query_weight(px["yzx"], px["zyx"], px["zxy"], px["xyz"], px["yxz"], px["xzy"]))
            worst = max(worst, abs(s - 1))
        assert worst <= 1e-12

    @given(st.lists(st.floats(0, 1), min_size=24, max_size=24))
    @settings(max_examples=50, deadline=None)
    def test_standard_query_axioms_property(self, vals):
        labels = list("abcd")
        keys = [k for k in itertools.permutations(labels, 3) if k[1] < k[2]]
        t = aggregate_standard_queries(labels, dict(zip(keys, vals)))
        assert validate_axioms(t).passed


class TestValidateAxioms:
    def test_residual_point_two(self):
        f = _degenerate_tensor(3)
        f[0, 1, 2] = f[1, 0, 2] = 0.6
        f[0, 2, 1] = f[2, 0, 1] = 0.6
        f[1, 2, 0] = f[2, 1, 0] = 0.0
        rep = validate_axioms(TripletComparisonSpace.from_tensor(f))
        assert not rep.passed
        sums = [v for v in rep.violations if v[1] == "sum-to-one"]
        assert sums and all(v[2] == pytest.approx(0.2) for v in sums)
        assert sums[0][0] == (0, 1, 2)

    def test_degenerate_violation(self):
        f = _degenerate_tensor(2)
        f[0, 0, 1] = 0.5
        rep = validate_axioms(TripletComparisonSpace.from_tensor(f))
        assert not rep.passed
        assert any(v[1] == "degenerate" for v in rep.violations)

    def test_pair_asymmetry_rejected(self):
        f = _degenerate_tensor(3)
        f[0, 1, 2] = 1.0
        with pytest.raises(ValidationError):
            TripletComparisonSpace.from_tensor(f)

    @given(st.integers(2, 12), st.integers(0, 2**32 - 1))
    @settings(max_examples=30, deadline=None)
    def test_induced_always_valid(self, n, seed):
        rng = np.random.default_rng(seed)
        x = rng.integers(0, 4, size=(n, 2)).astype(float)  # many ties on a coarse grid
        x += np.arange(n)[:, None] * 1e-3  # keep points distinct
        t = induced_triplet(DissimilaritySpace.from_coords(x), dense=True)
        assert validate_axioms(t).passed
