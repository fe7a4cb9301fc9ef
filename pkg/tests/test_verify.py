import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cohesion import (
    DissimilaritySpace,
    GeneratorSpec,
    ValidationError,
    cohesion_matrix,
    generate,
    generate_detailed,
    induced_triplet,
    make_partition,
    subspace,
)
from cohesion.core import CohesionMatrix
from cohesion.verify import (
    brute_force_cohesion,
    check_average_half,
    check_kernel_oracle,
    check_local_mass_quotient,
    check_ordering_example,
    check_outlier_bounds,
    check_outlier_influence,
    check_point_like_dominance,
    check_quotient_fractal,
    check_self_dominance,
    mutually_outlying,
    run_checks,
)

from conftest import random_space

THREE_MATRIX = np.array([[1.6, 0.5, 0.0], [0.5, 1.4, 0.0], [0.0, 0.0, 1.0]])


def separated(rng, sizes, gap=100.0, scales=None):
    pts, blocks, start = [], [], 0
    scales = scales or [1.0] * len(sizes)
    for k, (size, sc) in enumerate(zip(sizes, scales)):
        pts.append(gap * 2 ** k + sc * rng.uniform(0, 1, (size, 2)))
        blocks.append(frozenset(range(start, start + size)))
        start += size
    return np.vstack(pts), blocks


class TestOracle:
    def test_three_point_matrix(self, three_point):
        np.testing.assert_allclose(brute_force_cohesion(three_point).values, THREE_MATRIX, atol=1e-12)

    def test_single_point(self):
        c = brute_force_cohesion(DissimilaritySpace(np.zeros((1, 1))))
        assert c.values[0, 0] == pytest.approx(0.5)

    def test_dense_backend(self, rng):
        s = random_space(rng, 12)
        a = brute_force_cohesion(induced_triplet(s, dense=True)).values
        b = brute_force_cohesion(s).values
        np.testing.assert_allclose(a, b, atol=1e-13)

    def test_matches_kernel_random(self, rng):
        for _ in range(50):
            s = random_space(rng, int(rng.integers(1, 40)), clustered=bool(rng.integers(2)))
            assert check_kernel_oracle(s).passed


class TestBasicChecks:
    def test_average_half_perturbed(self, three_point):
        c = cohesion_matrix(induced_triplet(three_point))
        assert check_average_half(c).passed
        v = c.values.copy()
        v[0, 1] += 1e-3
        r = check_average_half(CohesionMatrix(c.labels, v, c.p))
        assert not r.passed
        assert r.max_residual == pytest.approx(1e-3 * 0.2 * 0.3, rel=1e-6)

    def test_self_dominance_failure(self, three_point):
        c = cohesion_matrix(induced_triplet(three_point))
        v = c.values.copy()
        v[0, 1] = 2.0
        assert check_self_dominance(c).passed
        assert not check_self_dominance(CohesionMatrix(c.labels, v, c.p)).passed

    def test_point_like_dominance(self, rng):
        x, blocks = separated(rng, [4, 5])
        s = DissimilaritySpace.from_coords(x, rng.dirichlet(np.ones(9)))
        c = cohesion_matrix(induced_triplet(s))
        assert check_point_like_dominance(c, blocks).passed


class TestMutuallyOutlying:
    def test_two_points(self):
        assert mutually_outlying(DissimilaritySpace.from_coords([0.0, 5.0]), 0, 1)

    def test_collinear(self):
        s = DissimilaritySpace.from_coords([0.0, 1.0, 2.0])
        assert mutually_outlying(s, 0, 2)
        assert not mutually_outlying(s, 0, 1)

    def test_group_and_outlier(self):
        s = generate(GeneratorSpec("four_group_outlier"))
        assert all(mutually_outlying(s, x, 4) for x in range(4))

    def test_same_point(self):
        with pytest.raises(ValidationError):
            mutually_outlying(DissimilaritySpace.from_coords([0.0, 1.0]), 1, 1)


class TestOutliers:
    def test_four_group_shift(self):
        s = generate(GeneratorSpec("four_group_outlier"))
        assert check_outlier_influence(s, 4).passed
        c = cohesion_matrix(induced_triplet(s)).values
        sub = cohesion_matrix(subspace(s, range(4))).values
        np.testing.assert_allclose(c[:4, :4] - sub, 0.25, atol=1e-10)
        np.testing.assert_allclose(c[4, :4], 0.0, atol=0)
        np.testing.assert_allclose(c[:4, 4], 0.0, atol=0)
        # alone, z has self-cohesion 1/2; in the full space 1/2 + 3/4
        assert c[4, 4] - 0.5 == pytest.approx(0.75, abs=1e-10)

    def test_zero_mass_outlier(self):
        s = generate(GeneratorSpec("four_group_outlier", {"outlier_mass": 0.0}))
        assert check_outlier_influence(s, 4).passed
        c = cohesion_matrix(induced_triplet(s)).values
        sub = cohesion_matrix(subspace(s, range(4))).values
        np.testing.assert_allclose(c[:4, :4], sub, atol=1e-12)

    def test_precondition_witness(self):
        s = DissimilaritySpace.from_coords([0.0, 1.0, 2.0, 2.5])
        with pytest.raises(ValidationError, match="witness"):
            check_outlier_influence(s, 3)

    def test_single_pair_is_not_enough(self):
        # (x1, z) is mutually outlying but the other points are not, and the
        # per-pair shift rule fails: the influence statement needs z to be
        # outlying relative to every point
        s = DissimilaritySpace.from_coords([6.4, 2.7, 0.4, 0.2])
        assert mutually_outlying(s, 0, 3)
        assert not mutually_outlying(s, 2, 3)
        c = cohesion_matrix(induced_triplet(s)).values
        sub = cohesion_matrix(subspace(s, range(3))).values
        d = s.d
        shift = np.array([s.p[3] if d[w, 0] < d[w, 3] else 0.0 for w in range(3)])
        assert np.abs(c[0, :3] - (sub[0] + shift)).max() == pytest.approx(1 / 6, abs=1e-12)

    @pytest.mark.parametrize("seed", range(5))
    def test_ball_bounds(self, seed):
        syn = generate_detailed(GeneratorSpec("ball_with_outliers", seed=seed))
        r = check_outlier_bounds(syn.space, syn.outliers)
        assert r.passed
        info = dict(r.details)
        assert info["upper_bound"] == pytest.approx(1 / 9)
        assert info["max_outlier_cohesion"] <= 1 / 9

    def test_single_outlier_lower_bound_attained(self, rng):
        x = np.vstack([rng.uniform(0, 1, (6, 2)), [[30.0, 0.0]]])
        s = DissimilaritySpace.from_coords(x, rng.dirichlet(np.ones(7)))
        assert check_outlier_bounds(s, [6]).passed
        c = cohesion_matrix(induced_triplet(s)).values
        sub = cohesion_matrix(subspace(s, range(6))).values
        np.testing.assert_allclose(c[:6, :6] - sub, s.p[6], atol=1e-10)

    def test_empty_outlier_set(self, rng):
        s = random_space(rng, 6)
        r = check_outlier_bounds(s, [])
        assert r.passed and r.max_residual <= 1e-14

    def test_unseparated_outliers(self):
        s = DissimilaritySpace.from_coords([0.0, 1.0, 2.0, 2.5])
        with pytest.raises(ValidationError, match="not separated"):
            check_outlier_bounds(s, [3])


class TestQuotientChecks:
    def test_singletons(self, rng):
        s = random_space(rng, 8)
        part = make_partition(s, [{i} for i in range(8)])
        assert check_local_mass_quotient(s, part).passed
        assert check_quotient_fractal(s, part).passed

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=20, deadline=None)
    def test_random_point_like_configs(self, seed):
        rng = np.random.default_rng(seed)
        sizes = list(rng.integers(1, 6, size=rng.integers(2, 5)))
        x, blocks = separated(rng, sizes)
        s = DissimilaritySpace.from_coords(x, rng.dirichlet(np.ones(len(x))))
        part = make_partition(s, blocks)
        reps = [int(rng.choice(sorted(b))) for b in part.blocks]
        assert check_local_mass_quotient(s, part, reps).passed
        assert check_quotient_fractal(s, part, reps).passed

    def test_separated_sets_zero_cross(self, rng):
        x, blocks = separated(rng, [5, 7])
        s = DissimilaritySpace.from_coords(x, rng.dirichlet(np.ones(12)))
        c = cohesion_matrix(induced_triplet(s)).values
        a, b = sorted(blocks[0]), sorted(blocks[1])
        assert np.all(c[np.ix_(a, b)] == 0.0) and np.all(c[np.ix_(b, a)] == 0.0)

    def test_density_irrelevance(self, rng):
        block = rng.uniform(0, 1, (8, 2))
        x = np.vstack([block, 10.0 * block + 1000.0])
        c = cohesion_matrix(induced_triplet(DissimilaritySpace.from_coords(x))).values
        np.testing.assert_allclose(c[:8, :8], c[8:, 8:], atol=1e-10)


class TestOrderingAndSuite:
    def test_ordering_grid(self):
        assert check_ordering_example().passed

    @pytest.mark.parametrize("p, c13, reversed_", [(0.5, 0.5, True), (0.25, 0.25, False), (1 / 3, 1 / 3, False)])
    def test_ordering_points(self, p, c13, reversed_):
        from cohesion.verify import ordering_space
        c = cohesion_matrix(induced_triplet(ordering_space(p))).values
        assert c[0, 1] == pytest.approx(1 / 3, abs=1e-12)
        assert c[0, 2] == pytest.approx(c13, abs=1e-12)
        assert (c[0, 1] < c[0, 2] - 1e-12) == reversed_

    @pytest.mark.parametrize("kind", ["geometric_chain", "separated_blocks", "ball_with_outliers",
                                      "ordering_example", "four_group_outlier"])
    def test_run_checks_on_generators(self, kind):
        syn = generate_detailed(GeneratorSpec(kind, seed=3))
        results = run_checks(syn.space, outliers=syn.outliers or None)
        assert results
        assert all(r.passed for r in results), [r.to_dict() for r in results if not r.passed]

    @given(st.integers(0, 2**32 - 1), st.booleans())
    @settings(max_examples=100, deadline=None)
    def test_run_checks_random(self, seed, clustered):
        rng = np.random.default_rng(seed)
        s = random_space(rng, int(rng.integers(1, 13)), clustered=clustered)
        assert all(r.passed for r in run_checks(s))
