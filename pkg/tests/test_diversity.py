import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coresel.diversity import MomentAccumulator, min_distance_gain
from util import brute_force_spread, exhaustive_min_sq_dist, pairwise_sq_dist_sum, unit_rows


class TestAbsorb:
    def test_single_vector(self):
        acc = MomentAccumulator.empty(2).absorb([1.0, 0.0])
        assert acc.n == 1
        np.testing.assert_array_equal(acc.m, [1.0, 0.0])
        assert acc.q == 1.0

    def test_two_vectors(self):
        acc = MomentAccumulator.empty(2).absorb([1.0, 0.0]).absorb([0.0, 1.0])
        assert acc.n == 2
        np.testing.assert_array_equal(acc.m, [1.0, 1.0])
        assert acc.q == 2.0

    def test_k_copies_linearity(self):
        v = np.array([1.5, -2.0, 0.5])
        k = 7
        acc = MomentAccumulator.empty(3)
        for _ in range(k):
            acc.absorb(v)
        np.testing.assert_allclose(acc.m, k * v, rtol=1e-15)
        assert acc.q == pytest.approx(k * float(v @ v), rel=1e-15)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            MomentAccumulator.empty(3).absorb([1.0, 2.0])


class TestMarginalGain:
    def test_empty_accumulator_gain_zero(self):
        acc = MomentAccumulator.empty(4)
        assert acc.marginal_gain([3.0, 1.0, -2.0, 0.5]) == 0.0

    def test_single_origin_point(self):
        acc = MomentAccumulator.empty(2).absorb([0.0, 0.0])
        assert acc.marginal_gain([3.0, 4.0]) == 25.0

    @pytest.mark.parametrize("seed", range(10))
    def test_matches_naive_pairwise_sum(self, seed):
        rng = np.random.default_rng(seed)
        vectors = rng.normal(size=(5, 8))
        x = rng.normal(size=8)
        acc = MomentAccumulator.empty(8)
        for v in vectors:
            acc.absorb(v)
        expected = pairwise_sq_dist_sum(vectors, x)
        assert acc.marginal_gain(x) == pytest.approx(expected, rel=1e-9)

    def test_gains_vectorized_matches_scalar(self):
        rng = np.random.default_rng(99)
        vectors = rng.normal(size=(6, 5))
        cands = rng.normal(size=(9, 5)).astype(np.float32)
        acc = MomentAccumulator.empty(5)
        for v in vectors:
            acc.absorb(v)
        gains = acc.gains(cands)
        for i in range(9):
            assert gains[i] == pytest.approx(
                acc.marginal_gain(cands[i].astype(np.float64)), rel=1e-12
            )

    def test_duplicate_vector_gain_clamped_nonnegative(self):
        rng = np.random.default_rng(5)
        v = rng.normal(size=16) * 100.0
        acc = MomentAccumulator.empty(16)
        for _ in range(50):
            acc.absorb(v)
        gain = acc.marginal_gain(v)
        assert gain >= 0.0
        assert gain == pytest.approx(0.0, abs=1e-7)

    def test_dimension_mismatch(self):
        acc = MomentAccumulator.empty(3).absorb([1.0, 0.0, 0.0])
        with pytest.raises(ValueError):
            acc.marginal_gain([1.0, 2.0])


class TestDiversityTotal:
    def test_zero_for_empty_and_singleton(self):
        acc = MomentAccumulator.empty(3)
        assert acc.diversity_total() == 0.0
        acc.absorb([1.0, 2.0, 3.0])
        assert acc.diversity_total() == 0.0

    def test_two_point_ordered_pairs(self):
        acc = MomentAccumulator.empty(2).absorb([0.0, 0.0]).absorb([1.0, 0.0])
        assert acc.diversity_total() == pytest.approx(2.0, rel=1e-12)

    @pytest.mark.parametrize("seed", range(8))
    def test_matches_brute_force_double_loop(self, seed):
        rng = np.random.default_rng(100 + seed)
        vectors = rng.normal(size=(6, 4))
        acc = MomentAccumulator.empty(4)
        for v in vectors:
            acc.absorb(v)
        assert acc.diversity_total() == pytest.approx(
            brute_force_spread(vectors), rel=1e-9
        )

    def test_absorb_increment_identity(self):
        # total after absorbing x = total before + 2 * marginal_gain(x)
        rng = np.random.default_rng(42)
        acc = MomentAccumulator.empty(6)
        for v in rng.normal(size=(9, 6)):
            before = acc.diversity_total()
            gain = acc.marginal_gain(v)
            acc.absorb(v)
            after = acc.diversity_total()
            assert after == pytest.approx(before + 2.0 * gain, rel=1e-9, abs=1e-12)

    @settings(max_examples=100, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_translation_invariance(self, seed):
        rng = np.random.default_rng(seed)
        n, dim = int(rng.integers(2, 12)), int(rng.integers(1, 8))
        vectors = rng.normal(size=(n, dim))
        shift = rng.normal(size=dim) * 10.0
        acc_a, acc_b = MomentAccumulator.empty(dim), MomentAccumulator.empty(dim)
        for v in vectors:
            acc_a.absorb(v)
            acc_b.absorb(v + shift)
        assert acc_b.diversity_total() == pytest.approx(
            acc_a.diversity_total(), rel=1e-9, abs=1e-9
        )

    @settings(max_examples=100, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_unit_norm_closed_form(self, seed):
        # for unit rows q == n, so the spread is 2n^2 - 2||m||^2
        rng = np.random.default_rng(seed)
        n, dim = int(rng.integers(1, 15)), int(rng.integers(2, 10))
        rows = unit_rows(n, dim, rng)
        acc = MomentAccumulator.empty(dim)
        for v in rows:
            acc.absorb(v)
        m = rows.sum(axis=0)
        expected = 2.0 * n * n - 2.0 * float(m @ m)
        assert acc.diversity_total() == pytest.approx(expected, rel=1e-9, abs=1e-9)


class TestMinDistanceGain:
    def test_single_point(self):
        assert min_distance_gain([[0.0, 0.0]], [1.0, 1.0]) == 2.0

    def test_midpoint(self):
        assert min_distance_gain([[0.0, 0.0], [2.0, 0.0]], [1.0, 0.0]) == 1.0

    @pytest.mark.parametrize("seed", range(6))
    def test_matches_exhaustive_min(self, seed):
        rng = np.random.default_rng(200 + seed)
        pts = rng.normal(size=(4, 5))
        x = rng.normal(size=5)
        assert min_distance_gain(pts, x) == pytest.approx(
            exhaustive_min_sq_dist(pts, x), rel=1e-12
        )

    def test_empty_selected_rejected(self):
        with pytest.raises(ValueError):
            min_distance_gain(np.zeros((0, 3)), [1.0, 2.0, 3.0])

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            min_distance_gain([[1.0, 2.0]], [1.0, 2.0, 3.0])


class TestAccumulatorInvariants:
    @settings(max_examples=100, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_cauchy_schwarz_bound(self, seed):
        rng = np.random.default_rng(seed)
        n, dim = int(rng.integers(1, 20)), int(rng.integers(1, 10))
        acc = MomentAccumulator.empty(dim)
        for v in rng.normal(size=(n, dim)):
            acc.absorb(v)
        assert acc.q >= 0.0
        assert acc.q >= float(acc.m @ acc.m) / acc.n - 1e-9

    def test_empty_state(self):
        acc = MomentAccumulator.empty(5)
        assert acc.n == 0
        assert not acc.m.any()
        assert acc.q == 0.0

    def test_accumulation_error_at_scale(self):
        # stress for the plain-summation assumption: many O(1)-magnitude
        # rows in 64-bit against an extended-precision reference
        rng = np.random.default_rng(7)
        n, dim = 100_000, 8
        X = (rng.normal(size=(n, dim)) / np.sqrt(dim)).astype(np.float64)
        acc = MomentAccumulator.empty(dim)
        for v in X:
            acc.absorb(v)
        X_ld = X.astype(np.longdouble)
        m_ref = X_ld.sum(axis=0)
        q_ref = float((X_ld**2).sum())
        v_ref = float(2.0 * (n * q_ref - (m_ref @ m_ref)))
        assert acc.diversity_total() == pytest.approx(v_ref, rel=1e-10)
        x = rng.normal(size=dim)
        gain_ref = float(
            n * (x @ x) - 2.0 * (x.astype(np.longdouble) @ m_ref) + q_ref
        )
        assert acc.marginal_gain(x) == pytest.approx(gain_ref, rel=1e-9)

    @settings(max_examples=150, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_gain_never_below_clamp_tolerance(self, seed):
        # O(1)-magnitude data, including exact duplicates of absorbed rows
        rng = np.random.default_rng(seed)
        n, dim = int(rng.integers(1, 30)), int(rng.integers(1, 12))
        rows = rng.normal(size=(n, dim))
        acc = MomentAccumulator.empty(dim)
        for v in rows:
            acc.absorb(v)
        candidates = [rng.normal(size=dim), rows[int(rng.integers(n))]]
        for x in candidates:
            assert acc.marginal_gain(x) >= -1e-9
