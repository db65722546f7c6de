import numpy as np
import pytest

from inrr import ntk
from inrr.errors import ContractError
from inrr.models import NetworkSpec


class TestEmpiricalNtk:
    def test_linear_net_is_input_gram(self, rng):
        # phi = w^T x without bias: the parameter gradient is x itself
        spec = NetworkSpec(3, 1, (), "linear", use_bias=False)
        pts = rng.normal(size=(4, 3))
        km = ntk.empirical_ntk(spec, pts, samples=3, seed=0)
        assert np.allclose(km.matrix, pts @ pts.T, atol=1e-12)

    def test_diagonal_nonnegative(self, rng):
        spec = NetworkSpec(2, 1, (8, 8), "sine")
        km = ntk.empirical_ntk(spec, rng.normal(size=(5, 2)), samples=10, seed=1)
        assert (np.diag(km.matrix) >= 0).all()

    def test_symmetric(self, rng):
        spec = NetworkSpec(2, 1, (6,), "relu")
        km = ntk.empirical_ntk(spec, rng.normal(size=(4, 2)), samples=20, seed=2)
        assert np.max(np.abs(km.matrix - km.matrix.T)) < 1e-8

    def test_self_consistency_across_sample_counts(self, rng):
        spec = NetworkSpec(2, 1, (64,), "relu")
        pts = rng.normal(size=(5, 2))
        small = ntk.empirical_ntk(spec, pts, samples=2000, seed=3)
        big = ntk.empirical_ntk(spec, pts, samples=20_000, seed=4)
        gap = np.abs(small.matrix - big.matrix)
        tol = 3.0 * np.sqrt(small.stderr ** 2 + big.stderr ** 2)
        assert (gap <= tol + 1e-12).all()

    def test_requires_samples(self, rng):
        spec = NetworkSpec(2, 1, (4,), "sine")
        with pytest.raises(ContractError):
            ntk.empirical_ntk(spec, rng.normal(size=(2, 2)), samples=0, seed=0)


class TestKernelRegression:
    def test_interpolates_training_points(self, rng):
        pts = rng.normal(size=(5, 2))
        km = ntk.closed_form_kernel(pts, h0=0.3, h1=1.7)
        z = rng.normal(size=5)
        for i in range(5):
            assert ntk.kernel_regression(km, z, pts[i]) == pytest.approx(z[i], abs=1e-9)

    def test_zero_targets(self, rng):
        pts = rng.normal(size=(4, 2))
        km = ntk.closed_form_kernel(pts, h0=0.5, h1=2.0)
        assert ntk.kernel_regression(km, np.zeros(4), rng.normal(size=2)) == 0.0

    def test_four_point_closed_form_average(self, rng):
        pts = rng.normal(size=(4, 2))
        km = ntk.closed_form_kernel(pts, h0=1.0, h1=2.0)
        z = np.array([1.0, 2.0, 3.0, 4.0])
        # direct inverse oracle
        expect = float(np.full(4, 1.0) @ np.linalg.inv(km.matrix) @ z)
        got = ntk.kernel_regression(km, z, rng.normal(size=2))
        assert got == pytest.approx(expect, abs=1e-9)
        assert got == pytest.approx(10.0 / 5.0, abs=1e-9)


class TestComposedKernel:
    def test_same_point_gives_h_of_one(self, rng):
        B = rng.normal(size=(32, 2))
        h = lambda r: 2.0 * r + 0.5
        x = rng.normal(size=2)
        assert ntk.composed_kernel(B, h, x, x) == pytest.approx(h(1.0))

    def test_depends_only_on_difference(self, rng):
        B = rng.normal(size=(32, 2))
        h = lambda r: r ** 2 + 1.0
        a, b, shift = rng.normal(size=2), rng.normal(size=2), rng.normal(size=2)
        k1 = ntk.composed_kernel(B, h, a, b)
        k2 = ntk.composed_kernel(B, h, a + shift, b + shift)
        assert k1 == pytest.approx(k2, abs=1e-12)

    def test_inner_feature_gaussian_limit(self):
        delta = 3.0
        rng = np.random.default_rng(11)
        B = rng.normal(0.0, delta, size=(20_000, 2))
        xi = np.array([0.2, 0.0])
        xj = np.array([0.0, 0.0])   # |xi - xj| = 0.2
        terms = np.cos(B @ (xi - xj))
        se = terms.std(ddof=1) / np.sqrt(len(terms))
        inner = ntk.composed_kernel(B, lambda r: r, xi, xj)
        limit = np.exp(-delta ** 2 * 0.2 ** 2 / 2.0)
        assert abs(inner - limit) < 3 * se

    def test_matrix_agrees_with_entrywise(self, rng):
        B = rng.normal(size=(16, 2))
        h = lambda r: np.tanh(r) + 1.0
        pts = rng.normal(size=(4, 2))
        km = ntk.composed_kernel_matrix(pts, B, h)
        for i in range(4):
            for j in range(4):
                assert km.matrix[i, j] == pytest.approx(
                    ntk.composed_kernel(B, h, pts[i], pts[j]), abs=1e-10)


class TestLimitKernel:
    def test_diagonal_is_h_of_one(self, rng):
        pts = rng.normal(size=(5, 2))
        km = ntk.limit_kernel_matrix(pts, 2.0, lambda r: 3.0 * r + 1.0)
        assert np.allclose(np.diag(km.matrix), 4.0, atol=1e-12)

    def test_matches_composed_gaussian_limit(self, rng):
        # at D=40000 the sampled-feature kernel approaches the analytic limit
        delta = 1.5
        B = np.random.default_rng(21).normal(0.0, delta, size=(40_000, 2))
        pts = rng.normal(size=(3, 2)) * 0.2
        h = lambda r: r
        sampled = ntk.composed_kernel_matrix(pts, B, h).matrix
        limit = ntk.limit_kernel_matrix(pts, delta, h).matrix
        assert np.max(np.abs(sampled - limit)) < 0.02

    def test_huge_delta_degenerates_to_closed_form(self, rng):
        pts = rng.normal(size=(6, 2))
        h = lambda r: 2.0 * r + 0.5
        km = ntk.limit_kernel_matrix(pts, 900.0, h)
        expect = ntk.closed_form_kernel(pts, h(0.0), h(1.0)).matrix
        assert np.array_equal(km.matrix, expect)

    def test_row_fn_consistent_with_matrix(self, rng):
        pts = rng.normal(size=(4, 2))
        km = ntk.limit_kernel_matrix(pts, 2.0, lambda r: r ** 2 + 0.1)
        for i in range(4):
            assert np.allclose(km.row_fn(pts[i]), km.matrix[i], atol=1e-12)

    def test_nonpositive_delta(self, rng):
        with pytest.raises(ContractError):
            ntk.limit_kernel_matrix(rng.normal(size=(3, 2)), 0.0, lambda r: r)


class TestCorollaryOne:
    def test_two_point_explicit_inverse(self):
        assert ntk.corollary1_prediction(1.0, 2.0, [1.0, 3.0]) == pytest.approx(4.0 / 3.0)

    def test_on_training_returns_target(self, rng):
        z = rng.normal(size=7)
        for l in range(7):
            assert ntk.corollary1_prediction(0.4, 1.3, z, on_training=l) == z[l]

    def test_h0_zero_gives_zero(self, rng):
        assert ntk.corollary1_prediction(0.0, 1.5, rng.normal(size=5)) == 0.0

    def test_degenerate_kernels_rejected(self):
        with pytest.raises(ContractError):
            ntk.corollary1_prediction(1.0, 1.0, [1.0, 2.0])
        with pytest.raises(ContractError):
            ntk.corollary1_prediction(1.0, 0.0, [1.0, 2.0])

    def test_agrees_with_kernel_matrix_inversion(self, rng):
        for trial in range(100):
            n = int(rng.integers(2, 21))
            h0 = float(rng.uniform(0.1, 2.0))
            h1 = float(h0 + rng.uniform(0.5, 3.0))
            z = rng.normal(size=n)
            pts = rng.normal(size=(n, 2))
            km = ntk.closed_form_kernel(pts, h0, h1)
            direct = ntk.kernel_regression(km, z, rng.normal(size=2))
            assert direct == pytest.approx(
                ntk.corollary1_prediction(h0, h1, z), abs=1e-9)


class TestShiftInvariance:
    def test_regression_invariant_under_translation(self, rng):
        B = rng.normal(0.0, 2.0, size=(64, 2))
        h = lambda r: r + 1.5
        pts = rng.normal(size=(6, 2))
        z = rng.normal(size=6)
        q = rng.normal(size=2)
        shift = rng.normal(size=2)
        base = ntk.kernel_regression(ntk.composed_kernel_matrix(pts, B, h), z, q)
        moved = ntk.kernel_regression(
            ntk.composed_kernel_matrix(pts + shift, B, h), z, q + shift)
        assert base == pytest.approx(moved, abs=1e-9)


class TestFittedH:
    def test_fitted_map_is_finite_and_orders(self):
        spec = NetworkSpec(4, 1, (8,), "sine")
        h = ntk.fit_h(spec, np.linspace(-1, 1, 5), samples=30, seed=0)
        vals = [h(r) for r in (-1.0, 0.0, 1.0)]
        assert all(np.isfinite(v) for v in vals)
        assert vals[2] > 0
