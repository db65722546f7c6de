import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from inrr import autodiff as ad
from inrr.errors import ContractError, ShapeError
from inrr.linalg import singular_values, sym_eigenvalues
from inrr.models import NetworkSpec, forward, init_network
from inrr.optim import Adam

from conftest import finite_difference_grads, relative_error


class TestMatmul:
    def test_identity(self):
        a = ad.const(np.eye(2))
        b = ad.const([[1.0, 2.0], [3.0, 4.0]])
        assert np.array_equal((a @ b).value, [[1, 2], [3, 4]])

    def test_hand_arithmetic(self):
        out = ad.const([[1.0, 2.0]]) @ ad.const([[3.0], [4.0]])
        assert out.value == [[11.0]]

    def test_matches_triple_loop(self, rng):
        a = rng.normal(size=(5, 4))
        b = rng.normal(size=(4, 3))
        expected = np.zeros((5, 3))
        for i in range(5):
            for j in range(3):
                for k in range(4):
                    expected[i, j] += a[i, k] * b[k, j]
        got = (ad.const(a) @ ad.const(b)).value
        assert np.max(np.abs(got - expected)) < 1e-12

    def test_shape_mismatch_reports_both_shapes(self):
        with pytest.raises(ShapeError, match=r"\(2, 3\).*\(2, 3\)"):
            ad.const(np.ones((2, 3))) @ ad.const(np.ones((2, 3)))

    @given(st.integers(1, 5), st.integers(1, 5), st.integers(1, 5),
           st.integers(1, 5), st.integers(0, 10_000))
    @settings(max_examples=40, deadline=None)
    def test_associativity(self, m, k, l, n, seed):
        r = np.random.default_rng(seed)
        a, b, c = r.normal(size=(m, k)), r.normal(size=(k, l)), r.normal(size=(l, n))
        left = ((ad.const(a) @ ad.const(b)) @ ad.const(c)).value
        right = (ad.const(a) @ (ad.const(b) @ ad.const(c))).value
        assert np.max(np.abs(left - right)) < 1e-10


class TestBackward:
    def test_square(self):
        x = ad.param(3.0)
        ad.backward(x * x)
        assert x.grad == pytest.approx(6.0)

    def test_sine_at_zero(self):
        x = ad.param(0.0)
        ad.backward(ad.sine(x))
        assert x.grad == pytest.approx(1.0)

    def test_non_scalar_root_rejected(self):
        with pytest.raises(ContractError):
            ad.backward(ad.param(np.ones(3)))

    def test_fanout_accumulates(self):
        x = ad.param(2.0)
        y = x * x + x * 3.0
        ad.backward(y)
        assert x.grad == pytest.approx(7.0)

    def test_two_layer_sine_net_matches_finite_differences(self, rng):
        spec = NetworkSpec(2, 1, (6, 6), "sine", omega0=2.5)
        params = init_network(spec, 3)
        coords = rng.normal(size=(5, 2))

        def loss():
            out = forward(spec, params, coords)
            return ad.tsum(out * out).item()

        out = forward(spec, params, coords)
        ad.backward(ad.tsum(out * out))
        auto = [p.grad for p in params.trainables]
        fd = finite_difference_grads(loss, params.trainables)
        assert relative_error(auto, fd) < 1e-5


class TestSingularValues:
    def test_identity(self):
        assert np.allclose(singular_values(np.eye(4)), np.ones(4))

    def test_diagonal(self):
        assert np.allclose(singular_values(np.diag([3.0, 4.0])), [4.0, 3.0])

    def test_empty_rejected(self):
        with pytest.raises(ContractError):
            singular_values(np.empty((0, 3)))

    def test_squares_match_gram_eigenvalues(self, rng):
        m = rng.normal(size=(6, 4))
        sv = singular_values(m)
        gram_eigs = np.sort(sym_eigenvalues(m.T @ m))[::-1]
        assert np.max(np.abs(sv ** 2 - gram_eigs)) < 1e-9

    @given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 10_000))
    @settings(max_examples=40, deadline=None)
    def test_transpose_invariant(self, m, n, seed):
        a = np.random.default_rng(seed).normal(size=(m, n))
        assert np.max(np.abs(singular_values(a) - singular_values(a.T))) < 1e-10


class TestAdam:
    def test_first_step_moves_by_lr(self):
        p = ad.param(1.0)
        opt = Adam([p], lr=0.05)
        p.grad = np.array(2.0)
        opt.step()
        # bias-corrected first step is g / (|g| + eps) ~ sign(g)
        assert p.value == pytest.approx(1.0 - 0.05, abs=1e-6)

    def test_zero_gradient_no_motion(self):
        p = ad.param([1.0, -2.0])
        opt = Adam([p], lr=0.1)
        for _ in range(10):
            p.grad = np.zeros(2)
            opt.step()
        assert np.array_equal(p.value, [1.0, -2.0])

    def test_descends_quadratic(self):
        p = ad.param(1.0)
        opt = Adam([p], lr=0.1)
        for _ in range(100):
            loss = p * p
            ad.backward(loss)
            opt.step()
        assert abs(p.value) < 0.1

    def test_shape_mismatch(self):
        p = ad.param(np.ones(3))
        opt = Adam([p], lr=0.1)
        p.grad = np.ones(4)
        with pytest.raises(ShapeError):
            opt.step()

    def test_step_counter(self):
        p = ad.param(0.0)
        opt = Adam([p], lr=0.1)
        for k in range(3):
            p.grad = np.array(1.0)
            opt.step()
            assert opt.step_count == k + 1
