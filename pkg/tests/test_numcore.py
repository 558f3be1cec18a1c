import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from openmodrec.errors import NumericError
from openmodrec.numcore import (
    AdamState,
    Rng,
    adam_step,
    derive_rng,
    finite_diff_check,
    xavier_init,
)


class TestXavier:
    def test_3x3_bound_is_one(self):
        m = xavier_init(3, 3, Rng(7, 1))
        assert m.shape == (3, 3)
        assert np.all(np.abs(m) <= 1.0)

    def test_bound_exact(self):
        rows, cols = 5, 12
        limit = math.sqrt(6.0 / (rows + cols))
        m = xavier_init(rows, cols, Rng(123, 9))
        assert np.all(np.abs(m) <= limit)

    def test_deterministic_for_same_stream(self):
        a = xavier_init(16, 16, Rng(42, 3))
        b = xavier_init(16, 16, Rng(42, 3))
        assert np.array_equal(a, b)

    def test_different_streams_differ(self):
        a = xavier_init(16, 16, Rng(42, 3))
        b = xavier_init(16, 16, Rng(42, 4))
        assert not np.array_equal(a, b)

    def test_zero_dim_rejected(self):
        with pytest.raises(ValueError):
            xavier_init(0, 3, Rng(1))
        with pytest.raises(ValueError):
            xavier_init(3, 0, Rng(1))

    def test_sample_mean_within_three_standard_errors(self):
        # uniform on [-L, L] has variance L^2/3; the mean of 64*64 samples
        # has standard error L / sqrt(3 * 4096)
        limit = math.sqrt(6.0 / 128)
        bound = 3.0 * limit / math.sqrt(3 * 4096)
        for draw in range(10):
            m = xavier_init(64, 64, derive_rng(2024, 9, draw))
            assert abs(m.mean()) < bound


class TestAdam:
    def test_zero_gradient_is_identity(self):
        params = np.array([[1.5, -2.0], [0.25, 3.0]])
        for t in (0, 1, 7):
            state = AdamState(np.zeros((2, 2)), np.zeros((2, 2)), t)
            new_params, new_state = adam_step(params, np.zeros((2, 2)), state)
            assert np.array_equal(new_params, params)
            assert np.all(new_state.m == 0) and np.all(new_state.v == 0)
            assert new_state.t == t + 1

    def test_first_step_magnitude(self):
        params = np.array([1.0])
        state = AdamState.zeros((1,))
        new_params, state = adam_step(params, np.array([5.0]), state, lr=0.01)
        # bias correction makes m_hat = g and v_hat = g^2 on step one
        expected = 1.0 - 0.01 * 5.0 / (5.0 + 1e-8)
        assert new_params[0] == pytest.approx(expected, abs=1e-15)
        assert state.t == 1

    def test_two_steps_match_hand_recursion(self):
        lr, b1, b2, eps = 0.01, 0.9, 0.999, 1e-8
        g = 1.0
        # independent scalar unroll of the recursion
        p = 0.3
        m = v = 0.0
        for t in (1, 2):
            m = b1 * m + (1 - b1) * g
            v = b2 * v + (1 - b2) * g * g
            m_hat = m / (1 - b1**t)
            v_hat = v / (1 - b2**t)
            p = p - lr * m_hat / (math.sqrt(v_hat) + eps)
        params = np.array([0.3])
        state = AdamState.zeros((1,))
        for _ in range(2):
            params, state = adam_step(params, np.array([g]), state, lr=lr)
        assert params[0] == pytest.approx(p, abs=1e-16)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            adam_step(np.zeros(3), np.zeros(4), AdamState.zeros((3,)))
        with pytest.raises(ValueError):
            adam_step(np.zeros(3), np.zeros(3), AdamState.zeros((4,)))

    def test_non_finite_gradient_names_index(self):
        g = np.zeros((2, 3))
        g[1, 2] = np.nan
        with pytest.raises(NumericError, match=r"\(1, 2\)"):
            adam_step(np.zeros((2, 3)), g, AdamState.zeros((2, 3)))

    @given(st.integers(min_value=0, max_value=50), st.integers(min_value=0, max_value=2**32 - 1))
    @settings(max_examples=25, deadline=None)
    def test_zero_gradient_identity_property(self, t, seed):
        params = Rng(seed, 5).generator().standard_normal((3, 2))
        state = AdamState(np.zeros((3, 2)), np.zeros((3, 2)), t)
        new_params, _ = adam_step(params, np.zeros((3, 2)), state)
        assert np.array_equal(new_params, params)


class TestFiniteDiff:
    def test_quadratic(self):
        f = lambda x: float(x[0] * x[0])
        err = finite_diff_check(f, np.array([3.0]), np.array([6.0]))
        assert err < 1e-8

    def test_negated_gradient_flagged(self):
        f = lambda x: float(x[0] * x[0])
        err = finite_diff_check(f, np.array([3.0]), np.array([-6.0]))
        assert err == pytest.approx(2.0, abs=1e-6)

    def test_callable_analytic(self):
        f = lambda x: float(np.sum(np.sin(x)))
        grad = lambda x: np.cos(x)
        err = finite_diff_check(f, np.array([0.3, -1.2, 2.0]), grad)
        assert err < 1e-8

    def test_non_finite_function(self):
        f = lambda x: float("nan")
        with pytest.raises(NumericError):
            finite_diff_check(f, np.array([1.0]), np.array([0.0]))

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            finite_diff_check(lambda x: 0.0, np.array([1.0]), np.array([1.0, 2.0]))


class TestRng:
    def test_same_stream_bit_identical(self):
        a = Rng(99, 7).generator().standard_normal(100)
        b = Rng(99, 7).generator().standard_normal(100)
        assert np.array_equal(a, b)

    def test_derive_domain_separation(self):
        a = derive_rng(5, 1, 0).generator().standard_normal(8)
        b = derive_rng(5, 2, 0).generator().standard_normal(8)
        assert not np.array_equal(a, b)

    def test_index_out_of_range(self):
        with pytest.raises(ValueError):
            derive_rng(0, 1, -1)
