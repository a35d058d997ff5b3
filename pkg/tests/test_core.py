"""Vector arithmetic, RNG reproducibility, and finite differences."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gsmooth.core import (DomainError, RngStream, as_vector, elementwise,
                          fd_gradient, norm2)

finite_floats = st.floats(min_value=-1e6, max_value=1e6,
                          allow_nan=False, allow_infinity=False)


class TestElementwise:
    def test_sqrt_perfect_squares(self):
        np.testing.assert_array_equal(elementwise("sqrt", np.array([4.0, 9.0])),
                                      [2.0, 3.0])

    def test_product(self):
        np.testing.assert_array_equal(
            elementwise("mul", np.array([1.0, 2.0]), np.array([3.0, 4.0])), [3.0, 8.0])

    def test_quotient(self):
        np.testing.assert_array_equal(
            elementwise("div", np.array([1.0, 1.0]), np.array([2.0, 4.0])), [0.5, 0.25])

    def test_dim_mismatch_rejected(self):
        with pytest.raises(ValueError):
            elementwise("mul", np.ones(2), np.ones(3))

    def test_nonpositive_divisor_rejected(self):
        with pytest.raises(DomainError):
            elementwise("div", np.ones(2), np.array([1.0, 0.0]))

    def test_negative_sqrt_rejected(self):
        with pytest.raises(DomainError):
            elementwise("sqrt", np.array([1.0, -1e-30]))


class TestNorm:
    def test_three_four_five(self):
        assert norm2(np.array([3.0, 4.0])) == 5.0

    def test_zero_vector(self):
        assert norm2(np.zeros(7)) == 0.0

    def test_ones(self):
        assert norm2(np.ones(4)) == 2.0

    @given(st.lists(finite_floats, min_size=1, max_size=20))
    def test_matches_numpy(self, values):
        v = np.array(values)
        assert norm2(v) == pytest.approx(float(np.linalg.norm(v)), rel=1e-12, abs=1e-300)


class TestAsVector:
    def test_rejects_nan(self):
        with pytest.raises(ValueError):
            as_vector([1.0, float("nan")])

    def test_rejects_wrong_dim(self):
        with pytest.raises(ValueError):
            as_vector([1.0, 2.0], dim=3)

    def test_scalar_promotes(self):
        assert as_vector(3.0).shape == (1,)


class TestFdGradient:
    def test_square(self):
        g = fd_gradient(lambda x: float(x[0]) ** 2, np.array([1.0]), h=1e-5)
        assert abs(g[0] - 2.0) <= 1e-8

    def test_constant_field(self):
        g = fd_gradient(lambda x: 7.5, np.array([0.3, -2.0, 1.0]))
        np.testing.assert_array_equal(g, np.zeros(3))

    def test_norm_fourth_power(self):
        g = fd_gradient(lambda x: norm2(x) ** 4, np.array([1.0, 0.0]), h=1e-5)
        assert abs(g[0] - 4.0) <= 1e-6
        assert abs(g[1] - 0.0) <= 1e-6

    def test_nonfinite_evaluation_raises(self):
        with pytest.raises(DomainError):
            fd_gradient(lambda x: math.inf, np.array([0.0]))


class TestRngStream:
    def test_identical_keys_reproduce_bitwise(self):
        a = RngStream(42, 3).standard_normal(1000)
        b = RngStream(42, 3).standard_normal(1000)
        np.testing.assert_array_equal(a, b)

    def test_distinct_streams_differ(self):
        a = RngStream(42, 0).standard_normal(100)
        b = RngStream(42, 1).standard_normal(100)
        assert not np.array_equal(a, b)

    def test_reproducible_across_interleaving(self):
        # drawing from one stream must not affect another's sequence
        a = RngStream(7, 0)
        b = RngStream(7, 1)
        mixed = []
        for _ in range(5):
            mixed.append(a.standard_normal(3))
            b.standard_normal(11)
        solo = RngStream(7, 0)
        expect = [solo.standard_normal(3) for _ in range(5)]
        np.testing.assert_array_equal(np.concatenate(mixed), np.concatenate(expect))

    def test_counter_tracks_draws(self):
        r = RngStream(1, 1)
        r.standard_normal(4)
        r.uniform()
        assert r.counter == 2
