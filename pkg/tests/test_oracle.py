"""Noise models: almost-sure bound, mean zero, and ticket determinism."""

import math

import numpy as np
import pytest

from gsmooth.core import ConfigError, RngStream, norm2
from gsmooth.objectives import builtin
from gsmooth.oracle import (NoiseModel, component_gradient, component_value,
                            draw, megabatch_gradient, noise_vector)


class TestDraw:
    def test_zero_model(self):
        t = draw(NoiseModel("zero", 0.0), RngStream(1, 0), 3)
        np.testing.assert_array_equal(t.noise, np.zeros(3))

    def test_sphere_radius_exact(self):
        rng = RngStream(2, 0)
        model = NoiseModel("sphere", 0.1)
        for _ in range(100):
            t = draw(model, rng, 3)
            assert norm2(t.noise) == pytest.approx(0.1, abs=1e-12)

    def test_ball_bound_and_mean(self):
        rng = RngStream(3, 0)
        model = NoiseModel("ball", 1.0)
        draws = np.array([draw(model, rng, 4).noise for _ in range(100_000)])
        norms = np.sqrt((draws ** 2).sum(axis=1))
        assert norms.max() <= 1.0 + 1e-12
        assert norm2(draws.mean(axis=0)) <= 0.02

    @pytest.mark.parametrize("kind", ["sphere", "ball", "coordinate"])
    def test_mean_zero_at_monte_carlo_scale(self, kind):
        rng = RngStream(4, 0)
        sigma, dim, n = 0.5, 3, 100_000
        model = NoiseModel(kind, sigma)
        acc = np.zeros(dim)
        for _ in range(n):
            acc += draw(model, rng, dim).noise
        assert norm2(acc / n) <= 3.0 * sigma / math.sqrt(n) * math.sqrt(dim)

    def test_coordinate_is_signed_basis_vector(self):
        rng = RngStream(5, 0)
        t = draw(NoiseModel("coordinate", 0.7), rng, 5)
        nz = np.nonzero(t.noise)[0]
        assert nz.size == 1 and abs(t.noise[nz[0]]) == pytest.approx(0.7)

    def test_bad_kind_rejected(self):
        with pytest.raises(ConfigError):
            NoiseModel("gaussian", 1.0)

    def test_zero_kind_requires_zero_sigma(self):
        with pytest.raises(ConfigError):
            NoiseModel("zero", 0.5)


class TestComponentGradient:
    def test_noise_bound_holds_per_call(self):
        spec = builtin("quartic", 3)
        model = NoiseModel("ball", 0.3)
        rng = RngStream(6, 0)
        x = np.array([0.5, -0.2, 0.1])
        g_true = spec.gradient(x)
        for step in range(1000):
            t = draw(model, rng, 3, step)
            g = component_gradient(spec, model, x, t)
            assert norm2(g - g_true) <= 0.3 + 1e-12

    def test_ticket_determinism(self):
        spec = builtin("quadratic", 2)
        model = NoiseModel("sphere", 0.2)
        t = draw(model, RngStream(7, 0), 2)
        x = np.array([1.0, 2.0])
        a = component_gradient(spec, model, x, t)
        b = component_gradient(spec, model, x, t)
        np.testing.assert_array_equal(a, b)

    def test_zero_model_returns_exact_gradient(self):
        spec = builtin("quartic", 2)
        model = NoiseModel("zero", 0.0)
        x = np.array([0.3, 0.4])
        t = draw(model, RngStream(8, 0), 2)
        np.testing.assert_array_equal(component_gradient(spec, model, x, t),
                                      spec.gradient(x))

    def test_linear_component_correction_cancels_noise(self):
        # grad f(x, xi) - grad f(y, xi) equals grad f(x) - grad f(y) exactly
        spec = builtin("quartic", 2)
        model = NoiseModel("sphere", 0.5)
        t = draw(model, RngStream(9, 0), 2)
        x, y = np.array([0.5, 0.1]), np.array([0.4, 0.2])
        lhs = component_gradient(spec, model, x, t) - component_gradient(spec, model, y, t)
        np.testing.assert_array_equal(lhs, spec.gradient(x) - spec.gradient(y))

    def test_domain_exit_raises(self):
        from gsmooth.core import DomainError
        spec = builtin("rational_inv", 1)
        model = NoiseModel("zero", 0.0)
        t = draw(model, RngStream(10, 0), 1)
        with pytest.raises(DomainError):
            component_gradient(spec, model, np.array([-1.0]), t)


class TestSinusoidComponent:
    """The nonlinear component keeps the noise bound but not the cancellation."""

    def test_noise_bound(self):
        spec = builtin("quadratic", 4)
        model = NoiseModel("sphere", 0.3, component="sinusoid")
        rng = RngStream(11, 0)
        x = np.array([1.0, -2.0, 0.5, 0.0])
        for _ in range(500):
            t = draw(model, rng, 4)
            assert norm2(noise_vector(model, t, x)) <= 0.3 + 1e-12

    def test_correction_does_not_cancel(self):
        spec = builtin("quadratic", 2)
        model = NoiseModel("sphere", 0.5, component="sinusoid")
        t = draw(model, RngStream(12, 0), 2)
        x, y = np.array([0.9, 0.1]), np.array([0.1, 0.9])
        lhs = component_gradient(spec, model, x, t) - component_gradient(spec, model, y, t)
        assert norm2(lhs - (spec.gradient(x) - spec.gradient(y))) > 1e-6

    def test_value_gradient_consistency(self):
        from gsmooth.core import fd_gradient
        spec = builtin("quadratic", 3)
        model = NoiseModel("sphere", 0.4, component="sinusoid")
        t = draw(model, RngStream(13, 0), 3)
        x = np.array([0.2, -0.5, 1.0])
        g = component_gradient(spec, model, x, t)
        g_fd = fd_gradient(lambda v: component_value(spec, model, v, t), x)
        assert norm2(g - g_fd) <= 1e-6 * (1 + norm2(g))


class TestMegabatch:
    def test_single_sample_matches_component(self):
        spec = builtin("quadratic", 2)
        model = NoiseModel("sphere", 0.2)
        x = np.array([1.0, 0.0])
        g = megabatch_gradient(spec, model, x, 1, RngStream(14, 0))
        t = draw(model, RngStream(14, 0), 2, step=0)
        np.testing.assert_array_equal(g, component_gradient(spec, model, x, t))

    def test_zero_noise_any_size(self):
        spec = builtin("quartic", 2)
        model = NoiseModel("zero", 0.0)
        x = np.array([0.2, 0.3])
        np.testing.assert_array_equal(
            megabatch_gradient(spec, model, x, 17, RngStream(15, 0)),
            spec.gradient(x))

    def test_mean_noise_bound_never_exceeded(self):
        spec = builtin("quadratic", 3)
        model = NoiseModel("sphere", 1.0)
        x = np.zeros(3)
        for trial in range(50):
            g = megabatch_gradient(spec, model, x, 64, RngStream(16, trial))
            assert norm2(g - spec.gradient(x)) <= 1.0 + 1e-12

    def test_concentration_at_clt_scale(self):
        spec = builtin("quadratic", 3)
        model = NoiseModel("sphere", 1.0)
        x = np.zeros(3)
        hits = sum(
            norm2(megabatch_gradient(spec, model, x, 10_000, RngStream(17, k))
                  - spec.gradient(x)) <= 0.05
            for k in range(20))
        assert hits == 20
