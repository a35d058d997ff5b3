"""Certified smoothness of the built-in objectives.

Every builtin must (a) have an analytic gradient matching finite differences,
(b) pass its own (L0, L_rho) certificate on random samples, and (c) have a
true lower bound f_inf. The two counterexample constructions must produce
strict violations of the rho=1 bound.
"""

import math

import numpy as np
import pytest

from gsmooth.core import ConfigError, DomainError, RngStream, fd_gradient, norm2
from gsmooth.objectives import (QUARTIC_LRHO, builtin, builtin_names,
                                certify_l0lrho, counterexample_l0l1,
                                counterexample_violation)

ALL_NAMES = builtin_names()


def sample_points(spec, n, seed=123):
    rng = RngStream(seed, 0)
    lo, hi = spec.sample_box
    return [rng.uniform(lo, hi, spec.dim) for _ in range(n)]


class TestRegistry:
    def test_known_names(self):
        assert ALL_NAMES == ["double_exp", "exp1d", "quadratic", "quartic",
                             "rational_barrier", "rational_inv", "rosenbrock_like"]

    def test_unknown_name_is_config_error(self):
        with pytest.raises(ConfigError):
            builtin("does_not_exist")

    def test_rosenbrock_only_2d(self):
        with pytest.raises(ConfigError):
            builtin("rosenbrock_like", 3)


class TestHandValues:
    def test_quartic_tight_bound_at_unit_point(self):
        spec = builtin("quartic", 2)
        x = np.array([1.0, 0.0])
        np.testing.assert_allclose(spec.gradient(x), [4.0, 0.0])
        assert spec.hessian_norm(x) == pytest.approx(12.0)
        bound = spec.lrho * norm2(spec.gradient(x)) ** spec.rho
        assert spec.hessian_norm(x) == pytest.approx(bound)  # tight case

    def test_quartic_lrho_closed_form(self):
        assert QUARTIC_LRHO == pytest.approx(3.0 * 4.0 ** (1.0 / 3.0))

    def test_rational_inv_exact_identity(self):
        spec = builtin("rational_inv", 1)
        x = np.array([2.0])
        assert spec.gradient(x)[0] == pytest.approx(-0.25)
        # |f''| = 2 |f'|^{3/2} holds exactly on the whole domain
        assert spec.hessian_norm(x) == pytest.approx(2.0 * 0.25 ** 1.5)

    def test_quadratic_constant_hessian(self):
        spec = builtin("quadratic", 5)
        for x in sample_points(spec, 10):
            assert spec.hessian_norm(x) == 1.0 <= spec.l0


class TestGradientsMatchFiniteDifferences:
    # within ~3e-3 of a pole the h=1e-5 central difference is dominated by
    # truncation (error ~ h^2 |f'''| / 6), so the check samples inset boxes
    # there; certification itself never uses finite differences
    GRAD_CHECK_BOX = {"rational_barrier": (0.01, 0.99), "rational_inv": (0.02, 100.0)}

    @pytest.mark.parametrize("name", ALL_NAMES)
    def test_1000_random_points(self, name):
        spec = builtin(name)
        box = self.GRAD_CHECK_BOX.get(name, spec.sample_box)
        rng = RngStream(123, 0)
        for _ in range(1000):
            x = rng.uniform(box[0], box[1], spec.dim)
            g = spec.gradient(x)
            g_fd = fd_gradient(spec.value, x, h=1e-5)
            assert norm2(g - g_fd) <= 1e-5 * (1.0 + norm2(g)), f"{name} at {x}"


class TestCertification:
    @pytest.mark.parametrize("name", ALL_NAMES)
    def test_own_constants_certify(self, name):
        spec = builtin(name)
        rep = certify_l0lrho(spec, 10_000, RngStream(5, 0))
        assert rep.passed, f"{name}: {len(rep.violations)} violations, " \
                           f"first {rep.violations[:1]}"

    def test_quadratic_large_box(self):
        spec = builtin("quadratic", 3)
        rep = certify_l0lrho(spec, 10_000, RngStream(6, 0), sampling_box=(-100.0, 100.0))
        assert rep.passed

    def test_wrong_claim_is_caught(self):
        # claiming the reciprocal is (10, 10)-smooth with rho=1 fails near zero
        spec = builtin("rational_inv", 1)
        rep = certify_l0lrho(spec, 10_000, RngStream(7, 0),
                             sampling_box=(0.001, 1.0),
                             constants=(10.0, 10.0, 1.0))
        assert not rep.passed

    def test_fit_mode_reports_certifying_constants(self):
        spec = builtin("double_exp", 1)
        rep = certify_l0lrho(spec, 5000, RngStream(8, 0), fit_rho=1.5)
        l0_fit, lrho_fit = rep.fitted_constants
        rep2 = certify_l0lrho(spec, 5000, RngStream(8, 0),
                              constants=(l0_fit, lrho_fit, 1.5))
        assert rep2.passed

    @pytest.mark.parametrize("name", ALL_NAMES)
    def test_f_inf_is_lower_bound(self, name):
        spec = builtin(name)
        rng = RngStream(9, 0)
        lo, hi = spec.sample_box
        worst = min(spec.value(rng.uniform(lo, hi, spec.dim))
                    for _ in range(100_000))
        assert worst >= spec.f_inf - 1e-12


class TestLiftedDimensions:
    @pytest.mark.parametrize("name", ["exp1d", "rational_inv", "rational_barrier", "double_exp"])
    def test_lift_preserves_certificate(self, name):
        spec = builtin(name, 3)
        rep = certify_l0lrho(spec, 3000, RngStream(10, 0))
        assert rep.passed

    def test_lifted_value_sums_coordinates(self):
        spec1 = builtin("exp1d", 1)
        spec3 = builtin("exp1d", 3)
        x = np.array([0.1, -0.2, 0.3])
        assert spec3.value(x) == pytest.approx(sum(spec1.value(np.array([v])) for v in x))


class TestDomains:
    def test_barrier_rejects_outside(self):
        spec = builtin("rational_barrier", 1)
        assert not spec.in_domain(np.array([1.5]))
        with pytest.raises(DomainError):
            spec.require_in_domain(np.array([-0.1]))

    def test_open_interval_excludes_endpoints(self):
        spec = builtin("rational_inv", 1)
        assert not spec.in_domain(np.array([0.0]))
        assert spec.in_domain(np.array([1e-9]))


class TestCounterexamples:
    def test_rational_witness_formula(self):
        x = counterexample_l0l1("rational", 10.0, 10.0)
        assert x == pytest.approx(1.0 / 11.0)

    def test_rational_strict_violation(self):
        x, lhs, rhs = counterexample_violation("rational", 10.0, 10.0)
        assert lhs > rhs

    def test_double_exp_at_zero(self):
        # with L0 = L1 = 1 the witness is x = log(2); x = 0 also works by hand:
        # f''(0) = 2e > 1 + e = bound
        assert 2.0 * math.e > 1.0 + math.e
        x, lhs, rhs = counterexample_violation("double_exp", 1.0, 1.0)
        assert lhs > rhs

    def test_double_exp_large_constants(self):
        x, lhs, rhs = counterexample_violation("double_exp", 10.0, 10.0)
        assert x == pytest.approx(math.log(11.0))
        assert lhs > rhs

    def test_degenerate_zero_constants(self):
        x, lhs, rhs = counterexample_violation("rational", 0.0, 0.0)
        assert x > 0 and lhs > rhs
