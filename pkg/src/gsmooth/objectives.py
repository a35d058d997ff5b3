"""Built-in test objectives with certified (L0, L_rho) smoothness constants.

Each objective carries analytic value/gradient/Hessian-norm oracles, the
constants (L0, L_rho, rho) for the bound ||H(x)|| <= L0 + L_rho ||grad f(x)||^rho,
a known infimum, and a default start point. Univariate functions are lifted to
dimension d by summing over coordinates, which preserves the certificate:
||H_d(x)|| = max_i |f''(x_i)| <= L0 + L_rho max_i |f'(x_i)|^rho <= L0 + L_rho ||grad||^rho.

Constants for the barrier, the double exponential, and the 2-D banana function
were fitted numerically (max-residual fit on a dense grid, then rounded up)
and are re-verified by the certification tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import ConfigError, DomainError, RngStream, Vector, as_vector


@dataclass(frozen=True)
class ObjectiveSpec:
    """A test function with oracles and its certified smoothness constants."""

    name: str
    dim: int
    value: Callable[[Vector], float]
    gradient: Callable[[Vector], Vector]
    hessian_norm: Callable[[Vector], float]
    l0: float
    lrho: float
    rho: float
    f_inf: float
    x1_default: Vector
    domain_box: tuple[float, float] | None = None  # open interval, per coordinate
    sample_box: tuple[float, float] = (-10.0, 10.0)  # default certification box

    def in_domain(self, x: Vector) -> bool:
        if self.domain_box is None:
            return bool(np.all(np.isfinite(x)))
        lo, hi = self.domain_box
        return bool(np.all(np.isfinite(x)) and np.all(x > lo) and np.all(x < hi))

    def require_in_domain(self, x: Vector) -> None:
        if not self.in_domain(x):
            raise DomainError(f"point left the domain of {self.name}")

    def initial_gap(self, x1: Vector | None = None) -> float:
        x1 = self.x1_default if x1 is None else x1
        return float(self.value(x1) - self.f_inf)


@dataclass
class CertificationReport:
    samples_checked: int
    violations: list  # (x, hessian_norm, bound) triples
    fitted_constants: tuple[float, float] | None = None

    @property
    def passed(self) -> bool:
        return not self.violations


def _lifted(name, dim, fv, fg, fh, l0, lrho, rho, f_inf_1d, x1_coord,
            domain_box, sample_box):
    """Build a sum-of-coordinates objective from univariate f, f', f''."""

    def value(x):
        return float(np.sum(fv(x)))

    def gradient(x):
        return fg(x)

    def hessian_norm(x):
        return float(np.max(np.abs(fh(x))))

    return ObjectiveSpec(
        name=name, dim=dim, value=value, gradient=gradient,
        hessian_norm=hessian_norm, l0=l0, lrho=lrho, rho=rho,
        f_inf=f_inf_1d * dim,
        x1_default=np.full(dim, x1_coord, dtype=np.float64),
        domain_box=domain_box, sample_box=sample_box,
    )


def _quadratic(dim):
    x1 = np.full(dim, 0.5 / math.sqrt(dim))
    return ObjectiveSpec(
        name="quadratic", dim=dim,
        value=lambda x: 0.5 * float(x @ x),
        gradient=lambda x: x.copy(),
        hessian_norm=lambda x: 1.0,
        l0=1.0, lrho=0.0, rho=0.0, f_inf=0.0,
        x1_default=x1, sample_box=(-10.0, 10.0),
    )


QUARTIC_LRHO = 12.0 / 4.0 ** (2.0 / 3.0)  # 3 * 4^(1/3); bound is tight everywhere


def _quartic(dim):
    def value(x):
        return float(x @ x) ** 2

    def gradient(x):
        return 4.0 * float(x @ x) * x

    def hessian_norm(x):
        # H = 4||x||^2 I + 8 x x^T, spectral norm 12||x||^2
        return 12.0 * float(x @ x)

    x1 = np.full(dim, 0.5 / math.sqrt(dim))
    return ObjectiveSpec(
        name="quartic", dim=dim, value=value, gradient=gradient,
        hessian_norm=hessian_norm,
        l0=0.0, lrho=QUARTIC_LRHO, rho=2.0 / 3.0, f_inf=0.0,
        x1_default=x1, sample_box=(-3.0, 3.0),
    )


def _exp1d(dim):
    return _lifted(
        "exp1d", dim,
        fv=np.exp, fg=np.exp, fh=np.exp,
        l0=0.0, lrho=1.0, rho=1.0, f_inf_1d=0.0, x1_coord=0.0,
        domain_box=None, sample_box=(-5.0, 5.0),
    )


def _rational_inv(dim):
    return _lifted(
        "rational_inv", dim,
        fv=lambda x: 1.0 / x,
        fg=lambda x: -1.0 / x ** 2,
        fh=lambda x: 2.0 / x ** 3,
        # |f''| = 2|f'|^{3/2} holds exactly on x > 0
        l0=0.0, lrho=2.0, rho=1.5, f_inf_1d=0.0, x1_coord=2.0,
        domain_box=(0.0, math.inf), sample_box=(0.01, 100.0),
    )


def _rational_barrier(dim):
    return _lifted(
        "rational_barrier", dim,
        fv=lambda x: 1.0 / x + 1.0 / (1.0 - x),
        fg=lambda x: -1.0 / x ** 2 + 1.0 / (1.0 - x) ** 2,
        fh=lambda x: 2.0 / x ** 3 + 2.0 / (1.0 - x) ** 3,
        # fitted: max residual 32.0 at the midpoint for lrho=3
        l0=33.0, lrho=3.0, rho=1.5, f_inf_1d=4.0, x1_coord=0.45,
        domain_box=(0.0, 1.0), sample_box=(0.001, 0.999),
    )


def _double_exp(dim):
    def fv(x):
        return np.exp(np.exp(x))

    def fg(x):
        return np.exp(x) * np.exp(np.exp(x))

    def fh(x):
        return (np.exp(x) + 1.0) * np.exp(x) * np.exp(np.exp(x))

    return _lifted(
        "double_exp", dim, fv=fv, fg=fg, fh=fh,
        # fitted over x <= 5.5: max residual 0.115 against lrho=1.7
        l0=0.2, lrho=1.7, rho=1.5, f_inf_1d=1.0, x1_coord=0.0,
        domain_box=(-math.inf, 5.5), sample_box=(-5.0, 3.0),
    )


def _rosenbrock_like(dim):
    if dim != 2:
        raise ConfigError("rosenbrock_like is only defined for dim=2")

    def value(x):
        a, b = x
        return 100.0 * (b - a * a) ** 2 + (1.0 - a) ** 2

    def gradient(x):
        a, b = x
        return np.array([-400.0 * a * (b - a * a) - 2.0 * (1.0 - a),
                         200.0 * (b - a * a)])

    def hessian_norm(x):
        a, b = x
        haa = -400.0 * (b - 3.0 * a * a) + 2.0
        hab = -400.0 * a
        hbb = 200.0
        mid = 0.5 * (haa + hbb)
        disc = math.hypot(0.5 * (haa - hbb), hab)
        return max(abs(mid + disc), abs(mid - disc))

    return ObjectiveSpec(
        name="rosenbrock_like", dim=2, value=value, gradient=gradient,
        hessian_norm=hessian_norm,
        # fitted over [-2,2]^2: L0 need 1817, Lrho need 16.9
        l0=1900.0, lrho=18.0, rho=2.0 / 3.0, f_inf=0.0,
        x1_default=np.array([-0.5, 0.5]), sample_box=(-2.0, 2.0),
    )


_REGISTRY = {
    "quadratic": (_quadratic, 2),
    "quartic": (_quartic, 2),
    "exp1d": (_exp1d, 1),
    "rational_inv": (_rational_inv, 1),
    "rational_barrier": (_rational_barrier, 1),
    "double_exp": (_double_exp, 1),
    "rosenbrock_like": (_rosenbrock_like, 2),
}


def builtin_names() -> list[str]:
    return sorted(_REGISTRY)


def builtin(name: str, dim: int | None = None) -> ObjectiveSpec:
    """Look up a registered objective, optionally at a non-default dimension."""
    try:
        factory, default_dim = _REGISTRY[name]
    except KeyError:
        raise ConfigError(f"unknown objective {name!r}; known: {', '.join(builtin_names())}") from None
    d = default_dim if dim is None else int(dim)
    if d < 1:
        raise ConfigError("dim must be >= 1")
    return factory(d)


def sample_in_box(rng: RngStream, dim: int, box: tuple[float, float]) -> Vector:
    lo, hi = box
    return rng.uniform(lo, hi, dim)


def certify_l0lrho(spec: ObjectiveSpec, n_samples: int, rng: RngStream,
                   sampling_box: tuple[float, float] | None = None,
                   constants: tuple[float, float, float] | None = None,
                   tol_abs: float = 1e-9,
                   fit_rho: float | None = None,
                   max_violations: int = 100) -> CertificationReport:
    """Empirically check ||H(x)|| <= L0 + L_rho ||grad f(x)||^rho over random samples.

    ``constants`` overrides the spec's own (L0, L_rho, rho), which lets tests
    confirm that wrong claims are caught. With ``fit_rho`` set, the report also
    carries (L0, L_rho) fitted from the samples for that exponent: L0 is the
    largest Hessian norm where ||grad|| < 1, L_rho the largest (H - L0)/||grad||^rho
    elsewhere.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    box = sampling_box if sampling_box is not None else spec.sample_box
    l0, lrho, rho = constants if constants is not None else (spec.l0, spec.lrho, spec.rho)

    violations = []
    hs = np.empty(n_samples)
    gns = np.empty(n_samples)
    for k in range(n_samples):
        x = sample_in_box(rng, spec.dim, box)
        h = spec.hessian_norm(x)
        gn = math.sqrt(float(spec.gradient(x) @ spec.gradient(x)))
        hs[k] = h
        gns[k] = gn
        bound = l0 + lrho * gn ** rho
        if h > bound + tol_abs and len(violations) < max_violations:
            violations.append((x, h, bound))

    fitted = None
    if fit_rho is not None:
        low = gns < 1.0
        fit_l0 = float(hs[low].max()) if np.any(low) else 0.0
        extra = (hs - fit_l0) / np.maximum(gns, 1e-300) ** fit_rho
        fit_lrho = float(max(0.0, extra[~low].max())) if np.any(~low) else 0.0
        fitted = (fit_l0, fit_lrho)

    return CertificationReport(samples_checked=n_samples, violations=violations,
                               fitted_constants=fitted)


def counterexample_l0l1(kind: str, l0: float, l1: float) -> float:
    """A point witnessing that the function is not (l0, l1)-smooth (rho=1).

    For 1/x take x <= min((l0+1)^(-1/3), (l1+1)^(-1)); for e^(e^x) take
    x >= max(log(l0+1), log(l1+1)). Both make |f''(x)| > l0 + l1 |f'(x)| strictly.
    """
    if l0 < 0 or l1 < 0:
        raise ValueError("l0 and l1 must be nonnegative")
    if kind == "rational":
        return min((l0 + 1.0) ** (-1.0 / 3.0), 1.0 / (l1 + 1.0))
    if kind == "double_exp":
        return max(math.log(l0 + 1.0), math.log(l1 + 1.0))
    raise ConfigError(f"unknown counterexample kind {kind!r}")


def counterexample_violation(kind: str, l0: float, l1: float) -> tuple[float, float, float]:
    """Returns (x, |f''(x)|, l0 + l1 |f'(x)|) at the witness point."""
    x = counterexample_l0l1(kind, l0, l1)
    if kind == "rational":
        fp = -1.0 / x ** 2
        fpp = 2.0 / x ** 3
    else:
        fp = math.exp(x) * math.exp(math.exp(x))
        fpp = (math.exp(x) + 1.0) * fp
    return x, abs(fpp), l0 + l1 * abs(fp)
