"""Stochastic gradient oracles with almost-surely bounded, mean-zero noise.

A draw materializes everything random into a SampleTicket, so the component
gradient is a pure function of (point, ticket). That is what lets the
variance-reduced optimizer evaluate two different points against the same
sample, exactly.

Two component models share the interface:

* ``linear`` (default): f(x, xi) = f(x) + <n(xi), x>. The noise vector is the
  ticket; Hessians coincide with the objective's, so the component inherits
  the (L0, L_rho) certificate unchanged, and the correction term
  grad f(x, xi) - grad f(y, xi) is exactly grad f(x) - grad f(y).
* ``sinusoid``: adds (sigma/sqrt(d)) * sum_i s_i sin(x_i + phi_i), a
  curvature-perturbing component for robustness runs. Noise stays bounded by
  sigma but no longer cancels between two points. Excluded from acceptance
  configurations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ConfigError, RngStream, Vector
from .objectives import ObjectiveSpec

NOISE_KINDS = ("zero", "sphere", "ball", "coordinate")
COMPONENT_MODELS = ("linear", "sinusoid")


@dataclass(frozen=True)
class NoiseModel:
    kind: str = "zero"
    sigma: float = 0.0
    component: str = "linear"

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ConfigError(f"unknown noise kind {self.kind!r}; known: {NOISE_KINDS}")
        if self.sigma < 0:
            raise ConfigError("sigma must be nonnegative")
        if self.component not in COMPONENT_MODELS:
            raise ConfigError(f"unknown component model {self.component!r}")
        if self.kind == "zero" and self.sigma != 0.0:
            raise ConfigError("zero noise requires sigma = 0")


@dataclass(frozen=True)
class SampleTicket:
    """One realized sample: enough material to regenerate its noise anywhere."""

    step: int
    noise: Vector          # linear model: the noise vector itself
    signs: Vector | None = None   # sinusoid model
    phases: Vector | None = None


def draw(model: NoiseModel, rng: RngStream, dim: int, step: int = 0) -> SampleTicket:
    """Draw one sample. The returned noise vector has ||n|| <= sigma."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    sigma = model.sigma
    if model.kind == "zero" or sigma == 0.0:
        n = np.zeros(dim)
    elif model.kind == "sphere":
        u = rng.standard_normal(dim)
        nu = math.sqrt(float(u @ u))
        while nu == 0.0:  # probability zero, but keep the contract exact
            u = rng.standard_normal(dim)
            nu = math.sqrt(float(u @ u))
        n = u * (sigma / nu)
    elif model.kind == "ball":
        u = rng.standard_normal(dim)
        nu = math.sqrt(float(u @ u))
        while nu == 0.0:
            u = rng.standard_normal(dim)
            nu = math.sqrt(float(u @ u))
        radius = sigma * float(rng.uniform()) ** (1.0 / dim)
        n = u * (radius / nu)
    else:  # coordinate
        i = int(rng.integers(0, dim))
        s = 1.0 if float(rng.uniform()) < 0.5 else -1.0
        n = np.zeros(dim)
        n[i] = s * sigma

    if model.component == "sinusoid":
        signs = rng.choice_sign(dim)
        phases = rng.uniform(0.0, 2.0 * math.pi, dim)
        return SampleTicket(step=step, noise=n, signs=signs, phases=phases)
    return SampleTicket(step=step, noise=n)


def noise_vector(model: NoiseModel, ticket: SampleTicket, x: Vector) -> Vector:
    """Gradient perturbation of the component at x for this ticket."""
    if model.component == "linear":
        return ticket.noise
    amp = model.sigma / math.sqrt(x.size)
    return amp * ticket.signs * np.cos(x + ticket.phases)


def component_value(spec: ObjectiveSpec, model: NoiseModel, x: Vector,
                    ticket: SampleTicket) -> float:
    spec.require_in_domain(x)
    if model.component == "linear":
        return spec.value(x) + float(ticket.noise @ x)
    amp = model.sigma / math.sqrt(x.size)
    return spec.value(x) + amp * float(np.sum(ticket.signs * np.sin(x + ticket.phases)))


def component_gradient(spec: ObjectiveSpec, model: NoiseModel, x: Vector,
                       ticket: SampleTicket) -> Vector:
    """grad f(x, xi) = grad f(x) + n(xi, x); deterministic given the ticket."""
    spec.require_in_domain(x)
    return spec.gradient(x) + noise_vector(model, ticket, x)


def megabatch_gradient(spec: ObjectiveSpec, model: NoiseModel, x: Vector,
                       s1: int, rng: RngStream) -> Vector:
    """Mean of s1 independent component gradients at x."""
    if s1 < 1:
        raise ValueError("s1 must be >= 1")
    spec.require_in_domain(x)
    g = spec.gradient(x)
    acc = np.zeros_like(g)
    for k in range(s1):
        t = draw(model, rng, x.size, step=0)
        acc += noise_vector(model, t, x)
    return g + acc / s1
