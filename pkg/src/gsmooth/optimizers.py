"""The adaptive-momentum optimizer in both formulations, plus its
variance-reduced variant with a recursive momentum correction.

Both Adam formulations share one state type. The accumulator discounts
(1-beta)^t and (1-beta_sq)^t are maintained by one multiplication per step
rather than pow(), so the raw and re-scaled forms see bitwise-identical
discount factors and their trajectories can be compared at tight tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ConfigError, RngStream, Vector
from .objectives import ObjectiveSpec
from .oracle import NoiseModel, SampleTicket, component_gradient, megabatch_gradient


@dataclass(frozen=True)
class HyperParams:
    beta: float
    beta_sq: float
    eta: float
    lam: float
    T: int
    s1: int = 1

    def __post_init__(self):
        if not (0.0 < self.beta <= 1.0):
            raise ConfigError("beta must be in (0, 1]")
        if not (0.0 <= self.beta_sq <= 1.0):
            raise ConfigError("beta_sq must be in [0, 1]")
        if self.eta <= 0.0:
            raise ConfigError("eta must be positive")
        if self.lam <= 0.0:
            raise ConfigError("lambda must be positive (the stepsize floor)")
        if self.T < 1:
            raise ConfigError("T must be >= 1")
        if self.s1 < 1:
            raise ConfigError("S1 must be >= 1")

    def require_adam(self):
        if self.beta_sq == 0.0:
            raise ConfigError("Adam requires beta_sq > 0")


@dataclass
class AdamState:
    t: int
    x: Vector
    m_raw: Vector
    v_raw: Vector
    m_hat: Vector
    v_hat: Vector
    pow_beta: float     # (1-beta)^t, by iterative multiplication
    pow_beta_sq: float  # (1-beta_sq)^t


def alpha_t(beta: float, pow_beta_t: float) -> float:
    """Momentum weight beta / (1 - (1-beta)^t) given the accumulated discount."""
    return beta / (1.0 - pow_beta_t)


def adam_init(x_init: Vector) -> AdamState:
    x = np.array(x_init, dtype=np.float64)
    z = np.zeros_like(x)
    return AdamState(t=1, x=x, m_raw=z.copy(), v_raw=z.copy(),
                     m_hat=z.copy(), v_hat=z.copy(),
                     pow_beta=1.0, pow_beta_sq=1.0)


def adam_step_raw(state: AdamState, g: Vector, hp: HyperParams) -> AdamState:
    """One step of the textbook formulation with bias-corrected accumulators."""
    hp.require_adam()
    pow_b = state.pow_beta * (1.0 - hp.beta)
    pow_bsq = state.pow_beta_sq * (1.0 - hp.beta_sq)
    m = (1.0 - hp.beta) * state.m_raw + hp.beta * g
    v = (1.0 - hp.beta_sq) * state.v_raw + hp.beta_sq * (g * g)
    m_hat = m / (1.0 - pow_b)
    v_hat = v / (1.0 - pow_bsq)
    x = state.x - hp.eta * m_hat / (np.sqrt(v_hat) + hp.lam)
    return AdamState(t=state.t + 1, x=x, m_raw=m, v_raw=v, m_hat=m_hat,
                     v_hat=v_hat, pow_beta=pow_b, pow_beta_sq=pow_bsq)


def adam_step_rescaled(state: AdamState, g: Vector, hp: HyperParams) -> AdamState:
    """One step of the equivalent convex-combination form.

    m_hat <- (1 - a_t) m_hat + a_t g with a_t = beta / (1-(1-beta)^t), and the
    same for v_hat; at t=1 the weights are exactly 1, so m_hat = g, v_hat = g^2.
    """
    hp.require_adam()
    pow_b = state.pow_beta * (1.0 - hp.beta)
    pow_bsq = state.pow_beta_sq * (1.0 - hp.beta_sq)
    if state.t == 1:
        m_hat = g.astype(np.float64, copy=True)
        v_hat = g * g
    else:
        a = hp.beta / (1.0 - pow_b)
        a_sq = hp.beta_sq / (1.0 - pow_bsq)
        m_hat = (1.0 - a) * state.m_hat + a * g
        v_hat = (1.0 - a_sq) * state.v_hat + a_sq * (g * g)
    m = m_hat * (1.0 - pow_b)
    v = v_hat * (1.0 - pow_bsq)
    x = state.x - hp.eta * m_hat / (np.sqrt(v_hat) + hp.lam)
    return AdamState(t=state.t + 1, x=x, m_raw=m, v_raw=v, m_hat=m_hat,
                     v_hat=v_hat, pow_beta=pow_b, pow_beta_sq=pow_bsq)


@dataclass
class VRAdamState:
    t: int
    x: Vector
    x_prev: Vector
    m: Vector
    v_raw: Vector
    v_hat: Vector
    pow_beta_sq: float


def vradam_init(spec: ObjectiveSpec, x_init: Vector, hp: HyperParams,
                model: NoiseModel, rng: RngStream) -> VRAdamState:
    """Mega-batch initialization: m1 from an s1-sample batch at the start point,
    v1 = beta_sq * m1^2, and the first move x2 = x1 - eta * m1 / (|m1| + lambda)."""
    x1 = np.array(x_init, dtype=np.float64)
    m1 = megabatch_gradient(spec, model, x1, hp.s1, rng)
    v1 = hp.beta_sq * (m1 * m1)
    x2 = x1 - hp.eta * m1 / (np.abs(m1) + hp.lam)
    # v_hat_1 = v1 / (1-(1-beta_sq)^1) = m1^2 when beta_sq > 0; zero stays zero
    v_hat1 = m1 * m1 if hp.beta_sq > 0.0 else np.zeros_like(m1)
    return VRAdamState(t=2, x=x2, x_prev=x1, m=m1, v_raw=v1, v_hat=v_hat1,
                       pow_beta_sq=1.0 - hp.beta_sq)


def vradam_momentum(m_prev: Vector, g_t: Vector, g_prev_same_ticket: Vector,
                    beta: float) -> Vector:
    """Recursive momentum with bias correction through the gradient difference.

    Algebraically (1-b) m + b g_t + (1-b)(g_t - g_prev); grouped as
    g_t + (1-b)(m - g_prev) so that a deterministic oracle with m = g_prev
    reproduces g_t bitwise and the momentum error stays exactly zero.
    """
    return g_t + (1.0 - beta) * (m_prev - g_prev_same_ticket)


def vradam_step(state: VRAdamState, g_t: Vector, g_prev_same_ticket: Vector,
                hp: HyperParams) -> VRAdamState:
    """One step given both component gradients evaluated under one ticket."""
    m = vradam_momentum(state.m, g_t, g_prev_same_ticket, hp.beta)
    v = (1.0 - hp.beta_sq) * state.v_raw + hp.beta_sq * (g_t * g_t)
    pow_bsq = state.pow_beta_sq * (1.0 - hp.beta_sq)
    denom = 1.0 - pow_bsq
    v_hat = v / denom if denom > 0.0 else np.zeros_like(v)
    x = state.x - hp.eta * m / (np.sqrt(v_hat) + hp.lam)
    return VRAdamState(t=state.t + 1, x=x, x_prev=state.x, m=m, v_raw=v,
                       v_hat=v_hat, pow_beta_sq=pow_bsq)


def vradam_step_with_oracle(state: VRAdamState, ticket: SampleTicket,
                            spec: ObjectiveSpec, model: NoiseModel,
                            hp: HyperParams) -> VRAdamState:
    """Convenience wrapper that performs the double evaluation itself."""
    g_t = component_gradient(spec, model, state.x, ticket)
    g_prev = component_gradient(spec, model, state.x_prev, ticket)
    return vradam_step(state, g_t, g_prev, hp)
