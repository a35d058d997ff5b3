"""Per-step trajectory telemetry and live inequality checks.

The monitor sees full information (analytic gradients of the objective) while
the optimizer only ever sees the noisy oracle output. Every check is a
conditional statement: if its parameter precondition fails, the check is
skipped and counted as skipped, never failed. Checks use slack
slack_abs * (1 + |lhs| + |rhs|) to absorb rounding.

Check ids (stable strings, appear in CSV/JSON output):

  C1.bounded    noisy gradient / momentum / second-moment / stepsize bounds
  L52.jensen    v_hat >= m_hat^2 coordinate-wise when beta = beta_sq
  L52.update    per-step displacement <= eta*D
  C3.eps        momentum error <= 2*sigma
  C3.gamma      carried term <= 2*sigma
  C4.descent    one-step descent inequality
  C8.recursion  one-step squared momentum-error recursion
  C9.martingale cross-run concentration of the stopped inner-product sum
  C6.upper      high-probability upper bound on the pre-stop gradient sum
  C7.lower      almost-sure lower bound when the cap is hit (hard invariant)
  EQ5.recursion vr momentum-error identity
  D3.update     vr displacement bound
  D4.wt         vr innovation bound
  D6.descent    vr descent inequality
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import Vector
from .optimizers import AdamState, HyperParams, VRAdamState
from .theory import TheoryConstants, lower_bound_I2, upper_bound_I1

ADAM_CHECKS = ("C1.bounded", "L52.jensen", "L52.update", "C3.eps", "C3.gamma",
               "C4.descent", "C8.recursion")
VR_CHECKS = ("C1.bounded", "EQ5.recursion", "D3.update", "D4.wt", "D6.descent")
FINAL_CHECKS = ("C6.upper", "C7.lower", "C9.martingale")
ALL_CHECKS = tuple(dict.fromkeys(ADAM_CHECKS + VR_CHECKS + FINAL_CHECKS))


@dataclass(frozen=True)
class LemmaCheckConfig:
    enabled: frozenset[str] | None = None  # None = all
    slack_abs: float = 1e-9
    jensen_slack: float = 1e-12
    identity_tol: float = 1e-12
    fail_policy: str = "record"  # record | abort

    def __post_init__(self):
        if self.slack_abs < 0:
            raise ValueError("slack_abs must be nonnegative")
        if self.fail_policy not in ("record", "abort"):
            raise ValueError("fail_policy must be 'record' or 'abort'")
        if self.enabled is not None:
            unknown = set(self.enabled) - set(ALL_CHECKS)
            if unknown:
                raise ValueError(f"unknown check ids: {sorted(unknown)}")

    def on(self, check_id: str) -> bool:
        return self.enabled is None or check_id in self.enabled


class CheckFailure(AssertionError):
    """Raised when fail_policy='abort' and a live check fails."""


@dataclass
class TrajectoryRecord:
    """Telemetry arrays indexed by step t = 1..T plus stopping-time scalars."""

    T: int
    f: np.ndarray = None
    grad_norm: np.ndarray = None
    eps_norm: np.ndarray = None
    gamma_norm: np.ndarray = None
    w_norm: np.ndarray = None
    update_norm: np.ndarray = None
    step_min: np.ndarray = None
    step_max: np.ndarray = None
    descent_residual: np.ndarray = None
    tau: int = 0            # 0 = not yet determined; set by finalize or on stop
    tau1: int = 0
    tau2: int = 0
    tau_half: int | None = None
    aborted_at: int | None = None
    abort_reason: str | None = None
    violations: dict = field(default_factory=dict)
    skipped: dict = field(default_factory=dict)
    martingale_sum: float = 0.0
    d7_aggregate: float = 0.0
    eps_tau_sq: float = float("nan")
    sum_sq_grad_pre_tau: float = 0.0
    steps_recorded: int = 0

    def __post_init__(self):
        n = self.T
        for name in ("f", "grad_norm", "eps_norm", "gamma_norm", "w_norm",
                     "update_norm", "step_min", "step_max", "descent_residual"):
            if getattr(self, name) is None:
                setattr(self, name, np.full(n, np.nan))

    def count(self, kind: dict, check_id: str):
        kind[check_id] = kind.get(check_id, 0) + 1


def _slack(cfg: LemmaCheckConfig, lhs: float, rhs: float) -> float:
    return cfg.slack_abs * (1.0 + abs(lhs) + abs(rhs))


class _MonitorBase:
    def __init__(self, tc: TheoryConstants, hp: HyperParams,
                 cfg: LemmaCheckConfig | None = None):
        self.tc = tc
        self.hp = hp
        self.cfg = cfg or LemmaCheckConfig()
        self.rec = TrajectoryRecord(T=hp.T)
        self.stopped = False          # becomes True once t >= tau

    # -- shared helpers ----------------------------------------------------

    def _check(self, check_id: str, lhs: float, rhs: float, t: int) -> None:
        """Assert lhs <= rhs + slack, recording a violation otherwise."""
        if not self.cfg.on(check_id):
            return
        if lhs <= rhs + _slack(self.cfg, lhs, rhs):
            return
        self.rec.count(self.rec.violations, check_id)
        if self.cfg.fail_policy == "abort":
            raise CheckFailure(f"{check_id} failed at t: {lhs} > {rhs}")

    def _skip(self, check_id: str) -> None:
        if self.cfg.on(check_id):
            self.rec.count(self.rec.skipped, check_id)

    def _observe_stop(self, t: int, grad_norm: float, eps_norm: float | None):
        """Update stopping-time state; returns True if t is still before tau."""
        rec = self.rec
        if rec.tau1 == 0 and grad_norm > self.tc.G:
            rec.tau1 = t
        if eps_norm is not None and rec.tau2 == 0 and not math.isnan(self.tc.E) \
                and eps_norm > self.tc.E:
            rec.tau2 = t
        hit = min(x for x in (rec.tau1, rec.tau2) if x > 0) if (rec.tau1 or rec.tau2) else 0
        if hit and rec.tau == 0:
            rec.tau = hit
            self.stopped = True
        return rec.tau == 0

    def _common_telemetry(self, t, fx, grad_norm, update_vec, h_vec):
        rec = self.rec
        i = t - 1
        rec.f[i] = fx
        rec.grad_norm[i] = grad_norm
        rec.update_norm[i] = math.sqrt(float(update_vec @ update_vec))
        rec.step_min[i] = float(np.min(h_vec))
        rec.step_max[i] = float(np.max(h_vec))
        rec.steps_recorded = max(rec.steps_recorded, t)


class AdamMonitor(_MonitorBase):
    """Observes one Adam trajectory (either formulation)."""

    def __init__(self, tc, hp, cfg=None):
        super().__init__(tc, hp, cfg)
        g = self._gates = {}
        r_over_d = tc.r / tc.D
        g["update"] = tc.G >= tc.sigma
        g["C3"] = (tc.sigma > 0 and tc.G >= tc.sigma
                   and hp.eta <= min(r_over_d, tc.sigma * hp.beta / (tc.D * tc.L)))
        g["C4"] = (tc.G >= tc.sigma + hp.lam
                   and hp.eta <= min(r_over_d, hp.lam / (6.0 * tc.L)))
        g["C8"] = (tc.G >= 2.0 * tc.sigma
                   and hp.eta <= min(r_over_d, hp.lam ** 1.5 * hp.beta
                                     / (6.0 * tc.L * math.sqrt(tc.G))))
        self._eps_prev: Vector | None = None
        self._eps_prev_norm = float("nan")
        self._grad_prev: Vector | None = None
        self._grad_prev_norm = float("nan")

    def observe(self, t: int, before: AdamState, after: AdamState,
                true_grad: Vector, g: Vector, f_before: float,
                f_after: float) -> None:
        """Record step t (x_t -> x_{t+1}) and run the gated live checks."""
        tc, hp, cfg, rec = self.tc, self.hp, self.cfg, self.rec
        i = t - 1
        grad_norm = math.sqrt(float(true_grad @ true_grad))
        eps = after.m_hat - true_grad
        eps_norm = math.sqrt(float(eps @ eps))
        rec.eps_norm[i] = eps_norm

        denom = np.sqrt(after.v_hat) + hp.lam
        h_vec = hp.eta / denom
        update_vec = after.x - before.x
        self._common_telemetry(t, f_before, grad_norm, update_vec, h_vec)

        alpha = hp.beta / (1.0 - after.pow_beta)
        gamma = None
        if t >= 2:
            gamma = (1.0 - alpha) * (self._eps_prev + self._grad_prev - true_grad)
            rec.gamma_norm[i] = math.sqrt(float(gamma @ gamma))

        # Jensen domination holds at every step whenever the two decay rates match
        if hp.beta == hp.beta_sq and cfg.on("L52.jensen"):
            worst = float(np.min(after.v_hat - after.m_hat ** 2))
            sup_step = float(np.max(np.abs(update_vec)))
            if worst < -cfg.jensen_slack or sup_step > hp.eta * (1.0 + 1e-9):
                rec.count(rec.violations, "L52.jensen")
                if cfg.fail_policy == "abort":
                    raise CheckFailure(f"L52.jensen failed at t={t}")

        before_tau = self._observe_stop(t, grad_norm, None)

        if before_tau:
            rec.sum_sq_grad_pre_tau += grad_norm * grad_norm

        # stopped-sum inner product accumulates for every t <= tau
        if (not self.stopped) or rec.tau == t:
            if gamma is not None:
                rec.martingale_sum += alpha * float(gamma @ (g - true_grad))

        if before_tau:
            self._checks_before_tau(t, after, true_grad, g, grad_norm, eps,
                                    eps_norm, gamma, alpha, f_before, f_after,
                                    update_vec, h_vec)
        # momentum error at the stop itself (tau <= T); virtual step covers tau = T+1
        if rec.tau == t:
            rec.eps_tau_sq = eps_norm * eps_norm

        self._eps_prev = eps
        self._eps_prev_norm = eps_norm
        self._grad_prev = true_grad
        self._grad_prev_norm = grad_norm

    def _checks_before_tau(self, t, after, true_grad, g, grad_norm, eps,
                           eps_norm, gamma, alpha, f_before, f_after,
                           update_vec, h_vec):
        tc, hp, cfg, rec = self.tc, self.hp, self.cfg, self.rec
        i = t - 1
        cap = tc.G + tc.sigma

        g_norm = math.sqrt(float(g @ g))
        m_norm = math.sqrt(float(after.m_hat @ after.m_hat))
        self._check("C1.bounded", g_norm, cap, t)
        self._check("C1.bounded", m_norm, cap, t)
        self._check("C1.bounded", float(np.max(after.v_hat)), cap * cap, t)
        self._check("C1.bounded", float(np.max(h_vec)), hp.eta / hp.lam, t)
        self._check("C1.bounded", hp.eta / (cap + hp.lam), float(np.min(h_vec)), t)

        if self._gates["update"]:
            self._check("L52.update", rec.update_norm[i], hp.eta * tc.D, t)
        else:
            self._skip("L52.update")

        if self._gates["C3"]:
            self._check("C3.eps", eps_norm, 2.0 * tc.sigma, t)
            if gamma is not None:
                self._check("C3.gamma", rec.gamma_norm[i], 2.0 * tc.sigma, t)
        else:
            self._skip("C3.eps")
            if gamma is not None:
                self._skip("C3.gamma")

        if self._gates["C4"]:
            rhs = (-(hp.eta / (4.0 * tc.G)) * grad_norm ** 2
                   + (hp.eta / hp.lam) * eps_norm ** 2)
            resid = (f_after - f_before) - rhs
            rec.descent_residual[i] = resid
            if cfg.on("C4.descent") and resid > _slack(cfg, f_after - f_before, rhs):
                rec.count(rec.violations, "C4.descent")
                if cfg.fail_policy == "abort":
                    raise CheckFailure(f"C4.descent failed at t={t}: residual {resid}")
        else:
            self._skip("C4.descent")

        if t >= 2:
            if self._gates["C8"]:
                noise = g - true_grad
                rhs = ((1.0 - 0.5 * alpha) * self._eps_prev_norm ** 2
                       + (hp.lam * hp.beta / (16.0 * tc.G)) * self._grad_prev_norm ** 2
                       + alpha ** 2 * tc.sigma ** 2
                       + 2.0 * alpha * float(gamma @ noise))
                self._check("C8.recursion", eps_norm ** 2, rhs, t)
            else:
                self._skip("C8.recursion")

    def observe_virtual(self, true_grad: Vector, g: Vector,
                        pow_beta_next: float) -> None:
        """Momentum-free bookkeeping step at t = T+1 when tau = T+1.

        Completes the stopped sums that formally run to tau: the martingale
        term and (for symmetry with the vr monitor) the momentum error at tau.
        """
        rec, hp = self.rec, self.hp
        if self._eps_prev is None:
            return
        alpha = hp.beta / (1.0 - pow_beta_next)
        gamma = (1.0 - alpha) * (self._eps_prev + self._grad_prev - true_grad)
        rec.martingale_sum += alpha * float(gamma @ (g - true_grad))
        eps_next = gamma + alpha * (g - true_grad)
        rec.eps_tau_sq = float(eps_next @ eps_next)


class VRAdamMonitor(_MonitorBase):
    """Observes one variance-reduced trajectory, including the mega-batch step."""

    def __init__(self, tc, hp, cfg=None):
        super().__init__(tc, hp, cfg)
        r_over_2d = tc.r / (2.0 * tc.D)
        # the dimension-dependent D needs the second-moment decay cap to hold
        d_valid = (tc.mode != "vr_thm1" or tc.sigma == 0.0
                   or math.sqrt(hp.beta_sq) <= hp.lam / (2.0 * tc.sigma) + 1e-12)
        self._gates = {
            "D3": d_valid,
            "D4": d_valid and tc.G >= 2.0 * tc.sigma and hp.eta <= r_over_2d,
            "D6": (d_valid and tc.G >= tc.sigma + hp.lam
                   and hp.eta <= min(r_over_2d, hp.lam / (6.0 * tc.L))),
        }
        self._eps_prev: Vector | None = None
        self._eps_prev_norm = float("nan")
        self._grad_prev: Vector | None = None
        self._grad_prev_norm = float("nan")

    def observe_init(self, state: VRAdamState, true_grad_x1: Vector,
                     f_x1: float) -> None:
        """Record t=1: the mega-batch momentum at the start point and the first move."""
        tc, hp, rec = self.tc, self.hp, self.rec
        grad_norm = math.sqrt(float(true_grad_x1 @ true_grad_x1))
        eps = state.m - true_grad_x1
        eps_norm = math.sqrt(float(eps @ eps))
        rec.eps_norm[0] = eps_norm
        denom = np.abs(state.m) + hp.lam
        h_vec = hp.eta / denom
        self._common_telemetry(1, f_x1, grad_norm, state.x - state.x_prev, h_vec)
        before_tau = self._observe_stop(1, grad_norm, eps_norm)
        if before_tau:
            rec.sum_sq_grad_pre_tau += grad_norm * grad_norm
            rec.d7_aggregate += (0.5 * hp.beta * eps_norm ** 2
                                 - (hp.lam * hp.beta / (16.0 * tc.G)) * grad_norm ** 2)
        if rec.tau == 1:
            rec.eps_tau_sq = eps_norm * eps_norm
        self._eps_prev = eps
        self._eps_prev_norm = eps_norm
        self._grad_prev = true_grad_x1
        self._grad_prev_norm = grad_norm

    def observe(self, t: int, before: VRAdamState, after: VRAdamState,
                true_grad: Vector, true_grad_prev: Vector, g_t: Vector,
                g_prev: Vector, f_before: float, f_after: float) -> None:
        """Record step t >= 2 with both component gradients of the shared ticket."""
        tc, hp, cfg, rec = self.tc, self.hp, self.cfg, self.rec
        i = t - 1
        grad_norm = math.sqrt(float(true_grad @ true_grad))
        eps = after.m - true_grad
        eps_norm = math.sqrt(float(eps @ eps))
        rec.eps_norm[i] = eps_norm

        w = (g_t - true_grad) - (1.0 - hp.beta) * (g_prev - true_grad_prev)
        w_norm = math.sqrt(float(w @ w))
        rec.w_norm[i] = w_norm

        denom = np.sqrt(after.v_hat) + hp.lam
        h_vec = hp.eta / denom
        update_vec = after.x - before.x
        self._common_telemetry(t, f_before, grad_norm, update_vec, h_vec)

        if cfg.on("EQ5.recursion"):
            resid = eps - ((1.0 - hp.beta) * self._eps_prev + w)
            if float(np.max(np.abs(resid))) > cfg.identity_tol:
                rec.count(rec.violations, "EQ5.recursion")
                if cfg.fail_policy == "abort":
                    raise CheckFailure(f"EQ5.recursion failed at t={t}")

        before_tau = self._observe_stop(t, grad_norm, eps_norm)

        if before_tau:
            rec.sum_sq_grad_pre_tau += grad_norm * grad_norm
            rec.d7_aggregate += (0.5 * hp.beta * eps_norm ** 2
                                 - (hp.lam * hp.beta / (16.0 * tc.G)) * grad_norm ** 2)

            cap = tc.G + tc.sigma
            g_norm = math.sqrt(float(g_t @ g_t))
            m_norm = math.sqrt(float(after.m @ after.m))
            self._check("C1.bounded", g_norm, cap, t)
            self._check("C1.bounded", m_norm, tc.G + tc.E, t)
            self._check("C1.bounded", float(np.max(after.v_hat)), cap * cap, t)
            self._check("C1.bounded", float(np.max(h_vec)), hp.eta / hp.lam, t)
            self._check("C1.bounded", hp.eta / (cap + hp.lam), float(np.min(h_vec)), t)

            if self._gates["D3"]:
                self._check("D3.update", rec.update_norm[i], hp.eta * tc.D, t)
            else:
                self._skip("D3.update")

            if self._gates["D4"]:
                rhs = (hp.beta * tc.sigma
                       + (5.0 * hp.eta * tc.L / hp.lam)
                       * (self._grad_prev_norm + self._eps_prev_norm))
                self._check("D4.wt", w_norm, rhs, t)
            else:
                self._skip("D4.wt")

            if self._gates["D6"]:
                rhs = (-(hp.eta / (4.0 * tc.G)) * grad_norm ** 2
                       + (hp.eta / hp.lam) * eps_norm ** 2)
                resid = (f_after - f_before) - rhs
                rec.descent_residual[i] = resid
                if cfg.on("D6.descent") and resid > _slack(cfg, f_after - f_before, rhs):
                    rec.count(rec.violations, "D6.descent")
                    if cfg.fail_policy == "abort":
                        raise CheckFailure(f"D6.descent failed at t={t}: residual {resid}")
            else:
                self._skip("D6.descent")

        if rec.tau == t:
            rec.eps_tau_sq = eps_norm * eps_norm

        self._eps_prev = eps
        self._eps_prev_norm = eps_norm
        self._grad_prev = true_grad
        self._grad_prev_norm = grad_norm

    def observe_virtual(self, true_grad: Vector, g_t: Vector, g_prev: Vector,
                        true_grad_prev: Vector) -> None:
        """Momentum-only update at t = T+1 so the error at tau = T+1 is defined."""
        hp, rec = self.hp, self.rec
        if self._eps_prev is None:
            return
        m_next = g_t + (1.0 - hp.beta) * ((self._eps_prev + self._grad_prev) - g_prev)
        eps_next = m_next - true_grad
        rec.eps_tau_sq = float(eps_next @ eps_next)


@dataclass(frozen=True)
class SummaryVerdict:
    tau: int
    tau1: int
    tau2: int
    tau_half: int | None
    sum_sq_grad: float
    avg_sq_grad: float      # nan unless tau = T+1
    I1: float
    I2: float
    upper_flag: bool
    lower_applicable: bool
    lower_ok: bool | None   # None when not applicable
    converged_flag: bool | None
    eps_tau_sq: float
    martingale_sum: float
    d7_aggregate: float


def finalize(rec: TrajectoryRecord, tc: TheoryConstants, hp: HyperParams,
             algorithm: str = "adam") -> SummaryVerdict:
    """Close out a trajectory: stopping times, aggregate sums, and the
    upper/lower verdicts. The lower bound is a hard almost-sure claim; its
    failure is reported via lower_ok=False and must abort the experiment."""
    rec.tau1 = rec.tau1 or hp.T + 1
    rec.tau2 = rec.tau2 or hp.T + 1
    rec.tau = rec.tau or min(rec.tau1, rec.tau2)
    tau = rec.tau

    # offline recomputation of tau_half over the stored prefix
    tau_half = None
    if tau <= hp.T:
        prefix = rec.grad_norm[:tau - 1]
        below = np.nonzero(prefix <= tc.G / 2.0)[0]
        tau_half = int(below[-1] + 1) if below.size else None
    rec.tau_half = tau_half

    S = rec.sum_sq_grad_pre_tau
    i1 = upper_bound_I1(tc, hp)
    i2 = lower_bound_I2(tc, hp)
    upper_flag = bool(S <= i1)

    # The lower bound needs: tau_half well defined (G >= 2||grad f(x1)||), the
    # eta cap, and a valid per-step update bound. The dimension branch of D
    # only needs matched decay rates; the 2G/lambda branch needs G >= sigma.
    gn1 = rec.grad_norm[0] if rec.steps_recorded else float("inf")
    d_valid = tc.G >= tc.sigma or (hp.beta == hp.beta_sq
                                   and tc.D <= 2.0 * tc.G / hp.lam)
    preconds = (tc.G >= 2.0 * gn1 and d_valid
                and hp.eta <= min(tc.r / tc.D, tc.G / (4.0 * tc.D * tc.L)))
    if algorithm == "vradam":
        hit = rec.tau1 == tau and tau <= hp.T
    else:
        hit = tau <= hp.T
    # an abort after the stop does not invalidate the already-complete prefix sum
    lower_applicable = bool(preconds and hit
                            and (rec.aborted_at is None or tau <= rec.aborted_at))
    lower_ok = None
    if lower_applicable:
        lower_ok = bool(S > i2 * (1.0 - 1e-9))

    avg = float("nan")
    converged = None
    if tau == hp.T + 1 and rec.aborted_at is None:
        avg = S / hp.T
        if not math.isnan(tc.eps_target):
            converged = bool(avg <= tc.eps_target ** 2)

    return SummaryVerdict(tau=tau, tau1=rec.tau1, tau2=rec.tau2,
                          tau_half=tau_half, sum_sq_grad=S, avg_sq_grad=avg,
                          I1=i1, I2=i2, upper_flag=upper_flag,
                          lower_applicable=lower_applicable, lower_ok=lower_ok,
                          converged_flag=converged, eps_tau_sq=rec.eps_tau_sq,
                          martingale_sum=rec.martingale_sum,
                          d7_aggregate=rec.d7_aggregate)
