"""Derived constants, theorem-prescribed hyper-parameter schedules, and the
standalone analytical verifiers (comparison-ODE bound, local smoothness,
momentum-weight sums, and the upper/lower trajectory-sum quantities).

Conventions used throughout:

* G      gradient cap defining the stopping time
* r      locality radius: within r of a point with gradient norm <= G, the
         gradient is L-Lipschitz
* L      effective smoothness 3*L0 + 4*L_rho*G^rho
* D      worst-case per-step displacement divided by eta
* E      momentum-error cap lambda*D/4 (variance-reduced runs only)
* iota   log(1/delta)

The schedules reproduce the published parameter choices exactly; calibration
constants (small c's, large C's) are searched over powers of two because the
analysis only pins their order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .core import ConfigError, RngStream, Vector
from .objectives import ObjectiveSpec
from .optimizers import HyperParams

R_MAX_DEFAULT = 1e6

MODES = ("adam_matched", "adam_general", "vr_thm1", "vr_thm2")
ADAM_VARIANTS = ("rho_lt_2", "rho_lt_1")
VR_VARIANTS = ("rho_lt_2", "rho_lt_1")


@dataclass(frozen=True)
class TheoryConstants:
    G: float
    r: float
    L: float
    D: float
    E: float            # lambda*D/4 in vr modes, else nan
    delta1: float       # f(x1) - inf f
    iota: float         # log(1/delta)
    delta: float
    eps_target: float
    sigma: float
    mode: str

    def describe(self) -> dict:
        return {
            "G": self.G, "r": self.r, "L": self.L, "D": self.D, "E": self.E,
            "Delta1": self.delta1, "iota": self.iota, "delta": self.delta,
            "eps": self.eps_target, "sigma": self.sigma, "mode": self.mode,
        }


@dataclass(frozen=True)
class CalibrationConstants:
    c1: float = 1.0
    c2: float = 1.0
    C1: float = 8.0
    C2: float = 8.0
    c: float = 1.0
    C: float = 8.0
    theta: float = float("nan")  # filled by the vr schedule, 40*L*sqrt(G)/lambda^1.5

    def __post_init__(self):
        for name in ("c1", "c2", "C1", "C2", "c", "C"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"calibration constant {name} must be positive")


def locality_radius(l0: float, lrho: float, rho: float, G: float,
                    r_max: float = R_MAX_DEFAULT) -> float:
    """Largest displacement for which the local-smoothness bound with constant L
    is guaranteed: min of 1/(5 L_rho G^(rho-1)) and 1/(5 (L0^(rho-1) L_rho)^(1/rho)).

    Edge cases where a branch is vacuous: with L_rho=0 the function is globally
    L0-smooth and the radius is capped at r_max; with rho=0 only the first
    branch G/(5 L_rho) applies; with L0=0 the second branch's case (which picks
    locality around (L0/L_rho)^(1/rho)) never activates, so only the first
    branch applies.
    """
    if min(l0, lrho) < 0 or not (0 <= rho < 2):
        raise ConfigError("need L0, L_rho >= 0 and 0 <= rho < 2")
    if G <= 0:
        raise ConfigError("G must be positive")
    if lrho == 0.0:
        return r_max
    b1 = G ** (1.0 - rho) / (5.0 * lrho)
    if rho == 0.0 or l0 == 0.0:
        return min(b1, r_max)
    b2 = 1.0 / (5.0 * (l0 ** (rho - 1.0) * lrho) ** (1.0 / rho))
    return min(b1, b2, r_max)


def effective_smoothness(l0: float, lrho: float, rho: float, G: float) -> float:
    """L = 3*L0 + 4*L_rho*G^rho, the gradient Lipschitz constant inside the cap."""
    return 3.0 * l0 + 4.0 * lrho * G ** rho


def update_bound_factor(mode: str, G: float, lam: float, d: int,
                        beta_sq: float | None = None) -> float:
    """Per-step displacement bound divided by eta."""
    if mode == "adam_matched":
        return min(math.sqrt(d), 2.0 * G / lam)
    if mode == "adam_general":
        return 2.0 * G / lam
    if mode == "vr_thm1":
        if not beta_sq or beta_sq <= 0.0:
            raise ConfigError("vr_thm1 needs beta_sq > 0")
        return 2.0 * math.sqrt(d / beta_sq)
    if mode == "vr_thm2":
        return 2.0 * G / lam
    raise ConfigError(f"unknown mode {mode!r}; known: {MODES}")


def constants(l0: float, lrho: float, rho: float, G: float, lam: float, d: int,
              mode: str, beta_sq: float | None = None,
              r_max: float = R_MAX_DEFAULT,
              delta1: float = float("nan"), delta: float = float("nan"),
              eps_target: float = float("nan"), sigma: float = float("nan"),
              ) -> TheoryConstants:
    """All geometry constants derived from (L0, L_rho, rho) and the cap G."""
    if lam <= 0:
        raise ConfigError("lambda must be positive")
    if d < 1:
        raise ConfigError("d must be >= 1")
    r = locality_radius(l0, lrho, rho, G, r_max)
    L = effective_smoothness(l0, lrho, rho, G)
    D = update_bound_factor(mode, G, lam, d, beta_sq)
    E = lam * D / 4.0 if mode.startswith("vr") else float("nan")
    iota = math.log(1.0 / delta) if 0 < delta < 1 else float("nan")
    return TheoryConstants(G=G, r=r, L=L, D=D, E=E, delta1=delta1, iota=iota,
                           delta=delta, eps_target=eps_target, sigma=sigma,
                           mode=mode)


def _beta_cap(c1: float, lam: float, eps: float, sigma: float, G: float,
              iota: float) -> float:
    if sigma == 0.0:
        return 1.0
    return min(1.0, c1 * lam * eps ** 2 / (sigma ** 2 * G * math.sqrt(iota)))


@dataclass(frozen=True)
class Schedule:
    hp: HyperParams
    tc: TheoryConstants
    calib: CalibrationConstants
    variant: str
    algorithm: str  # "adam" | "vradam"
    grad_norm_x1: float

    def as_dict(self) -> dict:
        out = {
            "algorithm": self.algorithm, "variant": self.variant,
            "G": self.tc.G, "r": self.tc.r, "L": self.tc.L, "D": self.tc.D,
            "beta": self.hp.beta, "beta_sq": self.hp.beta_sq,
            "eta": self.hp.eta, "lambda": self.hp.lam, "T": self.hp.T,
            "Delta1": self.tc.delta1, "delta": self.tc.delta,
            "eps": self.tc.eps_target, "sigma": self.tc.sigma,
            "iota": self.tc.iota, "grad_norm_x1": self.grad_norm_x1,
            "calibration": {"c1": self.calib.c1, "c2": self.calib.c2,
                            "C1": self.calib.C1, "C2": self.calib.C2,
                            "c": self.calib.c, "C": self.calib.C},
        }
        if self.algorithm == "vradam":
            out["S1"] = self.hp.s1
            out["E"] = self.tc.E
            out["theta"] = self.calib.theta
        return out


def schedule_adam(spec: ObjectiveSpec, sigma: float, lam: float, delta: float,
                  eps: float, d: int | None = None,
                  variant: str = "rho_lt_2",
                  calib: CalibrationConstants = CalibrationConstants(),
                  x1: Vector | None = None,
                  r_max: float = R_MAX_DEFAULT) -> Schedule:
    """Closed-form theorem schedule for Adam.

    G is the exact max of the theorem's lower-bound list; beta and eta sit at
    their upper bounds, and T = max(ceil(1/beta^2), ceil(C2*Delta1*G/(eta*eps^2))).
    """
    if variant not in ADAM_VARIANTS:
        raise ConfigError(f"unknown Adam schedule variant {variant!r}")
    if not (0.0 < delta < 1.0):
        raise ConfigError("delta must lie in (0, 1)")
    if eps <= 0 or lam <= 0 or sigma < 0:
        raise ConfigError("need eps > 0, lambda > 0, sigma >= 0")
    rho = spec.rho
    if variant == "rho_lt_1" and rho >= 1.0:
        raise ConfigError("the rho_lt_1 schedule requires rho < 1")
    d = spec.dim if d is None else d
    x1 = spec.x1_default if x1 is None else np.asarray(x1, dtype=np.float64)
    delta1 = spec.initial_gap(x1)
    g1 = spec.gradient(x1)
    gn1 = math.sqrt(float(g1 @ g1))
    iota = math.log(1.0 / delta)
    l0, lrho = spec.l0, spec.lrho

    cands = [2.0 * lam, 2.0 * sigma, 2.0 * gn1]
    if variant == "rho_lt_2":
        cands.append(math.sqrt(calib.C1 * delta1 * l0 * math.sqrt(d)))
        if lrho > 0:
            cands.append((calib.C1 * delta1 * lrho * math.sqrt(d)) ** (1.0 / (2.0 - rho)))
    else:
        cands.append(calib.C1 * delta1 * l0 / lam)
        if lrho > 0:
            cands.append((calib.C1 * delta1 * lrho / lam) ** (1.0 / (1.0 - rho)))
    G = max(cands)

    beta = _beta_cap(calib.c1, lam, eps, sigma, G, iota)
    beta_sq = beta  # rho_lt_2 requires it; rho_lt_1 leaves it free and we default to beta
    r = locality_radius(l0, lrho, rho, G, r_max)
    L = effective_smoothness(l0, lrho, rho, G)
    if L <= 0:
        raise ConfigError("degenerate objective: L = 0")
    if variant == "rho_lt_2":
        eta = calib.c2 * min(r / math.sqrt(d),
                             lam * beta / (math.sqrt(d * iota) * L),
                             lam ** 1.5 * beta / (L * math.sqrt(G)))
    else:
        eta = calib.c2 * min(r * lam / G,
                             lam ** 2 * beta / (G * L * math.sqrt(iota)))
    if eta <= 0:
        raise ConfigError("schedule produced eta <= 0")
    T = max(math.ceil(1.0 / beta ** 2),
            math.ceil(calib.C2 * delta1 * G / (eta * eps ** 2)), 1)

    mode = "adam_matched" if beta == beta_sq else "adam_general"
    tc = constants(l0, lrho, rho, G, lam, d, mode, beta_sq=beta_sq, r_max=r_max,
                   delta1=delta1, delta=delta, eps_target=eps, sigma=sigma)
    hp = HyperParams(beta=beta, beta_sq=beta_sq, eta=eta, lam=lam, T=T)
    sched = Schedule(hp=hp, tc=tc, calib=calib, variant=variant,
                     algorithm="adam", grad_norm_x1=gn1)
    _assert_adam_side_conditions(sched)
    return sched


def _assert_adam_side_conditions(s: Schedule) -> None:
    """The explicit inequalities stated alongside the schedule must hold."""
    tc, hp = s.tc, s.hp
    checks = [
        ("G >= 2*lambda", tc.G >= 2.0 * hp.lam - 1e-12),
        ("G >= 2*sigma", tc.G >= 2.0 * tc.sigma - 1e-12),
        ("G >= 2*grad_norm_x1", tc.G >= 2.0 * s.grad_norm_x1 - 1e-12),
        ("beta <= 1", hp.beta <= 1.0),
        ("T >= 1/beta^2", hp.T >= 1.0 / hp.beta ** 2 - 1.0),
    ]
    for name, ok in checks:
        if not ok:
            raise ConfigError(f"schedule violates its own side condition: {name}")


def schedule_vradam(spec: ObjectiveSpec, sigma: float, lam: float, delta: float,
                    eps: float, d: int | None = None,
                    variant: str = "rho_lt_1",
                    calib: CalibrationConstants = CalibrationConstants(),
                    beta_sq: float | None = None,
                    x1: Vector | None = None,
                    r_max: float = R_MAX_DEFAULT) -> Schedule:
    """Closed-form schedule for the variance-reduced variant.

    beta is tied to eta through theta = 40*L*sqrt(G)/lambda^1.5 as beta =
    theta^2 * eta^2; T = ceil(G*Delta1/(eta*delta*eps^2)) and the mega-batch is
    S1 = ceil(1/(2*beta^2*T)).
    """
    if variant not in VR_VARIANTS:
        raise ConfigError(f"unknown vr schedule variant {variant!r}")
    if not (0.0 < delta < 1.0):
        raise ConfigError("delta must lie in (0, 1)")
    if eps <= 0 or lam <= 0 or sigma < 0:
        raise ConfigError("need eps > 0, lambda > 0, sigma >= 0")
    rho = spec.rho
    if variant == "rho_lt_1" and rho >= 1.0:
        raise ConfigError("the rho_lt_1 schedule requires rho < 1")
    d = spec.dim if d is None else d
    x1 = spec.x1_default if x1 is None else np.asarray(x1, dtype=np.float64)
    delta1 = spec.initial_gap(x1)
    g1 = spec.gradient(x1)
    gn1 = math.sqrt(float(g1 @ g1))
    iota = math.log(1.0 / delta)
    l0, lrho = spec.l0, spec.lrho

    if variant == "rho_lt_2":
        # the dimension-dependent analysis caps the second-moment decay
        bsq_cap = 1.0 if sigma == 0.0 else min(1.0, (lam / (2.0 * sigma)) ** 2)
        beta_sq = bsq_cap if beta_sq is None else beta_sq
        if beta_sq <= 0.0:
            raise ConfigError("vr rho_lt_2 needs beta_sq > 0")
        if sigma > 0 and math.sqrt(beta_sq) > lam / (2.0 * sigma) + 1e-12:
            raise ConfigError("vr rho_lt_2 requires sqrt(beta_sq) <= lambda/(2*sigma)")
        cands = [2.0 * lam, 2.0 * sigma, 2.0 * gn1,
                 math.sqrt(calib.C * delta1 * l0 * math.sqrt(d) / (math.sqrt(beta_sq) * delta))]
        if lrho > 0:
            cands.append((calib.C * delta1 * lrho * math.sqrt(d)
                          / (math.sqrt(beta_sq) * delta)) ** (1.0 / (2.0 - rho)))
        mode = "vr_thm1"
    else:
        beta_sq = 1.0 if beta_sq is None else beta_sq
        if not (0.0 <= beta_sq <= 1.0):
            raise ConfigError("beta_sq must lie in [0, 1]")
        cands = [2.0 * lam, 2.0 * sigma, 2.0 * gn1,
                 calib.C * delta1 * l0 / (delta * lam)]
        if lrho > 0:
            cands.append((calib.C * delta1 * lrho / (delta * lam)) ** (1.0 / (1.0 - rho)))
        mode = "vr_thm2"
    G = max(cands)

    r = locality_radius(l0, lrho, rho, G, r_max)
    L = effective_smoothness(l0, lrho, rho, G)
    if L <= 0:
        raise ConfigError("degenerate objective: L = 0")
    theta = 40.0 * L * math.sqrt(G) / lam ** 1.5

    if variant == "rho_lt_2":
        branches = [r * math.sqrt(beta_sq / d),
                    (G / L) * math.sqrt(beta_sq / d),
                    lam / L,
                    lam ** 4 * d * delta / (beta_sq * delta1 * L ** 2) if delta1 > 0 else math.inf,
                    lam ** 2 * math.sqrt(delta) * eps / (sigma * G * L) if sigma > 0 else math.inf]
    else:
        branches = [r * lam / G,
                    lam / L,
                    lam ** 2 * G * delta / (delta1 * L ** 2) if delta1 > 0 else math.inf,
                    lam ** 2 * math.sqrt(delta) * eps / (sigma * G * L) if sigma > 0 else math.inf]
    eta = calib.c * min(branches)
    if not (eta > 0 and math.isfinite(eta)):
        raise ConfigError("vr schedule produced a non-finite eta")
    beta = theta ** 2 * eta ** 2
    if beta > 1.0:
        raise ConfigError(
            f"beta = theta^2*eta^2 = {beta:.3g} > 1; lower the calibration constant c")
    T = max(1, math.ceil(G * delta1 / (eta * delta * eps ** 2)))
    s1 = max(1, math.ceil(1.0 / (2.0 * beta ** 2 * T)))

    tc = constants(l0, lrho, rho, G, lam, d, mode, beta_sq=beta_sq, r_max=r_max,
                   delta1=delta1, delta=delta, eps_target=eps, sigma=sigma)
    hp = HyperParams(beta=beta, beta_sq=beta_sq, eta=eta, lam=lam, T=T, s1=s1)
    return Schedule(hp=hp, tc=tc, calib=replace(calib, theta=theta),
                    variant=variant, algorithm="vradam", grad_norm_x1=gn1)


# ---------------------------------------------------------------------------
# upper/lower trajectory-sum quantities and parameter inequalities
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ContradictionReport:
    I1: float
    I2: float
    I1_over_T: float
    ok_upper: bool   # I1 <= I2
    ok_rate: bool    # I1/T <= eps^2

    @property
    def ok(self) -> bool:
        return self.ok_upper and self.ok_rate


def upper_bound_I1(tc: TheoryConstants, hp: HyperParams, delta: float | None = None) -> float:
    """High-probability upper bound on the pre-stop sum of squared gradient norms."""
    delta = tc.delta if delta is None else delta
    iota = math.log(1.0 / delta)
    sigma, G, eta, lam, beta, T = tc.sigma, tc.G, hp.eta, hp.lam, hp.beta, hp.T
    noise = 8.0 * sigma ** 2 * (eta / beta + eta * beta * T)
    mart = 20.0 * sigma ** 2 * eta * math.sqrt((1.0 / beta ** 2 + T) * iota)
    return (8.0 * G / (eta * lam)) * (tc.delta1 * lam + noise + mart)


def lower_bound_I2(tc: TheoryConstants, hp: HyperParams) -> float:
    """Almost-sure lower bound on that sum whenever the cap is hit by time T."""
    return tc.G ** 3 / (16.0 * hp.eta * tc.D * tc.L)


def contradiction_quantities(tc: TheoryConstants, hp: HyperParams,
                             delta: float | None = None) -> ContradictionReport:
    delta = tc.delta if delta is None else delta
    i1 = upper_bound_I1(tc, hp, delta)
    i2 = lower_bound_I2(tc, hp)
    rate = i1 / hp.T
    return ContradictionReport(I1=i1, I2=i2, I1_over_T=rate,
                               ok_upper=i1 <= i2, ok_rate=rate <= tc.eps_target ** 2)


def lemma_preconditions_adam(tc: TheoryConstants, hp: HyperParams) -> dict[str, bool]:
    """Eta/G side conditions under which each trajectory inequality is asserted."""
    r_over_d = tc.r / tc.D
    out = {
        "descent": tc.G >= tc.sigma + hp.lam and hp.eta <= min(r_over_d, hp.lam / (6.0 * tc.L)),
        "moment_bound": tc.G >= tc.sigma and (tc.sigma > 0 and hp.eta <= min(
            r_over_d, tc.sigma * hp.beta / (tc.D * tc.L))),
        "recursion": tc.G >= 2.0 * tc.sigma and hp.eta <= min(
            r_over_d, hp.lam ** 1.5 * hp.beta / (6.0 * tc.L * math.sqrt(tc.G))),
        "lower": hp.eta <= min(r_over_d, tc.G / (4.0 * tc.D * tc.L)),
    }
    out["upper"] = (tc.G >= 2.0 * max(hp.lam, tc.sigma)
                    and out["recursion"]
                    and (tc.sigma == 0.0 or out["moment_bound"]))
    return out


@dataclass(frozen=True)
class VrParameterReport:
    rows: tuple  # (name, lhs, rhs, ok) entries

    @property
    def ok(self) -> bool:
        return all(r[3] for r in self.rows)


def vr_parameter_inequalities(tc: TheoryConstants, hp: HyperParams) -> VrParameterReport:
    """The four printed inequalities the vr schedule must satisfy.

    The noise-budget row is skipped (vacuously true) when sigma = 0.
    """
    slack = 1e-12
    rows = []
    lhs = 256.0 * tc.delta1 * tc.D * tc.L / tc.G ** 2
    rows.append(("256*Delta1*D*L/G^2 <= delta/4", lhs, tc.delta / 4.0,
                 lhs <= tc.delta / 4.0 + slack))
    lhs = hp.lam * tc.delta1 * hp.beta / (hp.eta * tc.E ** 2)
    rows.append(("lambda*Delta1*beta/(eta*E^2) <= delta/4", lhs, tc.delta / 4.0,
                 lhs <= tc.delta / 4.0 + slack))
    if tc.sigma > 0:
        lhs = hp.eta * hp.beta * hp.T
        rhs = hp.lam * tc.delta1 / (8.0 * tc.sigma ** 2)
        rows.append(("eta*beta*T <= lambda*Delta1/(8*sigma^2)", lhs, rhs, lhs <= rhs + slack))
    lhs = hp.eta
    rhs = (hp.lam ** 1.5 / (40.0 * tc.L)) * math.sqrt(hp.beta / tc.G)
    rows.append(("eta <= lambda^1.5/(40L)*sqrt(beta/G)", lhs, rhs,
                 lhs <= rhs * (1.0 + 1e-9) + slack))
    return VrParameterReport(rows=tuple(rows))


# ---------------------------------------------------------------------------
# calibration search
# ---------------------------------------------------------------------------

def _pow2_grid(n_small: int, n_large: int):
    small = [2.0 ** (-k) for k in range(n_small + 1)]
    large = [2.0 ** k for k in range(n_large + 1)]
    return small, large


def calibrate_adam(spec: ObjectiveSpec, sigma: float, lam: float, delta: float,
                   eps: float, d: int | None = None, variant: str = "rho_lt_2",
                   x1: Vector | None = None,
                   max_T: float = math.inf,
                   n_small: int = 14, n_large: int = 14) -> Schedule:
    """Grid search over powers of two for (c1, c2, C1, C2).

    Preference order: smallest C1, then smallest C2, then largest c1, then
    largest c2 such that (a) the upper/rate flags pass, (b) the trajectory
    lemma preconditions all hold, and (c) T stays below max_T. Raises if the
    grid contains no passing point.
    """
    smalls, larges = _pow2_grid(n_small, n_large)
    for C1 in larges:
        for C2 in larges:
            for c1 in smalls:
                for c2 in smalls:
                    calib = CalibrationConstants(c1=c1, c2=c2, C1=C1, C2=C2)
                    try:
                        s = schedule_adam(spec, sigma, lam, delta, eps, d,
                                          variant, calib, x1)
                    except ConfigError:
                        continue
                    if s.hp.T > max_T:
                        continue
                    if not contradiction_quantities(s.tc, s.hp).ok:
                        continue
                    pre = lemma_preconditions_adam(s.tc, s.hp)
                    need = ["descent", "recursion", "lower", "upper"]
                    if sigma > 0:
                        need.append("moment_bound")
                    if not all(pre[k] for k in need):
                        continue
                    return s
    raise ConfigError("calibration search found no passing constants; "
                      "widen the grid or adjust sigma/lambda/x1")


def calibrate_vradam(spec: ObjectiveSpec, sigma: float, lam: float, delta: float,
                     eps: float, d: int | None = None, variant: str = "rho_lt_1",
                     beta_sq: float | None = None, x1: Vector | None = None,
                     max_T: float = math.inf, max_s1: float = 1e7,
                     n_small: int = 20, n_large: int = 14) -> Schedule:
    """Grid search for (c, C): smallest C, then largest c, such that beta <= 1,
    the printed parameter inequalities hold, and T, S1 stay at desk scale."""
    smalls, larges = _pow2_grid(n_small, n_large)
    for C in larges:
        for c in smalls:
            calib = CalibrationConstants(c=c, C=C)
            try:
                s = schedule_vradam(spec, sigma, lam, delta, eps, d, variant,
                                    calib, beta_sq, x1)
            except ConfigError:
                continue
            if s.hp.T > max_T or s.hp.s1 > max_s1:
                continue
            if not vr_parameter_inequalities(s.tc, s.hp).ok:
                continue
            return s
    raise ConfigError("vr calibration search found no passing constants")


# ---------------------------------------------------------------------------
# momentum-weight sums
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AlphaSumReport:
    total: float
    bound: float
    ok: bool


def alpha_sum_bound(beta: float, T: int) -> AlphaSumReport:
    """Sum of squared momentum weights over t=2..T against 3*(1 + beta^2*T)."""
    if not (0.0 < beta <= 1.0):
        raise ConfigError("beta must be in (0, 1]")
    if T < 2:
        raise ConfigError("T must be >= 2")
    t = np.arange(2, T + 1, dtype=np.float64)
    if beta == 1.0:
        total = float(T - 1)
    else:
        denom = -np.expm1(t * math.log1p(-beta))  # 1 - (1-beta)^t, stable for small beta
        total = float(np.sum((beta / denom) ** 2))
    bound = 3.0 * (1.0 + beta ** 2 * T)
    return AlphaSumReport(total=total, bound=bound, ok=total <= bound)


# ---------------------------------------------------------------------------
# comparison-ODE (integral form) verifier
# ---------------------------------------------------------------------------

def adaptive_simpson(f: Callable[[float], float], a: float, b: float,
                     tol: float = 1e-9, max_depth: int = 50) -> float:
    """Adaptive Simpson quadrature with Richardson acceptance."""
    if a == b:
        return 0.0

    def simpson(x0, x2, f0, f1, f2):
        return (x2 - x0) / 6.0 * (f0 + 4.0 * f1 + f2)

    def recurse(x0, x2, f0, f1, f2, whole, tol, depth):
        xm = 0.5 * (x0 + x2)
        xl = 0.5 * (x0 + xm)
        xr = 0.5 * (xm + x2)
        fl = f(xl)
        fr = f(xr)
        left = simpson(x0, xm, f0, fl, f1)
        right = simpson(xm, x2, f1, fr, f2)
        err = left + right - whole
        if depth >= max_depth or abs(err) <= 15.0 * tol:
            return left + right + err / 15.0
        return (recurse(x0, xm, f0, fl, f1, left, tol / 2.0, depth + 1)
                + recurse(xm, x2, f1, fr, f2, right, tol / 2.0, depth + 1))

    fa, fm, fb = f(a), f(0.5 * (a + b)), f(b)
    for v in (fa, fm, fb):
        if not math.isfinite(v):
            raise ConfigError("quadrature hit a non-finite integrand value")
    return recurse(a, b, fa, fm, fb, simpson(a, b, fa, fm, fb), tol, 0)


@dataclass(frozen=True)
class GronwallReport:
    min_slack: float
    max_premise_violation: float
    checked: int
    tol: float

    @property
    def ok(self) -> bool:
        return self.min_slack >= -self.tol


def verify_gronwall(ell: Callable[[float], float],
                    u: Callable[[float], float] | Sequence[float],
                    a: float, b: float,
                    uprime: Callable[[float], float] | Sequence[float] | None = None,
                    n_grid: int = 129, tol: float = 1e-6,
                    quad_tol: float = 1e-9) -> GronwallReport:
    """Check the integral comparison bound phi(u(t)) <= phi(u(a)) - a + t.

    phi is the antiderivative of 1/ell computed by adaptive quadrature. ``u``
    (and optionally its derivative, used to audit the premise u' <= ell(u))
    may be callables or dense samples on a uniform grid over [a, b]. The
    report's slack is min over the grid of (phi(u(a)) - a + t - phi(u(t))).
    """
    if b <= a:
        raise ConfigError("need b > a")
    ts = np.linspace(a, b, n_grid)
    if callable(u):
        us = np.array([float(u(t)) for t in ts])
    else:
        us = np.asarray(u, dtype=np.float64)
        if us.size != n_grid:
            ts = np.linspace(a, b, us.size)
    if np.any(us < 0) or not np.all(np.isfinite(us)):
        raise ConfigError("u must be finite and nonnegative")

    premise = 0.0
    if uprime is not None:
        ups = (np.array([float(uprime(t)) for t in ts]) if callable(uprime)
               else np.asarray(uprime, dtype=np.float64))
        premise = float(np.max(ups - np.array([ell(v) for v in us])))

    # accumulate phi along the sorted unique values of u to reuse quadrature work;
    # phi is pinned to u's minimum, and the inequality is invariant to that offset
    order = np.argsort(us)
    phis = np.empty(us.size)
    acc = 0.0
    prev = float(us[order[0]])
    for rank, idx in enumerate(order):
        w = float(us[idx])
        if rank > 0:
            acc += adaptive_simpson(lambda v: 1.0 / ell(v), prev, w, quad_tol)
            prev = w
        phis[idx] = acc
    slack = phis[0] - ts[0] + ts - phis
    return GronwallReport(min_slack=float(np.min(slack)),
                          max_premise_violation=premise,
                          checked=int(us.size), tol=tol)


# ---------------------------------------------------------------------------
# local smoothness verifier
# ---------------------------------------------------------------------------

@dataclass
class LocalSmoothReport:
    pairs_checked: int
    rejected: int
    skipped_small_radius: int
    violations: list  # (which, x, y, lhs, rhs)

    @property
    def ok(self) -> bool:
        return not self.violations


def verify_local_smoothness(spec: ObjectiveSpec, G: float, n_pairs: int,
                            rng: RngStream,
                            sample_box: tuple[float, float] | None = None,
                            r_max: float = R_MAX_DEFAULT,
                            max_rejects: int | None = None) -> LocalSmoothReport:
    """Sample (x, a, direction) triples and check the four local bounds.

    With u = ||grad f(x)|| <= G, displacement s <= a/(L0 + L_rho (u+a)^rho):
      (i)  ||grad f(y) - grad f(x)|| <= (L0 + L_rho (u+a)^rho) * s
      (ii) ||grad f(y)|| <= u + a
    and additionally for s <= r (with L from the cap G):
      (iii) ||grad f(y) - grad f(x)|| <= L * s
      (iv)  f(y) <= f(x) + <grad f(x), y-x> + (L/2) s^2
    Samples with ||grad f(x)|| > G or y outside the domain are re-drawn and
    counted as rejected.
    """
    box = sample_box if sample_box is not None else spec.sample_box
    r = locality_radius(spec.l0, spec.lrho, spec.rho, G, r_max)
    L = effective_smoothness(spec.l0, spec.lrho, spec.rho, G)
    rejected = 0
    skipped = 0
    violations = []
    max_rejects = max_rejects if max_rejects is not None else 200 * n_pairs

    checked = 0
    while checked < n_pairs:
        x = rng.uniform(box[0], box[1], spec.dim)
        gx = spec.gradient(x)
        u = math.sqrt(float(gx @ gx))
        if u > G:
            rejected += 1
            if rejected > max_rejects:
                raise ConfigError(
                    f"rejection sampling stalled: gradient cap {G} too small for box {box}")
            continue
        a = float(np.exp(rng.uniform(math.log(1e-3), math.log(10.0))))
        radius = a / (spec.l0 + spec.lrho * (u + a) ** spec.rho)
        direction = rng.standard_normal(spec.dim)
        dn = math.sqrt(float(direction @ direction))
        if dn == 0.0:
            rejected += 1
            continue
        s = radius * float(rng.uniform()) ** (1.0 / spec.dim)
        y = x + direction * (s / dn)
        if not spec.in_domain(y):
            rejected += 1
            if rejected > max_rejects:
                raise ConfigError("rejection sampling stalled: displacements leave the domain")
            continue
        checked += 1
        gy = spec.gradient(y)
        diff = math.sqrt(float((gy - gx) @ (gy - gx)))
        uy = math.sqrt(float(gy @ gy))
        fx = spec.value(x)
        tol = 1e-9 * (1.0 + abs(fx))
        lhs_rhs = [
            ("grad_diff_local", diff, (spec.l0 + spec.lrho * (u + a) ** spec.rho) * s),
            ("grad_growth", uy, u + a),
        ]
        if s <= r:
            lhs_rhs.append(("grad_diff_capped", diff, L * s))
            lhs_rhs.append(("quadratic_upper", spec.value(y),
                            fx + float(gx @ (y - x)) + 0.5 * L * s * s))
        else:
            skipped += 1
        for which, lhs, rhs in lhs_rhs:
            if lhs > rhs + tol:
                violations.append((which, x, y, lhs, rhs))
    return LocalSmoothReport(pairs_checked=checked, rejected=rejected,
                             skipped_small_radius=skipped, violations=violations)
