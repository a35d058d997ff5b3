"""Experiment configuration, seeded multi-run execution, and persistence.

A config is strict JSON (unknown keys are errors). Theorem-type schedules are
resolved once in the parent process; workers always receive fully explicit
numbers so results cannot depend on scheduling. One RngStream keyed by
(master_seed, run_id) drives each trajectory.

Output layout: config.json (echo), run000.csv ... (telemetry), aggregate.json.
CSV columns, in order: t, f, grad_norm, eps_norm, gamma_norm, w_norm,
update_norm, step_min, step_max, descent_residual, tau_flag; floats carry 17
significant digits so files round-trip exactly.
"""

from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .core import ConfigError, RngStream, Vector
from .monitor import (ALL_CHECKS, AdamMonitor, LemmaCheckConfig, SummaryVerdict,
                      TrajectoryRecord, VRAdamMonitor, finalize)
from .objectives import ObjectiveSpec, builtin
from .optimizers import (AdamState, HyperParams, VRAdamState, adam_init,
                         adam_step_raw, adam_step_rescaled, vradam_init,
                         vradam_step)
from .oracle import NoiseModel, draw, noise_vector
from .theory import (CalibrationConstants, Schedule, TheoryConstants,
                     calibrate_adam, calibrate_vradam, constants,
                     schedule_adam, schedule_vradam)

ALGORITHMS = ("adam_raw", "adam_rescaled", "vradam")
CSV_COLUMNS = ("t", "f", "grad_norm", "eps_norm", "gamma_norm", "w_norm",
               "update_norm", "step_min", "step_max", "descent_residual",
               "tau_flag")
MAX_CSV_ROWS = 1_000_000
SEED_ENV_VAR = "GSMOOTH_SEED"

_THEOREM_VARIANTS = {
    "adam_rho_lt_2": ("adam", "rho_lt_2"),
    "adam_rho_lt_1": ("adam", "rho_lt_1"),
    "vradam_rho_lt_2": ("vradam", "rho_lt_2"),
    "vradam_rho_lt_1": ("vradam", "rho_lt_1"),
}


def _require_keys(d: dict, where: str, required: tuple, optional: tuple):
    unknown = set(d) - set(required) - set(optional)
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")
    missing = set(required) - set(d)
    if missing:
        raise ConfigError(f"missing keys in {where}: {sorted(missing)}")


@dataclass
class ExperimentConfig:
    spec: ObjectiveSpec
    model: NoiseModel
    algorithm: str
    hp: HyperParams
    tc: TheoryConstants
    x1: Vector
    runs: int
    master_seed: int
    checks: LemmaCheckConfig
    output: Path | None
    workers: int
    canonical: bool
    raw: dict = field(default_factory=dict)  # echo of the source dict


def parse_config(cfg: dict) -> ExperimentConfig:
    """Validate a config dict (strict keys) and resolve it to explicit numbers."""
    _require_keys(cfg, "config", ("objective", "noise", "algorithm", "schedule", "runs"),
                  ("master_seed", "checks", "output", "workers", "canonical"))

    obj = cfg["objective"]
    _require_keys(obj, "objective", ("name",), ("dim", "x1"))
    spec = builtin(obj["name"], obj.get("dim"))
    x1 = np.asarray(obj.get("x1", spec.x1_default), dtype=np.float64)
    if x1.shape != (spec.dim,):
        raise ConfigError(f"x1 must have dim {spec.dim}")
    if not spec.in_domain(x1):
        raise ConfigError("x1 lies outside the objective's domain")

    noise = cfg["noise"]
    _require_keys(noise, "noise", ("kind",), ("sigma", "component"))
    model = NoiseModel(kind=noise["kind"], sigma=float(noise.get("sigma", 0.0)),
                       component=noise.get("component", "linear"))

    algorithm = cfg["algorithm"]
    if algorithm not in ALGORITHMS:
        raise ConfigError(f"unknown algorithm {algorithm!r}; known: {ALGORITHMS}")

    runs = cfg["runs"]
    if not isinstance(runs, int) or runs < 1:
        raise ConfigError("runs must be an integer >= 1")

    master_seed = int(cfg.get("master_seed", 42))
    if SEED_ENV_VAR in os.environ:
        master_seed = int(os.environ[SEED_ENV_VAR])

    hp, tc = _resolve_schedule(cfg["schedule"], spec, model, algorithm, x1)

    checks_cfg = cfg.get("checks", {})
    _require_keys(checks_cfg, "checks", (), ("enabled", "slack_abs", "fail_policy"))
    enabled = checks_cfg.get("enabled")
    checks = LemmaCheckConfig(
        enabled=None if enabled in (None, "all") else frozenset(enabled),
        slack_abs=float(checks_cfg.get("slack_abs", 1e-9)),
        fail_policy=checks_cfg.get("fail_policy", "record"),
    )

    workers = int(cfg.get("workers", 1))
    if workers < 1:
        raise ConfigError("workers must be >= 1")

    output = cfg.get("output")
    return ExperimentConfig(
        spec=spec, model=model, algorithm=algorithm, hp=hp, tc=tc, x1=x1,
        runs=runs, master_seed=master_seed, checks=checks,
        output=Path(output) if output else None,
        workers=workers, canonical=bool(cfg.get("canonical", False)), raw=cfg,
    )


def _resolve_schedule(sched: dict, spec: ObjectiveSpec, model: NoiseModel,
                      algorithm: str, x1: Vector) -> tuple[HyperParams, TheoryConstants]:
    kind = sched.get("type")
    if kind == "explicit":
        _require_keys(sched, "schedule",
                      ("type", "beta", "beta_sq", "eta", "lambda", "T", "G"),
                      ("S1", "d_mode", "delta", "eps"))
        hp = HyperParams(beta=float(sched["beta"]), beta_sq=float(sched["beta_sq"]),
                         eta=float(sched["eta"]), lam=float(sched["lambda"]),
                         T=int(sched["T"]), s1=int(sched.get("S1", 1)))
        if algorithm != "vradam":
            hp.require_adam()
            mode = "adam_matched" if hp.beta == hp.beta_sq else "adam_general"
        else:
            mode = "vr_thm2"
        mode = sched.get("d_mode", mode)
        tc = constants(spec.l0, spec.lrho, spec.rho, float(sched["G"]), hp.lam,
                       spec.dim, mode, beta_sq=hp.beta_sq,
                       delta1=spec.initial_gap(x1),
                       delta=float(sched.get("delta", 0.1)),
                       eps_target=float(sched.get("eps", float("nan"))),
                       sigma=model.sigma)
        return hp, tc
    if kind == "theorem":
        _require_keys(sched, "schedule", ("type", "variant", "delta", "eps"),
                      ("lambda", "calibration", "beta_sq", "max_T"))
        variant_key = sched["variant"]
        if variant_key not in _THEOREM_VARIANTS:
            raise ConfigError(f"unknown schedule variant {variant_key!r}")
        algo_kind, variant = _THEOREM_VARIANTS[variant_key]
        if (algo_kind == "vradam") != (algorithm == "vradam"):
            raise ConfigError(f"schedule variant {variant_key!r} does not match "
                              f"algorithm {algorithm!r}")
        lam = float(sched.get("lambda", 1.0))
        delta = float(sched["delta"])
        eps = float(sched["eps"])
        calib_cfg = sched.get("calibration", {})
        if calib_cfg == "auto":
            max_t = float(sched.get("max_T", math.inf))
            if algo_kind == "adam":
                s = calibrate_adam(spec, model.sigma, lam, delta, eps,
                                   variant=variant, x1=x1, max_T=max_t)
            else:
                s = calibrate_vradam(spec, model.sigma, lam, delta, eps,
                                     variant=variant, x1=x1, max_T=max_t,
                                     beta_sq=sched.get("beta_sq"))
            return s.hp, s.tc
        _require_keys(calib_cfg, "calibration", (), ("c1", "c2", "C1", "C2", "c", "C"))
        calib = CalibrationConstants(**{k: float(v) for k, v in calib_cfg.items()})
        if algo_kind == "adam":
            s = schedule_adam(spec, model.sigma, lam, delta, eps,
                              variant=variant, calib=calib, x1=x1)
        else:
            s = schedule_vradam(spec, model.sigma, lam, delta, eps,
                                variant=variant, calib=calib,
                                beta_sq=sched.get("beta_sq"), x1=x1)
        return s.hp, s.tc
    raise ConfigError("schedule.type must be 'explicit' or 'theorem'")


@dataclass
class RunSummary:
    run_id: int
    tau: int
    tau1: int
    tau2: int
    tau_half: int | None
    sum_sq_grad: float
    avg_sq_grad: float
    max_grad_norm: float
    final_f: float
    upper_flag: bool
    lower_applicable: bool
    lower_ok: bool | None
    converged_flag: bool | None
    eps_tau_sq: float
    martingale_sum: float
    d7_aggregate: float
    violations: dict
    skipped: dict
    aborted_at: int | None
    abort_reason: str | None


def run_trajectory(cfg: ExperimentConfig, run_id: int,
                   stop_at_tau: bool = False) -> tuple[RunSummary, TrajectoryRecord]:
    """Execute one seeded trajectory with full monitoring.

    ``stop_at_tau`` cuts the loop once the stopping time has been observed;
    every pre-stop quantity (sums, stopping times, checks) is unaffected.
    """
    spec, model, hp, tc = cfg.spec, cfg.model, cfg.hp, cfg.tc
    rng = RngStream(cfg.master_seed, run_id)
    if cfg.algorithm == "vradam":
        rec, verdict = _run_vradam(spec, model, hp, tc, cfg.checks, cfg.x1, rng,
                                   stop_at_tau)
    else:
        rescaled = cfg.algorithm == "adam_rescaled"
        rec, verdict = _run_adam(spec, model, hp, tc, cfg.checks, cfg.x1, rng,
                                 rescaled, stop_at_tau)
    mg = float(np.nanmax(rec.grad_norm)) if rec.steps_recorded else float("nan")
    fin = rec.f[: rec.steps_recorded]
    final_f = float(fin[-1]) if rec.steps_recorded else float("nan")
    summary = RunSummary(
        run_id=run_id, tau=verdict.tau, tau1=verdict.tau1, tau2=verdict.tau2,
        tau_half=verdict.tau_half, sum_sq_grad=verdict.sum_sq_grad,
        avg_sq_grad=verdict.avg_sq_grad, max_grad_norm=mg, final_f=final_f,
        upper_flag=verdict.upper_flag, lower_applicable=verdict.lower_applicable,
        lower_ok=verdict.lower_ok, converged_flag=verdict.converged_flag,
        eps_tau_sq=verdict.eps_tau_sq, martingale_sum=verdict.martingale_sum,
        d7_aggregate=verdict.d7_aggregate, violations=dict(rec.violations),
        skipped=dict(rec.skipped), aborted_at=rec.aborted_at,
        abort_reason=rec.abort_reason,
    )
    return summary, rec


def _state_finite(x: Vector) -> bool:
    return bool(np.all(np.isfinite(x)))


def _run_adam(spec, model, hp, tc, checks, x1, rng, rescaled, stop_at_tau=False):
    step_fn = adam_step_rescaled if rescaled else adam_step_raw
    mon = AdamMonitor(tc, hp, checks)
    state = adam_init(x1)
    grad = spec.gradient(state.x)
    fx = spec.value(state.x)
    for t in range(1, hp.T + 1):
        ticket = draw(model, rng, spec.dim, step=t)
        g = grad + noise_vector(model, ticket, state.x)
        after = step_fn(state, g, hp)
        if not _state_finite(after.x):
            mon.rec.aborted_at = t
            mon.rec.abort_reason = "non-finite iterate"
            break
        if not spec.in_domain(after.x):
            mon.rec.aborted_at = t
            mon.rec.abort_reason = "domain exit"
            break
        f_after = spec.value(after.x)
        mon.observe(t, state, after, grad, g, fx, f_after)
        if stop_at_tau and mon.stopped:
            break
        state = after
        grad = spec.gradient(state.x)
        fx = f_after
    if mon.rec.aborted_at is None and mon.rec.tau == 0:
        # virtual momentum step at T+1 completes the stopped sums
        ticket = draw(model, rng, spec.dim, step=hp.T + 1)
        g = grad + noise_vector(model, ticket, state.x)
        mon.observe_virtual(grad, g, state.pow_beta * (1.0 - hp.beta))
    verdict = finalize(mon.rec, tc, hp, algorithm="adam")
    return mon.rec, verdict


def _run_vradam(spec, model, hp, tc, checks, x1, rng, stop_at_tau=False):
    mon = VRAdamMonitor(tc, hp, checks)
    state = vradam_init(spec, np.asarray(x1, dtype=np.float64), hp, model, rng)
    grad_prev = spec.gradient(state.x_prev)     # gradient at x_1
    mon.observe_init(state, grad_prev, spec.value(state.x_prev))
    if not spec.in_domain(state.x):
        mon.rec.aborted_at = 2
        mon.rec.abort_reason = "domain exit"
        verdict = finalize(mon.rec, tc, hp, algorithm="vradam")
        return mon.rec, verdict
    grad = spec.gradient(state.x)
    fx = spec.value(state.x)
    for t in range(2, hp.T + 1):
        ticket = draw(model, rng, spec.dim, step=t)
        g_t = grad + noise_vector(model, ticket, state.x)
        g_prev = grad_prev + noise_vector(model, ticket, state.x_prev)
        after = vradam_step(state, g_t, g_prev, hp)
        if not _state_finite(after.x):
            mon.rec.aborted_at = t
            mon.rec.abort_reason = "non-finite iterate"
            break
        if not spec.in_domain(after.x):
            mon.rec.aborted_at = t
            mon.rec.abort_reason = "domain exit"
            break
        f_after = spec.value(after.x)
        mon.observe(t, state, after, grad, grad_prev, g_t, g_prev, fx, f_after)
        if stop_at_tau and mon.stopped:
            break
        grad_prev = grad
        state = after
        grad = spec.gradient(state.x)
        fx = f_after
    if mon.rec.aborted_at is None and mon.rec.tau == 0 and hp.T >= 2:
        ticket = draw(model, rng, spec.dim, step=hp.T + 1)
        g_t = grad + noise_vector(model, ticket, state.x)
        g_prev = grad_prev + noise_vector(model, ticket, state.x_prev)
        mon.observe_virtual(grad, g_t, g_prev, grad_prev)
    verdict = finalize(mon.rec, tc, hp, algorithm="vradam")
    return mon.rec, verdict


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return f"{x:.17g}"


def record_to_csv(rec: TrajectoryRecord, tau: int) -> str:
    """Serialize telemetry; rows are down-sampled only past a million steps."""
    n = rec.steps_recorded
    stride = max(1, math.ceil(rec.T / MAX_CSV_ROWS))
    lines = [",".join(CSV_COLUMNS)]
    for i in range(0, n, stride):
        t = i + 1
        row = (str(t), _fmt(rec.f[i]), _fmt(rec.grad_norm[i]),
               _fmt(rec.eps_norm[i]), _fmt(rec.gamma_norm[i]),
               _fmt(rec.w_norm[i]), _fmt(rec.update_norm[i]),
               _fmt(rec.step_min[i]), _fmt(rec.step_max[i]),
               _fmt(rec.descent_residual[i]), "1" if t < tau else "0")
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def summary_to_dict(s: RunSummary) -> dict:
    d = asdict(s)
    for k, v in d.items():
        if isinstance(v, float) and math.isnan(v):
            d[k] = None
    return d


def aggregate_results(cfg: ExperimentConfig, summaries: list[RunSummary],
                      wall_clock: float | None) -> dict:
    n = len(summaries)
    full = [s for s in summaries if s.tau == cfg.hp.T + 1 and s.aborted_at is None]
    converged = [s for s in full if s.converged_flag]
    viol: dict[str, int] = {}
    skip: dict[str, int] = {}
    for s in summaries:
        for k, v in s.violations.items():
            viol[k] = viol.get(k, 0) + v
        for k, v in s.skipped.items():
            skip[k] = skip.get(k, 0) + v
    hard = sum(1 for s in summaries if s.lower_applicable and s.lower_ok is False)
    eps_tau = [s.eps_tau_sq for s in summaries if not math.isnan(s.eps_tau_sq)]
    out = {
        "runs": n,
        "algorithm": cfg.algorithm,
        "objective": cfg.spec.name,
        "dim": cfg.spec.dim,
        "T": cfg.hp.T,
        "constants": cfg.tc.describe(),
        "hyperparams": {"beta": cfg.hp.beta, "beta_sq": cfg.hp.beta_sq,
                        "eta": cfg.hp.eta, "lambda": cfg.hp.lam,
                        "T": cfg.hp.T, "S1": cfg.hp.s1},
        "fraction_tau_full": len(full) / n,
        "fraction_converged": (len(converged) / len(full)) if full else None,
        "fraction_upper_flag": sum(1 for s in summaries if s.upper_flag) / n,
        "mean_eps_tau_sq": (sum(eps_tau) / len(eps_tau)) if eps_tau else None,
        "mean_d7_aggregate": sum(s.d7_aggregate for s in summaries) / n,
        "aborted_runs": sum(1 for s in summaries if s.aborted_at is not None),
        "hard_violations": hard,
        "violations": dict(sorted(viol.items())),
        "skipped": dict(sorted(skip.items())),
        "wall_clock_s": None if cfg.canonical else wall_clock,
    }
    return out


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _nan_to_none(obj):
    if isinstance(obj, float) and (math.isnan(obj) or math.isinf(obj)):
        return None
    if isinstance(obj, dict):
        return {k: _nan_to_none(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_nan_to_none(v) for v in obj]
    return obj


def _worker_run(raw_cfg: dict, run_id: int) -> tuple[int, dict, str]:
    cfg = parse_config(raw_cfg)
    summary, rec = run_trajectory(cfg, run_id)
    return run_id, summary_to_dict(summary), record_to_csv(rec, summary.tau)


def run_experiment(cfg: ExperimentConfig) -> tuple[list[RunSummary], dict]:
    """Execute all runs, write outputs if an output directory is set, and
    return (summaries, aggregate). Raises HardViolation if the almost-sure
    lower bound fails anywhere."""
    t0 = time.perf_counter()
    summaries: list[RunSummary] = []
    csvs: dict[int, str] = {}
    if cfg.workers > 1 and cfg.runs > 1:
        explicit = explicit_config_dict(cfg)
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            futures = [pool.submit(_worker_run, explicit, rid) for rid in range(cfg.runs)]
            results = [f.result() for f in futures]
        results.sort(key=lambda r: r[0])
        for rid, sdict, csv_text in results:
            summaries.append(RunSummary(**sdict))
            csvs[rid] = csv_text
    else:
        for rid in range(cfg.runs):
            summary, rec = run_trajectory(cfg, rid)
            summaries.append(summary)
            csvs[rid] = record_to_csv(rec, summary.tau)
    wall = time.perf_counter() - t0
    aggregate = aggregate_results(cfg, summaries, wall)

    if cfg.output is not None:
        cfg.output.mkdir(parents=True, exist_ok=True)
        (cfg.output / "config.json").write_text(_dumps(_nan_to_none(cfg.raw)))
        for rid in range(cfg.runs):
            (cfg.output / f"run{rid:03d}.csv").write_text(csvs[rid])
        (cfg.output / "aggregate.json").write_text(_dumps(_nan_to_none(aggregate)))
    return summaries, aggregate


def explicit_config_dict(cfg: ExperimentConfig) -> dict:
    """Re-serialize a resolved config with the schedule written out explicitly."""
    out = {
        "objective": {"name": cfg.spec.name, "dim": cfg.spec.dim,
                      "x1": [float(v) for v in cfg.x1]},
        "noise": {"kind": cfg.model.kind, "sigma": cfg.model.sigma,
                  "component": cfg.model.component},
        "algorithm": cfg.algorithm,
        "schedule": {
            "type": "explicit", "beta": cfg.hp.beta, "beta_sq": cfg.hp.beta_sq,
            "eta": cfg.hp.eta, "lambda": cfg.hp.lam, "T": cfg.hp.T,
            "S1": cfg.hp.s1, "G": cfg.tc.G, "d_mode": cfg.tc.mode,
            "delta": cfg.tc.delta,
        },
        "runs": cfg.runs,
        "master_seed": cfg.master_seed,
        "workers": 1,
        "canonical": cfg.canonical,
    }
    if not math.isnan(cfg.tc.eps_target):
        out["schedule"]["eps"] = cfg.tc.eps_target
    if cfg.checks.enabled is not None or cfg.checks.fail_policy != "record" \
            or cfg.checks.slack_abs != 1e-9:
        out["checks"] = {"slack_abs": cfg.checks.slack_abs,
                         "fail_policy": cfg.checks.fail_policy}
        if cfg.checks.enabled is not None:
            out["checks"]["enabled"] = sorted(cfg.checks.enabled)
    return out


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

def run_sweep(sweep_cfg: dict) -> list[tuple[str, dict]]:
    """Grid over (objective, eps, sigma); one output cell per combination."""
    _require_keys(sweep_cfg, "sweep", ("base", "objectives", "eps", "sigmas", "output"), ())
    base = sweep_cfg["base"]
    outdir = Path(sweep_cfg["output"])
    cells = []
    for obj_name in sweep_cfg["objectives"]:
        for eps in sweep_cfg["eps"]:
            for sigma in sweep_cfg["sigmas"]:
                raw = json.loads(json.dumps(base))  # deep copy
                raw.setdefault("objective", {})["name"] = obj_name
                raw["objective"].pop("x1", None)
                raw.setdefault("noise", {})["sigma"] = sigma
                if raw["schedule"].get("type") == "theorem":
                    raw["schedule"]["eps"] = eps
                cell = f"{obj_name}_eps{eps:g}_sigma{sigma:g}"
                raw["output"] = str(outdir / cell)
                cfg = parse_config(raw)
                _, aggregate = run_experiment(cfg)
                cells.append((cell, aggregate))
    return cells
