"""Command-line surface: params, run, verify, certify, sweep, plot.

Exit codes: 0 clean, 1 a verifier row failed or a hard invariant was violated,
2 configuration or usage errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from .core import ConfigError, RngStream
from .harness import parse_config, run_experiment, run_sweep
from .objectives import (builtin, builtin_names, certify_l0lrho,
                         counterexample_violation)
from .optimizers import HyperParams, adam_init, adam_step_raw, adam_step_rescaled
from .oracle import NoiseModel, draw, noise_vector
from .theory import (CalibrationConstants, alpha_sum_bound, calibrate_adam,
                     calibrate_vradam, schedule_adam, schedule_vradam,
                     verify_gronwall, verify_local_smoothness)

THEOREM_CHOICES = ("adam-rho-lt-2", "adam-rho-lt-1", "vradam-rho-lt-2", "vradam-rho-lt-1")


def default_schedule(name: str, dim: int | None = None, sigma: float = 0.0,
                     lam: float = 1.0, delta: float = 0.1, eps: float = 0.3):
    """The per-objective default: dimension-free variant when rho < 1."""
    spec = builtin(name, dim)
    variant = "rho_lt_1" if spec.rho < 1.0 else "rho_lt_2"
    return schedule_adam(spec, sigma, lam, delta, eps, variant=variant)


def _cmd_params(args) -> int:
    algo, variant = args.theorem.rsplit("-rho-lt-", 1)
    variant = "rho_lt_" + variant
    spec = builtin(args.objective, args.dim)
    calib_kwargs = {}
    for key in ("c1", "c2", "C1", "C2", "c", "C"):
        v = getattr(args, f"calib_{key}", None)
        if v is not None:
            calib_kwargs[key] = v
    if args.auto_calibrate:
        if algo == "adam":
            sched = calibrate_adam(spec, args.sigma, args.lam, args.delta,
                                   args.eps, variant=variant, max_T=args.max_T)
        else:
            sched = calibrate_vradam(spec, args.sigma, args.lam, args.delta,
                                     args.eps, variant=variant, max_T=args.max_T)
    else:
        calib = CalibrationConstants(**calib_kwargs)
        if algo == "adam":
            sched = schedule_adam(spec, args.sigma, args.lam, args.delta,
                                  args.eps, variant=variant, calib=calib)
        else:
            sched = schedule_vradam(spec, args.sigma, args.lam, args.delta,
                                    args.eps, variant=variant, calib=calib)
    print(json.dumps(sched.as_dict(), indent=2, sort_keys=True))
    return 0


def _cmd_run(args) -> int:
    path = Path(args.config)
    if not path.is_file():
        print(f"config file not found: {path}", file=sys.stderr)
        return 2
    raw = json.loads(path.read_text())
    if args.output:
        raw["output"] = args.output
    if args.workers:
        raw["workers"] = args.workers
    if args.canonical:
        raw["canonical"] = True
    cfg = parse_config(raw)
    summaries, aggregate = run_experiment(cfg)
    print(json.dumps({k: aggregate[k] for k in
                      ("runs", "fraction_tau_full", "fraction_converged",
                       "hard_violations", "aborted_runs", "violations")},
                     indent=2, sort_keys=True))
    return 1 if aggregate["hard_violations"] else 0


def _verify_rows(pairs: int, seed: int):
    """The standalone verifier battery; yields (name, passed, detail)."""
    # comparison-ODE bound, equality case: u' = L0 + L1*u solved in closed form
    l0, l1, a, b, u0 = 1.0, 2.0, 0.0, 1.0, 0.5
    k = u0 + l0 / l1

    def u(t):
        return k * math.exp(l1 * (t - a)) - l0 / l1

    def up(t):
        return l1 * k * math.exp(l1 * (t - a))

    rep = verify_gronwall(lambda v: l0 + l1 * v, u, a, b, uprime=up)
    yield ("gronwall_equality_slack", abs(rep.min_slack) <= 1e-6,
           f"|slack|={abs(rep.min_slack):.2e}")

    rep = verify_gronwall(lambda v: l0 + l1 * v, lambda t: u0, a, b,
                          uprime=lambda t: 0.0)
    yield ("gronwall_strict_positive", rep.min_slack > 0,
           f"slack={rep.min_slack:.2e}")

    for name in builtin_names():
        spec = builtin(name)
        sched = default_schedule(name)
        r = verify_local_smoothness(spec, sched.tc.G, pairs, RngStream(seed, 7))
        yield (f"local_smoothness[{name}]", r.ok,
               f"pairs={r.pairs_checked} rejected={r.rejected} "
               f"violations={len(r.violations)}")

    ok = all(alpha_sum_bound(beta, T).ok
             for beta in (1.0, 0.5, 0.1, 0.01, 0.001)
             for T in (10, 1000, 100000))
    yield ("alpha_sum_grid", ok, "beta x T grid")

    dev = _equivalence_deviation(seeds=3, T=2000)
    yield ("formulation_equivalence", dev <= 1e-9, f"max rel dev={dev:.2e}")

    for kind in ("rational", "double_exp"):
        x, lhs, rhs = counterexample_violation(kind, 10.0, 10.0)
        yield (f"counterexample[{kind}]", lhs > rhs,
               f"x={x:.4g} |f''|={lhs:.4g} bound={rhs:.4g}")


def _equivalence_deviation(seeds: int, T: int, dim: int = 10) -> float:
    spec = builtin("quartic", dim)
    model = NoiseModel(kind="sphere", sigma=0.1)
    hp = HyperParams(beta=0.9, beta_sq=0.9, eta=1e-3, lam=1.0, T=T)
    worst = 0.0
    for s in range(seeds):
        rng = RngStream(1234, s)
        a = adam_init(spec.x1_default)
        b = adam_init(spec.x1_default)
        for t in range(1, T + 1):
            g = spec.gradient(a.x) + draw(model, rng, dim, t).noise
            a = adam_step_raw(a, g, hp)
            b = adam_step_rescaled(b, g, hp)
            dev = float(np.max(np.abs(a.x - b.x))) / (1.0 + float(np.max(np.abs(a.x))))
            worst = max(worst, dev)
    return worst


def _cmd_verify(args) -> int:
    rows = list(_verify_rows(args.pairs, args.seed))
    width = max(len(r[0]) for r in rows)
    failed = 0
    for name, ok, detail in rows:
        status = "PASS" if ok else "FAIL"
        failed += not ok
        print(f"{name:<{width}}  {status}  {detail}")
    print(f"{failed} of {len(rows)} rows failed" if failed else "all rows PASS")
    return 1 if failed else 0


def _cmd_certify(args) -> int:
    spec = builtin(args.objective, args.dim)
    rng = RngStream(args.seed, 0)
    box = tuple(args.box) if args.box else None
    rep = certify_l0lrho(spec, args.samples, rng, sampling_box=box,
                         fit_rho=args.fit_rho)
    out = {
        "objective": spec.name, "dim": spec.dim,
        "constants": {"L0": spec.l0, "L_rho": spec.lrho, "rho": spec.rho},
        "samples_checked": rep.samples_checked,
        "violation_count": len(rep.violations),
        "passed": rep.passed,
    }
    if rep.fitted_constants:
        out["fitted"] = {"L0": rep.fitted_constants[0], "L_rho": rep.fitted_constants[1],
                         "rho": args.fit_rho}
    if rep.violations:
        x, h, bound = rep.violations[0]
        out["first_violation"] = {"x": list(map(float, x)), "hessian_norm": h,
                                  "bound": bound}
    print(json.dumps(out, indent=2, sort_keys=True))
    return 0 if rep.passed else 1


def _cmd_sweep(args) -> int:
    path = Path(args.config)
    if not path.is_file():
        print(f"config file not found: {path}", file=sys.stderr)
        return 2
    cells = run_sweep(json.loads(path.read_text()))
    for cell, agg in cells:
        print(f"{cell}: tau_full={agg['fraction_tau_full']:.3f} "
              f"hard_violations={agg['hard_violations']}")
    return 1 if any(a["hard_violations"] for _, a in cells) else 0


def _cmd_plot(args) -> int:
    from .plotting import run_curves_svg

    path = Path(args.run)
    if not path.is_file():
        print(f"run file not found: {path}", file=sys.stderr)
        return 2
    ts, series = [], {"grad_norm": [], "eps_norm": [], "f": []}
    with path.open() as fh:
        for row in csv.DictReader(fh):
            ts.append(int(row["t"]))
            for k in series:
                v = row[k]
                series[k].append(float(v) if v not in ("", "nan") else math.nan)
    out = Path(args.out) if args.out else path.with_suffix(".svg")
    out.write_text(run_curves_svg(ts, series))
    print(f"wrote {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gsmooth",
                                description="optimizer schedules and trajectory verification")
    sub = p.add_subparsers(dest="command", required=True)

    q = sub.add_parser("params", help="print a theorem schedule as JSON")
    q.add_argument("--theorem", choices=THEOREM_CHOICES, required=True)
    q.add_argument("--objective", required=True)
    q.add_argument("--dim", type=int)
    q.add_argument("--sigma", type=float, default=0.0)
    q.add_argument("--lambda", dest="lam", type=float, default=1.0)
    q.add_argument("--delta", type=float, default=0.1)
    q.add_argument("--eps", type=float, default=0.3)
    q.add_argument("--auto-calibrate", action="store_true")
    q.add_argument("--max-T", dest="max_T", type=float, default=math.inf)
    for key in ("c1", "c2", "C1", "C2", "c", "C"):
        q.add_argument(f"--calib-{key}", dest=f"calib_{key}", type=float)
    q.set_defaults(fn=_cmd_params)

    q = sub.add_parser("run", help="run an experiment from a config file")
    q.add_argument("--config", required=True)
    q.add_argument("--output")
    q.add_argument("--workers", type=int)
    q.add_argument("--canonical", action="store_true")
    q.set_defaults(fn=_cmd_run)

    q = sub.add_parser("verify", help="run the standalone verifier battery")
    q.add_argument("--pairs", type=int, default=2000)
    q.add_argument("--seed", type=int, default=42)
    q.set_defaults(fn=_cmd_verify)

    q = sub.add_parser("certify", help="check the smoothness certificate of an objective")
    q.add_argument("--objective", required=True)
    q.add_argument("--dim", type=int)
    q.add_argument("--samples", type=int, default=10000)
    q.add_argument("--seed", type=int, default=42)
    q.add_argument("--box", type=float, nargs=2)
    q.add_argument("--fit-rho", dest="fit_rho", type=float)
    q.set_defaults(fn=_cmd_certify)

    q = sub.add_parser("sweep", help="grid over (objective, eps, sigma)")
    q.add_argument("--config", required=True)
    q.set_defaults(fn=_cmd_sweep)

    q = sub.add_parser("plot", help="emit SVG curves for one run's telemetry")
    q.add_argument("--run", required=True)
    q.add_argument("--out")
    q.set_defaults(fn=_cmd_plot)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code not in (0, None) else 0
    try:
        return args.fn(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except (OSError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
