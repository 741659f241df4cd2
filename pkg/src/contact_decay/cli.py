"""Batch front-end: survive / bounds / theorem22 / verify subcommands.

Exit-status contract: 0 = pass, 1 = usage error, 2 = numerical failure,
3 = property violation.  Every output embeds (config, seed, version) so a
run can be reproduced bit-identically from its own header.
"""

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__, dual, engine, estimate, killedwalk, spectral

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2
EXIT_VIOLATION = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags; the contract wants 1
    def error(self, message):
        raise UsageError(message)


def _fmt(x):
    """All floats are emitted with 17 significant digits."""
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def parse_time_grid(text):
    """start:stop:step, endpoints inclusive."""
    try:
        start, stop, step = (float(v) for v in text.split(":"))
    except ValueError as exc:
        raise UsageError(f"bad time grid {text!r}; expected start:stop:step") from exc
    if step <= 0 or stop < start:
        raise UsageError("time grid needs step > 0 and stop >= start")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return start + step * np.arange(n)


def load_config(path):
    """Optional flat key=value file; flags override file values."""
    out = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise UsageError(f"bad config line: {line!r}")
            key, val = line.split("=", 1)
            out[key.strip().replace("-", "_")] = val.strip()
    return out


def _dual_chunk(args):
    lam, d, model, times, r_lo, r_hi, seed = args
    k = np.zeros(len(times), dtype=np.int64)
    for r in range(r_lo, r_hi):
        k += dual._replicate(lam, d, model, times, dual._rng_for(seed, r))
    return k


def dual_curve(lam, d, model, times, reps, seed, workers=1):
    """Dual survival curve, optionally fanned over a process pool.

    Replicate r always uses the seed derived from (seed, r), so the result
    is identical for any worker count; aggregation is a plain sum.
    """
    times = np.sort(np.asarray(times, dtype=np.float64))
    if workers <= 1:
        return dual.survival_probability(lam, d, times, reps, model=model, seed=seed)
    bounds = np.linspace(0, reps, workers + 1, dtype=int)
    jobs = [(lam, d, model, times, int(a), int(b), seed)
            for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        k = sum(pool.map(_dual_chunk, jobs))
    return estimate.SurvivalCurve(times, reps, k)


def _config_dict(args, keys):
    return {k: getattr(args, k) for k in keys}


def _write_curve_csv(path, curve, config):
    lines = [f"# contact-decay {__version__}"]
    for key, val in config.items():
        lines.append(f"# {key}={_fmt(val)}")
    lines.append("t,n,k,p_hat,ci_lo,ci_hi")
    lo, hi = curve.ci()
    for i, t in enumerate(curve.times):
        lines.append(",".join([
            _fmt(float(t)), str(curve.n), str(int(curve.k[i])),
            _fmt(float(curve.p_hat[i])), _fmt(float(lo[i])), _fmt(float(hi[i])),
        ]))
    text = "\n".join(lines) + "\n"
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _estimate_dict(est):
    return {"rate": est.rate, "se": est.se, "method": est.method,
            "window": [est.window[0], est.window[1]]}


def cmd_survive(args):
    if args.reps < 1:
        raise UsageError("--reps must be >= 1")
    times = parse_time_grid(args.t_grid)
    config = _config_dict(args, ["model", "d", "lam", "reps", "t_grid", "seed", "source", "L"])
    config["version"] = __version__
    if args.source == "dual":
        curve = dual_curve(args.lam, args.d, args.model, times, args.reps,
                           args.seed, workers=args.threads)
    else:
        params = engine.SimParams(d=args.d, lam=args.lam, model=args.model,
                                  L=args.L, t_max=float(times.max()), seed=args.seed)
        _, k = engine.run_forward(params, times, args.reps)
        curve = estimate.SurvivalCurve(times, args.reps, k)
    summary = {"config": config,
               "curve": {"t": list(map(float, curve.times)),
                         "n": curve.n, "k": list(map(int, curve.k))}}
    for name, fn in (("fekete", estimate.fekete_lower), ("regression", estimate.tail_regression)):
        try:
            summary[name] = _estimate_dict(fn(curve))
        except ValueError as exc:
            summary[name] = {"error": str(exc)}
    if args.format == "csv":
        _write_curve_csv(args.out, curve, config)
        print(json.dumps(summary))
    else:
        text = json.dumps(summary, indent=2)
        if args.out:
            with open(args.out, "w") as fh:
                fh.write(text + "\n")
        else:
            print(text)
    return EXIT_OK


def cmd_bounds(args):
    config = _config_dict(args, ["model", "d", "lam", "tol", "seed"])
    config["version"] = __version__
    try:
        rb = spectral.rate_bounds(args.lam, args.d, model=args.model, tol=args.tol)
    except (RuntimeError, FloatingPointError) as exc:
        print(json.dumps({"error": str(exc), "config": config}))
        return EXIT_NUMERICAL
    record = {
        "lambda": rb.lam, "d": rb.d, "model": rb.model,
        # nan is not valid JSON; an absent lower bound becomes null
        "lower": rb.lower if math.isfinite(rb.lower) else None,
        "upper": rb.upper,
        "p_star": rb.fixed_point.p_star if rb.fixed_point else None,
        "mu": rb.fixed_point.mu if rb.fixed_point else None,
        "r_e1": rb.fixed_point.r_e1 if rb.fixed_point else None,
        "r_error": rb.fixed_point.r_error if rb.fixed_point else None,
        "warning": rb.warning,
        "config": config,
    }
    text = json.dumps(record, indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return EXIT_OK


def cmd_theorem22(args):
    if not args.d_list:
        raise UsageError("--d-list must not be empty")
    if not 0.0 < args.lam < 0.5:
        raise UsageError("--lambda must be in (0, 1/2) for the limit scan")
    config = _config_dict(args, ["model", "lam", "d_list", "seed", "ihat_reps"])
    config["version"] = __version__
    try:
        rows = spectral.limit_scan(args.lam, args.d_list, model=args.model, seed=args.seed)
    except (RuntimeError, FloatingPointError) as exc:
        print(json.dumps({"error": str(exc), "config": config}))
        return EXIT_NUMERICAL
    status = EXIT_OK
    for row in rows:
        if args.ihat_reps > 0:
            times = np.arange(0.0, 8.5, 0.5)
            curve = dual_curve(row["lambda_scaled"], row["d"], args.model, times,
                               args.ihat_reps, args.seed, workers=args.threads)
            try:
                est = estimate.tail_regression(curve)
                row["i_hat"] = est.rate
                row["i_hat_se"] = est.se
                if not (row["lower"] - 3 * est.se <= est.rate <= row["upper"] + 3 * est.se):
                    row["sandwich_violation"] = True
                    status = EXIT_VIOLATION
            except ValueError as exc:
                row["i_hat_error"] = str(exc)
        if row["lower"] > row["upper"] + 1e-9:
            row["ordering_violation"] = True
            status = EXIT_VIOLATION
    report = {"config": config, "c_lambda": 4 * args.lam / (1 + 2 * args.lam),
              "limit_rate": 2 * args.lam - 1, "rows": rows}
    text = json.dumps(report, indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return status


# ---------------------------------------------------------------- verify ---

def _suite_coupling(args):
    params_kw = dict(d=args.d, lam=args.lam, L=args.L, t_max=args.t_max)
    runs = max(int(20 * args.budget), 2)
    times = np.linspace(0.0, args.t_max, 6)
    for seed in range(runs):
        trace = engine.run_coupled(
            engine.SimParams(model="threshold", seed=seed, **params_kw), times)
        if not engine.coupling_holds(trace):
            return False, f"indicator equality violated at seed {seed}"
    return True, f"{runs} seeded runs, exact sign(zeta)=eta at all sampled (t, x)"

def _suite_duality(args):
    lam, d = 0.2, 1
    times = np.array([1.0, 2.0, 4.0])
    reps_dual = max(int(20000 * args.budget), 2000)
    reps_fwd = max(int(2000 * args.budget), 200)
    curve = dual_curve(lam, d, "threshold", times, reps_dual, args.seed, workers=args.threads)
    params = engine.SimParams(d=d, lam=lam, model="threshold", L=64, t_max=4.0, seed=args.seed + 1)
    _, k = engine.run_forward(params, times, reps_fwd)
    fwd = estimate.SurvivalCurve(times, reps_fwd, k)
    se = np.sqrt(curve.p_hat * (1 - curve.p_hat) / curve.n
                 + fwd.p_hat * (1 - fwd.p_hat) / fwd.n)
    gap = np.abs(curve.p_hat - fwd.p_hat)
    ok = bool((gap <= 3 * se + 1e-12).all())
    return ok, f"max |dual - forward| = {gap.max():.4g} vs 3*se = {(3*se).max():.4g}"

def _suite_eigencheck(args):
    fp = spectral.solve_fixed_point(0.2, 1)
    rep = spectral.eigencheck(fp)
    if args.perturb_pstar:
        rep_bad = spectral.eigencheck(fp, p_override=fp.p_star + args.perturb_pstar)
        ok = rep_bad["residual_max"] > 100 * rep["residual_max"]
        return ok, (f"perturbed residual {rep_bad['residual_max']:.3g} vs "
                    f"true-root residual {rep['residual_max']:.3g}")
    ok = rep["residual_max"] <= max(rep["bound"], 1e-5)
    return ok, f"residual {rep['residual_max']:.3g} <= bound {rep['bound']:.3g}"

def _suite_harmonicity(args):
    for d, p in ((1, 0.6), (2, 0.5)):
        sol = killedwalk.hitting_solve(killedwalk.KilledWalkSpec(d, p), tol=1e-6)
        mid = 0.5 * (sol.lower + sol.upper)
        resid = _harmonicity_residual(mid, d, p)
        if resid > 1e-5:
            return False, f"harmonicity residual {resid:.3g} at d={d}, p={p}"
    return True, "interior harmonicity residual <= 1e-5"

def _harmonicity_residual(R, d, p):
    padded = np.pad(R, 1)
    S = np.zeros_like(R)
    for ax in range(d):
        sl = [slice(1, -1)] * d
        sl[ax] = slice(2, None)
        S += padded[tuple(sl)]
        sl[ax] = slice(0, -2)
        S += padded[tuple(sl)]
    resid = np.abs(R - (p / (2 * d)) * S)
    M = R.shape[0] // 2
    resid[tuple(M for _ in range(d))] = 0.0  # origin row is pinned, not harmonic
    inner = tuple(slice(1, -1) for _ in range(d))
    return float(resid[inner].max())

def _suite_supermult(args):
    reps = max(int(30000 * args.budget), 3000)
    times = np.arange(0.0, 6.5, 0.5)
    curve = dual_curve(0.2, 1, "threshold", times, reps, args.seed, workers=args.threads)
    slack = estimate.supermultiplicativity_slack(curve)
    return slack >= 0.0, f"worst slack (>=0 passes): {slack:.4g}"

def _suite_heatkernel(args):
    for lam, d, t in ((0.5, 1, 1.0), (0.3, 2, 2.0)):
        a = spectral.heat_kernel_return(lam, d, t)
        b = spectral.heat_kernel_return_box(lam, d, t)
        if abs(a - b) > 1e-8:
            return False, f"series {a} vs box expm {b} at (lam={lam}, d={d}, t={t})"
    return True, "Bessel series matches truncated-box matrix exponential"

SUITES = {
    "coupling": _suite_coupling,
    "duality": _suite_duality,
    "eigencheck": _suite_eigencheck,
    "harmonicity": _suite_harmonicity,
    "supermultiplicativity": _suite_supermult,
    "heatkernel": _suite_heatkernel,
}


def cmd_verify(args):
    names = args.suite or list(SUITES)
    for name in names:
        if name not in SUITES:
            raise UsageError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    results = {}
    status = EXIT_OK
    for name in names:
        try:
            ok, detail = SUITES[name](args)
        except (RuntimeError, FloatingPointError, ValueError) as exc:
            ok, detail = False, f"numerical failure: {exc}"
            status = EXIT_NUMERICAL
        results[name] = {"pass": bool(ok), "detail": detail}
        if not ok and status == EXIT_OK:
            status = EXIT_VIOLATION
        print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    report = {"version": __version__, "seed": args.seed, "results": results}
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(json.dumps(report, indent=2) + "\n")
    return status


# ----------------------------------------------------------------- parser ---

def build_parser():
    parser = _Parser(prog="contact-decay", description=__doc__)
    parser.add_argument("--config", help="flat key=value config file; flags override")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", help="output path (default stdout)")
        p.add_argument("--threads", type=int,
                       default=int(os.environ.get("CONTACT_DECAY_THREADS", "1")))

    p = sub.add_parser("survive", help="survival curve + decay estimates")
    p.add_argument("--model", choices=engine.MODELS, default="threshold")
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--lambda", dest="lam", type=float, default=0.2)
    p.add_argument("--reps", type=int, default=10000)
    p.add_argument("--t-grid", default="0:6:0.5")
    p.add_argument("--source", choices=("dual", "forward"), default="dual",
                   help="dual is exact on the infinite lattice; forward uses a torus")
    p.add_argument("--L", type=int, default=64, help="torus side for --source forward")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    common(p)
    p.set_defaults(fn=cmd_survive)

    p = sub.add_parser("bounds", help="rigorous decay-rate sandwich")
    p.add_argument("--model", choices=engine.MODELS, default="threshold")
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--tol", type=float, default=spectral.FP_TOL)
    common(p)
    p.set_defaults(fn=cmd_bounds)

    p = sub.add_parser("theorem22", help="d -> infinity limit scan at rate lambda/d")
    p.add_argument("--model", choices=engine.MODELS, default="threshold")
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--d-list", type=lambda s: [int(v) for v in s.split(",") if v],
                   required=True)
    p.add_argument("--ihat-reps", type=int, default=0,
                   help="dual replicates for a Monte Carlo rate estimate per d (0 = skip)")
    common(p)
    p.set_defaults(fn=cmd_theorem22)

    p = sub.add_parser("verify", help="consolidated property suites")
    p.add_argument("--suite", action="append",
                   help=f"run only this suite (repeatable); default all of {sorted(SUITES)}")
    p.add_argument("--budget", type=float, default=1.0,
                   help="replicate-count multiplier for the stochastic suites")
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--L", type=int, default=8)
    p.add_argument("--lambda", dest="lam", type=float, default=0.1)
    p.add_argument("--t-max", type=float, default=5.0)
    p.add_argument("--perturb-pstar", type=float, default=0.0,
                   help="negative control: perturb the fixed point in eigencheck")
    common(p)
    p.set_defaults(fn=cmd_verify)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args, remaining = parser.parse_known_args(argv)
        if remaining:
            raise UsageError(f"unrecognized arguments: {' '.join(remaining)}")
        if args.config:
            file_vals = load_config(args.config)
            explicit = set(sys.argv[1:] if argv is None else argv)
            for key, val in file_vals.items():
                if hasattr(args, key) and not any(
                    tok.startswith(f"--{key.replace('_', '-')}") for tok in explicit
                ):
                    current = getattr(args, key)
                    cast = type(current) if current is not None else str
                    setattr(args, key, cast(val) if cast is not list else
                            [int(v) for v in val.split(",")])
        return args.fn(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (RuntimeError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
