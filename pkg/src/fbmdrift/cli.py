"""Command-line interface.

Every experiment subcommand requires an explicit --seed (nothing falls
back to the clock), writes machine-readable outputs plus a meta.json
echoing the resolved configuration, and exits 2 on validation problems
(with a JSON error object on stderr) or 1 on I/O failures.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - depends on interpreter
    import tomli as tomllib

from . import __version__
from .errors import FbmDriftError, InvalidParamsError
from .estimator import (
    EstimatorConfig,
    decompose_curve,
    default_x_grid,
    nw_estimate,
)
from .ergodic import (
    builtin_test_function,
    ergodic_summary,
    stationary_moment,
    within_proven_regime,
)
from .fbm import (
    circulant_eigenvalues,
    fbm_covariance,
    fgn_batch,
    increment_autocovariance,
    sample_fbm,
)
from .harness import ExperimentPlan, run_consistency, run_term_decay
from .models import builtin_drift, builtin_kernel, validate_assumptions
from .report import emit_decay, emit_report
from .sde import make_grid, simulate, simulate_batch

__all__ = ["main"]


def _err(exc: BaseException) -> None:
    payload = {"error": type(exc).__name__, "message": str(exc)}
    print(json.dumps(payload, sort_keys=True), file=sys.stderr)


def _write_json(path: str, obj: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _resolve_workers(value) -> int:
    if value is not None:
        return int(value)
    env = os.environ.get("FBMDRIFT_WORKERS")
    if env:
        return int(env)
    return max(1, os.cpu_count() or 1)


def _load_config(path: str) -> dict:
    """Flatten a TOML config into argparse dest names (drift.name -> model,
    drift.* -> model params, kernel.name -> kernel, rest verbatim)."""
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    flat = {}
    drift = data.pop("drift", {})
    kernel = data.pop("kernel", {})
    if "name" in drift:
        flat["model"] = drift.pop("name")
    for k, v in drift.items():
        flat[k] = v
    if "name" in kernel:
        flat["kernel"] = kernel.pop("name")
    flat.update(data)
    return flat


def _require_args(args, *dests) -> None:
    """Enforce arguments that may come from either a flag or the config
    file; argparse-level required=True would reject config-only runs."""
    missing = [d for d in dests if getattr(args, d, None) is None]
    if missing:
        flags = ", ".join("--" + d.replace("_", "-") for d in missing)
        raise InvalidParamsError(f"missing required arguments: {flags}")


def _model_from_args(args) -> object:
    params = {}
    if args.model in ("linear", "linear_plus_sine") and args.theta is not None:
        params["theta"] = args.theta
    if args.model == "linear_plus_sine" and args.a is not None:
        params["a"] = args.a
    if args.model == "constant" and args.level is not None:
        params["level"] = args.level
    return builtin_drift(args.model, **params)


def _add_sim_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", default="linear",
                   choices=["linear", "cubic", "linear_plus_sine", "constant"],
                   help="drift model")
    p.add_argument("--theta", type=float, default=None, help="mean-reversion rate")
    p.add_argument("--a", type=float, default=None, help="sine amplitude (linear_plus_sine)")
    p.add_argument("--level", type=float, default=None, help="drift value (constant)")
    p.add_argument("--sigma", type=float, default=0.5, help="noise scale")
    p.add_argument("--x0", type=float, default=0.0, help="state at the start of burn-in")
    p.add_argument("--hurst", type=float, default=0.7, help="Hurst index")
    p.add_argument("--n", type=int, default=1024, help="number of observation steps")
    p.add_argument("--gamma", type=float, default=2.0, help="sampling rate exponent")
    p.add_argument("--c-alpha", type=float, default=1.0, help="step-size constant")
    p.add_argument("--refine", type=int, default=16, help="fine steps per observation step")
    p.add_argument("--burn-in", type=float, default=20.0, help="discarded warmup time")
    p.add_argument("--seed", type=int, default=None,
                   help="path seed (required, via flag or config)")


def _add_est_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--kernel", default="biweight", choices=["biweight", "triweight"])
    p.add_argument("--mode", default="plain", choices=["plain", "wick-oracle"])
    p.add_argument("--bandwidth", type=float, default=None,
                   help="kernel bandwidth (default: n^-0.2)")
    p.add_argument("--x-min", type=float, default=None)
    p.add_argument("--x-max", type=float, default=None)
    p.add_argument("--x-points", type=int, default=41)
    p.add_argument("--coverage", type=float, default=0.90,
                   help="observed mass spanned by the automatic grid")
    p.add_argument("--min-mass", type=float, default=1e-6,
                   help="denominator mass below which a point is undefined")


def _x_grid_from_args(args, path) -> np.ndarray:
    if (args.x_min is None) != (args.x_max is None):
        raise InvalidParamsError("--x-min and --x-max must be given together")
    if args.x_min is not None:
        if not args.x_min < args.x_max:
            raise InvalidParamsError(
                f"need --x-min < --x-max, got [{args.x_min}, {args.x_max}]"
            )
        return np.linspace(args.x_min, args.x_max, args.x_points)
    return default_x_grid(path, points=args.x_points, coverage=args.coverage)


def _simulate_from_args(args, store_fine: bool):
    model = _model_from_args(args)
    grid = make_grid(args.n, args.gamma, args.c_alpha)
    return simulate(
        model, args.sigma, args.x0, args.hurst, grid, seed=args.seed,
        refine=args.refine, burn_in=args.burn_in, store_fine=store_fine,
    )


def _meta(args, path, extra: dict = ()) -> dict:
    meta = path.meta()
    meta["version"] = __version__
    meta.update(dict(extra))
    return meta


def cmd_simulate(args) -> int:
    _require_args(args, "seed", "out")
    path = _simulate_from_args(args, store_fine=bool(args.emit_fine))
    os.makedirs(args.out, exist_ok=True)
    path.write_csv(os.path.join(args.out, "path.csv"))
    if args.emit_fine:
        path.write_fine_csv(os.path.join(args.out, "path_fine.csv"))
    _write_json(os.path.join(args.out, "meta.json"), _meta(args, path))
    return 0


def _estimation_setup(args):
    if not args.hurst > 0.5:
        raise InvalidParamsError(
            f"drift estimation needs H > 1/2, got {args.hurst}"
        )
    mode = args.mode.replace("-", "_")
    need_fine = mode == "wick_oracle" or args.cmd == "decompose"
    path = _simulate_from_args(args, store_fine=need_fine)
    h = args.bandwidth if args.bandwidth is not None else float(args.n) ** -0.2
    cfg = EstimatorConfig(
        kernel=builtin_kernel(args.kernel),
        h=h,
        x_grid=_x_grid_from_args(args, path),
        mode=mode,
        min_mass=args.min_mass,
    )
    return path, cfg


def cmd_estimate(args) -> int:
    _require_args(args, "seed", "out")
    path, cfg = _estimation_setup(args)
    curve = nw_estimate(path, cfg)
    os.makedirs(args.out, exist_ok=True)
    curve.write_csv(os.path.join(args.out, "curve.csv"))
    curve.write_json(os.path.join(args.out, "curve.json"))
    _write_json(
        os.path.join(args.out, "meta.json"),
        _meta(args, path, {"h": cfg.h, "kernel": cfg.kernel.name, "mode": cfg.mode,
                           "min_mass": cfg.min_mass}),
    )
    return 0


def cmd_decompose(args) -> int:
    _require_args(args, "seed", "out")
    path, cfg = _estimation_setup(args)
    curve = decompose_curve(path, cfg)
    os.makedirs(args.out, exist_ok=True)
    curve.write_csv(os.path.join(args.out, "curve.csv"))
    curve.write_json(os.path.join(args.out, "curve.json"))
    _write_json(
        os.path.join(args.out, "meta.json"),
        _meta(args, path, {"h": cfg.h, "kernel": cfg.kernel.name, "mode": cfg.mode,
                           "min_mass": cfg.min_mass}),
    )
    return 0


def cmd_ergodic_check(args) -> int:
    _require_args(args, "seed")
    model = _model_from_args(args)
    phi = builtin_test_function(args.phi)
    grid = make_grid(args.n, args.gamma, args.c_alpha)
    seeds = [args.seed + r for r in range(args.seeds)]
    paths = simulate_batch(
        model, args.sigma, args.x0, args.hurst, grid, seeds,
        refine=args.refine, burn_in=args.burn_in, store_fine=True,
    )
    out = ergodic_summary(paths, phi)
    out["within_proven_regime"] = within_proven_regime(model, args.gamma, args.hurst, phi)
    out["gamma"] = args.gamma
    out["hurst"] = args.hurst
    out["model"] = model.name
    if args.reference != "none":
        method = {"auto": "auto", "closed-form": "closed_form", "simulate": "simulate"}[
            args.reference
        ]
        out["reference"] = stationary_moment(
            model, args.sigma, args.hurst, phi, method=method
        )
    if args.out:
        _write_json(args.out, out)
    else:
        print(json.dumps(out, sort_keys=True, indent=2))
    return 0


def _plan_from_args(args) -> ExperimentPlan:
    if args.plan:
        plan = ExperimentPlan.from_file(args.plan)
    else:
        plan = ExperimentPlan(n_list=[])
    if args.n_list:
        plan.n_list = [int(v) for v in args.n_list.split(",") if v]
    if args.seeds is not None:
        plan.seeds = args.seeds
    if args.base_seed is not None:
        plan.base_seed = args.base_seed
    if args.mode is not None:
        plan.mode = args.mode.replace("-", "_")
    plan.workers = _resolve_workers(args.workers)
    return plan


def cmd_convergence(args) -> int:
    plan = _plan_from_args(args)
    report = run_consistency(plan)
    written = emit_report(report, args.out, formats=tuple(args.formats.split(",")))
    for p in written:
        print(p)
    return 0


def cmd_term_decay(args) -> int:
    plan = _plan_from_args(args)
    if args.x is not None:
        plan.x_center = args.x
    if args.fixed_h is not None:
        plan.fixed_h = args.fixed_h
        plan.validate()
    table = run_term_decay(plan)
    written = emit_decay(table, args.out, formats=tuple(args.formats.split(",")))
    for p in written:
        print(p)
    return 0


def cmd_fbm_selftest(args) -> int:
    """Quick statistical and structural checks of the fBm sampler."""
    h = args.hurst
    n = args.n
    n_paths = args.paths
    checks = []

    lam = circulant_eigenvalues(n, 1.0, 0.5)
    checks.append(("eigenvalues_white_noise", bool(np.allclose(lam, 1.0, atol=1e-10)),
                   f"H=0.5: max |lambda - 1| = {np.max(np.abs(lam - 1.0)):.2e}"))

    ok = True
    for hh in (0.55, 0.6, 0.7, 0.8, 0.9):
        lam = circulant_eigenvalues(n, 1.0, hh)
        ok &= bool(lam.min() >= 0.0)
    checks.append(("eigenvalues_nonnegative", ok, "H in {0.55..0.9}"))

    fgn = fgn_batch(n, 1.0, h, [args.seed + i for i in range(n_paths)])
    lags = np.arange(0, 6)
    exact = increment_autocovariance(lags, 1.0, h)
    worst = 0.0
    for k in lags:
        prod = fgn[:, : n - k] * fgn[:, k:] if k else fgn * fgn
        est = float(prod.mean())
        se = float(prod.std() / np.sqrt(prod.size))
        worst = max(worst, abs(est - exact[k]) / max(se, 1e-12))
        del prod
    checks.append(("increment_autocovariance", bool(worst < 5.0),
                   f"worst z-score over lags 0..5: {worst:.2f}"))

    b = np.cumsum(fgn, axis=1)
    mid = n // 2
    var_mid = float(b[:, mid - 1].var())
    expect = fbm_covariance(float(mid), float(mid), h)
    z = abs(var_mid - expect) / (expect * np.sqrt(2.0 / n_paths))
    checks.append(("path_variance_growth", bool(z < 5.0),
                   f"var(B_t)/t^2H at t={mid}: ratio {var_mid / expect:.3f}"))

    a = sample_fbm(256, 0.25, h, args.seed, method="circulant")
    c = sample_fbm(256, 0.25, h, args.seed, method="circulant")
    checks.append(("determinism", bool(np.array_equal(a.values, c.values)),
                   "same seed, identical path"))

    chol = sample_fbm(256, 0.25, h, args.seed, method="cholesky")
    checks.append(("cholesky_runs", bool(np.isfinite(chol.values).all()),
                   "dense factorization cross-check path is finite"))

    width = max(len(name) for name, _, _ in checks) + 2
    failed = 0
    for name, ok, detail in checks:
        status = "PASS" if ok else "FAIL"
        print(f"{name:<{width}} {status}  {detail}")
        failed += 0 if ok else 1
    print(f"{failed} of {len(checks)} checks failed" if failed
          else f"all {len(checks)} checks passed")
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fbmdrift",
        description="Simulate SDEs driven by fractional Brownian motion and "
                    "estimate their drift nonparametrically.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="cmd", required=True)
    kw = {"formatter_class": argparse.ArgumentDefaultsHelpFormatter}

    p = sub.add_parser("simulate", help="simulate one path and write CSV + meta", **kw)
    p.add_argument("--config", default=None, help="TOML config with defaults")
    _add_sim_args(p)
    p.add_argument("--emit-fine", action="store_true", help="also write the fine grid")
    p.add_argument("--out", default=None, help="output directory (required)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="simulate and estimate the drift curve", **kw)
    p.add_argument("--config", default=None)
    _add_sim_args(p)
    _add_est_args(p)
    p.add_argument("--out", default=None, help="output directory (required)")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("decompose", help="estimate with the numerator split into terms", **kw)
    p.add_argument("--config", default=None)
    _add_sim_args(p)
    _add_est_args(p)
    p.add_argument("--out", default=None, help="output directory (required)")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("ergodic-check", help="compare ergodic averages to the stationary law", **kw)
    p.add_argument("--config", default=None)
    _add_sim_args(p)
    p.add_argument("--seeds", type=int, default=1, help="number of pooled paths")
    p.add_argument("--phi", default="square", choices=["one", "identity", "square"])
    p.add_argument("--reference", default="auto",
                   choices=["auto", "closed-form", "simulate", "none"])
    p.add_argument("--out", default=None, help="JSON output file (default: stdout)")
    p.set_defaults(func=cmd_ergodic_check)

    for name, fn, help_ in (
        ("convergence", cmd_convergence, "run a consistency sweep and emit reports"),
        ("term-decay", cmd_term_decay, "track decomposition terms across n"),
    ):
        p = sub.add_parser(name, help=help_, **kw)
        p.add_argument("--plan", default=None, help="TOML plan file")
        p.add_argument("--n-list", default=None, help="comma-separated n values")
        p.add_argument("--seeds", type=int, default=None, help="replications per n")
        p.add_argument("--base-seed", type=int, default=None)
        p.add_argument("--mode", default=None, choices=["plain", "wick-oracle"])
        p.add_argument("--workers", type=int, default=None,
                       help="worker processes (default: FBMDRIFT_WORKERS, "
                            "else all cores)")
        p.add_argument("--formats", default="csv,json,svg")
        p.add_argument("--out", required=True)
        if name == "term-decay":
            p.add_argument("--x", type=float, default=None, help="evaluation point")
            p.add_argument("--fixed-h", type=float, default=None,
                           help="freeze the bandwidth across the sweep")
        p.set_defaults(func=fn)

    p = sub.add_parser("fbm-selftest", help="statistical checks of the fBm sampler", **kw)
    p.add_argument("--hurst", type=float, default=0.7)
    p.add_argument("--n", type=int, default=2048)
    p.add_argument("--paths", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_fbm_selftest)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        try:
            defaults = _load_config(args.config)
        except OSError as e:
            _err(e)
            return 1
        except tomllib.TOMLDecodeError as e:
            _err(e)
            return 2
        sub = {a.dest for a in parser._subparsers._group_actions[0].choices[args.cmd]._actions}
        unknown = set(defaults) - sub
        if unknown:
            _err(InvalidParamsError(f"unknown config keys: {sorted(unknown)}"))
            return 2
        # re-parse with config values as defaults so explicit flags win
        subparser = parser._subparsers._group_actions[0].choices[args.cmd]
        subparser.set_defaults(**defaults)
        args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FbmDriftError as e:
        _err(e)
        return 2
    except ValueError as e:
        _err(e)
        return 2
    except OSError as e:
        _err(e)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
