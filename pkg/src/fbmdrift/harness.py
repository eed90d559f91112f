"""Experiment plans and the sweeps that produce convergence evidence.

A plan pins every knob (model, noise, sampling exponents, kernel,
bandwidth schedule, seeds); running it twice writes byte-identical
reports. Seeds are base_seed + rep, so any individual path can be
reproduced with the simulate subcommand. Worker processes rebuild the
model from its registry name, and chunk results are merged in seed
order, so the worker count never changes the output.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

try:
    import tomllib  # py >= 3.11
except ModuleNotFoundError:  # pragma: no cover - depends on interpreter
    import tomli as tomllib

from .errors import PlanInvalidError
from .estimator import (
    EstimatorConfig,
    decompose,
    default_x_grid,
    nw_estimate,
    smoothing_oracle_curve,
)
from .models import builtin_drift, builtin_kernel, validate_assumptions
from .report import ConvergenceReport, DecayTable
from .sde import make_grid, simulate_batch

__all__ = ["ExperimentPlan", "run_consistency", "run_term_decay"]

_PLAN_KEYS = {
    "sigma", "x0", "hurst", "gamma", "c_alpha", "refine", "burn_in",
    "bandwidth_c", "bandwidth_exponent", "fixed_h", "n_list", "seeds", "base_seed",
    "x_min", "x_max", "x_points", "coverage", "x_center",
    "mode", "min_mass", "workers",
}


@dataclass
class ExperimentPlan:
    """Everything a sweep needs, as plain data."""

    n_list: list
    model_name: str = "linear"
    model_params: dict = field(default_factory=dict)
    sigma: float = 0.5
    x0: float = 0.0
    hurst: float = 0.7
    gamma: float = 2.0
    c_alpha: float = 1.0
    refine: int = 16
    burn_in: float = 20.0
    kernel_name: str = "biweight"
    bandwidth_c: float = 1.0
    bandwidth_exponent: float = -0.2
    fixed_h: Optional[float] = None
    seeds: int = 8
    base_seed: int = 0
    x_min: Optional[float] = None
    x_max: Optional[float] = None
    x_points: int = 41
    coverage: float = 0.90
    x_center: Optional[float] = None
    mode: str = "plain"
    min_mass: float = 1e-6
    workers: int = 1

    def validate(self) -> None:
        if not self.n_list:
            raise PlanInvalidError("n_list must be nonempty")
        ns = [int(n) for n in self.n_list]
        if any(n < 2 for n in ns):
            raise PlanInvalidError(f"every n must be >= 2, got {ns}")
        if any(b >= a for a, b in zip(ns[1:], ns[:-1])):
            raise PlanInvalidError(f"n_list must be strictly increasing, got {ns}")
        if not 0.5 < self.hurst < 1.0:
            raise PlanInvalidError(
                f"drift estimation needs H in (1/2, 1), got {self.hurst}"
            )
        if not self.gamma > 1.0:
            raise PlanInvalidError(f"gamma must exceed 1, got {self.gamma}")
        if self.seeds < 1:
            raise PlanInvalidError(f"need at least one seed, got {self.seeds}")
        if self.base_seed < 0:
            raise PlanInvalidError(f"base_seed must be >= 0, got {self.base_seed}")
        if not self.bandwidth_c > 0.0:
            raise PlanInvalidError(f"bandwidth_c must be positive, got {self.bandwidth_c}")
        if not self.bandwidth_exponent < 0.0:
            raise PlanInvalidError(
                f"bandwidth must shrink with n: exponent < 0, got {self.bandwidth_exponent}"
            )
        if self.fixed_h is not None and not self.fixed_h > 0.0:
            raise PlanInvalidError(f"fixed_h must be positive, got {self.fixed_h}")
        if (self.x_min is None) != (self.x_max is None):
            raise PlanInvalidError("x_min and x_max must be given together")
        if self.x_min is not None and not self.x_min < self.x_max:
            raise PlanInvalidError(f"need x_min < x_max, got [{self.x_min}, {self.x_max}]")
        if self.x_points < 1:
            raise PlanInvalidError(f"x_points must be >= 1, got {self.x_points}")
        if self.mode not in ("plain", "wick_oracle"):
            raise PlanInvalidError(f"unknown mode {self.mode!r}")
        if self.workers < 1:
            raise PlanInvalidError(f"workers must be >= 1, got {self.workers}")
        if self.refine < 1:
            raise PlanInvalidError(f"refine must be >= 1, got {self.refine}")
        # fail early on bad model/kernel names or parameters
        self.model()
        self.kernel()

    @classmethod
    def from_mapping(cls, data: dict) -> "ExperimentPlan":
        data = dict(data)
        drift = data.pop("drift", {})
        kernel = data.pop("kernel", {})
        if not isinstance(drift, dict) or not isinstance(kernel, dict):
            raise PlanInvalidError("drift and kernel must be tables")
        # the pops below must not reach back into the caller's tables
        drift = dict(drift)
        kernel = dict(kernel)
        model_name = drift.pop("name", "linear")
        kernel_name = kernel.pop("name", "biweight")
        if kernel:
            raise PlanInvalidError(f"unknown kernel keys: {sorted(kernel)}")
        unknown = set(data) - _PLAN_KEYS
        if unknown:
            raise PlanInvalidError(f"unknown plan keys: {sorted(unknown)}")
        if "n_list" not in data:
            raise PlanInvalidError("plan needs n_list")
        kwargs = dict(data)
        kwargs["n_list"] = [int(n) for n in data["n_list"]]
        plan = cls(
            model_name=str(model_name),
            model_params={k: float(v) for k, v in drift.items()},
            kernel_name=str(kernel_name),
            **kwargs,
        )
        return plan

    @classmethod
    def from_file(cls, path: str) -> "ExperimentPlan":
        with open(path, "rb") as fh:
            try:
                data = tomllib.load(fh)
            except tomllib.TOMLDecodeError as e:
                raise PlanInvalidError(f"cannot parse plan file {path}: {e}") from None
        return cls.from_mapping(data)

    def to_mapping(self) -> dict:
        d = asdict(self)
        d["drift"] = {"name": d.pop("model_name"), **d.pop("model_params")}
        d["kernel"] = {"name": d.pop("kernel_name")}
        return d

    def bandwidth(self, n: int) -> float:
        if self.fixed_h is not None:
            return float(self.fixed_h)
        return self.bandwidth_c * float(n) ** self.bandwidth_exponent

    def model(self):
        return builtin_drift(self.model_name, **self.model_params)

    def kernel(self):
        return builtin_kernel(self.kernel_name)

    def seed_list(self) -> list:
        return [self.base_seed + r for r in range(self.seeds)]

    def x_grid_for(self, path) -> np.ndarray:
        if self.x_min is not None:
            return np.linspace(self.x_min, self.x_max, self.x_points)
        return default_x_grid(path, points=self.x_points, coverage=self.coverage)


def _chunks(items: list, size: int) -> list:
    return [items[i : i + size] for i in range(0, len(items), size)]


def _consistency_chunk(plan_map: dict, n: int, seed_chunk: list) -> dict:
    """Per-seed errors and curves for one (n, seed chunk). Top-level so a
    process pool can pickle it; rebuilds the model from plain data."""
    plan = ExperimentPlan.from_mapping(plan_map)
    model = plan.model()
    kernel = plan.kernel()
    grid = make_grid(n, plan.gamma, plan.c_alpha)
    h = plan.bandwidth(n)
    need_fine = plan.mode == "wick_oracle"
    paths = simulate_batch(
        model, plan.sigma, plan.x0, plan.hurst, grid, seed_chunk,
        refine=plan.refine, burn_in=plan.burn_in, store_fine=need_fine,
    )
    out = {"seed": [], "sup": [], "l2": [], "sup_vs_smoothed": [],
           "defined_frac": [], "curves": []}
    for path in paths:
        xg = plan.x_grid_for(path)
        cfg = EstimatorConfig(
            kernel=kernel, h=h, x_grid=xg, mode=plan.mode, min_mass=plan.min_mass
        )
        curve = nw_estimate(path, cfg)
        b_true = np.asarray(model.b(xg), dtype=np.float64)
        smoothed = smoothing_oracle_curve(model, kernel, h, xg)
        d = curve.defined
        err = np.abs(curve.b_hat[d] - b_true[d])
        err_smoothed = np.abs(curve.b_hat[d] - smoothed[d])
        out["seed"].append(int(path.seed))
        out["sup"].append(float(err.max()))
        out["l2"].append(float(np.sqrt(np.mean(err**2))))
        out["sup_vs_smoothed"].append(float(err_smoothed.max()))
        out["defined_frac"].append(float(d.mean()))
        out["curves"].append(
            {"x": [float(v) for v in xg],
             "b_hat": [float(v) if np.isfinite(v) else None for v in curve.b_hat]}
        )
    return out


def _decay_chunk(plan_map: dict, n: int, seed_chunk: list, x: float) -> dict:
    plan = ExperimentPlan.from_mapping(plan_map)
    model = plan.model()
    kernel = plan.kernel()
    grid = make_grid(n, plan.gamma, plan.c_alpha)
    h = plan.bandwidth(n)
    paths = simulate_batch(
        model, plan.sigma, plan.x0, plan.hurst, grid, seed_chunk,
        refine=plan.refine, burn_in=plan.burn_in, store_fine=True,
    )
    out = {"seed": [], "smoothing": [], "drift": [], "noise": [], "mass": []}
    cfg_grid = np.array([x])
    for path in paths:
        cfg = EstimatorConfig(
            kernel=kernel, h=h, x_grid=cfg_grid, mode=plan.mode, min_mass=plan.min_mass
        )
        term = decompose(path, cfg, x)
        out["seed"].append(int(path.seed))
        out["smoothing"].append(term.smoothing_residual)
        out["drift"].append(term.drift_term)
        out["noise"].append(term.noise_term)
        out["mass"].append(term.mass)
    return out


def _run_chunked(fn, plan: "ExperimentPlan", jobs: list) -> dict:
    """Run fn over (n, chunk, *extra) jobs, possibly in parallel; returns
    {(n, first_seed): result} for order-independent merging."""
    plan_map = plan.to_mapping()
    results = {}
    if plan.workers == 1:
        for job in jobs:
            results[(job[0], job[1][0])] = fn(plan_map, *job)
    else:
        with ProcessPoolExecutor(max_workers=plan.workers) as pool:
            futures = {
                (job[0], job[1][0]): pool.submit(fn, plan_map, *job) for job in jobs
            }
            for key, fut in futures.items():
                results[key] = fut.result()
    return results


def _merge_chunks(results: dict, n: int) -> dict:
    merged: dict = {}
    for (job_n, first_seed) in sorted(k for k in results if k[0] == n):
        part = results[(job_n, first_seed)]
        for key, vals in part.items():
            merged.setdefault(key, []).extend(vals)
    return merged


def _iqr(vals) -> float:
    lo, hi = np.percentile(np.asarray(vals, dtype=float), [25.0, 75.0])
    return float(hi - lo)


def run_consistency(plan: ExperimentPlan) -> ConvergenceReport:
    """Sweep n_list, estimate per seed, aggregate errors per n."""
    plan.validate()
    model = plan.model()
    kernel = plan.kernel()
    assess = validate_assumptions(model, plan.gamma, plan.hurst, kernel)
    seeds = plan.seed_list()
    chunk_size = 8 if plan.mode == "plain" else 4
    jobs = [(int(n), chunk) for n in plan.n_list for chunk in _chunks(seeds, chunk_size)]
    results = _run_chunked(_consistency_chunk, plan, jobs)

    rows, per_seed, curves = [], {}, {}
    for n in plan.n_list:
        n = int(n)
        m = _merge_chunks(results, n)
        grid = make_grid(n, plan.gamma, plan.c_alpha)
        rows.append(
            {
                "n": n,
                "t_n": grid.t_n,
                "alpha_n": grid.alpha_n,
                "h": plan.bandwidth(n),
                "sup_err_median": float(np.median(m["sup"])),
                "sup_err_iqr": _iqr(m["sup"]),
                "l2_err_median": float(np.median(m["l2"])),
                "l2_err_iqr": _iqr(m["l2"]),
                "sup_vs_smoothed_median": float(np.median(m["sup_vs_smoothed"])),
                "sup_vs_smoothed_iqr": _iqr(m["sup_vs_smoothed"]),
                "defined_min_frac": float(min(m["defined_frac"])),
            }
        )
        per_seed[str(n)] = {
            "seed": m["seed"], "sup": m["sup"], "l2": m["l2"],
            "sup_vs_smoothed": m["sup_vs_smoothed"],
        }
        if plan.x_min is not None:
            xg = np.asarray(m["curves"][0]["x"], dtype=float)
            stack = np.array(
                [[np.nan if v is None else v for v in c["b_hat"]] for c in m["curves"]]
            )
            med = np.nanmedian(stack, axis=0)
            curves[str(n)] = {
                "x": [float(v) for v in xg],
                "median": [float(v) if np.isfinite(v) else None for v in med],
                "true": [float(v) for v in np.asarray(model.b(xg), dtype=float)],
            }
        else:
            c0 = m["curves"][0]
            xg = np.asarray(c0["x"], dtype=float)
            curves[str(n)] = {
                "x": c0["x"],
                "median": c0["b_hat"],
                "true": [float(v) for v in np.asarray(model.b(xg), dtype=float)],
            }
    return ConvergenceReport(
        plan=plan.to_mapping(),
        assumptions=assess.to_json_dict(),
        flag_string=assess.flag_string(),
        rows=rows,
        per_seed=per_seed,
        curves=curves,
    )


def run_term_decay(plan: ExperimentPlan) -> DecayTable:
    """Sweep n_list and track the decomposition terms at one point."""
    plan.validate()
    model = plan.model()
    kernel = plan.kernel()
    assess = validate_assumptions(model, plan.gamma, plan.hurst, kernel)
    if plan.x_center is not None:
        x = float(plan.x_center)
    elif plan.x_min is not None:
        x = 0.5 * (plan.x_min + plan.x_max)
    else:
        x = 0.0
    seeds = plan.seed_list()

    rows, per_seed = [], {}
    for n in plan.n_list:
        n = int(n)
        chunk_size = 4 if n * plan.refine > 200_000 else 8
        jobs = [(n, chunk, x) for chunk in _chunks(seeds, chunk_size)]
        results = _run_chunked(_decay_chunk, plan, jobs)
        m = _merge_chunks(results, n)
        mass = np.asarray(m["mass"], dtype=float)
        smoothing = np.asarray(m["smoothing"], dtype=float)
        noise = np.asarray(m["noise"], dtype=float)
        ok = mass >= plan.min_mass
        if not ok.any():
            raise PlanInvalidError(
                f"denominator mass below {plan.min_mass:g} for every seed at "
                f"n={n}; move x_center into the visited range"
            )
        s_ratio = np.abs(smoothing[ok] / mass[ok])
        n_ratio = noise[ok] / mass[ok]
        n_raw = noise[ok]
        grid = make_grid(n, plan.gamma, plan.c_alpha)
        rows.append(
            {
                "n": n,
                "t_n": grid.t_n,
                "alpha_n": grid.alpha_n,
                "h": plan.bandwidth(n),
                "smoothing_abs_median": float(np.median(s_ratio)),
                "smoothing_abs_mean": float(np.mean(s_ratio)),
                "noise_mean": float(np.mean(n_ratio)),
                "noise_rms": float(np.sqrt(np.mean(n_ratio**2))),
                "noise_stderr": float(np.std(n_ratio, ddof=1) / math.sqrt(n_ratio.size))
                if n_ratio.size > 1 else 0.0,
                "noise_raw_mean": float(np.mean(n_raw)),
                "noise_raw_sq_mean": float(np.mean(n_raw**2)),
                "noise_raw_stderr": float(np.std(n_raw, ddof=1) / math.sqrt(n_raw.size))
                if n_raw.size > 1 else 0.0,
            }
        )
        per_seed[str(n)] = {
            "seed": m["seed"],
            "smoothing": [float(v) for v in m["smoothing"]],
            "drift": [float(v) for v in m["drift"]],
            "noise": [float(v) for v in m["noise"]],
            "mass": [float(v) for v in m["mass"]],
        }

    def _slope(xs, ys):
        xs = np.log(np.asarray(xs, dtype=float))
        ys = np.log(np.asarray(ys, dtype=float))
        if xs.size < 2:
            return float("nan")
        return float(np.polyfit(xs, ys, 1)[0])

    slopes = {
        "smoothing_vs_alpha": _slope(
            [r["alpha_n"] for r in rows], [r["smoothing_abs_median"] for r in rows]
        ),
        "noise_rms_vs_tn": _slope(
            [r["t_n"] for r in rows], [r["noise_rms"] for r in rows]
        ),
        "noise_sq_vs_tn": _slope(
            [r["t_n"] for r in rows], [r["noise_raw_sq_mean"] for r in rows]
        ),
    }
    return DecayTable(
        plan=plan.to_mapping(),
        assumptions=assess.to_json_dict(),
        flag_string=assess.flag_string(),
        x=x,
        rows=rows,
        slopes=slopes,
        per_seed=per_seed,
    )
