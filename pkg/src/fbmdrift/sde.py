"""Euler simulation of dX = b(X) dt + sigma dB^H on a refined grid.

The observation grid has n steps of width alpha_n = c_alpha * n^(1/gamma - 1),
so the horizon t_n = n * alpha_n grows while the step shrinks. Integration
runs on a finer grid (refine sub-steps per observation step) and starts
burn_in time units before t = 0; the burn-in segment is discarded so X(0)
is approximately a draw from the stationary law.

Observed values are shared with the fine grid by construction: obs[k] is
the fine state at index k * refine, bit for bit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import fbm
from .errors import InvalidGammaError, InvalidParamsError, NonFiniteStateError
from .fbm import FbmPath, HurstIndex
from .models import DriftModel

__all__ = [
    "ObservationGrid",
    "SamplePath",
    "make_grid",
    "simulate",
    "simulate_batch",
    "euler_path",
]


@dataclass(frozen=True)
class ObservationGrid:
    """Uniform observation times t_k = k * alpha_n, k = 0..n."""

    n: int
    gamma: float
    c_alpha: float
    alpha_n: float
    times: np.ndarray

    def __post_init__(self) -> None:
        t = np.asarray(self.times, dtype=np.float64)
        t.setflags(write=False)
        object.__setattr__(self, "times", t)

    @property
    def t_n(self) -> float:
        return float(self.times[-1])


def make_grid(n: int, gamma: float, c_alpha: float = 1.0) -> ObservationGrid:
    """Build the observation grid for n steps at rate exponent gamma > 1."""
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise InvalidParamsError(f"need integer n >= 1, got {n!r}")
    gamma = float(gamma)
    if not gamma > 1.0:
        raise InvalidGammaError(f"gamma must exceed 1, got {gamma}")
    c_alpha = float(c_alpha)
    if not c_alpha > 0.0:
        raise InvalidParamsError(f"c_alpha must be positive, got {c_alpha}")
    alpha_n = c_alpha * float(n) ** (-1.0 + 1.0 / gamma)
    times = np.arange(n + 1) * alpha_n
    return ObservationGrid(n=int(n), gamma=gamma, c_alpha=c_alpha, alpha_n=alpha_n, times=times)


@dataclass(frozen=True)
class SamplePath:
    """One simulated trajectory with its observation-grid view.

    ``obs[k]`` equals ``fine_values[k * refine]`` exactly. When the path
    was simulated with ``store_fine=False`` the fine arrays and the
    driving ``fine_fbm`` are None and operations that need them raise.

    ``fine_fbm`` is the driving fBm rebased to the observation window
    (value 0 at t = 0); regenerating it from the seed reproduces the
    burn-in segment too, which is discarded here.
    """

    grid: ObservationGrid
    obs: np.ndarray
    model: DriftModel
    sigma: float
    x0: float
    hurst: HurstIndex
    seed: int
    refine: int
    burn_in: float
    fine_times: Optional[np.ndarray] = None
    fine_values: Optional[np.ndarray] = None
    fine_fbm: Optional[FbmPath] = None

    def __post_init__(self) -> None:
        obs = np.asarray(self.obs, dtype=np.float64)
        obs.setflags(write=False)
        object.__setattr__(self, "obs", obs)
        for name in ("fine_times", "fine_values"):
            arr = getattr(self, name)
            if arr is not None:
                arr = np.asarray(arr, dtype=np.float64)
                arr.setflags(write=False)
                object.__setattr__(self, name, arr)

    @property
    def has_fine(self) -> bool:
        return self.fine_values is not None

    @property
    def delta(self) -> float:
        return self.grid.alpha_n / self.refine

    def meta(self) -> dict:
        return {
            "model": self.model.name,
            "model_params": dict(self.model.params),
            "sigma": self.sigma,
            "x0": self.x0,
            "hurst": self.hurst.value,
            "n": self.grid.n,
            "gamma": self.grid.gamma,
            "c_alpha": self.grid.c_alpha,
            "alpha_n": self.grid.alpha_n,
            "t_n": self.grid.t_n,
            "refine": self.refine,
            "delta": self.delta,
            "burn_in": self.burn_in,
            "seed": int(self.seed),
        }

    def write_csv(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("t,X\n")
            for t, x in zip(self.grid.times, self.obs):
                fh.write(f"{t:.17g},{x:.17g}\n")

    def write_fine_csv(self, path: str) -> None:
        if not self.has_fine:
            from .errors import MissingFineGridError

            raise MissingFineGridError("path was simulated without the fine grid")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("t,X,B\n")
            for t, x, b in zip(self.fine_times, self.fine_values, self.fine_fbm.values):
                fh.write(f"{t:.17g},{x:.17g},{b:.17g}\n")


def _euler(model: DriftModel, sigma: float, x0: float, delta: float, fgn: np.ndarray) -> np.ndarray:
    """Euler recursion over fgn rows of shape (steps, width); returns the
    (steps + 1, width) array of states."""
    steps, width = fgn.shape
    out = np.empty((steps + 1, width), dtype=np.float64)
    x = np.full(width, float(x0), dtype=np.float64)
    out[0] = x
    b = model.b
    d = float(delta)
    s = float(sigma)
    with np.errstate(over="ignore", invalid="ignore"):
        for j in range(steps):
            x = x + (b(x) * d + s * fgn[j])
            out[j + 1] = x
    return out


def euler_path(
    model: DriftModel, sigma: float, x0: float, delta: float, increments: np.ndarray
) -> np.ndarray:
    """Single Euler trajectory driven by the given noise increments."""
    inc = np.asarray(increments, dtype=np.float64)
    return _euler(model, sigma, x0, delta, inc[:, None])[:, 0]


def simulate_batch(
    model: DriftModel,
    sigma: float,
    x0: float,
    hurst,
    grid: ObservationGrid,
    seeds: Sequence[int],
    refine: int = 16,
    burn_in: float = 20.0,
    store_fine: bool = True,
) -> list:
    """Simulate one path per seed with a shared batched Euler sweep.

    Results are bit-identical to calling :func:`simulate` per seed: each
    seed keys its own noise stream, and the Euler update applies the same
    scalar arithmetic elementwise.
    """
    if not isinstance(refine, (int, np.integer)) or refine < 1:
        raise InvalidParamsError(f"refine must be an integer >= 1, got {refine!r}")
    sigma = float(sigma)
    if not (math.isfinite(sigma) and sigma >= 0.0):
        raise InvalidParamsError(f"sigma must be finite and >= 0, got {sigma}")
    x0 = float(x0)
    if not math.isfinite(x0):
        raise InvalidParamsError(f"x0 must be finite, got {x0}")
    burn_in = float(burn_in)
    if burn_in < 0.0:
        raise InvalidParamsError(f"burn_in must be >= 0, got {burn_in}")
    h = HurstIndex(float(hurst))
    seeds = [int(s) for s in seeds]
    if not seeds:
        return []

    delta = grid.alpha_n / refine
    n_fine = grid.n * refine
    n_burn = int(math.ceil(burn_in / delta)) if burn_in > 0.0 else 0
    total = n_burn + n_fine

    fgn = fbm.fgn_batch(total, delta, h, seeds)
    states = _euler(model, sigma, x0, delta, np.ascontiguousarray(fgn.T))

    bad = ~np.isfinite(states[-1])
    if bad.any():
        bad_seed = seeds[int(np.argmax(bad))]
        raise NonFiniteStateError(
            f"Euler state became non-finite (seed {bad_seed}, delta={delta:g}); "
            f"the drift may not be dissipative at this step size"
        )

    window = states[n_burn:]
    obs = window[::refine]
    fine_times = np.arange(n_fine + 1) * delta

    paths = []
    for i, seed in enumerate(seeds):
        if store_fine:
            noise = np.concatenate([[0.0], np.cumsum(fgn[i, n_burn:])])
            driving = FbmPath(times=fine_times, values=noise, hurst=h, seed=seed)
            paths.append(
                SamplePath(
                    grid=grid, obs=obs[:, i], model=model, sigma=sigma, x0=x0,
                    hurst=h, seed=seed, refine=int(refine), burn_in=burn_in,
                    fine_times=fine_times, fine_values=window[:, i], fine_fbm=driving,
                )
            )
        else:
            paths.append(
                SamplePath(
                    grid=grid, obs=obs[:, i], model=model, sigma=sigma, x0=x0,
                    hurst=h, seed=seed, refine=int(refine), burn_in=burn_in,
                )
            )
    return paths


def simulate(
    model: DriftModel,
    sigma: float,
    x0: float,
    hurst,
    grid: ObservationGrid,
    seed: int,
    refine: int = 16,
    burn_in: float = 20.0,
    store_fine: bool = True,
) -> SamplePath:
    """Simulate a single path; see :func:`simulate_batch`."""
    return simulate_batch(
        model, sigma, x0, hurst, grid, [seed],
        refine=refine, burn_in=burn_in, store_fine=store_fine,
    )[0]
