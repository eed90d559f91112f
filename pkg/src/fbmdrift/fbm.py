"""Fractional Brownian motion: exact covariance, sampling, path statistics.

Sampling uses circulant embedding of the increment covariance, i.e. the
Davies-Harte construction: embed the (n x n) Toeplitz covariance of the
increments in a (2n x 2n) circulant matrix, diagonalize it with one FFT,
and color a Hermitian complex Gaussian vector. Cost is O(n log n) and the
law is exact whenever the embedding eigenvalues are nonnegative, which
holds for fractional Gaussian noise at every Hurst index in (0, 1).

A dense Cholesky path ("cholesky" method) is kept as a slow cross-check
for small n.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Literal, Union

import numpy as np

from .errors import InvalidExponentError, NegativeEigenvalueError
from .rngutil import substream

__all__ = [
    "HurstIndex",
    "FbmPath",
    "fbm_covariance",
    "increment_autocovariance",
    "circulant_eigenvalues",
    "sample_fbm",
    "fgn_batch",
    "holder_coefficient",
]

_CHOLESKY_MAX_N = 512
_EIG_REL_TOL = 1e-8

SampleMethod = Literal["circulant", "cholesky"]


@dataclass(frozen=True)
class HurstIndex:
    """Hurst index, constrained to the open interval (0, 1)."""

    value: float

    def __post_init__(self) -> None:
        v = float(self.value)
        if not np.isfinite(v) or not 0.0 < v < 1.0:
            raise InvalidExponentError(
                f"Hurst index must lie in (0, 1), got {self.value!r}"
            )
        object.__setattr__(self, "value", v)

    def __float__(self) -> float:
        return self.value


def _hurst_value(hurst: Union[float, HurstIndex]) -> float:
    if isinstance(hurst, HurstIndex):
        return hurst.value
    return HurstIndex(float(hurst)).value


@dataclass(frozen=True)
class FbmPath:
    """A sampled fBm path on a uniform grid, pinned to zero at t = 0.

    Arrays are stored read-only; ``times`` has one more entry than there
    are increments and ``values[0]`` is exactly 0.
    """

    times: np.ndarray
    values: np.ndarray
    hurst: HurstIndex
    seed: int
    method: str = field(default="circulant")

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=np.float64)
        values = np.asarray(self.values, dtype=np.float64)
        if times.ndim != 1 or times.shape != values.shape:
            raise ValueError("times and values must be 1-d arrays of equal length")
        if times.size < 2:
            raise ValueError("a path needs at least two grid points")
        if values[0] != 0.0:
            raise ValueError("fBm paths start at zero")
        dt = times[1] - times[0]
        if dt <= 0.0:
            raise ValueError("grid must be increasing")
        gaps = np.diff(times)
        if np.max(np.abs(gaps - dt)) > 1e-9 * dt:
            raise ValueError("grid must be uniform")
        times.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)
        if not isinstance(self.hurst, HurstIndex):
            object.__setattr__(self, "hurst", HurstIndex(float(self.hurst)))

    @property
    def n_increments(self) -> int:
        return self.times.size - 1

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def duration(self) -> float:
        return float(self.times[-1] - self.times[0])

    def increments(self) -> np.ndarray:
        return np.diff(self.values)

    def write_csv(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("t,value\n")
            for t, b in zip(self.times, self.values):
                fh.write(f"{t:.17g},{b:.17g}\n")

    def to_json_dict(self) -> dict:
        return {
            "hurst": self.hurst.value,
            "dt": self.dt,
            "seed": int(self.seed),
            "values": [float(v) for v in self.values],
        }

    def write_json(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh, sort_keys=True)
            fh.write("\n")


def fbm_covariance(s, t, hurst: Union[float, HurstIndex]):
    """Exact fBm covariance (|s|^2H + |t|^2H - |t - s|^2H) / 2.

    Accepts scalars or broadcastable arrays of time points.
    """
    h2 = 2.0 * _hurst_value(hurst)
    s = np.asarray(s, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    out = 0.5 * (np.abs(s) ** h2 + np.abs(t) ** h2 - np.abs(t - s) ** h2)
    if out.ndim == 0:
        return float(out)
    return out


def increment_autocovariance(lags, dt: float, hurst: Union[float, HurstIndex]):
    """Autocovariance of fGn increments at the given integer lags."""
    h2 = 2.0 * _hurst_value(hurst)
    k = np.abs(np.asarray(lags, dtype=np.float64))
    out = 0.5 * float(dt) ** h2 * (
        (k + 1.0) ** h2 - 2.0 * k ** h2 + np.abs(k - 1.0) ** h2
    )
    if out.ndim == 0:
        return float(out)
    return out


def circulant_eigenvalues(n: int, dt: float, hurst: Union[float, HurstIndex]) -> np.ndarray:
    """Eigenvalues of the 2n x 2n circulant embedding of the fGn covariance.

    Raises :class:`NegativeEigenvalueError` if any eigenvalue falls below
    -tol * max(eigenvalues); values in the (-tol, 0) rounding band are
    clamped to zero.
    """
    if n < 1:
        raise ValueError("need n >= 1")
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    gamma = increment_autocovariance(np.arange(n + 1), dt, hurst)
    first_row = np.concatenate([gamma[:n], gamma[n:n + 1], gamma[n - 1:0:-1]])
    lam = np.fft.fft(first_row).real
    top = float(lam.max())
    if lam.min() < -_EIG_REL_TOL * top:
        raise NegativeEigenvalueError(
            f"circulant embedding not nonnegative definite: min eigenvalue "
            f"{lam.min():.3e} vs max {top:.3e}"
        )
    return np.maximum(lam, 0.0)


def _hermitian_gaussian(rng: np.random.Generator, m: int) -> np.ndarray:
    """Complex Gaussian vector of length 2m with the symmetry that makes
    its inverse FFT real-valued with i.i.d. N(0, 1/(2m)) marginals after
    the sqrt(2m) rescale used below."""
    z = np.empty(2 * m, dtype=np.complex128)
    z[0] = rng.standard_normal()
    z[m] = rng.standard_normal()
    v = rng.standard_normal((m - 1, 2))
    half = (v[:, 0] + 1j * v[:, 1]) / np.sqrt(2.0)
    z[1:m] = half
    z[m + 1:] = np.conj(half[::-1])
    return z


def fgn_batch(
    n: int,
    dt: float,
    hurst: Union[float, HurstIndex],
    seeds,
) -> np.ndarray:
    """Sample fractional Gaussian noise for several seeds at once.

    Returns an array of shape (len(seeds), n). Row i is bit-identical to
    the increments of ``sample_fbm(n, dt, hurst, seeds[i])``: each seed
    keys its own counter-based stream, so batching is a pure speedup.
    """
    seeds = [int(s) for s in seeds]
    lam = circulant_eigenvalues(n, dt, hurst)
    m = n
    scale = np.sqrt(lam) * np.sqrt(2.0 * m)
    z = np.empty((len(seeds), 2 * m), dtype=np.complex128)
    for i, seed in enumerate(seeds):
        z[i] = _hermitian_gaussian(substream(seed), m)
    z *= scale
    return np.fft.ifft(z, axis=1).real[:, :n]


def sample_fbm(
    n: int,
    dt: float,
    hurst: Union[float, HurstIndex],
    seed: int,
    method: SampleMethod = "circulant",
) -> FbmPath:
    """Sample one fBm path with n increments of width dt.

    Parameters
    ----------
    n, dt : grid size and spacing; the path has n + 1 points on [0, n*dt].
    hurst : Hurst index in (0, 1).
    seed : nonnegative integer; same seed, same path, any platform.
    method : "circulant" (exact, O(n log n)) or "cholesky" (exact, dense,
        only for n <= 512; used to cross-check the spectral path).
    """
    if n < 1:
        raise ValueError("need n >= 1")
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    h = _hurst_value(hurst)
    if method == "circulant":
        fgn = fgn_batch(n, dt, h, [seed])[0]
    elif method == "cholesky":
        if n > _CHOLESKY_MAX_N:
            raise ValueError(
                f"cholesky method is a dense cross-check, limited to "
                f"n <= {_CHOLESKY_MAX_N} (got {n})"
            )
        gamma = increment_autocovariance(np.arange(n), dt, h)
        cov = np.empty((n, n))
        idx = np.arange(n)
        cov[:] = gamma[np.abs(idx[:, None] - idx[None, :])]
        chol = np.linalg.cholesky(cov)
        fgn = chol @ substream(seed).standard_normal(n)
    else:
        raise ValueError(f"unknown sampling method {method!r}")
    values = np.concatenate([[0.0], np.cumsum(fgn)])
    times = np.arange(n + 1) * dt
    return FbmPath(times=times, values=values, hurst=HurstIndex(h), seed=int(seed), method=method)


def _holder_lags(n_incr: int) -> np.ndarray:
    if n_incr <= 4096:
        return np.arange(1, n_incr + 1)
    lags = list(range(1, 65))
    g = 128
    while g <= n_incr:
        lags.append(g)
        g *= 2
    if lags[-1] != n_incr:
        lags.append(n_incr)
    return np.asarray(lags)


def holder_coefficient(path, alpha: float) -> float:
    """Empirical Holder coefficient sup_{s != t} |w(t) - w(s)| / |t - s|^alpha.

    For paths with at most 4096 increments every pair of grid points is
    scanned; beyond that the scan is restricted to lags 1..64 plus dyadic
    lags, which is where the supremum lives for rough paths.

    ``path`` may be an :class:`FbmPath` or a simulated sample path (any
    object with ``times``/``values`` or ``grid``/``obs`` plus ``hurst``).
    """
    values = getattr(path, "values", None)
    if values is not None:
        times = path.times
    else:
        times = path.grid.times
        values = path.obs
    h = float(path.hurst)
    alpha = float(alpha)
    if not 0.0 < alpha < h:
        raise InvalidExponentError(
            f"exponent must lie in (0, {h}) for this path, got {alpha}"
        )
    dt = float(times[1] - times[0])
    n_incr = values.size - 1
    best = 0.0
    for g in _holder_lags(n_incr):
        sup = float(np.max(np.abs(values[g:] - values[:-g])))
        best = max(best, sup / (g * dt) ** alpha)
    return best
