"""Ergodic averages along simulated paths and their stationary targets.

For dissipative drifts the process admits a unique stationary law; time
averages of phi(X) converge to its stationary expectation as the horizon
grows. For the linear drift the stationary law is Gaussian with the
known fractional Ornstein-Uhlenbeck variance, so moments have closed
forms; for other drifts a long-horizon simulation stands in as the
reference.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np
from scipy.special import gamma as gamma_fn
from scipy.special import roots_hermitenorm

from . import fbm
from .errors import InvalidParamsError, MissingFineGridError, UnknownModelError
from .models import DriftModel
from .sde import SamplePath, euler_path

__all__ = [
    "TestFunction",
    "builtin_test_function",
    "time_average",
    "step_average",
    "within_proven_regime",
    "fou_stationary_variance",
    "stationary_moment",
    "ergodic_summary",
]


@dataclass(frozen=True)
class TestFunction:
    """Observable phi with its polynomial growth degree."""

    name: str
    phi: Callable[[np.ndarray], np.ndarray]
    poly_degree: int


_TEST_FUNCTIONS = {
    "one": TestFunction("one", lambda x: np.ones_like(np.asarray(x, dtype=float)), 0),
    "identity": TestFunction("identity", lambda x: np.asarray(x, dtype=float), 1),
    "square": TestFunction("square", lambda x: np.asarray(x, dtype=float) ** 2, 2),
}


def builtin_test_function(name: str) -> TestFunction:
    try:
        return _TEST_FUNCTIONS[name]
    except KeyError:
        raise InvalidParamsError(
            f"no test function named {name!r}; have {sorted(_TEST_FUNCTIONS)}"
        ) from None


def time_average(path: SamplePath, phi: TestFunction) -> float:
    """Trapezoid time average of phi(X) over the fine grid."""
    if not path.has_fine:
        raise MissingFineGridError("time_average needs the fine grid")
    vals = np.asarray(phi.phi(path.fine_values), dtype=np.float64)
    span = float(path.fine_times[-1] - path.fine_times[0])
    return float(np.trapezoid(vals, path.fine_times) / span)


def step_average(path: SamplePath, phi: TestFunction) -> float:
    """Mean of phi(X) over the observation points t_0 .. t_{n-1}."""
    return float(np.mean(np.asarray(phi.phi(path.obs[:-1]), dtype=np.float64)))


def within_proven_regime(
    model: DriftModel, gamma: float, hurst: float, phi: TestFunction
) -> bool:
    """Whether (gamma, H, drift growth, phi growth) satisfies the rate
    conditions under which step averages are known to converge:
    gamma > 1 + (m^2 + p) H and gamma > p + 1."""
    m = model.poly_degree
    p = phi.poly_degree
    g = float(gamma)
    h = float(hurst)
    return g > 1.0 + (m * m + p) * h and g > p + 1.0


def fou_stationary_variance(theta: float, sigma: float, hurst: float) -> float:
    """Stationary variance of the fractional Ornstein-Uhlenbeck process
    dX = -theta X dt + sigma dB^H: sigma^2 * H * Gamma(2H) / theta^(2H)."""
    if not theta > 0.0:
        raise InvalidParamsError(f"need theta > 0, got {theta}")
    h = float(hurst)
    return sigma**2 * h * gamma_fn(2.0 * h) / theta ** (2.0 * h)


def _linear_theta(model: DriftModel) -> float:
    probe = np.asarray(model.b_prime(np.array([-1.0, 0.0, 1.0])), dtype=float)
    if np.max(np.abs(probe - probe[1])) > 1e-12 or not probe[1] < 0.0:
        raise UnknownModelError(
            "closed-form stationary law requires a linear drift -theta*x"
        )
    return -float(probe[1])


def stationary_moment(
    model: DriftModel,
    sigma: float,
    hurst: float,
    phi: TestFunction,
    method: str = "auto",
    horizon: float = 500.0,
    delta: float = 0.01,
    seeds: Iterable[int] = range(10),
    burn_in: float = 50.0,
) -> float:
    """Stationary expectation of phi(X).

    "closed_form" evaluates E phi(N(0, v)) with the fractional OU
    variance v by Gauss-Hermite quadrature (linear drift only);
    "simulate" pools long-horizon step averages; "auto" picks the closed
    form when the drift is linear.
    """
    if method == "auto":
        method = "closed_form" if model.name == "linear" else "simulate"
    if method == "closed_form":
        theta = _linear_theta(model)
        v = fou_stationary_variance(theta, sigma, hurst)
        nodes, weights = roots_hermitenorm(64)
        vals = np.asarray(phi.phi(np.sqrt(v) * nodes), dtype=np.float64)
        return float((weights @ vals) / np.sqrt(2.0 * np.pi))
    if method == "simulate":
        steps_burn = int(round(burn_in / delta))
        steps = steps_burn + int(round(horizon / delta))
        acc = []
        for seed in seeds:
            fgn = fbm.fgn_batch(steps, delta, hurst, [int(seed)])[0]
            xs = euler_path(model, sigma, 0.0, delta, fgn)
            acc.append(float(np.mean(np.asarray(phi.phi(xs[steps_burn:-1]), dtype=float))))
        return float(np.mean(acc))
    raise InvalidParamsError(f"unknown method {method!r}")


def ergodic_summary(paths: list, phi: TestFunction) -> dict:
    """Per-seed and pooled ergodic averages for a batch of paths."""
    if not paths:
        raise InvalidParamsError("need at least one path")
    step_vals = [step_average(p, phi) for p in paths]
    out = {
        "phi": phi.name,
        "seeds": [int(p.seed) for p in paths],
        "step_average": [float(v) for v in step_vals],
        "step_average_pooled": float(np.mean(step_vals)),
        "t_n": paths[0].grid.t_n,
    }
    if all(p.has_fine for p in paths):
        time_vals = [time_average(p, phi) for p in paths]
        out["time_average"] = [float(v) for v in time_vals]
        out["time_average_pooled"] = float(np.mean(time_vals))
    return out
