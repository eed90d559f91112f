"""Drift models and smoothing kernels, plus the assumption checks that
decide whether a given (model, kernel, sampling) combination sits inside
the regime where drift estimation is known to work.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad

from .errors import InvalidParamsError, UnknownKernelError, UnknownModelError

__all__ = [
    "DriftModel",
    "Kernel",
    "AssumptionReport",
    "builtin_drift",
    "builtin_kernel",
    "scaled_kernel_eval",
    "certify_drift",
    "certify_kernel",
    "validate_assumptions",
]


@dataclass(frozen=True)
class DriftModel:
    """A scalar drift b with its derivative and the constants the theory
    cares about.

    ``b`` and ``b_prime`` must accept numpy arrays (and plain floats).
    ``lipschitz_const`` / ``dissipativity`` / ``sup_b`` / ``sup_b_prime``
    are None when the constant does not exist or is not known; the
    assumption report treats None as a failed/unknown bound, never as a
    silent pass.
    """

    name: str
    b: Callable[[np.ndarray], np.ndarray]
    b_prime: Callable[[np.ndarray], np.ndarray]
    poly_degree: int
    lipschitz_const: Optional[float] = None
    dissipativity: Optional[float] = None
    sup_b: Optional[float] = None
    sup_b_prime: Optional[float] = None
    params: dict = field(default_factory=dict)


def builtin_drift(name: str, **params: float) -> DriftModel:
    """Construct a drift model from the registry.

    Registered names:

    - ``linear``: b(x) = -theta * x, theta > 0
    - ``cubic``: b(x) = -x - x**3
    - ``linear_plus_sine``: b(x) = -theta * x + a * sin(x), theta > a >= 0
    - ``constant``: b(x) = level; not ergodic, kept as a test model whose
      estimand is known exactly
    """
    if name == "constant":
        level = _take(params, "level", 1.0)
        _no_extras(name, params)
        return DriftModel(
            name="constant",
            b=lambda x, _c=level: np.full_like(np.asarray(x, dtype=float), _c),
            b_prime=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
            poly_degree=0,
            lipschitz_const=0.0,
            dissipativity=None,
            sup_b=abs(level),
            sup_b_prime=0.0,
            params={"level": level},
        )
    if name == "linear":
        theta = _take(params, "theta", 1.0)
        _no_extras(name, params)
        if not theta > 0.0:
            raise InvalidParamsError(f"linear drift needs theta > 0, got {theta}")
        return DriftModel(
            name="linear",
            b=lambda x, _t=theta: -_t * x,
            b_prime=lambda x, _t=theta: np.full_like(np.asarray(x, dtype=float), -_t),
            poly_degree=1,
            lipschitz_const=theta,
            dissipativity=theta,
            params={"theta": theta},
        )
    if name == "cubic":
        _no_extras(name, params)
        return DriftModel(
            name="cubic",
            b=lambda x: -x - x**3,
            b_prime=lambda x: -1.0 - 3.0 * np.asarray(x, dtype=float) ** 2,
            poly_degree=3,
            lipschitz_const=None,
            dissipativity=1.0,
            params={},
        )
    if name == "linear_plus_sine":
        theta = _take(params, "theta", 1.0)
        a = _take(params, "a", 0.5)
        _no_extras(name, params)
        if not a >= 0.0:
            raise InvalidParamsError(f"linear_plus_sine needs a >= 0, got {a}")
        if not theta > a:
            raise InvalidParamsError(
                f"linear_plus_sine needs theta > a for dissipativity, got "
                f"theta={theta}, a={a}"
            )
        return DriftModel(
            name="linear_plus_sine",
            b=lambda x, _t=theta, _a=a: -_t * x + _a * np.sin(x),
            b_prime=lambda x, _t=theta, _a=a: -_t + _a * np.cos(x),
            poly_degree=1,
            lipschitz_const=theta + a,
            dissipativity=theta - a,
            params={"theta": theta, "a": a},
        )
    raise UnknownModelError(f"no drift model named {name!r}")


def _take(params: dict, key: str, default: float) -> float:
    v = float(params.pop(key, default))
    if not math.isfinite(v):
        raise InvalidParamsError(f"parameter {key} must be finite")
    return v


def _no_extras(name: str, params: dict) -> None:
    if params:
        raise InvalidParamsError(
            f"unknown parameters for {name!r}: {sorted(params)}"
        )


# --- kernels ---------------------------------------------------------------

@dataclass(frozen=True)
class Kernel:
    """Smoothing kernel on [-1, 1]: nonnegative, integrates to one, and
    continuously differentiable on the whole line (so k and k' vanish at
    the support edges)."""

    name: str
    k: Callable[[np.ndarray], np.ndarray]
    k_prime: Callable[[np.ndarray], np.ndarray]
    support: tuple = (-1.0, 1.0)


def _biweight(u):
    v = np.clip(u, -1.0, 1.0)
    return 0.9375 * (1.0 - v * v) ** 2


def _biweight_prime(u):
    v = np.clip(u, -1.0, 1.0)
    return -3.75 * v * (1.0 - v * v)


def _triweight(u):
    v = np.clip(u, -1.0, 1.0)
    return 1.09375 * (1.0 - v * v) ** 3


def _triweight_prime(u):
    v = np.clip(u, -1.0, 1.0)
    return -6.5625 * v * (1.0 - v * v) ** 2


_KERNELS = {
    "biweight": Kernel("biweight", _biweight, _biweight_prime),
    "triweight": Kernel("triweight", _triweight, _triweight_prime),
}


def builtin_kernel(name: str) -> Kernel:
    """Look up a kernel by name ("biweight" or "triweight").

    The Epanechnikov kernel is deliberately absent: its derivative jumps
    at the support edges, and the correction terms of the estimator need
    a continuous k'.
    """
    try:
        return _KERNELS[name]
    except KeyError:
        raise UnknownKernelError(f"no kernel named {name!r}") from None


def scaled_kernel_eval(kernel: Kernel, h: float, u, derivative: bool = False):
    """Evaluate K_h(u) = k(u/h)/h, or its derivative k'(u/h)/h**2."""
    if not h > 0.0:
        raise InvalidParamsError(f"bandwidth must be positive, got {h}")
    u = np.asarray(u, dtype=np.float64)
    if derivative:
        return kernel.k_prime(u / h) / (h * h)
    return kernel.k(u / h) / h


# --- assumption checks -------------------------------------------------------

_LATTICE = np.linspace(-5.0, 5.0, 1001)


def certify_drift(model: DriftModel, lattice: Optional[np.ndarray] = None) -> dict:
    """Numerically probe the model's declared constants on a lattice.

    Returns a dict with, per declared constant, the worst observed ratio
    and whether it respects the declaration (small float slack allowed).
    Growth of |b| + |b'| against 1 + |x|^degree is always measured.
    """
    x = _LATTICE if lattice is None else np.asarray(lattice, dtype=np.float64)
    bx = np.asarray(model.b(x), dtype=np.float64)
    bpx = np.asarray(model.b_prime(x), dtype=np.float64)
    out: dict = {}

    dx = x[:, None] - x[None, :]
    db = bx[:, None] - bx[None, :]
    mask = np.abs(dx) > 1e-12

    if model.lipschitz_const is not None:
        ratio = np.zeros_like(dx)
        np.divide(np.abs(db), np.abs(dx), out=ratio, where=mask)
        worst = float(ratio.max())
        out["lipschitz"] = {
            "declared": model.lipschitz_const,
            "observed": worst,
            "ok": worst <= model.lipschitz_const * (1.0 + 1e-9) + 1e-12,
        }
    if model.dissipativity is not None:
        prod = np.where(mask, db * dx + model.dissipativity * dx * dx, 0.0)
        worst = float(prod.max())
        out["dissipativity"] = {
            "declared": model.dissipativity,
            "observed_excess": worst,
            "ok": worst <= 1e-9 * model.dissipativity * float((dx * dx).max()) + 1e-12,
        }
    growth = (np.abs(bx) + np.abs(bpx)) / (1.0 + np.abs(x) ** model.poly_degree)
    out["growth"] = {"degree": model.poly_degree, "constant": float(growth.max())}
    return out


def certify_kernel(kernel: Kernel, n_points: int = 10001) -> dict:
    """Check kernel shape: support, nonnegativity, unit mass, C1 smoothness."""
    u = np.linspace(-1.5, 1.5, n_points)
    ku = np.asarray(kernel.k(u), dtype=np.float64)
    outside = np.abs(u) > 1.0
    mass, _ = quad(kernel.k, -1.0, 1.0, epsabs=1e-12, limit=200)
    eps = 1e-5
    inner = u[np.abs(u) < 1.0 - 2 * eps]
    fd = (kernel.k(inner + eps) - kernel.k(inner - eps)) / (2 * eps)
    kp = np.asarray(kernel.k_prime(inner), dtype=np.float64)
    return {
        "nonnegative": bool(ku.min() >= 0.0),
        "zero_outside_support": bool(np.all(ku[outside] == 0.0)),
        "unit_mass": bool(abs(mass - 1.0) <= 1e-8),
        "mass": float(mass),
        "derivative_matches": bool(np.max(np.abs(fd - kp)) <= 1e-6),
        "vanishes_at_edges": bool(
            abs(float(kernel.k(1.0))) <= 1e-12
            and abs(float(kernel.k(-1.0))) <= 1e-12
            and abs(float(kernel.k_prime(1.0))) <= 1e-12
            and abs(float(kernel.k_prime(-1.0))) <= 1e-12
        ),
    }


@dataclass(frozen=True)
class AssumptionReport:
    """Outcome of the regime checks for one (model, kernel, sampling) choice.

    ``checks`` maps a check id to (passed, detail); passed is None when the
    check was not evaluated (e.g. no kernel supplied). The report never
    raises: unbounded builtin drifts simply carry a failed boundedness row.
    """

    model_name: str
    gamma: float
    hurst: float
    checks: dict

    def passed(self, check_id: str) -> Optional[bool]:
        return self.checks[check_id][0]

    def all_evaluated_pass(self) -> bool:
        return all(ok for ok, _ in self.checks.values() if ok is not None)

    def to_json_dict(self) -> dict:
        return {
            "model": self.model_name,
            "gamma": self.gamma,
            "hurst": self.hurst,
            "checks": {
                cid: {"passed": ok, "detail": detail}
                for cid, (ok, detail) in self.checks.items()
            },
        }

    def flag_string(self) -> str:
        def word(ok):
            return "skip" if ok is None else ("pass" if ok else "fail")

        return ";".join(f"{cid}={word(ok)}" for cid, (ok, _) in sorted(self.checks.items()))


def validate_assumptions(
    model: DriftModel,
    gamma: float,
    hurst: float,
    kernel: Optional[Kernel] = None,
) -> AssumptionReport:
    """Report which regime conditions hold for this configuration.

    Checks: a global Lipschitz constant, polynomial growth of b and b',
    dissipativity (the mean-reversion inequality that makes the dynamics
    ergodic), the sampling-rate condition gamma > max(1 + degree^2 * H, 2),
    kernel shape (when a kernel is given), and boundedness of b and b'.
    """
    h = float(hurst)
    g = float(gamma)
    checks: dict = {}

    cert = certify_drift(model)

    if model.lipschitz_const is None:
        checks["lipschitz"] = (False, "no global Lipschitz constant declared")
    else:
        ok = bool(cert["lipschitz"]["ok"])
        checks["lipschitz"] = (
            ok,
            f"declared L={model.lipschitz_const:g}, observed "
            f"{cert['lipschitz']['observed']:.6g} on the probe lattice",
        )

    checks["growth"] = (
        True,
        f"|b| + |b'| <= {cert['growth']['constant']:.6g} * (1 + |x|^{model.poly_degree})"
        " on the probe lattice",
    )

    if model.dissipativity is None:
        checks["dissipativity"] = (False, "no dissipativity constant declared")
    else:
        ok = bool(cert["dissipativity"]["ok"])
        checks["dissipativity"] = (
            ok,
            f"declared M={model.dissipativity:g}, worst excess "
            f"{cert['dissipativity']['observed_excess']:.3g}",
        )

    threshold = max(1.0 + model.poly_degree**2 * h, 2.0)
    ok = g > threshold
    checks["sampling_rate"] = (
        ok,
        f"gamma={g:g} vs required > {threshold:g} "
        f"(degree {model.poly_degree}, H={h:g})",
    )

    if kernel is None:
        checks["kernel_shape"] = (None, "no kernel supplied")
    else:
        kc = certify_kernel(kernel)
        ok = all(v for k_, v in kc.items() if isinstance(v, bool))
        checks["kernel_shape"] = (
            ok,
            f"{kernel.name}: mass={kc['mass']:.9f}, C1 and compactly supported"
            if ok
            else f"{kernel.name}: failed {sorted(k_ for k_, v in kc.items() if v is False)}",
        )

    if model.sup_b is not None and model.sup_b_prime is not None:
        checks["boundedness"] = (
            True,
            f"sup|b|={model.sup_b:g}, sup|b'|={model.sup_b_prime:g}",
        )
    else:
        checks["boundedness"] = (
            False,
            "b or b' unbounded (builtin mean-reverting drifts grow linearly "
            "or faster); bias and variance rates may degrade off the bulk",
        )

    return AssumptionReport(model_name=model.name, gamma=g, hurst=h, checks=checks)
