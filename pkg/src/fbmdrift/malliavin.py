"""Path sensitivities and the Wick/Skorokhod correction terms.

For dX = b(X) dt + sigma dB^H with H > 1/2, the derivative of X_t with
respect to a noise perturbation at time s has the closed form

    D_s X_t = sigma * exp( integral_s^t b'(X_r) dr ),    s <= t,

so a single prefix integral of b'(X) over the fine grid yields every
(s, t) pair. Dissipativity (b' <= -M) makes these decay like
sigma * exp(-M (t - s)).

The Wick-corrected kernel increment subtracts from K_h(X_k - x) * dX_k
the trace-like term

    sigma * K_h'(X_k - x) * sum_{s_j < t_k} D_{s_j} X_{t_k} * w(s_j) * delta

(one sigma comes with the driving increment, a second sits inside D),
where w(s) = H * ((t_{k+1} - s)^{2H-1} - (t_k - s)^{2H-1}) carries the
fractional covariance mass of the observation window [t_k, t_{k+1}] as
seen from time s. This is what turns the pathwise kernel sum into the
divergence-integral form whose martingale part is mean zero.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidParamsError, MissingFineGridError
from .models import Kernel, scaled_kernel_eval
from .sde import SamplePath

__all__ = [
    "MalliavinProfile",
    "log_sensitivity_prefix",
    "malliavin_derivative",
    "malliavin_profile",
    "hilbert_weight",
    "wick_increment",
    "wick_correction_vector",
    "WickWorkspace",
]

# Above this half-range of the b'-prefix integral, exp(+/-) would leave the
# double range even after centering, so the slow exp-of-differences path runs.
_EXP_GUARD = 600.0


def _require_fine(path: SamplePath) -> None:
    if not path.has_fine:
        raise MissingFineGridError(
            "operation needs the fine grid; simulate with store_fine=True"
        )


def log_sensitivity_prefix(path: SamplePath) -> np.ndarray:
    """Trapezoid prefix integral of b'(X) over the fine grid.

    Entry j is integral_0^{s_j} b'(X_r) dr; length is one more than the
    number of fine steps. Exact for constant b'.
    """
    _require_fine(path)
    bp = np.asarray(path.model.b_prime(path.fine_values), dtype=np.float64)
    delta = path.delta
    icum = np.empty(bp.size, dtype=np.float64)
    icum[0] = 0.0
    np.cumsum((bp[:-1] + bp[1:]) * (0.5 * delta), out=icum[1:])
    return icum


def malliavin_derivative(path: SamplePath, s_idx: int, t_idx: int) -> float:
    """D_s X_t for fine-grid indices s_idx <= t_idx."""
    _require_fine(path)
    n_fine = path.fine_values.size - 1
    if not (0 <= s_idx <= t_idx <= n_fine):
        raise ValueError(
            f"need 0 <= s_idx <= t_idx <= {n_fine}, got ({s_idx}, {t_idx})"
        )
    icum = log_sensitivity_prefix(path)
    return float(path.sigma * np.exp(icum[t_idx] - icum[s_idx]))


@dataclass(frozen=True)
class MalliavinProfile:
    """D_s X_t on the observation grid: values[i, j] = D_{t_i} X_{t_j} for
    i <= j, NaN below the diagonal."""

    times: np.ndarray
    values: np.ndarray
    method: str


def malliavin_profile(path: SamplePath, method: str = "quadrature") -> MalliavinProfile:
    """Sensitivity matrix over observation-time pairs.

    ``method="quadrature"`` integrates b'(X) on the fine grid;
    ``"closed_form_linear"`` uses exp(b' * (t_j - t_i)) and requires a
    drift with constant derivative (it is the cross-check oracle for the
    quadrature path).
    """
    times = path.grid.times
    if method == "quadrature":
        icum = log_sensitivity_prefix(path)
        ic = icum[:: path.refine]
        diff = ic[None, :] - ic[:, None]
    elif method == "closed_form_linear":
        probe = np.asarray(path.model.b_prime(np.array([-1.0, 0.0, 1.0])), dtype=float)
        if np.max(np.abs(probe - probe[1])) > 1e-12:
            raise InvalidParamsError(
                "closed_form_linear needs a drift with constant derivative"
            )
        bp = float(probe[1])
        diff = bp * (times[None, :] - times[:, None])
    else:
        raise ValueError(f"unknown method {method!r}")
    upper = times[None, :] >= times[:, None]
    with np.errstate(over="ignore"):
        vals = path.sigma * np.exp(np.where(upper, diff, -np.inf))
    vals[~upper] = np.nan
    return MalliavinProfile(times=times, values=vals, method=method)


def hilbert_weight(s, t_lo: float, t_hi: float, hurst: float):
    """Fractional covariance mass of the window [t_lo, t_hi] seen from s:
    H * ((t_hi - s)^(2H-1) - (t_lo - s)^(2H-1)).

    Positive, and increasing in s (the window weighs more from nearby);
    requires s <= t_lo < t_hi and H > 1/2.
    """
    h = float(hurst)
    if not h > 0.5:
        raise InvalidParamsError(f"hilbert_weight needs H > 1/2, got {h}")
    if not t_lo < t_hi:
        raise ValueError("need t_lo < t_hi")
    s = np.asarray(s, dtype=np.float64)
    if s.size and float(s.max()) > t_lo:
        raise ValueError("need s <= t_lo")
    e = 2.0 * h - 1.0
    out = h * ((t_hi - s) ** e - (t_lo - s) ** e)
    if out.ndim == 0:
        return float(out)
    return out


def wick_increment(path: SamplePath, k: int, x: float, kernel: Kernel, h: float) -> float:
    """Wick-corrected kernel increment at observation step k.

    Reference implementation: one explicit sum over the fine grid. The
    estimator uses :class:`WickWorkspace`, which factorizes the
    exponentials and reuses tables across evaluation points; both agree
    to rounding error.
    """
    _require_fine(path)
    n = path.grid.n
    if not 0 <= k < n:
        raise ValueError(f"need 0 <= k < {n}, got {k}")
    dx = path.obs[k + 1] - path.obs[k]
    u = path.obs[k] - x
    plain = float(scaled_kernel_eval(kernel, h, u) * dx)
    kp = float(scaled_kernel_eval(kernel, h, u, derivative=True))
    if kp == 0.0 or k == 0 or path.sigma == 0.0:
        return plain
    r = path.refine
    icum = log_sensitivity_prefix(path)
    j = np.arange(k * r)
    d = path.sigma * np.exp(icum[k * r] - icum[j])
    w = hilbert_weight(
        path.fine_times[j], float(path.grid.times[k]),
        float(path.grid.times[k + 1]), path.hurst.value,
    )
    return plain - kp * path.sigma * float(d @ w) * path.delta


class WickWorkspace:
    """Per-path correction table, shared across evaluation points.

    The inner sum sigma^2 * delta * sum_j D_{s_j} w(s_j) does not depend
    on the evaluation point, so it is computed once per observation step
    (one BLAS dot per step over centered exponentials of the b'-prefix
    integral); a correction vector at x is then just the kernel-derivative
    weights times this base. If the prefix integral's half-range exceeds
    the exp guard, the base is built from per-step exponentials of
    differences instead (slower, never overflows).
    """

    def __init__(self, path: SamplePath):
        _require_fine(path)
        self.path = path
        r = path.refine
        n = path.grid.n
        n_fine = path.fine_values.size - 1
        delta = path.delta
        base = np.zeros(n, dtype=np.float64)
        if path.sigma != 0.0:
            icum = log_sensitivity_prefix(path)
            e = 2.0 * path.hurst.value - 1.0
            p = (np.arange(n_fine + 1) * delta) ** e
            g = path.hurst.value * (p[r:] - p[:-r])
            lo, hi = float(icum.min()), float(icum.max())
            center = 0.5 * (lo + hi)
            if 0.5 * (hi - lo) <= _EXP_GUARD:
                e_rev = np.ascontiguousarray(np.exp(center - icum[:n_fine])[::-1])
                e_coarse = np.exp(icum[::r] - center)
                for k in range(1, n):
                    kr = k * r
                    base[k] = float(e_rev[n_fine - kr :] @ g[1 : kr + 1]) * e_coarse[k]
            else:
                for k in range(1, n):
                    kr = k * r
                    d = np.exp(icum[kr] - icum[:kr])
                    base[k] = float(d @ g[kr:0:-1])
            base *= path.sigma * path.sigma * delta
        self._base = base

    def corrections(self, x: float, kernel: Kernel, h: float) -> np.ndarray:
        """Correction term per observation step k = 0..n-1 at point x."""
        kp = np.asarray(
            scaled_kernel_eval(kernel, h, self.path.obs[:-1] - x, derivative=True),
            dtype=np.float64,
        )
        return kp * self._base


def wick_correction_vector(
    path: SamplePath, x: float, kernel: Kernel, h: float,
    workspace: Optional[WickWorkspace] = None,
) -> np.ndarray:
    """Vector of Wick correction terms over all observation steps at x."""
    ws = workspace if workspace is not None else WickWorkspace(path)
    return ws.corrections(x, kernel, h)
