"""Dry-run the remaining acceptance checks and print margins + timings."""

import time

import numpy as np
from scipy import stats

import fbmdrift as fd


def t0():
    return time.perf_counter()


def block1():
    start = t0()
    n, dt, n_paths = 128, 0.1, 20000
    worst = {}
    for hurst in (0.6, 0.75, 0.9):
        rows = fd.fgn_batch(n, dt, hurst, list(range(n_paths)))
        emp = rows.T @ rows / n_paths
        lags = np.abs(np.arange(n)[:, None] - np.arange(n)[None, :])
        exact = fd.increment_autocovariance(lags.ravel(), dt, hurst).reshape(n, n)
        d_circ = float(np.max(np.abs(emp - exact)))

        m = 4000
        chol = np.empty((m, n))
        for s in range(m):
            p = fd.sample_fbm(n, dt, hurst, seed=100000 + s, method="cholesky")
            chol[s] = np.diff(p.values)
        emp_c = chol.T @ chol / m
        d_x = float(np.max(np.abs(emp - emp_c)))
        worst[hurst] = (d_circ, d_x)
        print(f"  H={hurst}: |emp-exact|={d_circ:.5f}  |circ-chol|={d_x:.5f}")
    print(f"criterion 1: {time.perf_counter()-start:.1f}s  (tol 0.02)")


def block2():
    start = t0()
    n, dt = 1024, 0.1
    rows = fd.fgn_batch(n, dt, 0.5, list(range(100)))
    rej = 0
    worst_r1 = 0.0
    for x in rows:
        res = stats.anderson(x, "norm")
        if res.statistic > res.critical_values[-1]:
            rej += 1
        r1 = float(x[1:] @ x[:-1] / (x @ x))
        worst_r1 = max(worst_r1, abs(r1))
    print(f"criterion 2: AD rejections {rej}/100 (allow <=4), "
          f"max|r1|={worst_r1:.4f} vs {4/np.sqrt(n):.4f}  "
          f"[{time.perf_counter()-start:.1f}s]")


def block4():
    start = t0()
    lin = fd.builtin_drift("linear", theta=1.0)
    cub = fd.builtin_drift("cubic")
    g = fd.make_grid(256, 2.0, 1.0)
    worst_lin = 0.0
    for p in fd.simulate_batch(lin, 0.5, 0.0, 0.7, g, list(range(10)), refine=16):
        prof = fd.malliavin_profile(p)
        tt = p.grid.times
        exact = 0.5 * np.exp(-(tt[None, :] - tt[:, None]))
        iu = np.triu_indices(len(tt))
        worst_lin = max(worst_lin, float(np.max(np.abs(prof.values[iu] - exact[iu]))))
    worst_cub = 0.0
    for p in fd.simulate_batch(cub, 0.5, 0.0, 0.7, g, list(range(10)), refine=16):
        prof = fd.malliavin_profile(p)
        tt = p.grid.times
        bound = 0.5 * np.exp(-(tt[None, :] - tt[:, None])) * (1 + 1e-6)
        iu = np.triu_indices(len(tt))
        worst_cub = max(worst_cub, float(np.max(np.abs(prof.values[iu]) - bound[iu])))
    print(f"criterion 4: linear max|D-exact|={worst_lin:.2e} (tol 1e-10), "
          f"cubic max(|D|-bound)={worst_cub:.2e} (need <=0)  "
          f"[{time.perf_counter()-start:.1f}s]")


def block5():
    start = t0()
    model = fd.builtin_drift("linear", theta=1.0)
    sig, hurst, n, refine = 0.5, 0.7, 4096, 16
    g = fd.make_grid(n, 2.5, 1.0)
    a = g.alpha_n
    expo = hurst - 0.05
    worst = -np.inf
    for p in fd.simulate_batch(model, sig, 0.0, hurst, g, list(range(20)),
                               refine=refine, store_fine=True):
        eta = fd.holder_coefficient(p.fine_fbm, expo)
        osc = np.max(np.abs(p.fine_values[: n * refine].reshape(n, refine)
                            - p.obs[:-1, None]), axis=1)
        bound = (np.abs(sig * 1.5 * eta * a**expo + model.b(p.obs[:-1]) * a)
                 * np.exp(1.0 * a) + 1e-9)
        worst = max(worst, float(np.max(osc - bound)))
    print(f"criterion 5: max(osc - bound) = {worst:.4e} (need <= 0)  "
          f"[{time.perf_counter()-start:.1f}s]")


def block6():
    start = t0()
    model = fd.builtin_drift("linear", theta=1.0)
    ker = fd.builtin_kernel("biweight")
    g = fd.make_grid(2**12, 2.5, 8.0)
    paths = fd.simulate_batch(model, 0.5, 0.0, 0.7, g, list(range(20)), refine=16)
    for h in (0.4, 0.2, 0.1):
        worst = -np.inf
        center = []
        n_def = 0
        for p in paths:
            cfg = fd.EstimatorConfig(kernel=ker, h=h,
                                     x_grid=fd.default_x_grid(p), mode="plain")
            curves = fd.decompose_curve(p, cfg)
            ii, s = curves.terms["II"], curves.terms["S"]
            ok = s >= cfg.min_mass
            n_def += int(ok.sum())
            bias = np.abs(ii[ok] / s[ok] - model.b(cfg.x_grid[ok]))
            worst = max(worst, float(np.max(bias - 1.0 * h)))
            term = fd.decompose(p, cfg, 0.0)
            if term.mass >= cfg.min_mass:
                center.append(term.drift_term / term.mass)
        center = np.asarray(center)
        se = center.std(ddof=1) / np.sqrt(center.size)
        print(f"  h={h}: max(|II/S-b| - theta*h)={worst:.2e} over {n_def} pts; "
              f"|mean II/S(0)|={abs(center.mean()):.5f} vs 1e-3+4se={1e-3+4*se:.5f}")
    print(f"criterion 6: [{time.perf_counter()-start:.1f}s]")


def block10():
    start = t0()
    model = fd.builtin_drift("linear", theta=1.0)
    g = fd.make_grid(2**17, 2.5, 18.0)
    phi = fd.builtin_test_function("square")
    paths = fd.simulate_batch(model, 0.5, 0.0, 0.7, g, list(range(8)),
                              refine=8, store_fine=True)
    tavg = np.array([fd.time_average(p, phi) for p in paths])
    savg = np.array([fd.step_average(p, phi) for p in paths])
    truth = fd.fou_stationary_variance(1.0, 0.5, 0.7)
    print(f"  t_n={g.t_n:.0f} truth={truth:.5f}")
    print(f"  time pooled={tavg.mean():.5f} rel={abs(tavg.mean()-truth)/truth:.4f} "
          f"per-seed rel spread={np.abs(tavg-truth).max()/truth:.4f}")
    print(f"  step pooled={savg.mean():.5f} rel={abs(savg.mean()-truth)/truth:.4f}")
    print(f"  |step-time| pooled={abs(savg.mean()-tavg.mean()):.6f} "
          f"per-seed max={np.abs(savg-tavg).max():.6f}")
    print(f"criterion 10: [{time.perf_counter()-start:.1f}s]")


if __name__ == "__main__":
    block1()
    block2()
    block4()
    block5()
    block6()
    block10()
