import numpy as np
import pytest
from numpy.testing import assert_allclose

import fbmdrift as fd
from fbmdrift.errors import InvalidParamsError, MissingFineGridError
from fbmdrift.malliavin import (
    WickWorkspace,
    hilbert_weight,
    log_sensitivity_prefix,
    malliavin_derivative,
    malliavin_profile,
    wick_correction_vector,
    wick_increment,
)


class TestProfile:
    def test_quadrature_matches_closed_form_linear(self, small_path):
        quad = malliavin_profile(small_path, method="quadrature")
        exact = malliavin_profile(small_path, method="closed_form_linear")
        mask = np.isfinite(exact.values)
        assert_allclose(quad.values[mask], exact.values[mask], rtol=1e-12)

    def test_diagonal_is_sigma(self, small_path):
        prof = malliavin_profile(small_path)
        assert_allclose(np.diag(prof.values), small_path.sigma, rtol=1e-14)

    def test_lower_triangle_nan(self, small_path):
        prof = malliavin_profile(small_path)
        low = np.tril_indices(len(prof.times), k=-1)
        assert np.all(np.isnan(prof.values[low]))

    def test_dissipative_exponential_bound(self, biweight):
        """For the cubic drift, b'(x) = -1 - 3x^2 <= -1, so
        D_s X_t <= sigma * exp(-(t - s)) everywhere on the grid."""
        cub = fd.builtin_drift("cubic")
        g = fd.make_grid(256, 2.0)
        p = fd.simulate(cub, 0.5, 0.0, 0.7, g, seed=11, refine=8)
        prof = malliavin_profile(p)
        t = prof.times
        bound = p.sigma * np.exp(-(t[None, :] - t[:, None]))
        mask = np.isfinite(prof.values)
        assert np.all(prof.values[mask] <= bound[mask] * (1.0 + 1e-9))

    def test_scalar_entry_matches_profile(self, small_path):
        prof = malliavin_profile(small_path)
        r = small_path.refine
        want = prof.values[3, 17]
        got = malliavin_derivative(small_path, 3 * r, 17 * r)
        assert got == pytest.approx(want, rel=1e-12)

    def test_closed_form_rejects_nonlinear(self, biweight):
        cub = fd.builtin_drift("cubic")
        g = fd.make_grid(32, 2.0)
        p = fd.simulate(cub, 0.5, 0.0, 0.7, g, seed=0, refine=4)
        with pytest.raises(InvalidParamsError):
            malliavin_profile(p, method="closed_form_linear")

    def test_needs_fine_grid(self, lin_model):
        g = fd.make_grid(32, 2.0)
        p = fd.simulate(lin_model, 0.5, 0.0, 0.7, g, seed=0, store_fine=False)
        with pytest.raises(MissingFineGridError):
            malliavin_profile(p)

    def test_prefix_integral_linear_is_exact(self, small_path):
        # trapezoid rule is exact when b' is constant
        icum = log_sensitivity_prefix(small_path)
        assert_allclose(icum, -small_path.fine_times, rtol=1e-12, atol=1e-12)


class TestHilbertWeight:
    def test_positive_and_increasing_in_s(self):
        s = np.linspace(0.0, 4.0, 200)
        w = hilbert_weight(s, 4.0, 4.5, 0.7)
        assert np.all(w > 0.0)
        assert np.all(np.diff(w) > 0.0)

    def test_integral_closed_form(self):
        """integral_0^{t_lo} w(s) ds = ((t_hi)^{2H} - alpha^{2H} - (t_lo)^{2H}) / 2
        with alpha = t_hi - t_lo; this is the fBm covariance
        E[B_{t_lo} (B_{t_hi} - B_{t_lo})]."""
        from scipy.integrate import quad

        t_lo, t_hi, hurst = 3.0, 3.25, 0.7
        got, err = quad(lambda s: hilbert_weight(s, t_lo, t_hi, hurst), 0.0, t_lo)
        want = 0.5 * (t_hi**1.4 - (t_hi - t_lo) ** 1.4 - t_lo**1.4)
        assert got == pytest.approx(want, rel=1e-8)
        cov = float(fd.fbm_covariance(t_lo, t_hi, 0.7))
        assert want == pytest.approx(cov - t_lo**1.4, rel=1e-12)

    def test_scalar_input_returns_float(self):
        out = hilbert_weight(1.0, 2.0, 2.5, 0.6)
        assert isinstance(out, float)

    def test_domain_errors(self):
        with pytest.raises(InvalidParamsError):
            hilbert_weight(0.0, 1.0, 2.0, 0.5)
        with pytest.raises(ValueError):
            hilbert_weight(0.0, 2.0, 1.0, 0.7)
        with pytest.raises(ValueError):
            hilbert_weight(1.5, 1.0, 2.0, 0.7)


class TestWickCorrections:
    def _naive_base(self, path, k):
        """Direct sum for sigma^2 * delta * sum_{s_j < t_k} D_{s_j} X_{t_k} w(s_j)."""
        icum = log_sensitivity_prefix(path)
        r = path.refine
        j = np.arange(k * r)
        d = np.exp(icum[k * r] - icum[j])
        w = hilbert_weight(
            path.fine_times[j],
            float(path.grid.times[k]),
            float(path.grid.times[k + 1]),
            path.hurst.value,
        )
        return path.sigma**2 * path.delta * float(d @ w)

    def test_workspace_base_matches_naive(self, small_path):
        ws = WickWorkspace(small_path)
        for k in (1, 2, 17, 100, small_path.grid.n - 1):
            assert ws._base[k] == pytest.approx(self._naive_base(small_path, k), rel=1e-11)
        assert ws._base[0] == 0.0

    def test_increment_matches_workspace(self, small_path, biweight):
        h = 0.6
        ws = WickWorkspace(small_path)
        for x in (-0.3, 0.0, 0.42):
            corr = ws.corrections(x, biweight, h)
            for k in (0, 1, 50, 200):
                dx = small_path.obs[k + 1] - small_path.obs[k]
                plain = fd.scaled_kernel_eval(biweight, h, small_path.obs[k] - x) * dx
                want = float(plain) - corr[k]
                got = wick_increment(small_path, k, x, biweight, h)
                assert got == pytest.approx(want, rel=1e-10, abs=1e-14)

    def test_correction_vector_shape_and_zero_far_away(self, small_path, biweight):
        vec = wick_correction_vector(small_path, 50.0, biweight, 0.5)
        assert vec.shape == (small_path.grid.n,)
        assert np.all(vec == 0.0)

    def test_sigma_zero_has_no_correction(self, lin_model, biweight):
        g = fd.make_grid(64, 2.0)
        p = fd.simulate(lin_model, 0.0, 1.0, 0.7, g, seed=0, refine=4, burn_in=0.0)
        assert np.all(wick_correction_vector(p, 0.5, biweight, 0.5) == 0.0)

    def test_overflow_guard_branch(self, biweight):
        """A steep linear drift pushes the prefix integral past the exp
        guard; the fallback branch must agree with the direct sum."""
        steep = fd.builtin_drift("linear", theta=400.0)
        g = fd.make_grid(48, 2.0, c_alpha=25.0)
        p = fd.simulate(steep, 0.5, 0.0, 0.7, g, seed=3, refine=2048, burn_in=0.0)
        icum = log_sensitivity_prefix(p)
        assert 0.5 * (icum.max() - icum.min()) > 600.0
        ws = WickWorkspace(p)
        for k in (1, 24, 47):
            assert ws._base[k] == pytest.approx(self._naive_base(p, k), rel=1e-9)

    def test_increment_index_range(self, small_path, biweight):
        with pytest.raises(ValueError):
            wick_increment(small_path, small_path.grid.n, 0.0, biweight, 0.5)
        with pytest.raises(ValueError):
            wick_increment(small_path, -1, 0.0, biweight, 0.5)
