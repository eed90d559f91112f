import numpy as np
import pytest
from numpy.testing import assert_allclose

import fbmdrift as fd
from fbmdrift.errors import InvalidExponentError
from fbmdrift.fbm import _holder_lags


class TestCovariance:
    def test_unit_variance_brownian(self):
        assert fd.fbm_covariance(1.0, 1.0, 0.5) == pytest.approx(1.0)

    def test_known_values(self):
        # 0.5 * (1 + 2^1.5 - 1) = sqrt(2)
        assert fd.fbm_covariance(1.0, 2.0, 0.75) == pytest.approx(np.sqrt(2.0))
        assert fd.fbm_covariance(2.0, 2.0, 0.75) == pytest.approx(2.0**1.5)

    def test_symmetry(self):
        assert fd.fbm_covariance(0.3, 1.7, 0.8) == fd.fbm_covariance(1.7, 0.3, 0.8)

    def test_brownian_is_min(self):
        for s, t in [(0.5, 2.0), (1.0, 1.0), (3.0, 0.25)]:
            assert fd.fbm_covariance(s, t, 0.5) == pytest.approx(min(s, t))

    def test_increment_autocov_lag_zero(self):
        assert fd.increment_autocovariance(0, 0.1, 0.7) == pytest.approx(0.1**1.4)

    def test_brownian_increments_uncorrelated(self):
        g = fd.increment_autocovariance(np.arange(1, 10), 0.2, 0.5)
        assert np.max(np.abs(g)) < 1e-15

    def test_positive_correlation_above_half(self):
        g = fd.increment_autocovariance(np.arange(1, 50), 0.1, 0.8)
        assert np.all(g > 0.0)

    def test_hurst_validation(self):
        with pytest.raises(InvalidExponentError):
            fd.fbm_covariance(1.0, 1.0, 1.2)
        with pytest.raises(InvalidExponentError):
            fd.HurstIndex(0.0)


class TestCirculantEigenvalues:
    def test_matches_dense_eigendecomposition(self):
        """The FFT shortcut must agree with eigvals of the actual circulant."""
        n = 8
        gamma = fd.increment_autocovariance(np.arange(n + 1), 0.3, 0.75)
        first_row = np.concatenate([gamma, gamma[-2:0:-1]])
        m = len(first_row)
        dense = np.empty((m, m))
        for i in range(m):
            dense[i] = np.roll(first_row, i)
        ref = np.sort(np.linalg.eigvalsh(0.5 * (dense + dense.T)))
        lam = np.sort(fd.circulant_eigenvalues(n, 0.3, 0.75))
        assert_allclose(lam, ref, atol=1e-12)

    def test_white_noise_is_flat(self):
        lam = fd.circulant_eigenvalues(64, 1.0, 0.5)
        assert_allclose(lam, np.ones_like(lam), atol=1e-12)

    def test_nonnegative_across_hurst(self):
        for h in (0.55, 0.6, 0.7, 0.8, 0.9, 0.95):
            assert fd.circulant_eigenvalues(256, 0.05, h).min() >= 0.0


class TestSampling:
    def test_path_shape_and_anchor(self):
        p = fd.sample_fbm(100, 0.1, 0.7, seed=3)
        assert p.values.shape == (101,)
        assert p.values[0] == 0.0
        assert p.times[-1] == pytest.approx(10.0)

    def test_deterministic(self):
        a = fd.sample_fbm(64, 0.5, 0.8, seed=11)
        b = fd.sample_fbm(64, 0.5, 0.8, seed=11)
        assert np.array_equal(a.values, b.values)

    def test_seeds_differ(self):
        a = fd.sample_fbm(64, 0.5, 0.8, seed=11)
        b = fd.sample_fbm(64, 0.5, 0.8, seed=12)
        assert not np.array_equal(a.values, b.values)

    def test_cholesky_size_cap(self):
        with pytest.raises(ValueError):
            fd.sample_fbm(513, 0.1, 0.7, seed=0, method="cholesky")

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            fd.sample_fbm(16, 0.1, 0.7, seed=0, method="spectral")

    def test_values_read_only(self):
        p = fd.sample_fbm(16, 0.1, 0.7, seed=0)
        with pytest.raises(ValueError):
            p.values[0] = 1.0

    def test_variance_scale(self):
        """Terminal variance over many seeds tracks t^(2H)."""
        rows = fd.fgn_batch(32, 0.25, 0.8, list(range(800)))
        terminal = rows.sum(axis=1)
        want = (32 * 0.25) ** 1.6
        got = float(np.mean(terminal**2))
        assert abs(got - want) / want < 0.15


class TestBatch:
    def test_rows_match_solo_paths_bitwise(self):
        seeds = [0, 5, 19]
        rows = fd.fgn_batch(128, 0.1, 0.7, seeds)
        for row, s in zip(rows, seeds):
            solo = fd.sample_fbm(128, 0.1, 0.7, seed=s)
            rebuilt = np.concatenate([[0.0], np.cumsum(row)])
            assert np.array_equal(rebuilt, solo.values)

    def test_shape(self):
        assert fd.fgn_batch(50, 1.0, 0.6, [1, 2]).shape == (2, 50)


class TestHolder:
    def test_positive(self):
        p = fd.sample_fbm(256, 0.05, 0.7, seed=2)
        assert fd.holder_coefficient(p, 0.65) > 0.0

    def test_non_decreasing_under_refinement(self):
        """Subsampling scans a subset of pairs, so the sup cannot grow."""
        p = fd.sample_fbm(512, 0.05, 0.7, seed=4)
        sub = fd.FbmPath(times=p.times[::2], values=p.values[::2],
                         hurst=p.hurst, seed=p.seed, method=p.method)
        assert fd.holder_coefficient(sub, 0.65) <= fd.holder_coefficient(p, 0.65)

    def test_restricted_lags_cover_small_and_dyadic(self):
        lags = _holder_lags(2**15)
        assert set(range(1, 65)) <= set(lags.tolist())
        assert 2**14 in lags and 2**15 in lags

    def test_bad_exponent(self):
        p = fd.sample_fbm(32, 0.1, 0.7, seed=0)
        with pytest.raises(InvalidExponentError):
            fd.holder_coefficient(p, 1.5)


class TestSerialization:
    def test_csv_header_and_rows(self, tmp_path):
        p = fd.sample_fbm(8, 0.5, 0.6, seed=1)
        f = tmp_path / "path.csv"
        p.write_csv(str(f))
        lines = f.read_text().strip().splitlines()
        assert lines[0] == "t,value"
        assert len(lines) == 10

    def test_json_round_numbers(self):
        p = fd.sample_fbm(4, 0.5, 0.6, seed=1)
        d = p.to_json_dict()
        assert d["hurst"] == 0.6
        assert d["dt"] == 0.5
        assert d["seed"] == 1
        assert len(d["values"]) == 5
