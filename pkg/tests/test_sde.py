import numpy as np
import pytest
from numpy.testing import assert_allclose

import fbmdrift as fd
from fbmdrift.errors import (
    InvalidGammaError,
    InvalidParamsError,
    MissingFineGridError,
    NonFiniteStateError,
)


class TestGrid:
    def test_step_formula(self):
        g = fd.make_grid(256, gamma=2.0, c_alpha=3.0)
        assert g.alpha_n == pytest.approx(3.0 * 256 ** (-0.5))
        assert g.t_n == pytest.approx(256 * g.alpha_n)
        assert len(g.times) == 257
        assert g.times[0] == 0.0

    def test_times_read_only(self):
        g = fd.make_grid(16, 2.0)
        with pytest.raises(ValueError):
            g.times[0] = 1.0

    def test_gamma_must_exceed_one(self):
        with pytest.raises(InvalidGammaError):
            fd.make_grid(16, 1.0)

    def test_bad_n_and_c_alpha(self):
        with pytest.raises(InvalidParamsError):
            fd.make_grid(0, 2.0)
        with pytest.raises(InvalidParamsError):
            fd.make_grid(16, 2.0, c_alpha=-1.0)


class TestSimulate:
    def test_obs_is_view_of_fine(self, small_path):
        p = small_path
        assert np.shares_memory(p.obs, p.fine_values)
        assert_allclose(p.obs, p.fine_values[:: p.refine], rtol=0, atol=0)
        assert len(p.obs) == p.grid.n + 1

    def test_observation_times_match_fine_times(self, small_path):
        p = small_path
        assert_allclose(p.grid.times, p.fine_times[:: p.refine], rtol=1e-12)

    def test_values_are_read_only(self, small_path):
        with pytest.raises(ValueError):
            small_path.obs[0] = 0.0
        with pytest.raises(ValueError):
            small_path.fine_values[0] = 0.0

    def test_deterministic(self, lin_model):
        g = fd.make_grid(64, 2.0)
        a = fd.simulate(lin_model, 0.5, 0.0, 0.7, g, seed=5, refine=4)
        b = fd.simulate(lin_model, 0.5, 0.0, 0.7, g, seed=5, refine=4)
        assert np.array_equal(a.obs, b.obs)
        assert np.array_equal(a.fine_values, b.fine_values)

    def test_batch_matches_solo_bitwise(self, lin_model):
        g = fd.make_grid(64, 2.0)
        batch = fd.simulate_batch(lin_model, 0.5, 0.1, 0.7, g, seeds=[3, 4, 5], refine=4)
        for seed, p in zip([3, 4, 5], batch):
            solo = fd.simulate(lin_model, 0.5, 0.1, 0.7, g, seed=seed, refine=4)
            assert np.array_equal(p.obs, solo.obs)
            assert np.array_equal(p.fine_values, solo.fine_values)
            assert np.array_equal(p.fine_fbm.values, solo.fine_fbm.values)

    def test_euler_recursion_identity(self, small_path):
        """Each observed increment telescopes the fine Euler updates:
        X_{t_{k+1}} - X_{t_k} = sum_j b(X_j) delta + sigma * (B increment).
        """
        p = small_path
        b_vals = p.model.b(p.fine_values[:-1])
        drift_sums = np.add.reduceat(b_vals * p.delta, np.arange(0, len(b_vals), p.refine))
        noise_incs = p.fine_fbm.values[:: p.refine]
        rhs = drift_sums + p.sigma * np.diff(noise_incs)
        assert_allclose(np.diff(p.obs), rhs, rtol=0, atol=1e-12)

    def test_store_fine_false(self, lin_model):
        g = fd.make_grid(32, 2.0)
        p = fd.simulate(lin_model, 0.5, 0.0, 0.7, g, seed=1, store_fine=False)
        assert not p.has_fine
        assert p.fine_fbm is None
        with pytest.raises(MissingFineGridError):
            p.write_fine_csv("/tmp/should_not_exist.csv")

    def test_nonfinite_state_raises(self):
        # explosive drift: b(x) = +x^3 has no dissipativity and blows up
        explosive = fd.DriftModel(
            name="explosive",
            b=lambda x: np.asarray(x, dtype=float) ** 3,
            b_prime=lambda x: 3.0 * np.asarray(x, dtype=float) ** 2,
            poly_degree=3,
            lipschitz_const=None,
            dissipativity=None,
            sup_b=None,
            sup_b_prime=None,
            params={},
        )
        g = fd.make_grid(256, 2.0, c_alpha=2.0)
        with pytest.raises(NonFiniteStateError):
            fd.simulate(explosive, 50.0, 10.0, 0.7, g, seed=0, refine=1, burn_in=0.0)

    def test_zero_sigma_follows_ode(self, lin_model):
        """With sigma = 0 the scheme is plain explicit Euler for x' = -x."""
        g = fd.make_grid(128, 2.0)
        p = fd.simulate(lin_model, 0.0, 1.0, 0.7, g, seed=0, refine=8, burn_in=0.0)
        factor = (1.0 - p.delta) ** p.refine
        expected = 1.0 * factor ** np.arange(len(p.obs))
        assert_allclose(p.obs, expected, rtol=1e-10)

    def test_burn_in_changes_start(self, lin_model):
        g = fd.make_grid(32, 2.0)
        cold = fd.simulate(lin_model, 0.5, 5.0, 0.7, g, seed=2, burn_in=0.0)
        warm = fd.simulate(lin_model, 0.5, 5.0, 0.7, g, seed=2, burn_in=20.0)
        assert cold.obs[0] == 5.0
        assert abs(warm.obs[0]) < 3.0
        assert warm.obs[0] != cold.obs[0]

    def test_bad_args(self, lin_model):
        g = fd.make_grid(16, 2.0)
        with pytest.raises(InvalidParamsError):
            fd.simulate(lin_model, -1.0, 0.0, 0.7, g, seed=0)
        with pytest.raises(InvalidParamsError):
            fd.simulate(lin_model, 0.5, 0.0, 0.7, g, seed=0, refine=0)
        with pytest.raises(InvalidParamsError):
            fd.simulate(lin_model, 0.5, 0.0, 0.7, g, seed=0, burn_in=-1.0)


class TestEulerPath:
    def test_matches_manual_loop(self, lin_model, rng):
        inc = rng.normal(size=10) * 0.1
        got = fd.euler_path(lin_model, 0.5, 1.0, 0.05, inc)
        x = 1.0
        for j in range(10):
            x = x + (-x) * 0.05 + 0.5 * inc[j]
            assert got[j + 1] == pytest.approx(x, rel=1e-15)
        assert got[0] == 1.0

    def test_refinement_halves_strong_error(self, lin_model):
        """Doubling refine should cut the strong error by roughly half
        (order-one pathwise rate for additive noise). The reference path
        uses the same fGn stream aggregated from a much finer grid, so
        all three resolutions are driven by the same noise.
        """
        g = fd.make_grid(64, 2.0)
        fine_refine = 1024
        delta_ref = g.alpha_n / fine_refine
        ratios = []
        errs4 = []
        for seed in range(20):
            fgn = fd.fgn_batch(g.n * fine_refine, delta_ref, 0.7, [seed])[0]
            ref = fd.euler_path(lin_model, 0.5, 0.3, delta_ref, fgn)[::fine_refine]
            errs = {}
            for refine in (4, 8):
                group = fine_refine // refine
                coarse_inc = np.add.reduceat(fgn, np.arange(0, len(fgn), group))
                path = fd.euler_path(lin_model, 0.5, 0.3, g.alpha_n / refine, coarse_inc)
                errs[refine] = np.max(np.abs(path[::refine] - ref))
            ratios.append(errs[4] / errs[8])
            errs4.append(errs[4])
        mean_ratio = float(np.mean(ratios))
        assert 1.5 < mean_ratio < 3.0
        assert max(errs4) < 0.05


class TestSerialization:
    def test_obs_csv_header(self, small_path, tmp_path):
        out = tmp_path / "path.csv"
        small_path.write_csv(str(out))
        lines = out.read_text().splitlines()
        assert lines[0] == "t,X"
        assert len(lines) == small_path.grid.n + 2

    def test_fine_csv(self, small_path, tmp_path):
        out = tmp_path / "fine.csv"
        small_path.write_fine_csv(str(out))
        lines = out.read_text().splitlines()
        assert lines[0] == "t,X,B"
        assert len(lines) == len(small_path.fine_values) + 1

    def test_meta_round_trip_values(self, small_path):
        m = small_path.meta()
        assert m["n"] == small_path.grid.n
        assert m["hurst"] == 0.7
        assert m["delta"] == pytest.approx(small_path.grid.alpha_n / small_path.refine)
        assert m["seed"] == small_path.seed
