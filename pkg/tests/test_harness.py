import numpy as np
import pytest

import fbmdrift as fd
from fbmdrift.errors import PlanInvalidError, UnknownModelError
from fbmdrift.harness import ExperimentPlan, run_consistency, run_term_decay


def tiny_plan(**overrides):
    base = dict(
        n_list=[16, 32],
        model_name="linear",
        model_params={"theta": 1.0},
        sigma=0.5,
        gamma=2.0,
        refine=2,
        burn_in=2.0,
        seeds=3,
        x_min=-0.5,
        x_max=0.5,
        x_points=5,
        workers=1,
    )
    base.update(overrides)
    return ExperimentPlan(**base)


class TestPlanValidation:
    def test_valid(self):
        tiny_plan().validate()

    @pytest.mark.parametrize(
        "overrides",
        [
            {"n_list": []},
            {"n_list": [32, 16]},
            {"n_list": [16, 16]},
            {"hurst": 0.5},
            {"hurst": 1.0},
            {"gamma": 1.0},
            {"seeds": 0},
            {"base_seed": -1},
            {"bandwidth_c": 0.0},
            {"bandwidth_exponent": 0.0},
            {"fixed_h": 0.0},
            {"x_min": -0.5, "x_max": None},
            {"x_min": 0.5, "x_max": -0.5},
            {"x_points": 0},
            {"mode": "skorokhod"},
            {"workers": 0},
            {"refine": 0},
        ],
    )
    def test_rejects(self, overrides):
        with pytest.raises(PlanInvalidError):
            tiny_plan(**overrides).validate()

    def test_bad_model_name_surfaces(self):
        with pytest.raises(UnknownModelError):
            tiny_plan(model_name="quartic").validate()

    def test_bandwidth_rule_and_freeze(self):
        p = tiny_plan(bandwidth_c=2.0, bandwidth_exponent=-0.5)
        assert p.bandwidth(16) == pytest.approx(0.5)
        p.fixed_h = 0.33
        assert p.bandwidth(16) == 0.33
        assert p.bandwidth(1024) == 0.33

    def test_seed_list(self):
        p = tiny_plan(seeds=4, base_seed=100)
        assert p.seed_list() == [100, 101, 102, 103]


class TestPlanMapping:
    def test_round_trip(self):
        p = tiny_plan(mode="wick_oracle", fixed_h=0.25)
        q = ExperimentPlan.from_mapping(p.to_mapping())
        assert q == p

    def test_mapping_not_mutated(self):
        """from_mapping must not alter the caller's nested tables; a
        previous bug popped 'name' out of the shared drift dict, so the
        second build silently fell back to the default model."""
        m = tiny_plan(model_name="constant", model_params={"level": 1.0}).to_mapping()
        first = ExperimentPlan.from_mapping(m)
        second = ExperimentPlan.from_mapping(m)
        assert m["drift"] == {"name": "constant", "level": 1.0}
        assert first.model_name == second.model_name == "constant"

    def test_unknown_keys_rejected(self):
        m = tiny_plan().to_mapping()
        m["horizon"] = 10.0
        with pytest.raises(PlanInvalidError):
            ExperimentPlan.from_mapping(m)

    def test_missing_n_list_rejected(self):
        m = tiny_plan().to_mapping()
        del m["n_list"]
        with pytest.raises(PlanInvalidError):
            ExperimentPlan.from_mapping(m)

    def test_from_toml_file(self, tmp_path):
        cfg = tmp_path / "plan.toml"
        cfg.write_text(
            "n_list = [16, 32]\n"
            "gamma = 2.5\n"
            "seeds = 2\n"
            "mode = \"wick_oracle\"\n"
            "[drift]\n"
            "name = \"linear\"\n"
            "theta = 2.0\n"
            "[kernel]\n"
            "name = \"triweight\"\n"
        )
        p = ExperimentPlan.from_file(str(cfg))
        assert p.n_list == [16, 32]
        assert p.model_params == {"theta": 2.0}
        assert p.kernel_name == "triweight"
        assert p.mode == "wick_oracle"

    def test_bad_toml_raises_plan_error(self, tmp_path):
        cfg = tmp_path / "broken.toml"
        cfg.write_text("n_list = [16,\n")
        with pytest.raises(PlanInvalidError):
            ExperimentPlan.from_file(str(cfg))

    def test_unknown_kernel_key_rejected(self):
        m = tiny_plan().to_mapping()
        m["kernel"]["order"] = 4
        with pytest.raises(PlanInvalidError):
            ExperimentPlan.from_mapping(m)


class TestRunConsistency:
    def test_row_shape(self):
        rep = run_consistency(tiny_plan())
        assert [r["n"] for r in rep.rows] == [16, 32]
        for r in rep.rows:
            for key in ("t_n", "alpha_n", "h", "sup_err_median", "sup_err_iqr",
                        "l2_err_median", "l2_err_iqr", "defined_min_frac"):
                assert key in r
        assert rep.plan["n_list"] == [16, 32]
        assert "16" in rep.per_seed and len(rep.per_seed["16"]["sup"]) == 3

    def test_reruns_identical(self):
        a = run_consistency(tiny_plan())
        b = run_consistency(tiny_plan())
        assert a.rows == b.rows
        assert a.per_seed == b.per_seed

    def test_worker_count_invariant(self):
        a = run_consistency(tiny_plan(workers=1))
        b = run_consistency(tiny_plan(workers=2))
        assert a.rows == b.rows
        assert a.per_seed == b.per_seed

    def test_noiseless_constant_recovers_exactly(self):
        """sigma = 0 with a constant drift is the degenerate case the
        estimator must nail: every increment is exactly level * alpha."""
        plan = tiny_plan(
            model_name="constant",
            model_params={"level": 1.0},
            sigma=0.0,
            burn_in=0.0,
            mode="wick_oracle",
            x_min=None,
            x_max=None,
            coverage=0.8,
        )
        rep = run_consistency(plan)
        for r in rep.rows:
            assert r["sup_err_median"] <= 1e-12
            assert r["defined_min_frac"] > 0.0

    def test_curves_recorded(self):
        rep = run_consistency(tiny_plan())
        assert set(rep.curves) == {"16", "32"}
        c = rep.curves["32"]
        assert len(c["x"]) == 5
        assert len(c["median"]) == 5
        assert len(c["true"]) == 5


class TestRunTermDecay:
    def test_rows_and_slopes(self):
        plan = tiny_plan(n_list=[16, 32, 64], mode="wick_oracle", x_center=0.0)
        table = run_term_decay(plan)
        assert table.x == 0.0
        assert [r["n"] for r in table.rows] == [16, 32, 64]
        for r in table.rows:
            for key in ("smoothing_abs_median", "noise_mean", "noise_rms",
                        "noise_stderr", "noise_raw_mean", "noise_raw_sq_mean",
                        "noise_raw_stderr"):
                assert key in r
        for key in ("smoothing_vs_alpha", "noise_rms_vs_tn", "noise_sq_vs_tn"):
            assert key in table.slopes

    def test_fixed_h_applies(self):
        plan = tiny_plan(n_list=[16, 32], fixed_h=0.4, x_center=0.0)
        table = run_term_decay(plan)
        assert all(r["h"] == 0.4 for r in table.rows)

    def test_decay_reruns_identical(self):
        plan = tiny_plan(n_list=[16, 32], x_center=0.1)
        a = run_term_decay(plan)
        b = run_term_decay(plan)
        assert a.rows == b.rows
        assert a.slopes == b.slopes
