import dataclasses
import json
import math
import os

import jsonschema
import numpy as np
import pytest

from excursions.asymptotics import asymptotic_variance_lattice
from excursions.gridio import JSON_SCHEMAS
from excursions.harness import (
    ExperimentConfig,
    parse_experiment_config,
    run_clt_experiment,
    run_experiment,
    run_fclt_experiment,
    run_level_growth_experiment,
    run_surface_experiment,
    run_test_study,
    standardize_to_null,
)
from excursions.models import CovarianceModel, GaussianFieldSpec, GridWindow, ShotNoiseSpec
from excursions.simulate import SeedSpec, simulate_shot_noise

WHITE = GaussianFieldSpec(0.0, CovarianceModel("nugget", dim=2))
EXP1D = GaussianFieldSpec(0.0, CovarianceModel("exponential", scale=1.0, dim=1))


def white_cfg(**kw):
    base = dict(
        kind="clt_volume",
        field="white_noise",
        windows=(GridWindow((64, 64), 1.0),),
        replications=200,
        master_seed=100,
        gauss_spec=WHITE,
        levels=(0.0,),
    )
    base.update(kw)
    return ExperimentConfig(**base)


class TestConfigParsing:
    def test_full_round_trip(self):
        text = """
        kind = clt_volume
        field = gaussian
        family = exponential
        scale = 2.0
        windows = 32x32;64x64
        spacing = 0.5
        levels = 0.0
        replications = 150
        master_seed = 7
        workers = 2
        var_rtol = 0.1
        """
        cfg = parse_experiment_config(text)
        assert cfg.kind == "clt_volume"
        assert len(cfg.windows) == 2
        assert cfg.windows[1].dims == (64, 64)
        assert cfg.gauss_spec.cov.scale == 2.0
        assert cfg.workers == 2
        assert cfg.tolerances == {"var_rtol": 0.1}

    def test_alternative_model_parsing(self):
        text = """
        kind = test_size_power
        field = gaussian
        family = nugget
        windows = 64x64
        levels = 0.0
        replications = 100
        alt_field = shot_noise
        alt_lambda = 1.5
        alt_kernel_width = 0.5
        """
        cfg = parse_experiment_config(text)
        assert cfg.alt_shot_spec.intensity == 1.5

    def test_validation(self):
        with pytest.raises(ValueError, match="replications"):
            white_cfg(replications=50)
        with pytest.raises(ValueError, match="increasing"):
            white_cfg(windows=(GridWindow((64, 64), 1.0), GridWindow((64, 64), 1.0)))
        with pytest.raises(ValueError, match="kind"):
            white_cfg(kind="bogus")


class TestCltExperiment:
    def test_white_noise_small(self, tmp_path):
        raw = tmp_path / "raw"
        rep = run_clt_experiment(white_cfg(), raw_dir=str(raw))
        w = rep.windows[0]
        assert w["target_var_lattice"] == pytest.approx(0.25, abs=1e-12)
        assert w["emp_var"] == pytest.approx(0.25, rel=0.35)
        assert abs(w["emp_mean"]) < 0.2
        assert os.path.exists(raw / "clt_64x64.csv")
        d = rep.to_json_dict()
        jsonschema.validate(d, JSON_SCHEMAS[d["schema"]])

    def test_byte_determinism_and_worker_independence(self):
        def digest(workers):
            rep = run_clt_experiment(white_cfg(workers=workers))
            d = rep.to_json_dict()
            d.pop("runtime_seconds")
            return json.dumps(d, sort_keys=True)

        assert digest(1) == digest(1) == digest(2) == digest(3)

    def test_ks_under_null_mostly_passes(self):
        # KS p-value should exceed 0.01 in >= 95% of independent repetitions
        passes = 0
        for k in range(20):
            rep = run_clt_experiment(white_cfg(replications=300, master_seed=500 + k))
            passes += rep.windows[0]["ks_p"] > 0.01
        assert passes >= 19

    def test_window_growth_shrinks_variance_error(self):
        # finite-size bias of emp var vs the lattice target shrinks with the
        # window (median over 10 experiment repetitions)
        spec = EXP1D
        target = asymptotic_variance_lattice(spec, 0.0, 0.25).value

        def med_dev(n_sites):
            devs = []
            for k in range(10):
                cfg = ExperimentConfig(
                    kind="clt_volume",
                    field="gaussian",
                    windows=(GridWindow((n_sites,), 0.25),),
                    replications=400,
                    master_seed=900 + k,
                    gauss_spec=spec,
                    levels=(0.0,),
                )
                w = run_clt_experiment(cfg).windows[0]
                devs.append(abs(w["emp_var"] - target))
            return float(np.median(devs))

        small, large = med_dev(128), med_dev(2048)
        assert large < small

    def test_requires_single_level(self):
        with pytest.raises(ValueError, match="one level"):
            run_clt_experiment(white_cfg(levels=(0.0, 1.0)))


class TestFcltExperiment:
    def test_single_level_degenerates_to_clt(self):
        clt = run_clt_experiment(white_cfg(master_seed=321))
        fclt = run_fclt_experiment(
            white_cfg(kind="fclt_grid", master_seed=321)
        )
        # same seed streams -> identical fields -> cov[0,0] equals clt variance
        assert fclt.windows[0]["emp_cov"][0][0] == pytest.approx(
            clt.windows[0]["emp_var"], rel=1e-12
        )

    def test_multivariate_alias(self):
        rep = run_experiment(white_cfg(kind="multivariate_clt", levels=(-0.5, 0.5)))
        emp = np.array(rep.windows[0]["emp_cov"])
        assert emp.shape == (2, 2)
        assert emp[0, 1] == emp[1, 0]

    def test_small_grid_covariances_within_3se(self):
        cfg = ExperimentConfig(
            kind="fclt_grid",
            field="gaussian",
            windows=(GridWindow((2048,), 0.125),),
            replications=400,
            master_seed=77,
            gauss_spec=EXP1D,
            levels=(-1.0, 0.0, 1.0),
        )
        rep = run_fclt_experiment(cfg)
        assert rep.windows[0]["max_abs_z_lattice"] < 3.0


class TestLevelGrowth:
    def test_zero_coefficient_reduces_to_fixed_level(self):
        cfg = ExperimentConfig(
            kind="level_growth",
            field="gaussian",
            windows=(GridWindow((512,), 0.25),),
            replications=150,
            master_seed=55,
            gauss_spec=EXP1D,
            level_coefficient=0.0,
        )
        rep = run_level_growth_experiment(cfg)
        w = rep.windows[0]
        assert w["level"] == 0.0
        assert w["tail_prob"] == 0.5

    def test_expected_count_increasing_in_n(self):
        spec = GaussianFieldSpec(0.0, CovarianceModel("exponential", dim=1))
        c = 0.7
        counts = [
            spec.tail_prob(c * math.sqrt(math.log(n))) * n
            for n in (2**10, 2**11, 2**12, 2**13, 2**14)
        ]
        assert all(b > a for a, b in zip(counts, counts[1:]))

    def test_degenerate_schedule_warns_but_runs(self):
        cfg = ExperimentConfig(
            kind="level_growth",
            field="gaussian",
            windows=(GridWindow((128,), 0.25),),
            replications=120,
            master_seed=56,
            gauss_spec=EXP1D,
            level_coefficient=1.6,
        )
        with pytest.warns(UserWarning, match="degenerate"):
            rep = run_level_growth_experiment(cfg)
        assert rep.windows[0]["expected_excursion_count"] < 10


class TestSurfaceExperiment:
    def test_far_level_mean_near_zero(self):
        spec = GaussianFieldSpec(
            0.0, CovarianceModel("squared_exponential", scale=1.0, dim=1)
        )
        cfg = ExperimentConfig(
            kind="surface_mean",
            field="gaussian",
            windows=(GridWindow((512,), 1 / 64),),
            replications=120,
            master_seed=57,
            gauss_spec=spec,
            levels=(5.0,),
        )
        rep = run_surface_experiment(cfg)
        assert rep.windows[0]["emp_mean"] < 0.05

    def test_non_smooth_family_raises(self):
        cfg = ExperimentConfig(
            kind="surface_mean",
            field="gaussian",
            windows=(GridWindow((512,), 1 / 64),),
            replications=120,
            master_seed=58,
            gauss_spec=EXP1D,
            levels=(0.0,),
        )
        with pytest.raises(Exception):
            run_surface_experiment(cfg)


class TestTestStudy:
    def test_alpha_one_always_rejects(self):
        cfg = ExperimentConfig(
            kind="test_size_power",
            field="white_noise",
            windows=(GridWindow((64, 64), 1.0),),
            replications=100,
            master_seed=59,
            gauss_spec=WHITE,
            levels=(-0.6, 0.0, 0.6),
            alpha=1.0,
            block_side=8,
        )
        rep = run_test_study(cfg)
        assert rep.windows[0]["null_rate"] == 1.0

    def test_standardization_matches_null_moments(self):
        sn = ShotNoiseSpec(1.0, mark_law="exponential", kernel_width=0.5)
        f = simulate_shot_noise(sn, GridWindow((256, 256), 1.0), SeedSpec(60, 0))
        null = GaussianFieldSpec(1.0, CovarianceModel("nugget", variance=4.0, dim=2))
        g = standardize_to_null(f, sn, null)
        assert g.values.mean() == pytest.approx(1.0, abs=0.1)
        assert g.values.var() == pytest.approx(4.0, rel=0.1)


def test_runner_dispatch_covers_all_kinds():
    from excursions.harness import _RUNNERS, EXPERIMENT_KINDS

    assert set(_RUNNERS) == set(EXPERIMENT_KINDS)
