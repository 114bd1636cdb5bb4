"""Long closed-loop experiments on the shipped scenarios. Run with ``pytest -m slow``."""

from __future__ import annotations

import numpy as np
import pytest

from gp_skrl.runner.config import load_run_config
from gp_skrl.runner.pipeline import Pipeline
from gp_skrl.runner.store import ArtifactStore
from gp_skrl.scenarios.loader import get_scenario
from gp_skrl.sim.experiments import compare_model_learning, compare_sparse_gp

pytestmark = pytest.mark.slow


@pytest.fixture(scope="module")
def cfg():
    return load_run_config()


class TestObstacleBenchmarks:
    @pytest.mark.parametrize("name", ["single_obstacle_pass", "scenario_i", "scenario_ii"])
    def test_trained_policies_avoid_every_obstacle(self, name, cfg, tmp_path):
        pipeline = Pipeline(get_scenario(name), cfg, ArtifactStore(tmp_path))
        pipeline.collect()
        pipeline.fit_gp()
        pipeline.train()
        outcome = pipeline.simulate()
        m = outcome.metrics[0]
        assert not m.collision
        assert m.min_clearance is not None and m.min_clearance >= 0.0
        assert m.termination == "goal"
        assert "contour" in outcome.runs[0].log.modes


class TestModelLearning:
    def test_learned_model_reduces_lateral_error(self, cfg):
        report = compare_model_learning(get_scenario("racetrack_model_learning"), cfg, seeds=(0, 1, 2))
        assert [r.start for r in report.arcs] == [50.0 * i for i in range(len(report.arcs))]
        assert np.mean(report.mean_with_model) < np.mean(report.mean_without_model)


class TestOnlineAdaptation:
    def test_every_stage_gets_an_update(self, cfg, tmp_path):
        scenario = get_scenario("racetrack_adaptation")
        pipeline = Pipeline(scenario, cfg, ArtifactStore(tmp_path))
        pipeline.train(nominal_only=True)
        outcome = pipeline.adapt()
        report = outcome.adaptation
        assert report.failed_updates == 0
        assert len(report.update_times) == len(scenario.adaptation.triggers)
        assert len(report.rows) == 2 * len(scenario.adaptation.boundaries)


class TestSparseGP:
    def test_ald_keeps_fewer_points_at_comparable_accuracy(self):
        rows = compare_sparse_gp((1000, 3000, 9000))
        assert [r.fitc_inducing for r in rows] == [100, 300, 900]
        for r in rows:
            assert r.ald_inducing < r.n_points
            assert r.ald_ape_vy < 10 * r.fitc_ape_vy + 1e-3
            assert r.ald_ape_omega < 10 * r.fitc_ape_omega + 1e-3
        # the ALD dictionary saturates once the input region is covered
        assert rows[-1].ald_inducing < 3 * rows[0].ald_inducing
