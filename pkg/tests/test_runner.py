"""Tests for the stage pipeline and the command line."""

from __future__ import annotations

import json
from types import SimpleNamespace

import pytest

from gp_skrl.errors import MissingArtifactError
from gp_skrl.runner.cli import (
    EXIT_COLLISION,
    EXIT_CONFIG,
    EXIT_NO_CONVERGENCE,
    EXIT_OK,
    STORE_ENV,
    build_parser,
    main,
)
from gp_skrl.runner.pipeline import Pipeline, StageOutcome, load_training_set, save_training_set
from gp_skrl.scenarios.loader import get_scenario
from gp_skrl.schemas.results import MetricsReport

PLUMBING = [
    "--override",
    "training.n_samples=200",
    "--override",
    "training.sigma_a=1e12",
    "--override",
    "training.sigma_c=1e12",
]


@pytest.fixture
def pipeline(store, plumbing_cfg) -> Pipeline:
    return Pipeline(get_scenario("straight_trivial"), plumbing_cfg, store)


class TestPipeline:
    def test_collect_stores_log_and_data(self, pipeline):
        artifact = pipeline.collect()
        assert {"trajectory.csv", "log.json", "timing.csv", "gp_data.npz"} <= set(artifact.record.files)
        data = load_training_set(artifact.file("gp_data.npz"))
        assert len(data) == artifact.record.extra["samples"] == artifact.record.extra["steps"] - 1

    def test_collect_is_reproducible(self, pipeline):
        assert pipeline.collect().record.address == pipeline.collect().record.address

    def test_training_set_round_trip(self, pipeline, tmp_path):
        data = load_training_set(pipeline.collect().file("gp_data.npz"))
        again = load_training_set(save_training_set(data, tmp_path / "d.npz"))
        assert (again.inputs == data.inputs).all()

    def test_fit_gp_needs_collected_data(self, pipeline):
        with pytest.raises(MissingArtifactError, match="upstream"):
            pipeline.fit_gp()

    def test_train_needs_a_model_unless_nominal(self, pipeline):
        with pytest.raises(MissingArtifactError, match="--nominal-only"):
            pipeline.train()

    def test_simulate_needs_policies(self, pipeline):
        with pytest.raises(MissingArtifactError, match="Run train first"):
            pipeline.simulate()

    def test_full_chain(self, pipeline, store):
        collected = pipeline.collect()
        gp = pipeline.fit_gp()
        assert gp.record.parents == {"collect": collected.record.address}
        policies, trained = pipeline.train()
        assert trained.converged
        assert policies.record.parents == {"gp": gp.record.address}
        assert {"pi0.npz", "pi1.npz", "trace_pi0.csv", "trace_pi1.csv"} <= set(policies.record.files)

        outcome = pipeline.simulate()
        assert outcome.artifact.record.parents == {"policies": policies.record.address, "gp": gp.record.address}
        assert outcome.metrics[0].termination == "goal"
        assert outcome.gate_report.all_passed
        assert not outcome.collided
        assert "planner_trace.csv" in outcome.artifact.record.files
        assert pipeline.simulate().artifact.record.address == outcome.artifact.record.address

        evaluated = pipeline.evaluate([0, 1], max_workers=2)
        assert [r.seed for r in evaluated.runs] == [0, 1]
        report = json.loads(evaluated.artifact.file("report.json").read_text())
        assert report["summary"]["total_runs"] == 2
        assert store.latest("evaluate", "straight_trivial").record.extra["seeds"] == [0, 1]

    def test_nominal_only_policies_have_no_gp_parent(self, pipeline):
        policies, _ = pipeline.train(nominal_only=True)
        assert policies.record.parents == {}
        assert policies.record.extra["nominal_only"] is True
        assert pipeline.simulate().metrics[0].termination == "goal"

    def test_adapt_needs_a_schedule(self, pipeline):
        pipeline.train(nominal_only=True)
        with pytest.raises(ValueError, match="adaptation schedule"):
            pipeline.adapt()


def _collided_outcome() -> StageOutcome:
    metrics = MetricsReport(
        J=1.0,
        J_Lat=0.0,
        J_Lon=0.0,
        J_Heading=0.0,
        J_Con=0.0,
        length=50.0,
        completion_time=5.0,
        mean_solve_time=0.001,
        collision=True,
        min_clearance=-0.2,
        termination="collision",
        steps=101,
    )
    artifact = SimpleNamespace(record=SimpleNamespace(kind="simulate"), path="store/simulate/x")
    return StageOutcome(artifact, [metrics])


class TestCli:
    def test_parser_requires_a_stage(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args([])

    def test_seed_list(self):
        args = build_parser().parse_args(["evaluate", "-s", "x", "--seeds", "0,2,5"])
        assert args.seeds == [0, 2, 5]

    def test_bad_seed_list(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["evaluate", "-s", "x", "--seeds", "a,b"])

    def test_stage_chain(self, tmp_path, capsys):
        out = ["-o", str(tmp_path), "-s", "straight_trivial", *PLUMBING]
        assert main(["collect", *out]) == EXIT_OK
        assert main(["fit-gp", *out]) == EXIT_OK
        assert main(["train", *out]) == EXIT_OK
        assert main(["simulate", *out, "--scorecard"]) == EXIT_OK
        printed = capsys.readouterr().out
        assert "simulate artifact:" in printed
        assert "OVERALL: PASS" in printed

    def test_store_from_environment(self, tmp_path, monkeypatch):
        monkeypatch.setenv(STORE_ENV, str(tmp_path / "env-store"))
        assert main(["collect", "-s", "straight_trivial", *PLUMBING]) == EXIT_OK
        assert (tmp_path / "env-store" / "refs" / "collect" / "straight_trivial").is_file()

    def test_unknown_scenario(self, tmp_path):
        assert main(["collect", "-o", str(tmp_path), "-s", "nowhere"]) == EXIT_CONFIG

    def test_missing_upstream_artifact(self, tmp_path):
        assert main(["simulate", "-o", str(tmp_path), "-s", "straight_trivial"]) == EXIT_CONFIG

    def test_bad_override(self, tmp_path):
        assert main(["collect", "-o", str(tmp_path), "-s", "straight_trivial", "--override", "cost.gamma=3"]) == EXIT_CONFIG

    def test_no_convergence(self, tmp_path, capsys):
        args = [
            "train",
            "-o",
            str(tmp_path),
            "-s",
            "straight_trivial",
            "--nominal-only",
            "--override",
            "training.n_samples=200",
            "--override",
            "training.max_iters=1",
        ]
        assert main(args) == EXIT_NO_CONVERGENCE
        assert "iteration trace:" in capsys.readouterr().err

    def test_collision_in_a_safe_scenario(self, tmp_path, monkeypatch):
        monkeypatch.setattr(Pipeline, "simulate", lambda self: _collided_outcome())
        assert main(["simulate", "-o", str(tmp_path), "-s", "single_obstacle_pass"]) == EXIT_COLLISION

    def test_collision_elsewhere_is_reported_only(self, tmp_path, monkeypatch):
        monkeypatch.setattr(Pipeline, "simulate", lambda self: _collided_outcome())
        assert main(["simulate", "-o", str(tmp_path), "-s", "straight_trivial"]) == EXIT_OK

    def test_compare_sparse_gp(self, tmp_path, capsys):
        args = ["compare", "sparse-gp", "-o", str(tmp_path), "-s", "straight_trivial", "--sizes", "200,300"]
        assert main(args) == EXIT_OK
        assert "SPARSE GP" in capsys.readouterr().out
