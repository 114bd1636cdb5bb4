"""Stage pipeline: collect -> fit-gp -> train -> simulate / adapt / evaluate, all through the artifact store."""

from __future__ import annotations

import csv
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from loguru import logger

from gp_skrl.errors import MissingArtifactError
from gp_skrl.gp.regression import GPModel, GPTrainingSet
from gp_skrl.gp.residuals import fit_gp_model
from gp_skrl.reporting.json_report import generate_json_report
from gp_skrl.rl.approximators import KernelPolicy
from gp_skrl.rl.policies import TrainedPolicies, train_policies
from gp_skrl.rl.trainer import require_converged, write_trace_csv
from gp_skrl.rng import stream
from gp_skrl.runner.quality_gates import QualityGateEvaluator, QualityGateReport
from gp_skrl.runner.store import ArtifactStore, StoredArtifact
from gp_skrl.schemas.config import RunConfig, config_hash
from gp_skrl.schemas.results import AdaptationReport, MetricsReport
from gp_skrl.schemas.scenarios import Scenario
from gp_skrl.sim.adaptation import run_online_adaptation
from gp_skrl.sim.closed_loop import run_scenario
from gp_skrl.sim.collect import collect
from gp_skrl.sim.experiments import EvaluationRun, evaluate_batch
from gp_skrl.sim.metrics import compute_metrics

LOG_VOLATILE = ["timing.csv"]


def save_training_set(data: GPTrainingSet, path: Path) -> Path:
    with path.open("wb") as fh:
        np.savez(fh, inputs=data.inputs, targets=data.targets)
    return path


def load_training_set(path: Path) -> GPTrainingSet:
    with np.load(path) as data:
        return GPTrainingSet(data["inputs"], data["targets"])


def write_metrics(metrics: MetricsReport, path: Path) -> Path:
    path.write_text(metrics.model_dump_json(indent=2))
    return path


def write_stage_errors(report: AdaptationReport, path: Path) -> Path:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["stage", "half", "start", "end", "mean_abs_lateral_error", "steps"])
        for row in report.rows:
            writer.writerow(
                [row.stage, row.half, repr(row.start), repr(row.end), repr(row.mean_abs_lateral_error), row.steps]
            )
    return path


@dataclass
class StageOutcome:
    """What a stage stored and, for closed-loop stages, how the runs went."""

    artifact: StoredArtifact
    metrics: list[MetricsReport]
    gate_report: QualityGateReport | None = None
    adaptation: AdaptationReport | None = None
    runs: list[EvaluationRun] | None = None

    @property
    def collided(self) -> bool:
        return any(m.collision for m in self.metrics)


class Pipeline:
    """Runs pipeline stages for one scenario and configuration against an artifact store."""

    def __init__(
        self,
        scenario: Scenario,
        cfg: RunConfig,
        store: ArtifactStore,
        *,
        gate_evaluator: QualityGateEvaluator | None = None,
    ) -> None:
        self._scenario = scenario
        self._cfg = cfg
        self._store = store
        self._gates = gate_evaluator or QualityGateEvaluator()

    @property
    def scenario(self) -> Scenario:
        return self._scenario

    @property
    def seed(self) -> int:
        return self._cfg.seed

    def _hash(self, *sections) -> str:
        return config_hash(self._scenario, *sections)

    # -- collect -----------------------------------------------------------

    def collect(self) -> StoredArtifact:
        """Exploration run plus the residual training set; nothing is stored when the run is too short."""
        cfg = self._cfg
        log, data = collect(self._scenario, cfg)

        def write(out: Path) -> None:
            log.save(out)
            save_training_set(data, out / "gp_data.npz")

        return self._store.put(
            "collect",
            write,
            scenario=self._scenario.name,
            config_hash=self._hash(cfg.excitation, cfg.gp, cfg.planner, cfg.bounds),
            seed=self.seed,
            volatile=LOG_VOLATILE,
            extra={"steps": len(log), "samples": len(data), "termination": log.termination},
        )

    # -- fit-gp ------------------------------------------------------------

    def fit_gp(self) -> StoredArtifact:
        cfg = self._cfg
        source = self._store.latest("collect", self._scenario.name)
        data = load_training_set(source.file("gp_data.npz"))
        model = fit_gp_model(data, cfg.gp, stream(self.seed, "gp-inducing"))
        return self._store.put(
            "gp",
            lambda out: model.save(out / "model.npz"),
            scenario=self._scenario.name,
            config_hash=self._hash(cfg.gp),
            seed=self.seed,
            parents={"collect": source.record.address},
            extra={"kind": model.kind, "samples": len(data)},
        )

    def _load_model(self, policies: StoredArtifact | None = None) -> tuple[GPModel | None, dict[str, str]]:
        """The GP the policies were trained with (or the latest one), plus its parent entry."""
        address = policies.record.parents.get("gp") if policies is not None else None
        if policies is not None and address is None:
            return None, {}
        gp = self._store.get("gp", address) if address else self._store.latest("gp", self._scenario.name)
        return GPModel.load(gp.file("model.npz")), {"gp": gp.record.address}

    # -- train -------------------------------------------------------------

    def train(self, *, nominal_only: bool = False) -> tuple[StoredArtifact, TrainedPolicies]:
        """Train pi0 and pi1, store checkpoints and traces, then insist on convergence."""
        cfg = self._cfg
        if nominal_only:
            model, parents = None, {}
        else:
            try:
                model, parents = self._load_model()
            except MissingArtifactError as exc:
                raise MissingArtifactError(f"{exc}. Run fit-gp first or pass --nominal-only") from exc
        trained = train_policies(cfg, self._scenario, model)

        def write(out: Path) -> None:
            trained.pi0.save(out / "pi0.npz")
            trained.pi1.save(out / "pi1.npz")
            write_trace_csv(trained.results.pi0.trace, out / "trace_pi0.csv")
            write_trace_csv(trained.results.pi1.trace, out / "trace_pi1.csv")

        artifact = self._store.put(
            "policies",
            write,
            scenario=self._scenario.name,
            config_hash=self._hash(cfg.kernel, cfg.cost, cfg.training, cfg.box, cfg.bounds),
            seed=self.seed,
            volatile=["trace_pi0.csv", "trace_pi1.csv"],
            parents=parents,
            extra={
                "nominal_only": nominal_only,
                "dictionary_size": len(trained.dictionary),
                "iterations": {"pi0": trained.results.pi0.iterations, "pi1": trained.results.pi1.iterations},
                "converged": {"pi0": trained.results.pi0.converged, "pi1": trained.results.pi1.converged},
            },
        )
        require_converged(trained.results.pi0, label="control policy", trace_path=str(artifact.file("trace_pi0.csv")))
        require_converged(trained.results.pi1, label="planning policy", trace_path=str(artifact.file("trace_pi1.csv")))
        return artifact, trained

    def _load_policies(self) -> tuple[StoredArtifact, KernelPolicy, KernelPolicy]:
        try:
            source = self._store.latest("policies", self._scenario.name)
        except MissingArtifactError as exc:
            raise MissingArtifactError(f"{exc}. Run train first") from exc
        if not all(source.record.extra.get("converged", {}).values()):
            logger.warning("policies {} did not converge; deploying them anyway", source.record.address[:12])
        return source, KernelPolicy.load(source.file("pi0.npz")), KernelPolicy.load(source.file("pi1.npz"))

    # -- simulate ----------------------------------------------------------

    def simulate(self) -> StageOutcome:
        cfg = self._cfg
        source, pi0, pi1 = self._load_policies()
        model, gp_parent = self._load_model(source)
        holder: dict[str, EvaluationRun] = {}

        def write(out: Path) -> None:
            log = run_scenario(
                self._scenario, pi0, pi1, cfg.planner, model, seed=self.seed, trace_path=out / "planner_trace.csv"
            )
            log.save(out)
            run = holder["run"] = EvaluationRun(self.seed, log, compute_metrics(log, cfg.metrics))
            write_metrics(run.metrics, out / "metrics.json")

        artifact = self._store.put(
            "simulate",
            write,
            scenario=self._scenario.name,
            config_hash=self._hash(cfg.planner, cfg.metrics),
            seed=self.seed,
            volatile=[*LOG_VOLATILE, "metrics.json"],
            parents={"policies": source.record.address, **gp_parent},
        )
        run = holder["run"]
        return StageOutcome(artifact, [run.metrics], self._gates.evaluate([run.metrics]), runs=[run])

    # -- adapt -------------------------------------------------------------

    def adapt(self) -> StageOutcome:
        cfg = self._cfg
        source, pi0, _ = self._load_policies()
        model, gp_parent = self._load_model(source)
        log, report = run_online_adaptation(self._scenario, pi0, model, cfg, seed=self.seed)
        metrics = compute_metrics(log, cfg.metrics)

        def write(out: Path) -> None:
            log.save(out)
            write_metrics(metrics, out / "metrics.json")
            write_stage_errors(report, out / "stage_errors.csv")
            (out / "adaptation.json").write_text(report.model_dump_json(indent=2))

        artifact = self._store.put(
            "adapt",
            write,
            scenario=self._scenario.name,
            config_hash=self._hash(cfg.planner, cfg.gp, cfg.training, cfg.cost, cfg.adaptation, cfg.metrics),
            seed=self.seed,
            volatile=[*LOG_VOLATILE, "metrics.json", "adaptation.json"],
            parents={"policies": source.record.address, **gp_parent},
            extra={"failed_updates": report.failed_updates},
        )
        return StageOutcome(artifact, [metrics], adaptation=report)

    # -- evaluate ----------------------------------------------------------

    def evaluate(self, seeds: Sequence[int] | None = None, *, max_workers: int = 1) -> StageOutcome:
        """Closed-loop runs over several seeds, aggregated into a JSON report and checked against the gates."""
        cfg = self._cfg
        seeds = list(seeds) if seeds else [self.seed]
        source, pi0, pi1 = self._load_policies()
        model, gp_parent = self._load_model(source)
        runs = evaluate_batch(self._scenario, pi0, pi1, cfg, model, seeds=seeds, max_workers=max_workers)
        metrics = [r.metrics for r in runs]
        gate_report = self._gates.evaluate(metrics)

        def write(out: Path) -> None:
            for run in runs:
                run.log.save(out / "runs" / f"seed_{run.seed}")
            generate_json_report(self._scenario.name, runs, gate_report, out / "report.json")

        volatile = ["report.json", *(f"runs/seed_{s}/timing.csv" for s in seeds)]
        artifact = self._store.put(
            "evaluate",
            write,
            scenario=self._scenario.name,
            config_hash=self._hash(cfg.planner, cfg.metrics),
            seed=self.seed,
            volatile=volatile,
            parents={"policies": source.record.address, **gp_parent},
            extra={"seeds": seeds},
        )
        return StageOutcome(artifact, metrics, gate_report, runs=runs)
