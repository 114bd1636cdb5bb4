"""CLI entry point: gp-skrl."""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from loguru import logger
from pydantic import ValidationError

from gp_skrl.errors import ConfigError, EmptyDataError, MissingArtifactError, NoConvergenceError
from gp_skrl.log import configure_logging
from gp_skrl.reporting.scorecard import print_adaptation, print_model_learning, print_scorecard, print_sparse_gp
from gp_skrl.runner.config import load_run_config
from gp_skrl.runner.pipeline import Pipeline, StageOutcome
from gp_skrl.runner.store import ArtifactStore
from gp_skrl.scenarios.loader import get_scenario
from gp_skrl.schemas.config import RunConfig
from gp_skrl.sim.experiments import compare_model_learning, compare_sparse_gp

STORE_ENV = "GP_SKRL_STORE"
DEFAULT_STORE = "output/store"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NO_CONVERGENCE = 3
EXIT_COLLISION = 4

STAGES = ["collect", "fit-gp", "train", "simulate", "adapt", "evaluate", "compare"]


def _seed_list(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"seeds must be comma-separated integers, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-s", "--scenario", required=True, help="Scenario name or path to a scenario JSON file")
    common.add_argument(
        "-o",
        "--out",
        default=None,
        help=f"Artifact store root (default: ${STORE_ENV} or {DEFAULT_STORE})",
    )
    common.add_argument("--seed", type=int, default=None, help="Master RNG seed")
    common.add_argument("-c", "--config", default=None, help="Run configuration JSON (default: data/configs/default.json)")
    common.add_argument(
        "--override",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="Override a config field, e.g. training.max_iters=200 (repeatable)",
    )
    common.add_argument("-v", "--verbose", action="store_true", help="Debug logging")

    parser = argparse.ArgumentParser(
        prog="gp-skrl",
        description="Sparse-kernel batch RL with GP model learning: collect, fit, train, deploy",
    )
    sub = parser.add_subparsers(dest="stage", required=True)
    sub.add_parser("collect", parents=[common], help="Exploration run and residual training data")
    sub.add_parser("fit-gp", parents=[common], help="Fit the residual GP on the collected data")
    train = sub.add_parser("train", parents=[common], help="Train the control and planning policies")
    train.add_argument("--nominal-only", action="store_true", help="Train on the nominal model without a GP")
    simulate = sub.add_parser("simulate", parents=[common], help="One closed-loop run with the safety planner")
    simulate.add_argument("--scorecard", action="store_true", help="Print a metrics table to the terminal")
    adapt = sub.add_parser("adapt", parents=[common], help="Closed-loop run with online policy updates")
    adapt.add_argument("--scorecard", action="store_true", help="Print the stage error table")
    evaluate = sub.add_parser("evaluate", parents=[common], help="Closed-loop runs over several seeds")
    evaluate.add_argument("--seeds", type=_seed_list, default=None, help="Comma-separated seeds, e.g. 0,1,2")
    evaluate.add_argument("--workers", type=int, default=1, help="Worker threads for independent runs")
    evaluate.add_argument("--scorecard", action="store_true", help="Print a metrics table to the terminal")
    compare = sub.add_parser("compare", parents=[common], help="Paired experiments that train their own policies")
    compare.add_argument("experiment", choices=["model-learning", "sparse-gp"])
    compare.add_argument("--seeds", type=_seed_list, default=None, help="Comma-separated seeds (model-learning)")
    compare.add_argument("--sizes", type=_seed_list, default=None, help="Training set sizes (sparse-gp)")
    return parser


def _store_root(args: argparse.Namespace) -> Path:
    return Path(args.out or os.environ.get(STORE_ENV) or DEFAULT_STORE)


def _load_config(args: argparse.Namespace) -> RunConfig:
    return load_run_config(
        args.config,
        args.override,
        stage=args.stage,
        scenario=args.scenario,
        output_dir=str(_store_root(args)),
        seed=args.seed,
    )


def _summarize(outcome: StageOutcome) -> None:
    for m in outcome.metrics:
        logger.info(
            "J={:.4f} length={:.1f} m CT={:.2f} s termination={} collision={}",
            m.J,
            m.length,
            m.completion_time,
            m.termination,
            m.collision,
        )
    if outcome.gate_report is not None:
        for gr in outcome.gate_report.failed():
            logger.warning("gate {} failed: {:.4f} < {:.4f}", gr.gate.metric, gr.actual_value, gr.gate.threshold)


def _run_stage(args: argparse.Namespace, pipeline: Pipeline, cfg: RunConfig) -> StageOutcome | None:
    scenario = pipeline.scenario
    outcome = None
    if args.stage == "collect":
        artifact = pipeline.collect()
    elif args.stage == "fit-gp":
        artifact = pipeline.fit_gp()
    elif args.stage == "train":
        artifact, _ = pipeline.train(nominal_only=args.nominal_only)
    elif args.stage == "simulate":
        outcome = pipeline.simulate()
        if args.scorecard:
            print_scorecard(scenario.name, outcome.runs or [], outcome.gate_report)
        artifact = outcome.artifact
    elif args.stage == "adapt":
        outcome = pipeline.adapt()
        if args.scorecard and outcome.adaptation is not None:
            print_adaptation(outcome.adaptation)
        artifact = outcome.artifact
    elif args.stage == "evaluate":
        outcome = pipeline.evaluate(args.seeds, max_workers=args.workers)
        if args.scorecard:
            print_scorecard(scenario.name, outcome.runs or [], outcome.gate_report)
        artifact = outcome.artifact
    else:
        if args.experiment == "model-learning":
            print_model_learning(compare_model_learning(scenario, cfg, seeds=args.seeds or (0, 1, 2)))
        else:
            print_sparse_gp(compare_sparse_gp(args.sizes or (1000, 3000, 9000), options=cfg.gp, seed=cfg.seed))
        return None
    print(f"{artifact.record.kind} artifact: {artifact.path}")
    return outcome


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose)

    try:
        cfg = _load_config(args)
        scenario = get_scenario(args.scenario)
        store = ArtifactStore(_store_root(args))
        outcome = _run_stage(args, Pipeline(scenario, cfg, store), cfg)
    except NoConvergenceError as exc:
        logger.error("{}", exc)
        if exc.trace_path:
            print(f"iteration trace: {exc.trace_path}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    except (ConfigError, ValidationError, MissingArtifactError, EmptyDataError, FileNotFoundError, ValueError) as exc:
        logger.error("{}", exc)
        return EXIT_CONFIG

    if outcome is None:
        return EXIT_OK
    _summarize(outcome)
    if scenario.require_safe and outcome.collided:
        logger.error("collision in {!r}, which requires a safe run", scenario.name)
        return EXIT_COLLISION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
