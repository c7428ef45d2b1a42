"""Command-line entry point: python -m app.main <subcommand> [flags]"""
import argparse
import asyncio
import logging.handlers
import os
import sys
from pathlib import Path
from typing import List, Optional

import yaml
from dotenv import load_dotenv
from pydantic import ValidationError

from app.core.appsettings import app_settings
from app.core.errors import EcrError
from app.core.seeding import episode_streams
from app.models.configuration import FleetConfiguration
from app.models.experiment import ConfigureMethod, ExperimentKind, ExperimentSpec
from app.models.search import AlgorithmSpec, AlgorithmTag
from app.models.topology import Topology
from app.services.configurator import extract_best_configuration, save_checkpoint, train_configurator
from app.services.evaluation import EvaluationCache, episode_seeds, make_policy
from app.services.orchestrator import budgeted_ga_params, compare_table, configure_step, run_cc
from app.services.planner import build_plan, make_forecast
from app.services.policies import MatrixPolicy, PlanPolicy
from app.services.report import (
    TemplatePath,
    render_text,
    write_compare_csv,
    write_history_csv,
    write_metrics_csv,
    write_text,
    write_trace_csv,
    write_training_csv,
)
from app.services.search import ga_joint, ls_net, round_robin_configuration
from app.services.simulator import run_episode
from app.services.topology_generator import TopologyShape, gen_topology
from app.services.topology_io import (
    load_configuration,
    load_matrix_policy,
    load_plan,
    load_topology,
    save_configuration,
    save_matrix_policy,
    save_plan,
    save_topology,
)
from app.services.validation import require_valid_configuration, require_valid_topology

logger = logging.getLogger(__name__)

ALGORITHM_CHOICES = [str(tag) for tag in AlgorithmTag]
SEARCH_METHODS = ["lsnet", "gajoint", "randomconf"]

DEFAULT_COMPARE_ROWS = (
    "cc:heur:heur",
    "cc:or:or",
    "cc:ori:ori",
    "cc:heur:ori",
    "cc:rand:ori",
    "cc:rand:rand",
    "cc:ori:rand",
    "ga-joint",
    "ls-net",
    "randomconf",
)


def configure_logging() -> None:
    log_dir = app_settings.experiment.log_path
    os.makedirs(log_dir, exist_ok=True)
    logging.basicConfig(
        level=logging.INFO,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=[
            logging.StreamHandler(),
            logging.handlers.RotatingFileHandler(
                log_dir / 'ecr.log',
                maxBytes=10485760,  # 10MB
                backupCount=5,
                encoding='utf-8'
            )
        ]
    )


def positive_int(value: str) -> int:
    number = int(value)
    if number < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return number


def policy_name(value: str) -> str:
    if value in ALGORITHM_CHOICES or value.startswith(("plan:", "matrix:")):
        return value
    raise argparse.ArgumentTypeError(
        f"unknown policy '{value}', expected one of {'|'.join(ALGORITHM_CHOICES)}|plan:<file>|matrix:<file>"
    )


def pipeline_seeds(value: str) -> int:
    number = int(value)
    if number < 2:
        raise argparse.ArgumentTypeError(f"a confidence interval needs at least 2 seeds, got {value}")
    return number


def row_name(value: str) -> str:
    parse_row(value)
    return value


def parse_row(value: str, method: ConfigureMethod = ConfigureMethod.RL_CONFIGURATOR,
              budget: Optional[int] = None) -> ExperimentSpec:
    """cc:<cheap>:<star>, ga-joint, ls-net[:<star>] or randomconf[:<star>]"""
    parts = value.split(":")
    try:
        kind = ExperimentKind(parts[0])
        tags = [AlgorithmSpec(tag=AlgorithmTag(part)) for part in parts[1:]]
    except ValueError:
        raise argparse.ArgumentTypeError(f"unknown comparison row '{value}'")
    if kind == ExperimentKind.CC and len(tags) == 2:
        return ExperimentSpec(kind=kind, cheap=tags[0], star=tags[1], method=method, budget=budget)
    if kind in (ExperimentKind.LS_NET, ExperimentKind.RANDOMCONF) and len(tags) <= 1:
        return ExperimentSpec(kind=kind, star=tags[0] if tags else None, budget=budget)
    if kind == ExperimentKind.GA_JOINT and not tags:
        return ExperimentSpec(kind=kind, budget=budget)
    raise argparse.ArgumentTypeError(f"malformed comparison row '{value}'")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ecr", description="ECR + fleet deployment toolkit")
    subparsers = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", type=Path, default=None, help="Output directory")
    common.add_argument("--seed", type=int, default=None, help="Master seed")

    world = argparse.ArgumentParser(add_help=False, parents=[common])
    world.add_argument("--topology", type=Path, required=True, help="Topology YAML file")
    world.add_argument("--horizon", type=positive_int, default=None, help="Override the topology horizon")

    simulate = subparsers.add_parser("simulate", parents=[world], help="Roll out a policy")
    simulate.add_argument("--config", type=Path, default=None, help="Fleet configuration YAML")
    simulate.add_argument("--policy", type=policy_name, default="heur")
    simulate.add_argument("--episodes", type=positive_int, default=1)
    simulate.add_argument("--trace", action="store_true", help="Write the first episode's daily trace")

    plan = subparsers.add_parser("plan", parents=[world], help="Dump an OR plan")
    plan.add_argument("--config", type=Path, default=None)
    plan.add_argument("--noise", type=float, default=None, help="Forecast noise level")

    train = subparsers.add_parser("train-conf", parents=[world], help="Train the configurator")
    train.add_argument("--cheap", choices=ALGORITHM_CHOICES, default="heur")
    train.add_argument("--budget", type=positive_int, default=None, help="Rollout budget")
    train.add_argument("--iterations", type=int, default=None)
    train.add_argument("--episodes", type=positive_int, default=None, help="Rollouts per evaluation")

    search = subparsers.add_parser("search", parents=[world], help="Configuration search baselines")
    search.add_argument("--method", choices=SEARCH_METHODS, default="lsnet")
    search.add_argument("--cheap", choices=ALGORITHM_CHOICES, default="heur")
    search.add_argument("--budget", type=positive_int, default=None)
    search.add_argument("--episodes", type=positive_int, default=None)

    cc = subparsers.add_parser("cc", parents=[world], help="Configure & Conquer pipeline")
    cc.add_argument("--cheap", choices=ALGORITHM_CHOICES, default="heur")
    cc.add_argument("--star", choices=ALGORITHM_CHOICES, default="ori")
    cc.add_argument("--method", choices=[str(m) for m in ConfigureMethod], default="rl-configurator")
    cc.add_argument("--budget", type=positive_int, default=None)
    cc.add_argument("--seeds", type=pipeline_seeds, default=None, help="Pipeline seeds (k >= 2)")
    cc.add_argument("--episodes", type=positive_int, default=None)
    cc.add_argument("--wall-time", action="store_true", help="Record elapsed seconds in walltime_s")

    compare = subparsers.add_parser("compare", parents=[world], help="Comparison table")
    compare.add_argument("--rows", type=row_name, nargs="+", default=list(DEFAULT_COMPARE_ROWS))
    compare.add_argument("--method", choices=[str(m) for m in ConfigureMethod], default="rl-configurator")
    compare.add_argument("--budget", type=positive_int, default=None)
    compare.add_argument("--seeds", type=pipeline_seeds, default=None)
    compare.add_argument("--episodes", type=positive_int, default=None)
    compare.add_argument("--wall-time", action="store_true", help="Record elapsed seconds in walltime_s")

    generate = subparsers.add_parser("gen-topology", parents=[common], help="Emit a bundled topology")
    generate.add_argument("--shape", choices=[str(s) for s in TopologyShape], default="desk")
    generate.add_argument("--horizon", type=positive_int, default=None)

    return parser


def _out_dir(args: argparse.Namespace) -> Path:
    out = args.out or app_settings.experiment.out_path
    out.mkdir(parents=True, exist_ok=True)
    return out


def _seed(args: argparse.Namespace) -> int:
    return app_settings.experiment.master_seed if args.seed is None else args.seed


def _topology(args: argparse.Namespace) -> Topology:
    t = load_topology(args.topology)
    if args.horizon is not None:
        t = t.model_copy(update={"horizon": args.horizon})
    require_valid_topology(t)
    return t


def _configuration(args: argparse.Namespace, t: Topology,
                   fallback: Optional[FleetConfiguration] = None) -> FleetConfiguration:
    if args.config is not None:
        p = load_configuration(args.config)
    else:
        p = fallback or round_robin_configuration(t)
    require_valid_configuration(t, p)
    return p


def cmd_simulate(args: argparse.Namespace) -> int:
    t = _topology(args)
    out = _out_dir(args)
    seed = _seed(args)

    fixed_policy, matrix_configuration = None, None
    if args.policy.startswith("plan:"):
        fixed_policy = PlanPolicy(load_plan(args.policy.removeprefix("plan:")))
    elif args.policy.startswith("matrix:"):
        spec = load_matrix_policy(args.policy.removeprefix("matrix:"))
        fixed_policy, matrix_configuration = MatrixPolicy(spec), spec.configuration
    p = _configuration(args, t, matrix_configuration)

    runs = []
    for run, episode_seed in enumerate(episode_seeds(seed, args.episodes)):
        if fixed_policy is not None:
            policy = fixed_policy
        else:
            spec = AlgorithmSpec(tag=AlgorithmTag(args.policy))
            policy = make_policy(spec, t, p, episode_streams(episode_seed).planning)
        metrics, state = run_episode(t, p, policy, episode_seed, record_trace=args.trace and run == 0)
        if args.trace and run == 0:
            write_trace_csv(state.trace, out / "trace.csv")
        runs.append((run, episode_seed, metrics))

    write_metrics_csv(runs, out / "metrics.csv")
    text = render_text(
        TemplatePath.METRICS,
        policy=args.policy,
        runs=[{"run": run, "seed": s, "metrics": m} for run, s, m in runs],
    )
    write_text(text, out / "metrics.txt")
    print(text, end="")
    return 0


def cmd_plan(args: argparse.Namespace) -> int:
    t = _topology(args)
    out = _out_dir(args)
    p = _configuration(args, t)
    noise = app_settings.planner.noise_level if args.noise is None else args.noise
    forecast = make_forecast(t, p, 0, t.horizon, noise, episode_streams(_seed(args)).planning)
    plan = build_plan(t, p, forecast)
    save_plan(plan, out / "plan.yaml")
    text = render_text(TemplatePath.PLAN, plan=plan)
    write_text(text, out / "plan.txt")
    print(text, end="")
    return 0


def cmd_train_conf(args: argparse.Namespace) -> int:
    t = _topology(args)
    out = _out_dir(args)
    hyper = app_settings.configurator
    if args.episodes is not None:
        hyper = hyper.model_copy(update={"eval_episodes": args.episodes})
    cache = EvaluationCache(max_rollouts=args.budget or app_settings.experiment.budget)
    policy, report = train_configurator(
        t, AlgorithmSpec(tag=AlgorithmTag(args.cheap)), iterations=args.iterations,
        hyper=hyper, seed=_seed(args), cache=cache,
    )
    write_training_csv(report, out / "training.csv")
    save_checkpoint(policy, out / "configurator.json")
    if report.best is not None:
        save_configuration(extract_best_configuration(report), out / "configuration.yaml")
    text = render_text(TemplatePath.TRAINING, report=report)
    write_text(text, out / "training.txt")
    print(text, end="")
    return 0


def cmd_search(args: argparse.Namespace) -> int:
    t = _topology(args)
    out = _out_dir(args)
    seed = _seed(args)
    budget = args.budget or app_settings.experiment.budget
    episodes = args.episodes or app_settings.experiment.eval_episodes

    if args.method == "randomconf":
        cheap = AlgorithmSpec(tag=AlgorithmTag(args.cheap))
        p = configure_step(t, cheap, ConfigureMethod.RANDOMCONF_BEST, budget, seed, episodes)
        save_configuration(p, out / "configuration.yaml")
        print(yaml.safe_dump(p.model_dump(mode="json"), sort_keys=False), end="")
        return 0

    if args.method == "lsnet":
        result = ls_net(t, budgeted_ga_params(seed, budget, 1))
    else:
        result = ga_joint(t, budgeted_ga_params(seed, budget, episodes), episodes)
        save_matrix_policy(result.matrix_policy, out / "matrix.yaml")
    write_history_csv(result.history, out / "history.csv")
    save_configuration(result.best_configuration, out / "configuration.yaml")
    text = render_text(TemplatePath.SEARCH, method=args.method, result=result)
    write_text(text, out / "search.txt")
    print(text, end="")
    return 0


def cmd_cc(args: argparse.Namespace) -> int:
    t = _topology(args)
    out = _out_dir(args)
    result = run_cc(
        t,
        AlgorithmSpec(tag=AlgorithmTag(args.cheap)),
        AlgorithmSpec(tag=AlgorithmTag(args.star)),
        method=ConfigureMethod(args.method),
        budget=args.budget,
        k_seeds=args.seeds,
        master_seed=_seed(args),
        eval_episodes=args.episodes,
        record_wall_time=args.wall_time or None,
    )
    write_compare_csv([result], out / "cc.csv")
    save_configuration(result.configuration, out / "configuration.yaml")
    text = render_text(TemplatePath.CC, result=result)
    write_text(text, out / "cc.txt")
    print(text, end="")
    return 0


def cmd_compare(args: argparse.Namespace) -> int:
    t = _topology(args)
    out = _out_dir(args)
    rows = [parse_row(row, ConfigureMethod(args.method), args.budget) for row in args.rows]
    report = asyncio.run(compare_table(
        t, rows, k_seeds=args.seeds, master_seed=_seed(args), eval_episodes=args.episodes,
        record_wall_time=args.wall_time or None,
    ))
    write_compare_csv(report.results, out / "compare.csv")
    write_text(report.text, out / "compare.txt")
    print(report.text, end="")
    return 0


def cmd_gen_topology(args: argparse.Namespace) -> int:
    out = _out_dir(args)
    t = gen_topology(TopologyShape(args.shape), _seed(args), args.horizon)
    require_valid_topology(t)
    path = out / f"{args.shape}.yaml"
    save_topology(t, path)
    print(path)
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "plan": cmd_plan,
    "train-conf": cmd_train_conf,
    "search": cmd_search,
    "cc": cmd_cc,
    "compare": cmd_compare,
    "gen-topology": cmd_gen_topology,
}


def describe_validation_error(error: ValidationError) -> str:
    first = error.errors()[0]
    location = ".".join(str(part) for part in first["loc"]) or error.title
    return f"{location}: {first['msg']}"


def main(argv: Optional[List[str]] = None) -> int:
    """Run one subcommand; returns 0 on success, 2 on usage error, 1 on runtime error"""
    load_dotenv()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exit_:
        return int(exit_.code or 0)

    configure_logging()
    try:
        return COMMANDS[args.command](args)
    except ValidationError as e:
        message = describe_validation_error(e)
    except (EcrError, ValueError, OSError, yaml.YAMLError) as e:
        message = str(e).splitlines()[0] if str(e) else type(e).__name__
    logger.error(f"{args.command} failed: {message}")
    print(f"error: {message}", file=sys.stderr)
    return 1


if __name__ == "__main__":
    sys.exit(main())
