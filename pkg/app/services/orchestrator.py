"""Configure & Conquer pipeline and the comparison table of its rows."""
import asyncio
import logging
import math
import time
from typing import List, Optional, Tuple

import numpy as np
from scipy import stats

from app.core.appsettings import app_settings
from app.core.errors import InvalidInputError
from app.core.seeding import SeedStream, derive_seed
from app.models.configuration import FleetConfiguration
from app.models.experiment import (
    CCResult,
    CompareReport,
    ConfigureMethod,
    ExperimentKind,
    ExperimentSpec,
    Provenance,
)
from app.models.search import AlgorithmSpec, AlgorithmTag, GAParams
from app.models.topology import Topology
from app.services.configurator import extract_best_configuration, train_configurator
from app.services.evaluation import EvaluationCache, episode_seeds, evaluate_configuration, run_algorithm
from app.services.policies import MatrixPolicy
from app.services.report import render_compare_text
from app.services.search import default_ga_params, ga_joint, ls_net, random_configurations
from app.services.simulator import rollout
from app.services.validation import require_valid_configuration, require_valid_topology

logger = logging.getLogger(__name__)

DEFAULT_STAR = AlgorithmSpec(tag=AlgorithmTag.ORI)


def confidence_interval(values: List[float]) -> Tuple[float, float]:
    """
    Mean and 95% half-width with the t-distribution.

    Raises:
        InvalidInputError: With fewer than two values
    """
    if len(values) < 2:
        raise InvalidInputError(f"a confidence interval needs at least 2 seeds, got {len(values)}")
    sample = np.asarray(values, dtype=float)
    half_width = stats.t.ppf(0.975, len(sample) - 1) * sample.std(ddof=1) / math.sqrt(len(sample))
    return float(sample.mean()), float(half_width)


def budgeted_ga_params(seed: int, budget: int, cost_per_genome: int) -> GAParams:
    """Default GA parameters with generations cut so every genome fits the rollout budget"""
    params = default_ga_params(seed)
    affordable = budget // max(1, cost_per_genome * params.population) - 1
    return params.model_copy(update={"generations": max(0, min(params.generations, affordable))})


def random_configuration_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(derive_seed(seed, SeedStream.PIPELINE, 1))


def configure_step(
    t: Topology,
    cheap: AlgorithmSpec,
    method: ConfigureMethod,
    budget: int,
    seed: int = 0,
    eval_episodes: Optional[int] = None,
) -> FleetConfiguration:
    """
    Pick a configuration with the chosen search method.

    Args:
        t: A valid topology
        cheap: Algorithm whose rollouts score candidate configurations
        method: rl-configurator, lsnet or randomconf-best
        budget: Cap on the rollouts spent; for lsnet, on planner calls
        seed: Pipeline seed
        eval_episodes: Rollouts per candidate; settings default

    Returns:
        The chosen configuration
    """
    require_valid_topology(t)
    if budget < 1:
        raise InvalidInputError(f"budget must be >= 1, got {budget}")
    episodes = eval_episodes or app_settings.configurator.eval_episodes
    logger.info(f"Configure step: {method} with {cheap.label}, budget {budget}, seed {seed}")

    if method == ConfigureMethod.RL_CONFIGURATOR:
        hyper = app_settings.configurator.model_copy(update={"eval_episodes": episodes})
        cache = EvaluationCache(max_rollouts=budget)
        _, report = train_configurator(t, cheap, hyper=hyper, seed=seed, cache=cache)
        if report.best is None:
            logger.warning(f"Budget {budget} allowed no evaluation; using the greedy decode")
            return report.greedy_configuration
        return extract_best_configuration(report)

    if method == ConfigureMethod.LSNET:
        return ls_net(t, budgeted_ga_params(seed, budget, 1), cheap.noise_level).best_configuration

    candidates = random_configurations(t, max(1, budget // episodes), random_configuration_rng(seed))
    if len(candidates) == 1:
        return candidates[0]
    eval_seed = derive_seed(seed, SeedStream.EVAL, 0)
    scores = [evaluate_configuration(t, p, cheap, episodes, eval_seed) for p in candidates]
    return candidates[int(np.argmax(scores))]


def _conquer_value(t: Topology, p: FleetConfiguration, star: AlgorithmSpec, eval_seed: int, n_episodes: int) -> float:
    return float(np.mean([
        run_algorithm(t, p, star, episode_seed).fulfillment_pct
        for episode_seed in episode_seeds(eval_seed, n_episodes)
    ]))


def conquer_step(
    t: Topology,
    p: FleetConfiguration,
    star: AlgorithmSpec,
    k_seeds: Optional[int] = None,
    seed: Optional[int] = None,
) -> CCResult:
    """
    Evaluate star's policy under p with k seeded rollouts.

    Args:
        t: A valid topology
        p: A configuration valid for t
        star: Algorithm producing the deployed policy
        k_seeds: Rollouts, at least 2; settings default
        seed: Evaluation seed; settings master seed by default

    Returns:
        CCResult with the per-rollout fulfillment and its 95% interval
    """
    k_seeds = app_settings.experiment.k_seeds if k_seeds is None else k_seeds
    seed = app_settings.experiment.master_seed if seed is None else seed
    if k_seeds < 2:
        raise InvalidInputError(f"k_seeds must be >= 2, got {k_seeds}")
    require_valid_configuration(t, p)

    seeds = episode_seeds(seed, k_seeds)
    per_seed = [run_algorithm(t, p, star, episode_seed).fulfillment_pct for episode_seed in seeds]
    mean, ci95 = confidence_interval(per_seed)
    logger.info(f"Conquer step with {star.label}: {mean:.2f} +/- {ci95:.2f}")
    return CCResult(
        label=star.label,
        configuration=p,
        configurations=[p],
        star=star,
        per_seed=per_seed,
        mean=mean,
        ci95=ci95,
        provenance=Provenance(pipeline_seeds=[seed], eval_seeds=[seeds], configure_method="none", budget=0),
    )


def run_cc(
    t: Topology,
    cheap: AlgorithmSpec,
    star: AlgorithmSpec,
    method: ConfigureMethod = ConfigureMethod.RL_CONFIGURATOR,
    budget: Optional[int] = None,
    k_seeds: Optional[int] = None,
    master_seed: Optional[int] = None,
    eval_episodes: Optional[int] = None,
    record_wall_time: Optional[bool] = None,
) -> CCResult:
    """
    Configure with cheap, then conquer with star, once per pipeline seed.

    Every pipeline seed reruns the configure step; the interval is over pipeline seeds.
    """
    spec = ExperimentSpec(kind=ExperimentKind.CC, cheap=cheap, star=star, method=method, budget=budget)
    return run_row(t, spec, k_seeds, master_seed, eval_episodes, record_wall_time)


def run_row(
    t: Topology,
    spec: ExperimentSpec,
    k_seeds: Optional[int] = None,
    master_seed: Optional[int] = None,
    eval_episodes: Optional[int] = None,
    record_wall_time: Optional[bool] = None,
) -> CCResult:
    """
    Run one comparison row over k pipeline seeds.

    Pipeline seed i and evaluation seed i depend only on (master_seed, i), so
    rows run with the same master seed are evaluated on the same episodes.
    The elapsed time is always logged and enters the result only when
    record_wall_time is set.
    """
    settings = app_settings.experiment
    k_seeds = settings.k_seeds if k_seeds is None else k_seeds
    master_seed = settings.master_seed if master_seed is None else master_seed
    episodes = eval_episodes or settings.eval_episodes
    budget = spec.budget or settings.budget
    record_wall_time = settings.record_wall_time if record_wall_time is None else record_wall_time
    if k_seeds < 2:
        raise InvalidInputError(f"k_seeds must be >= 2, got {k_seeds}")
    require_valid_topology(t)

    star = spec.star or DEFAULT_STAR
    cheap = spec.cheap or AlgorithmSpec(tag=AlgorithmTag.HEUR)
    started = time.perf_counter()
    pipeline_seeds, eval_seeds, configurations, per_seed = [], [], [], []

    for index in range(k_seeds):
        pipeline_seed = derive_seed(master_seed, SeedStream.PIPELINE, index)
        eval_seed = derive_seed(master_seed, SeedStream.EVAL, index)
        pipeline_seeds.append(pipeline_seed)
        eval_seeds.append(episode_seeds(eval_seed, episodes))

        if spec.kind == ExperimentKind.GA_JOINT:
            params = budgeted_ga_params(pipeline_seed, budget, episodes)
            result = ga_joint(t, params, episodes)
            policy = MatrixPolicy(result.matrix_policy)
            p = result.best_configuration
            value = float(np.mean([rollout(t, p, policy, s).fulfillment_pct for s in eval_seeds[-1]]))
        else:
            if spec.kind == ExperimentKind.CC:
                p = configure_step(t, cheap, spec.method, budget, pipeline_seed, episodes)
            elif spec.kind == ExperimentKind.LS_NET:
                p = configure_step(t, star, ConfigureMethod.LSNET, budget, pipeline_seed, episodes)
            else:
                p = random_configurations(t, 1, random_configuration_rng(pipeline_seed))[0]
            value = _conquer_value(t, p, star, eval_seed, episodes)

        configurations.append(p)
        per_seed.append(value)
        logger.info(f"{spec.label} pipeline seed {index}: fulfillment {value:.2f}")

    mean, ci95 = confidence_interval(per_seed)
    elapsed = time.perf_counter() - started
    method = spec.method if spec.kind == ExperimentKind.CC else spec.kind
    result = CCResult(
        label=spec.label,
        configuration=configurations[0],
        configurations=configurations,
        star=None if spec.kind == ExperimentKind.GA_JOINT else star,
        per_seed=per_seed,
        mean=mean,
        ci95=ci95,
        provenance=Provenance(
            pipeline_seeds=pipeline_seeds,
            eval_seeds=eval_seeds,
            configure_method=str(method),
            budget=budget,
            walltime_s=round(elapsed, 3) if record_wall_time else 0.0,
        ),
    )
    logger.info(f"{result.label}: {mean:.2f} +/- {ci95:.2f} over {k_seeds} pipeline seeds in {elapsed:.1f}s")
    return result


async def compare_table(
    t: Topology,
    rows: List[ExperimentSpec],
    k_seeds: Optional[int] = None,
    master_seed: Optional[int] = None,
    eval_episodes: Optional[int] = None,
    record_wall_time: Optional[bool] = None,
) -> CompareReport:
    """
    Run every row concurrently on shared seeds and build the comparison report.

    Results keep the order of rows; the best row is the highest mean, first on ties.
    """
    if not rows:
        raise InvalidInputError("compare needs at least one row")

    async with asyncio.TaskGroup() as group:
        tasks = [
            group.create_task(asyncio.to_thread(
                run_row, t, row, k_seeds, master_seed, eval_episodes, record_wall_time
            ))
            for row in rows
        ]
    results = [task.result() for task in tasks]
    best_index = max(range(len(results)), key=lambda index: (results[index].mean, -index))
    return CompareReport(results=results, best_index=best_index, text=render_compare_text(results, best_index))
