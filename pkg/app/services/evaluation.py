"""Policy construction from algorithm specs and cached, seeded configuration evaluation."""
import logging
from typing import Dict, List, Optional, Tuple

import numpy as np

from app.core.seeding import SeedStream, derive_seed, episode_streams
from app.models.configuration import FleetConfiguration
from app.models.search import AlgorithmSpec, AlgorithmTag
from app.models.simulation import EpisodeMetrics
from app.models.topology import Topology
from app.services.planner import or_policy, ori_policy
from app.services.policies import HeuristicPolicy, NullPolicy, RandomPolicy, classify_ports
from app.services.simulator import Policy, rollout

logger = logging.getLogger(__name__)


def make_policy(spec: AlgorithmSpec, t: Topology, p: FleetConfiguration, planning_rng: np.random.Generator) -> Policy:
    """
    Obtain the policy an algorithm produces for configuration p.

    Rand, Heur and Null need no training; OR and OR(I) plan under p with the planning stream.
    """
    if spec.tag == AlgorithmTag.RAND:
        return RandomPolicy()
    if spec.tag == AlgorithmTag.HEUR:
        return HeuristicPolicy(classify_ports(t, spec.heuristic_threshold))
    if spec.tag == AlgorithmTag.OR:
        return or_policy(t, p, spec.noise_level, planning_rng)
    if spec.tag == AlgorithmTag.ORI:
        return ori_policy(t, p, spec.window, spec.plan_horizon, spec.noise_level, planning_rng)
    return NullPolicy()


def run_algorithm(t: Topology, p: FleetConfiguration, spec: AlgorithmSpec, seed: int,
                  gamma: Optional[float] = None) -> EpisodeMetrics:
    """One seeded episode of the algorithm's policy; the planning stream comes from the same seed"""
    policy = make_policy(spec, t, p, episode_streams(seed).planning)
    return rollout(t, p, policy, seed, gamma=gamma)


def episode_seeds(seed: int, n_episodes: int) -> List[int]:
    return [derive_seed(seed, SeedStream.EVAL, index) for index in range(n_episodes)]


class EvaluationCache:
    """
    Memo of configuration evaluations keyed by (configuration, algorithm, episodes, seed).

    rollouts counts the episodes actually simulated; a max_rollouts budget is
    checked by callers through can_afford.
    """

    def __init__(self, max_rollouts: Optional[int] = None):
        self.max_rollouts = max_rollouts
        self.values: Dict[Tuple, float] = {}
        self.hits = 0
        self.misses = 0
        self.rollouts = 0

    @staticmethod
    def key(p: FleetConfiguration, spec: AlgorithmSpec, n_episodes: int, seed: int) -> Tuple:
        return (p.key(), spec, n_episodes, seed)

    def can_afford(self, n_episodes: int) -> bool:
        return self.max_rollouts is None or self.rollouts + n_episodes <= self.max_rollouts

    def contains(self, p: FleetConfiguration, spec: AlgorithmSpec, n_episodes: int, seed: int) -> bool:
        return self.key(p, spec, n_episodes, seed) in self.values

    @property
    def hit_rate(self) -> float:
        total = self.hits + self.misses
        return self.hits / total if total else 0.0


def evaluate_configuration(
    t: Topology,
    p: FleetConfiguration,
    cheap_alg: AlgorithmSpec,
    n_episodes: int,
    seed: int,
    cache: Optional[EvaluationCache] = None,
) -> float:
    """
    Mean fulfillment percentage of cheap_alg's policy under p over seeded episodes.

    Args:
        t: The world description
        p: A valid configuration
        cheap_alg: Algorithm whose policy is evaluated
        n_episodes: Number of rollouts
        seed: Evaluation seed; episode seeds are derived from it
        cache: Optional memo; a hit simulates nothing

    Returns:
        Mean fulfillment percentage in [0, 100]
    """
    key = EvaluationCache.key(p, cheap_alg, n_episodes, seed)
    if cache is not None and key in cache.values:
        cache.hits += 1
        return cache.values[key]

    results = [run_algorithm(t, p, cheap_alg, episode_seed) for episode_seed in episode_seeds(seed, n_episodes)]
    value = float(np.mean([metrics.fulfillment_pct for metrics in results]))
    if cache is not None:
        cache.misses += 1
        cache.rollouts += n_episodes
        cache.values[key] = value
    return value
