"""Configuration search baselines: random configurations, GA, LS-NET and the joint GA."""
import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, Generic, Hashable, List, Optional, Tuple, TypeVar

import numpy as np

from app.core.appsettings import app_settings
from app.core.seeding import SeedStream, derive_seed
from app.models.configuration import FleetConfiguration
from app.models.search import GAParams, GenerationStats, MatrixPolicySpec, SearchResult
from app.models.topology import Topology
from app.services.evaluation import episode_seeds
from app.services.planner import make_forecast, plan_objective
from app.services.policies import MatrixPolicy
from app.services.simulator import rollout

logger = logging.getLogger(__name__)

G = TypeVar("G")

# (route id, start port) per vessel, in topology vessel order
ConfigGenes = Tuple[Tuple[str, str], ...]

MATRIX_MUTATION_SCALE = 0.2


def default_ga_params(seed: int = 0) -> GAParams:
    settings = app_settings.search
    return GAParams(
        population=settings.population,
        generations=settings.generations,
        tournament=settings.tournament,
        crossover_rate=settings.crossover_rate,
        mutation_rate=settings.mutation_rate,
        elitism=settings.elitism,
        seed=seed,
    )


def random_gene(t: Topology, rng: np.random.Generator) -> Tuple[str, str]:
    route = t.routes[int(rng.integers(len(t.routes)))]
    return route.id, route.stops[int(rng.integers(len(route.stops)))]


def random_genes(t: Topology, rng: np.random.Generator) -> ConfigGenes:
    return tuple(random_gene(t, rng) for _ in t.vessels)


def decode_genes(t: Topology, genes: ConfigGenes) -> FleetConfiguration:
    return FleetConfiguration.from_triples(
        (vessel.id, route, port) for vessel, (route, port) in zip(t.vessels, genes)
    )


def repair_genes(t: Topology, genes: ConfigGenes, rng: np.random.Generator) -> ConfigGenes:
    """Resample the start port of any gene whose port is not a stop of its route"""
    repaired = []
    for route_id, port_id in genes:
        route = t.route_index.get(route_id)
        if route is None:
            repaired.append(random_gene(t, rng))
        elif not route.contains(port_id):
            repaired.append((route_id, route.stops[int(rng.integers(len(route.stops)))]))
        else:
            repaired.append((route_id, port_id))
    return tuple(repaired)


def random_configurations(t: Topology, n: int, rng: np.random.Generator) -> List[FleetConfiguration]:
    """
    Draw n configurations: per vessel a uniform route, then a uniform stop of it.

    Args:
        t: A topology with at least one route
        n: Number of configurations (>= 1)
        rng: Sampling stream

    Returns:
        n valid configurations
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return [decode_genes(t, random_genes(t, rng)) for _ in range(n)]


def round_robin_configuration(t: Topology) -> FleetConfiguration:
    """Vessel i on route i mod |E|, starting at the route's first stop"""
    return FleetConfiguration.from_triples(
        (vessel.id, t.routes[index % len(t.routes)].id, t.routes[index % len(t.routes)].stops[0])
        for index, vessel in enumerate(t.vessels)
    )


def one_point_crossover(first: tuple, second: tuple, rng: np.random.Generator) -> Tuple[tuple, tuple]:
    if len(first) < 2:
        return first, second
    cut = int(rng.integers(1, len(first)))
    return first[:cut] + second[cut:], second[:cut] + first[cut:]


@dataclass
class GAOutcome(Generic[G]):
    best: G
    best_fitness: float
    history: List[GenerationStats]
    evaluations: int
    cache_hits: int


class GeneticSearch(Generic[G]):
    """
    Generational GA with tournament selection, elitism and a fitness memo.

    The genome representation is supplied by the caller through sample,
    crossover, mutate and key.
    """

    def __init__(
        self,
        params: GAParams,
        fitness: Callable[[G], float],
        sample: Callable[[np.random.Generator], G],
        crossover: Callable[[G, G, np.random.Generator], Tuple[G, G]],
        mutate: Callable[[G, np.random.Generator], G],
        key: Callable[[G], Hashable],
    ):
        self.params = params
        self.fitness = fitness
        self.sample = sample
        self.crossover = crossover
        self.mutate = mutate
        self.key = key
        self.cache: Dict[Hashable, float] = {}
        self.evaluations = 0
        self.cache_hits = 0

    def evaluate(self, genome: G) -> float:
        key = self.key(genome)
        if key in self.cache:
            self.cache_hits += 1
            return self.cache[key]
        value = float(self.fitness(genome))
        self.evaluations += 1
        self.cache[key] = value
        return value

    def _tournament(self, scores: List[float], rng: np.random.Generator) -> int:
        entrants = rng.integers(len(scores), size=self.params.tournament)
        return int(max(entrants, key=lambda index: (scores[index], -index)))

    def run(self, initial: Optional[List[G]] = None) -> GAOutcome[G]:
        params = self.params
        rng = np.random.default_rng(derive_seed(params.seed, SeedStream.SEARCH, 0))
        population = list(initial) if initial else [self.sample(rng) for _ in range(params.population)]
        scores = [self.evaluate(genome) for genome in population]

        best_index = int(np.argmax(scores))
        best, best_fitness = population[best_index], scores[best_index]
        history = [GenerationStats(generation=0, best=max(scores), mean=float(np.mean(scores)))]

        for generation in range(1, params.generations + 1):
            ranked = sorted(range(len(population)), key=lambda index: (-scores[index], index))
            next_population = [population[index] for index in ranked[:params.elitism]]
            while len(next_population) < params.population:
                first = population[self._tournament(scores, rng)]
                second = population[self._tournament(scores, rng)]
                if rng.random() < params.crossover_rate:
                    first, second = self.crossover(first, second, rng)
                for child in (first, second):
                    if len(next_population) < params.population:
                        next_population.append(self.mutate(child, rng))

            population = next_population
            scores = [self.evaluate(genome) for genome in population]
            generation_best = int(np.argmax(scores))
            if scores[generation_best] > best_fitness:
                best, best_fitness = population[generation_best], scores[generation_best]
            history.append(GenerationStats(generation=generation, best=max(scores), mean=float(np.mean(scores))))
            logger.info(
                f"Generation {generation}: best {max(scores):.4f}, mean {np.mean(scores):.4f}, "
                f"{self.evaluations} evaluations"
            )

        return GAOutcome(
            best=best,
            best_fitness=best_fitness,
            history=history,
            evaluations=self.evaluations,
            cache_hits=self.cache_hits,
        )


def _config_search(t: Topology, fitness: Callable[[ConfigGenes], float], params: GAParams) -> GeneticSearch:
    def mutate(genes: ConfigGenes, rng: np.random.Generator) -> ConfigGenes:
        mutated = tuple(
            random_gene(t, rng) if rng.random() < params.mutation_rate else gene
            for gene in genes
        )
        return repair_genes(t, mutated, rng)

    def crossover(first: ConfigGenes, second: ConfigGenes, rng: np.random.Generator):
        left, right = one_point_crossover(first, second, rng)
        return repair_genes(t, left, rng), repair_genes(t, right, rng)

    return GeneticSearch(
        params=params,
        fitness=fitness,
        sample=lambda rng: random_genes(t, rng),
        crossover=crossover,
        mutate=mutate,
        key=lambda genes: genes,
    )


def ga_search_configs(t: Topology, fitness: Callable[[FleetConfiguration], float],
                      params: GAParams) -> SearchResult:
    """
    GA over per-vessel (route, start port) genes.

    Args:
        t: A topology with at least one route
        fitness: Value to maximize
        params: GA parameters, seed included

    Returns:
        The best configuration and the per-generation best/mean history
    """
    search = _config_search(t, lambda genes: fitness(decode_genes(t, genes)), params)
    outcome = search.run()
    return SearchResult(
        best_configuration=decode_genes(t, outcome.best),
        best_fitness=outcome.best_fitness,
        history=outcome.history,
        evaluations=outcome.evaluations,
        cache_hits=outcome.cache_hits,
    )


def ls_net(t: Topology, params: GAParams, noise_level: Optional[float] = None) -> SearchResult:
    """
    GA whose fitness is the planned satisfied demand of each configuration.

    Every fitness call sees the same forecast draw: the demand part is identical
    across configurations and the arrival part is a fixed function of the configuration.
    """
    noise = app_settings.planner.noise_level if noise_level is None else noise_level
    forecast_seed = derive_seed(params.seed, SeedStream.FORECAST, 0)

    def fitness(p: FleetConfiguration) -> float:
        forecast = make_forecast(t, p, 0, t.horizon, noise, np.random.default_rng(forecast_seed))
        return plan_objective(t, p, forecast)

    result = ga_search_configs(t, fitness, params)
    logger.info(f"LS-NET: planned satisfied demand {result.best_fitness:.0f}, {result.cache_hits} cache hits")
    return result


@dataclass(frozen=True)
class JointGenome:
    """Configuration genes plus one action row per vessel"""
    genes: ConfigGenes
    matrix: Tuple[Tuple[float, ...], ...]

    def to_spec(self, t: Topology) -> MatrixPolicySpec:
        return MatrixPolicySpec(
            vessel_ids=tuple(vessel.id for vessel in t.vessels),
            matrix=self.matrix,
            configuration=decode_genes(t, self.genes),
        )


def max_calls(t: Topology) -> int:
    """Upper bound on the calls a vessel can make within the horizon"""
    shortest = min((max(1, math.floor(leg * (1 - v.speed_noise.sigma) + 0.5)) for r in t.routes
                    for leg in r.leg_distances for v in t.vessels), default=1)
    return t.horizon // shortest + 1


def joint_fitness(t: Topology, genome: JointGenome, seeds: List[int]) -> float:
    """Mean fulfillment of the genome's matrix policy under its configuration"""
    spec = genome.to_spec(t)
    policy = MatrixPolicy(spec)
    return float(np.mean([rollout(t, spec.configuration, policy, seed).fulfillment_pct for seed in seeds]))


def ga_joint(t: Topology, params: GAParams, n_eval_episodes: int,
             calls: Optional[int] = None) -> SearchResult:
    """
    Evolve configuration and action matrix together.

    Args:
        t: A topology with at least one route
        params: GA parameters
        n_eval_episodes: Seeded rollouts per fitness evaluation
        calls: Matrix columns; defaults to max_calls(t)

    Returns:
        SearchResult whose matrix_policy holds the best genome's matrix and configuration
    """
    columns = calls or max_calls(t)
    seeds = episode_seeds(derive_seed(params.seed, SeedStream.EVAL, 0), n_eval_episodes)

    def sample(rng: np.random.Generator) -> JointGenome:
        matrix = rng.uniform(-1.0, 1.0, size=(len(t.vessels), columns))
        return JointGenome(random_genes(t, rng), tuple(tuple(float(x) for x in row) for row in matrix))

    def crossover(first: JointGenome, second: JointGenome, rng: np.random.Generator):
        if len(first.genes) < 2:
            return first, second
        cut = int(rng.integers(1, len(first.genes)))
        return (
            JointGenome(first.genes[:cut] + second.genes[cut:], first.matrix[:cut] + second.matrix[cut:]),
            JointGenome(second.genes[:cut] + first.genes[cut:], second.matrix[:cut] + first.matrix[cut:]),
        )

    def mutate(genome: JointGenome, rng: np.random.Generator) -> JointGenome:
        genes = tuple(random_gene(t, rng) if rng.random() < params.mutation_rate else gene for gene in genome.genes)
        matrix = np.array(genome.matrix, dtype=float).reshape(len(t.vessels), columns)
        hit = rng.random(matrix.shape) < params.mutation_rate
        matrix = np.clip(matrix + hit * rng.normal(0.0, MATRIX_MUTATION_SCALE, size=matrix.shape), -1.0, 1.0)
        return JointGenome(repair_genes(t, genes, rng), tuple(tuple(float(x) for x in row) for row in matrix))

    search = GeneticSearch(
        params=params,
        fitness=lambda genome: joint_fitness(t, genome, seeds),
        sample=sample,
        crossover=crossover,
        mutate=mutate,
        key=lambda genome: genome,
    )
    outcome = search.run()
    spec = outcome.best.to_spec(t)
    return SearchResult(
        best_configuration=spec.configuration,
        best_fitness=outcome.best_fitness,
        history=outcome.history,
        evaluations=outcome.evaluations,
        cache_hits=outcome.cache_hits,
        matrix_policy=spec,
    )
