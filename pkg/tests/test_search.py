from collections import Counter

import numpy as np
import pytest

from app.core.seeding import SeedStream, derive_seed
from app.models.search import GAParams
from app.services.evaluation import episode_seeds
from app.services.policies import NullPolicy
from app.services.search import (
    JointGenome,
    decode_genes,
    ga_joint,
    ga_search_configs,
    joint_fitness,
    ls_net,
    max_calls,
    one_point_crossover,
    random_configurations,
    repair_genes,
    round_robin_configuration,
)
from app.services.simulator import rollout
from app.services.validation import validate_configuration
from tests.common import two_port_topology, two_route_topology


def test_random_configurations_are_valid(two_route):
    configurations = random_configurations(two_route, 30, np.random.default_rng(0))

    assert len(configurations) == 30
    assert all(validate_configuration(two_route, p).ok for p in configurations)


def test_random_configurations_are_uniform_over_routes(two_route):
    configurations = random_configurations(two_route, 2000, np.random.default_rng(1))
    routes = Counter(a.route for p in configurations for a in p.assignments)

    assert 0.45 < routes["R0"] / 4000 < 0.55


def test_random_configurations_need_a_positive_count(two_route):
    with pytest.raises(ValueError):
        random_configurations(two_route, 0, np.random.default_rng(0))


def test_round_robin(desk):
    p = round_robin_configuration(desk)

    assert p.key() == (("V0", "R0", "P0"), ("V1", "R1", "P2"), ("V2", "R0", "P0"))


def test_repair_resamples_bad_genes(two_route):
    rng = np.random.default_rng(2)

    for _ in range(20):
        repaired = repair_genes(two_route, (("R0", "C"), ("R9", "A"), ("R1", "B")), rng)
        assert repaired[0][0] == "R0" and repaired[0][1] in ("A", "B")
        assert validate_configuration(two_route, decode_genes(two_route, repaired)).ok
        assert repaired[2] == ("R1", "B")


def test_one_point_crossover_swaps_tails():
    first, second = (1, 2, 3, 4), (5, 6, 7, 8)

    left, right = one_point_crossover(first, second, np.random.default_rng(3))

    for position in range(4):
        assert {left[position], right[position]} == {first[position], second[position]}
    assert left != first


def test_constant_fitness_gives_flat_history(two_route):
    params = GAParams(population=6, generations=4, seed=1)

    result = ga_search_configs(two_route, lambda p: 42.0, params)

    assert [entry.generation for entry in result.history] == [0, 1, 2, 3, 4]
    assert all(entry.best == entry.mean == 42.0 for entry in result.history)
    assert result.best_fitness == 42.0


def test_elitism_keeps_best_monotone(two_route):
    def fitness(p):
        return sum(1.0 for a in p.assignments if a.route == "R1") + 0.1 * sum(a.start_port == "C" for a in p.assignments)

    result = ga_search_configs(two_route, fitness, GAParams(population=8, generations=10, elitism=1, seed=5))
    bests = [entry.best for entry in result.history]

    assert bests == sorted(bests)
    assert result.best_fitness == max(bests)


def test_ga_finds_planted_optimum():
    t = two_route_topology(vessels=4)

    def fitness(p):
        return float(sum(a.as_triple()[1:] == ("R1", "C") for a in p.assignments))

    result = ga_search_configs(t, fitness, GAParams(population=20, generations=30, seed=0))

    assert result.best_fitness == 4.0
    assert all(a.route == "R1" and a.start_port == "C" for a in result.best_configuration.assignments)


def test_fitness_memo_counts_hits(two_route):
    calls = []

    def fitness(p):
        calls.append(p.key())
        return 1.0

    result = ga_search_configs(two_route, fitness, GAParams(population=10, generations=5, seed=2))

    assert result.evaluations == len(calls) == len(set(calls))
    assert result.evaluations + result.cache_hits == 10 * 6


def test_ga_is_reproducible(two_route):
    def fitness(p):
        return float(sum(a.route == "R0" for a in p.assignments))

    params = GAParams(population=6, generations=3, seed=9)

    assert ga_search_configs(two_route, fitness, params) == ga_search_configs(two_route, fitness, params)


def test_elitism_larger_than_population_is_rejected():
    with pytest.raises(ValueError):
        GAParams(population=3, elitism=4)


def test_ls_net_without_demand_plans_nothing():
    t = two_port_topology(volume=0.0, reverse_volume=0.0)

    result = ls_net(t, GAParams(population=4, generations=2, seed=0), noise_level=0.2)

    assert result.best_fitness == 0.0
    assert validate_configuration(t, result.best_configuration).ok


def test_ls_net_is_reproducible():
    t = two_route_topology(horizon=20, vessels=2)
    params = GAParams(population=4, generations=2, seed=3)

    first = ls_net(t, params, noise_level=0.2)
    second = ls_net(t, params, noise_level=0.2)

    assert first.best_configuration.key() == second.best_configuration.key()
    assert first.best_fitness == second.best_fitness
    assert first.best_fitness > 0


def test_max_calls(two_port):
    assert max_calls(two_port) == two_port.horizon // 2 + 1


def test_zero_matrix_fitness_equals_doing_nothing(desk, desk_config):
    genes = tuple((a.route, a.start_port) for a in desk_config.assignments)
    genome = JointGenome(genes, tuple((0.0,) * max_calls(desk) for _ in desk.vessels))
    seeds = episode_seeds(derive_seed(0, SeedStream.EVAL, 0), 3)

    expected = np.mean([rollout(desk, desk_config, NullPolicy(), seed).fulfillment_pct for seed in seeds])

    assert joint_fitness(desk, genome, seeds) == pytest.approx(expected)


def test_ga_joint_returns_matrix_policy():
    t = two_route_topology(horizon=20, vessels=2)

    result = ga_joint(t, GAParams(population=4, generations=2, seed=1), n_eval_episodes=1)
    spec = result.matrix_policy

    assert spec.vessel_ids == ("V0", "V1")
    assert all(len(row) == max_calls(t) for row in spec.matrix)
    assert all(-1.0 <= cell <= 1.0 for row in spec.matrix for cell in row)
    assert spec.configuration == result.best_configuration
    assert len(result.history) == 3
    assert 0.0 <= result.best_fitness <= 100.0
