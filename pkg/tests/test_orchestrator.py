import pytest

from app.core.errors import InvalidInputError
from app.models.experiment import ConfigureMethod, ExperimentKind, ExperimentSpec
from app.models.search import AlgorithmSpec, AlgorithmTag
from app.services.orchestrator import (
    budgeted_ga_params,
    compare_table,
    confidence_interval,
    configure_step,
    conquer_step,
    run_cc,
    run_row,
)
from app.services.search import default_ga_params
from app.services.topology_io import load_configuration, save_configuration
from app.services.validation import validate_configuration
from tests.common import two_route_topology

NULL = AlgorithmSpec(tag=AlgorithmTag.NULL)
HEUR = AlgorithmSpec(tag=AlgorithmTag.HEUR)
RAND = AlgorithmSpec(tag=AlgorithmTag.RAND)


@pytest.fixture
def small():
    return two_route_topology(horizon=20, vessels=2)


def test_confidence_interval():
    mean, half = confidence_interval([1.0, 2.0, 3.0])

    assert mean == pytest.approx(2.0)
    assert half == pytest.approx(2.4841, abs=1e-3)


def test_identical_values_have_zero_width():
    assert confidence_interval([40.0, 40.0, 40.0, 40.0]) == (40.0, 0.0)


def test_single_seed_is_rejected():
    with pytest.raises(InvalidInputError):
        confidence_interval([50.0])


def test_budgeted_generations():
    population = default_ga_params().population

    assert budgeted_ga_params(0, 5 * population, 1).generations == 4
    assert budgeted_ga_params(0, 10, 1).generations == 0
    assert budgeted_ga_params(7, 10_000_000, 1).generations == default_ga_params().generations
    assert budgeted_ga_params(7, 100, 1).seed == 7


def test_conquer_needs_two_seeds(two_port, two_port_config):
    with pytest.raises(InvalidInputError):
        conquer_step(two_port, two_port_config, NULL, k_seeds=1)


def test_conquer_on_a_noise_free_world(two_port, two_port_config):
    result = conquer_step(two_port, two_port_config, NULL, k_seeds=3, seed=0)

    assert result.per_seed == [50.0, 50.0, 50.0]
    assert (result.mean, result.ci95) == (50.0, 0.0)
    assert result.seeds == 3


def test_conquer_reloaded_configuration(tmp_path, small):
    p = configure_step(small, NULL, ConfigureMethod.RANDOMCONF_BEST, budget=4, seed=1, eval_episodes=1)
    path = tmp_path / "config.yaml"
    save_configuration(p, path)

    direct = conquer_step(small, p, HEUR, k_seeds=2, seed=5)
    reloaded = conquer_step(small, load_configuration(path), HEUR, k_seeds=2, seed=5)

    assert reloaded.per_seed == direct.per_seed


def test_conquer_rejects_invalid_configuration(small, two_port_config):
    with pytest.raises(InvalidInputError):
        conquer_step(small, two_port_config, NULL, k_seeds=2)


def test_configure_budget_must_be_positive(small):
    with pytest.raises(InvalidInputError):
        configure_step(small, NULL, ConfigureMethod.LSNET, budget=0)


@pytest.mark.parametrize("method", list(ConfigureMethod))
def test_configure_methods_return_valid_configurations(small, method):
    p = configure_step(small, NULL, method, budget=20, seed=2, eval_episodes=1)

    assert validate_configuration(small, p).ok


def test_configurator_without_budget_falls_back_to_greedy(small):
    p = configure_step(small, NULL, ConfigureMethod.RL_CONFIGURATOR, budget=1, seed=0, eval_episodes=2)

    assert validate_configuration(small, p).ok


def test_single_candidate_matches_random_configuration_row(small):
    """randomconf-best with room for one candidate draws exactly the RandomConf configuration"""
    best_of_one = run_row(
        small,
        ExperimentSpec(kind=ExperimentKind.CC, cheap=HEUR, star=NULL,
                       method=ConfigureMethod.RANDOMCONF_BEST, budget=1),
        k_seeds=2, master_seed=3, eval_episodes=1, record_wall_time=False,
    )
    random_row = run_row(
        small, ExperimentSpec(kind=ExperimentKind.RANDOMCONF, star=NULL),
        k_seeds=2, master_seed=3, eval_episodes=1, record_wall_time=False,
    )

    assert [p.key() for p in best_of_one.configurations] == [p.key() for p in random_row.configurations]
    assert best_of_one.per_seed == random_row.per_seed


def test_run_cc_is_reproducible(small):
    def run():
        return run_cc(small, NULL, HEUR, method=ConfigureMethod.RANDOMCONF_BEST, budget=3,
                      k_seeds=2, master_seed=1, eval_episodes=1)

    first, second = run(), run()

    assert first.per_seed == second.per_seed
    assert first.label == "CC-Null-Heur"
    assert first.provenance.configure_method == "randomconf-best"
    assert len(first.provenance.pipeline_seeds) == 2


def test_run_row_needs_two_seeds(small):
    with pytest.raises(InvalidInputError):
        run_row(small, ExperimentSpec(kind=ExperimentKind.RANDOMCONF), k_seeds=1)


def test_ga_joint_row(small):
    result = run_row(small, ExperimentSpec(kind=ExperimentKind.GA_JOINT, budget=20),
                     k_seeds=2, master_seed=0, eval_episodes=1, record_wall_time=False)

    assert result.label == "GA joint"
    assert result.star is None
    assert len(result.per_seed) == 2
    assert result.provenance.walltime_s == 0.0


async def test_compare_table_shares_seeds(small):
    rows = [
        ExperimentSpec(kind=ExperimentKind.RANDOMCONF, star=NULL),
        ExperimentSpec(kind=ExperimentKind.CC, cheap=NULL, star=HEUR,
                       method=ConfigureMethod.RANDOMCONF_BEST, budget=2),
        ExperimentSpec(kind=ExperimentKind.LS_NET, star=RAND, budget=20),
    ]

    report = await compare_table(small, rows, k_seeds=2, master_seed=4, eval_episodes=1, record_wall_time=False)

    assert [result.label for result in report.results] == ["RandomConf-Null", "CC-Null-Heur", "LS-NET-Rand"]
    eval_seeds = {tuple(map(tuple, result.provenance.eval_seeds)) for result in report.results}
    assert len(eval_seeds) == 1
    best = report.results[report.best_index]
    assert best.mean == max(result.mean for result in report.results)
    assert f"**{best.label}**" in report.text


async def test_compare_table_single_row(small):
    rows = [ExperimentSpec(kind=ExperimentKind.RANDOMCONF, star=NULL, name="baseline")]

    report = await compare_table(small, rows, k_seeds=2, master_seed=0, eval_episodes=1)

    assert report.best_index == 0
    assert report.text.splitlines()[1].startswith("**baseline**")


async def test_compare_table_needs_rows(small):
    with pytest.raises(InvalidInputError):
        await compare_table(small, [], k_seeds=2)
