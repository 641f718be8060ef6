import numpy as np
import pytest

from robust_fusion.blackwell.coupling import min_cost_coupling, nature_null_cells, worst_case_joint
from robust_fusion.blackwell.zonotope import blackwell_supremum
from robust_fusion.core.bayes import bayes_value, evaluate_strategy
from robust_fusion.core.models import Strategy, independent_product
from robust_fusion.core.samples import (
    portfolio_experiments,
    portfolio_problem,
    random_experiment,
    random_instance,
    three_state_experiments,
    three_state_problem,
)
from robust_fusion.errors import InstanceTooLargeError, StateMismatchError


def test_portfolio_worst_case_value():
    joint, value = worst_case_joint(portfolio_experiments(), portfolio_problem())

    assert value == pytest.approx(2.6, abs=1e-6)
    assert joint.max_marginal_error <= 1e-8
    assert bayes_value(joint.joint, portfolio_problem()) == pytest.approx(2.6, abs=1e-6)


def test_three_state_worst_case_value():
    _, value = worst_case_joint(three_state_experiments(), three_state_problem())

    assert value == pytest.approx(2.0, abs=1e-6)


def test_single_source_worst_case_is_bayes_value():
    experiment = portfolio_experiments()[0]

    _, value = worst_case_joint([experiment], portfolio_problem())

    assert value == pytest.approx(bayes_value(experiment, portfolio_problem()), abs=1e-8)


def test_worst_case_respects_cap():
    with pytest.raises(InstanceTooLargeError):
        worst_case_joint(portfolio_experiments(), portfolio_problem(), cap=3)


def test_worst_case_rejects_state_mismatch():
    with pytest.raises(StateMismatchError):
        worst_case_joint(three_state_experiments(), portfolio_problem())


def test_three_state_null_cell():
    null = nature_null_cells(three_state_experiments())

    assert null.tolist() == [[False, False], [True, False]]


def test_min_cost_coupling_prices_a_fixed_strategy():
    experiments = portfolio_experiments()
    problem = portfolio_problem()
    strategy = Strategy.deterministic((2, 2), [3, 1, 2, 0], 4)
    cost = problem.weighted_utility @ strategy.flat().T

    joint, value, _ = min_cost_coupling(experiments, cost)

    assert value == pytest.approx(2.6, abs=1e-8)
    assert evaluate_strategy(strategy, joint, problem) == pytest.approx(value, abs=1e-8)


@pytest.mark.parametrize("seed", range(100))
def test_worst_case_value_equals_supremum_value(seed: int):
    rng = np.random.default_rng(seed)
    problem, experiments = random_instance(rng, 2, int(rng.integers(2, 5)), max_sources=3, max_signals=3)

    joint, value = worst_case_joint(experiments, problem)

    assert joint.max_marginal_error <= 1e-8
    assert value == pytest.approx(bayes_value(blackwell_supremum(experiments), problem), abs=1e-6)


@pytest.mark.parametrize("seed", range(30))
def test_more_sources_never_hurt(seed: int):
    rng = np.random.default_rng(seed)
    problem, experiments = random_instance(rng, int(rng.integers(2, 4)), 3, max_sources=2, max_signals=3)
    extra = random_experiment(rng, problem.n_states, 2, "extra")

    _, fewer = worst_case_joint(experiments, problem)
    _, more = worst_case_joint(experiments + [extra], problem)

    assert more >= fewer - 1e-8


def test_worst_case_value_is_at_most_the_independent_product_value():
    experiments = portfolio_experiments()

    _, value = worst_case_joint(experiments, portfolio_problem())

    assert value <= bayes_value(independent_product(experiments).joint, portfolio_problem()) + 1e-8
