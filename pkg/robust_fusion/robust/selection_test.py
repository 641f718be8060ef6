from unittest.mock import patch

import numpy as np
import pytest

from robust_fusion.core.models import Experiment, uninformative_experiment
from robust_fusion.core.samples import (
    asset_one_problem,
    portfolio_experiments,
    portfolio_problem,
    random_instance,
    three_state_experiments,
    three_state_problem,
)
from robust_fusion.errors import NotBinaryStateError
from robust_fusion.robust.selection import marginal_contribution, select_support
from robust_fusion.robust.solver import robust_value


def test_second_portfolio_source_contributes_in_the_second_subproblem():
    contribution, wins = marginal_contribution(1, portfolio_experiments(), portfolio_problem())

    assert contribution == pytest.approx(0.3, abs=1e-6)
    assert wins == [1]


def test_uninformative_source_contributes_nothing():
    experiments = portfolio_experiments() + [uninformative_experiment(2, "P3")]

    contribution, wins = marginal_contribution(2, experiments, portfolio_problem())

    assert contribution == pytest.approx(0.0, abs=1e-6)
    assert wins == []


def test_blackwell_dominated_source_contributes_nothing():
    first = portfolio_experiments()[0]
    garbled = Experiment(name="P1'", signals=("1", "0"), kernel=first.kernel @ np.array([[0.8, 0.2], [0.1, 0.9]]))

    contribution, wins = marginal_contribution(1, [first, garbled], portfolio_problem())

    assert contribution == pytest.approx(0.0, abs=1e-6)
    assert wins == []


def test_sole_source_contributes_its_value_of_information():
    contribution, wins = marginal_contribution(0, portfolio_experiments()[:1], portfolio_problem())

    assert contribution == pytest.approx(0.3, abs=1e-6)
    assert wins == [0]


def test_marginal_contribution_rejects_three_states():
    with pytest.raises(NotBinaryStateError):
        marginal_contribution(0, three_state_experiments(), three_state_problem())


def test_support_ignores_an_appended_uninformative_source():
    experiments = portfolio_experiments() + [uninformative_experiment(2, "P3")]

    assert select_support(experiments, portfolio_problem()) == [0, 1]


def test_support_of_a_binary_action_problem_is_a_single_source():
    assert select_support(portfolio_experiments(), asset_one_problem()) == [0]


def test_support_of_a_single_source():
    assert select_support(portfolio_experiments()[:1], portfolio_problem()) == [0]


def test_select_support_rejects_three_states():
    with pytest.raises(NotBinaryStateError):
        select_support(three_state_experiments(), three_state_problem())


@pytest.mark.parametrize("seed", range(30))
def test_contribution_is_positive_exactly_when_a_subproblem_is_won(seed: int):
    rng = np.random.default_rng(seed)
    problem, experiments = random_instance(rng, 2, int(rng.integers(2, 6)), max_sources=3, max_signals=3)

    for index in range(len(experiments)):
        contribution, wins = marginal_contribution(index, experiments, problem)
        assert contribution >= -1e-6
        if wins:
            assert contribution > 1e-6


@pytest.mark.parametrize("seed", range(30))
def test_support_preserves_the_robust_value(seed: int):
    rng = np.random.default_rng(seed)
    problem, experiments = random_instance(rng, 2, int(rng.integers(2, 6)), max_sources=3, max_signals=3)

    support = select_support(experiments, problem)

    assert len(support) <= max(problem.n_actions - 1, 1)
    if problem.n_actions == 2:
        assert len(support) == 1
    assert robust_value([experiments[index] for index in support], problem) == pytest.approx(
        robust_value(experiments, problem), abs=1e-6
    )


def test_leads_below_tolerance_add_up_without_an_inconsistency():
    experiments = portfolio_experiments()
    lead = 0.8e-6

    with (
        patch(
            "robust_fusion.robust.selection.robust_value",
            side_effect=lambda sources, problem, cap: 2 * lead if len(sources) == 2 else 0.0,
        ),
        patch(
            "robust_fusion.robust.selection.bayes_value",
            side_effect=lambda experiment, subproblem: lead if experiment.name == "P2" else 0.0,
        ),
    ):
        contribution, wins = marginal_contribution(1, experiments, portfolio_problem())

    assert contribution == pytest.approx(2 * lead)
    assert wins == []
