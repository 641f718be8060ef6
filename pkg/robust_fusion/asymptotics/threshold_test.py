import numpy as np
import pytest

from robust_fusion.asymptotics.chernoff import chernoff_index
from robust_fusion.asymptotics.power import iid_power
from robust_fusion.asymptotics.threshold import dominance_threshold, power_sweep
from robust_fusion.core.bayes import bayes_value
from robust_fusion.core.models import Experiment
from robust_fusion.core.samples import (
    portfolio_problem,
    symmetric_experiment,
    three_state_experiments,
    three_state_problem,
)
from robust_fusion.decompose.composition import canonical_decomposition
from robust_fusion.errors import NoStrictLeaderError, NotBinaryStateError
from robust_fusion.robust.solver import decomposed_value, robust_value


@pytest.fixture
def accurate_and_noisy() -> list[Experiment]:
    return [symmetric_experiment(0.9, "P1"), symmetric_experiment(0.7, "P2")]


def test_single_source_threshold_is_one():
    assert dominance_threshold([symmetric_experiment(0.7)], portfolio_problem()) == 1


def test_blackwell_dominant_source_wins_immediately(accurate_and_noisy):
    assert dominance_threshold(accurate_and_noisy, portfolio_problem(), t_max=16) == 1


@pytest.fixture
def sharp_and_symmetric() -> list[Experiment]:
    # The first source rarely fires on theta2, so its Chernoff index beats the symmetric 0.9 test,
    # yet one draw of the symmetric test still wins the first canonical subproblem.
    sharp = Experiment(name="sharp", signals=("0", "1"), kernel=[[0.85, 0.15], [0.002, 0.998]])
    return [sharp, symmetric_experiment(0.9, "symmetric")]


def test_incomparable_leader_needs_two_draws(sharp_and_symmetric):
    problem = portfolio_problem()
    sharp, symmetric = sharp_and_symmetric
    first, second = canonical_decomposition(problem).subproblems

    assert chernoff_index(sharp) > chernoff_index(symmetric)
    assert bayes_value(symmetric, first) == pytest.approx(1.7)
    assert bayes_value(sharp, first) == pytest.approx(1.698)
    assert bayes_value(sharp, second) == pytest.approx(0.846)
    assert bayes_value(symmetric, second) == pytest.approx(0.7)
    assert robust_value(sharp_and_symmetric, problem) - bayes_value(sharp, problem) == pytest.approx(0.002, abs=1e-6)

    threshold = dominance_threshold(sharp_and_symmetric, problem, t_max=16)

    assert threshold == 2
    for t in range(threshold, 13):
        powers = [iid_power(sharp, t), iid_power(symmetric, t)]
        assert decomposed_value(powers, problem) == pytest.approx(bayes_value(powers[0], problem), abs=1e-6)
    for t in range(threshold, threshold + 3):
        powers = [iid_power(sharp, t), iid_power(symmetric, t)]
        assert robust_value(powers, problem) == pytest.approx(bayes_value(powers[0], problem), abs=1e-6)


def test_leader_must_come_first(accurate_and_noisy):
    with pytest.raises(NoStrictLeaderError):
        dominance_threshold(accurate_and_noisy[::-1], portfolio_problem())


def test_tied_leaders_are_rejected():
    with pytest.raises(NoStrictLeaderError):
        dominance_threshold([symmetric_experiment(0.8), symmetric_experiment(0.8)], portfolio_problem())


def test_threshold_rejects_three_states():
    with pytest.raises(NotBinaryStateError):
        dominance_threshold(three_state_experiments(), three_state_problem())


def test_sweep_rows(accurate_and_noisy):
    rows = power_sweep(accurate_and_noisy, portfolio_problem(), t_max=8)

    assert [row.t for row in rows] == list(range(1, 9))
    assert rows[0].joint_value == pytest.approx(rows[0].single_values[0], abs=1e-6)
    assert all(row.joint_value >= max(row.single_values) - 1e-9 for row in rows)
    assert np.all(np.diff([row.joint_value for row in rows]) >= -1e-9)


def test_single_source_sweep_has_no_gap():
    rows = power_sweep([symmetric_experiment(0.7)], portfolio_problem(), t_max=6)

    assert all(row.joint_value == pytest.approx(row.single_values[0], abs=1e-9) for row in rows)
