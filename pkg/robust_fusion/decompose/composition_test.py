import numpy as np
import pytest

from robust_fusion.core.models import DecisionProblem
from robust_fusion.core.samples import (
    BINARY_STATES,
    asset_one_problem,
    portfolio_problem,
    random_problem,
    three_action_problem,
    three_state_problem,
)
from robust_fusion.decompose.composition import (
    DecompositionKind,
    canonical_decomposition,
    compose,
    remove_dominated,
)
from robust_fusion.decompose.polyhedron import equivalent
from robust_fusion.errors import NotBinaryStateError, StateMismatchError


def _binary(increment: tuple[float, float], name: str) -> DecisionProblem:
    return DecisionProblem.from_weighted(BINARY_STATES, (f"N{name}", f"I{name}"), [[0.0, increment[0]],
                                                                                    [0.0, increment[1]]])


@pytest.fixture
def decomposition_pair() -> list[DecisionProblem]:
    return [_binary((2.0, -1.0), "1"), _binary((-1.0, 2.0), "2")]


def test_compose_adds_payoffs(decomposition_pair):
    composed = compose(decomposition_pair)

    assert composed.actions == (("N1", "N2"), ("N1", "I2"), ("I1", "N2"), ("I1", "I2"))
    assert composed.weighted_utility.T == pytest.approx(np.array([[0, 0], [-1, 2], [2, -1], [1, 1]]))


def test_compose_single_problem():
    composed = compose([three_action_problem()])

    assert composed.weighted_utility == pytest.approx(three_action_problem().weighted_utility)
    assert composed.actions == (("a1",), ("a2",), ("a3",))


def test_compose_is_additive_for_one_action_problems():
    single = DecisionProblem.from_weighted(BINARY_STATES, ("x",), [[1.0], [1.0]])

    composed = compose([single, single])

    assert composed.n_actions == 1
    assert composed.payoff(0) == pytest.approx([2.0, 2.0])


def test_compose_rejects_state_mismatch():
    with pytest.raises(StateMismatchError):
        compose([three_action_problem(), three_state_problem()])


def test_decomposition_pair_is_a_decomposition_of_the_three_action_problem(decomposition_pair):
    assert equivalent(compose(decomposition_pair), three_action_problem())


def test_remove_dominated_on_the_portfolio_problem():
    normalized = remove_dominated(portfolio_problem())

    assert normalized.original_indices == (2, 3, 1)
    assert normalized.ordered_payoffs == pytest.approx(np.array([[0, 0], [2, -1], [3, -3]]))
    assert normalized.shift == pytest.approx([-1.0, 2.0])


def test_remove_dominated_keeps_one_copy_of_duplicates():
    problem = DecisionProblem.from_weighted(BINARY_STATES, ("a", "b", "c"), [[1.0, 1.0, 0.0], [0.0, 0.0, 1.0]])

    assert remove_dominated(problem).original_indices == (2, 0)


def test_remove_dominated_drops_payoff_under_a_mixture():
    problem = DecisionProblem.from_weighted(
        BINARY_STATES, ("o", "m", "r", "l"), [[0.0, 0.4, 2.0, -1.0], [0.0, 0.4, -1.0, 2.0]]
    )

    assert remove_dominated(problem).original_indices == (3, 2)


def test_remove_dominated_rejects_three_states():
    with pytest.raises(NotBinaryStateError):
        remove_dominated(three_state_problem())


def test_canonical_increments_of_the_three_action_problem():
    decomposition = canonical_decomposition(three_action_problem())

    assert decomposition.kind is DecompositionKind.CANONICAL
    assert decomposition.increments == pytest.approx(np.array([[2.0, -1.0], [1.0, -2.0]]))
    assert decomposition.base == pytest.approx([-1.0, 2.0])
    assert decomposition.subproblems[0].actions == ("a1", "a2")


def test_canonical_increments_of_the_portfolio_problem():
    decomposition = canonical_decomposition(portfolio_problem())

    assert decomposition.increments == pytest.approx(np.array([[2.0, -1.0], [1.0, -2.0]]))
    assert all(subproblem.n_actions == 2 for subproblem in decomposition.subproblems)


def test_binary_action_problem_has_one_increment():
    decomposition = canonical_decomposition(asset_one_problem())

    assert len(decomposition.subproblems) == 1
    assert decomposition.increments == pytest.approx(np.array([[2.0, -1.0]]))


def test_single_undominated_action_has_no_increments():
    problem = DecisionProblem.from_weighted(BINARY_STATES, ("good", "bad"), [[1.0, 0.0], [1.0, 0.0]])

    decomposition = canonical_decomposition(problem)

    assert decomposition.subproblems == ()
    assert decomposition.base == pytest.approx([1.0, 1.0])


@pytest.mark.parametrize("seed", range(100))
def test_canonical_decomposition_recomposes_to_an_equivalent_problem(seed: int):
    rng = np.random.default_rng(seed)
    problem = random_problem(rng, 2, int(rng.integers(2, 7)))

    decomposition = canonical_decomposition(problem)

    assert np.all(decomposition.increments[:, 0] > 0)
    assert np.all(decomposition.increments[:, 1] < 0)
    assert equivalent(problem, decomposition.recompose())


def test_chain_of_binary_problems_recovers_its_increments():
    increments = [(1.0, -3.0), (3.0, -1.0), (2.0, -2.0)]
    composed = compose([_binary(increment, str(index)) for index, increment in enumerate(increments)])

    recovered = canonical_decomposition(composed).increments

    assert sorted(map(tuple, recovered.round(9).tolist())) == sorted(increments)
    assert recovered.tolist() == [[3.0, -1.0], [2.0, -2.0], [1.0, -3.0]]
