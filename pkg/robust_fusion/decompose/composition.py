import itertools
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np
from loguru import logger

from robust_fusion.core.models import DecisionProblem, Strategy
from robust_fusion.core.tolerances import FEASIBILITY_TOL, INPUT_TOL
from robust_fusion.decompose.polyhedron import max_uniform_slack
from robust_fusion.errors import EmptyInputError, NotBinaryStateError, StateMismatchError


class DecompositionKind(str, Enum):
    CANONICAL = "canonical"
    WEAK = "weak"


def compose(subproblems: Sequence[DecisionProblem]) -> DecisionProblem:
    """
    The composition of decision problems over a common state space.

    Actions are tuples with one action per subproblem and utilities add up:
    u(θ, (a_1, ..., a_k)) = Σ_ℓ u_ℓ(θ, a_ℓ).

    Args:
        subproblems (Sequence[DecisionProblem]): The problems to compose.

    Returns:
        DecisionProblem: The composed problem, with weighted utilities given directly.

    Raises:
        EmptyInputError: If no subproblem is given.
        StateMismatchError: If the subproblems do not share their states.
    """
    if not subproblems:
        raise EmptyInputError("compose needs at least one subproblem")
    states = subproblems[0].states
    for index, subproblem in enumerate(subproblems):
        if subproblem.states != states:
            raise StateMismatchError(f"subproblem {index} has states {subproblem.states}, expected {states}")

    profiles = list(itertools.product(*(range(subproblem.n_actions) for subproblem in subproblems)))
    weighted = np.zeros((len(states), len(profiles)))
    for column, profile in enumerate(profiles):
        for subproblem, action in zip(subproblems, profile):
            weighted[:, column] += subproblem.weighted_utility[:, action]
    labels = [
        tuple(subproblem.actions[action] for subproblem, action in zip(subproblems, profile)) for profile in profiles
    ]
    return DecisionProblem.from_weighted(states, labels, weighted)


@dataclass(frozen=True, eq=False)
class NormalizedProblem:
    """
    A binary-state problem stripped of weakly*-dominated actions.

    Attributes:
        problem (DecisionProblem): Survivors sorted so u(θ1, ·) increases strictly, shifted so the first pays (0, 0).
        original_indices (tuple[int, ...]): For each survivor, its action index in the original problem.
        shift (np.ndarray): The original payoff of the first survivor, subtracted from every survivor.
    """

    problem: DecisionProblem
    original_indices: tuple[int, ...]
    shift: np.ndarray

    @property
    def ordered_payoffs(self) -> np.ndarray:
        """Normalized payoff vectors, one row per survivor."""
        return self.problem.weighted_utility.T


def _require_binary(problem: DecisionProblem) -> None:
    if problem.n_states != 2:
        raise NotBinaryStateError(f"problem has {problem.n_states} states, expected 2")


def remove_dominated(problem: DecisionProblem) -> NormalizedProblem:
    """
    Drops every action weakly dominated by a mixture of the other actions and normalizes the rest.

    Duplicated payoff vectors keep their lowest-index copy.

    Raises:
        NotBinaryStateError: If the problem does not have exactly two states.
    """
    _require_binary(problem)
    payoffs = problem.weighted_utility
    distinct: list[int] = []
    for action in range(problem.n_actions):
        if not any(np.allclose(payoffs[:, action], payoffs[:, kept], atol=INPUT_TOL, rtol=0.0) for kept in distinct):
            distinct.append(action)

    survivors = []
    for action in distinct:
        others = [other for other in distinct if other != action]
        if others:
            slack, _ = max_uniform_slack(payoffs[:, others], payoffs[:, action])
            if slack >= -FEASIBILITY_TOL:
                continue
        survivors.append(action)
    survivors.sort(key=lambda action: (payoffs[0, action], -payoffs[1, action]))

    shift = payoffs[:, survivors[0]].copy()
    normalized = DecisionProblem.from_weighted(
        problem.states, [problem.actions[action] for action in survivors], payoffs[:, survivors] - shift[:, None]
    )
    shift.setflags(write=False)
    logger.debug(f"Kept {len(survivors)} of {problem.n_actions} actions: {survivors}")
    return NormalizedProblem(problem=normalized, original_indices=tuple(survivors), shift=shift)


def _base_problem(states: Sequence[str], base: np.ndarray) -> DecisionProblem:
    return DecisionProblem.from_weighted(states, ("base",), base[:, None])


@dataclass(frozen=True, eq=False)
class Decomposition:
    """
    A decision problem split into subproblems whose robust values add up to the original's.

    Attributes:
        kind (DecompositionKind): Canonical increments or weak dual potentials.
        subproblems (tuple[DecisionProblem, ...]): The pieces, in order.
        states (tuple[str, ...]): The shared state labels.
        base (np.ndarray | None): Payoff added back by recompose(); the canonical normalization offset.
        increments (np.ndarray | None): Canonical only; row ℓ is u(a_{ℓ+1}) − u(a_ℓ).
        normalized (NormalizedProblem | None): Canonical only; the pruned ordered problem.
        potentials (tuple[np.ndarray, ...]): Weak only; φ_j with shape (|Θ|, |Y_j|), one per source.
        strategy (Strategy | None): Weak only; the optimal strategy of the joint program.
        value (float | None): Weak only; the optimal value of the joint program.
    """

    kind: DecompositionKind
    subproblems: tuple[DecisionProblem, ...]
    states: tuple[str, ...]
    base: np.ndarray | None = None
    increments: np.ndarray | None = None
    normalized: NormalizedProblem | None = None
    potentials: tuple[np.ndarray, ...] = field(default_factory=tuple)
    strategy: Strategy | None = None
    value: float | None = None

    def recompose(self) -> DecisionProblem:
        """The composition of the subproblems plus the base payoff, equivalent to the decomposed problem."""
        pieces = list(self.subproblems)
        if self.base is not None:
            pieces.append(_base_problem(self.states, self.base))
        return compose(pieces)


def canonical_decomposition(problem: DecisionProblem) -> Decomposition:
    """
    Splits a binary-state problem into binary-action increment problems.

    After remove_dominated orders the undominated actions a_1, ..., a_n, subproblem ℓ offers
    "stay at a_ℓ" with payoff (0, 0) and "move to a_{ℓ+1}" with payoff u(a_{ℓ+1}) − u(a_ℓ).

    Args:
        problem (DecisionProblem): A two-state decision problem.

    Returns:
        Decomposition: n − 1 binary-action subproblems with base u(a_1).

    Raises:
        NotBinaryStateError: If the problem does not have exactly two states.
    """
    normalized = remove_dominated(problem)
    ordered = normalized.ordered_payoffs
    increments = np.diff(ordered, axis=0)
    labels = [str(label) for label in normalized.problem.actions]
    subproblems = tuple(
        DecisionProblem.from_weighted(problem.states, (labels[index], labels[index + 1]), [[0.0, x], [0.0, y]])
        for index, (x, y) in enumerate(increments)
    )
    increments.setflags(write=False)
    logger.info(f"Canonical decomposition into {len(subproblems)} binary-action problems")
    return Decomposition(
        kind=DecompositionKind.CANONICAL,
        subproblems=subproblems,
        states=problem.states,
        base=normalized.shift,
        increments=increments,
        normalized=normalized,
    )
