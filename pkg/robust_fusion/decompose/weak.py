"""
The agent's side of the robust problem as one linear program, and the weak
decomposition read off its potentials.

Maximizing Σ_j Σ_θ Σ_{y_j} P_j(y_j|θ)·φ_j(θ, y_j) subject to
Σ_j φ_j(θ, y_j) ≤ Σ_a σ(a|y)·u(θ, a) at every (θ, y) joins the agent's strategy σ
with the dual potentials of Nature's coupling problem.
"""

import time
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from loguru import logger

from robust_fusion.blackwell.coupling import CouplingSpace
from robust_fusion.core.models import DecisionProblem, Experiment, Strategy
from robust_fusion.core.tolerances import COMPUTED_TOL, VALUE_TOL
from robust_fusion.decompose.composition import Decomposition, DecompositionKind
from robust_fusion.errors import NumericalFailureError, StateMismatchError
from robust_fusion.linprog.simplex import LpProblem, Sense, solve


@dataclass(frozen=True, eq=False)
class MaxminSolution:
    """
    Attributes:
        value (float): The optimal objective, equal to the robust value.
        strategy (Strategy): An optimal strategy σ*.
        potentials (tuple[np.ndarray, ...]): φ_j with shape (|Θ|, |Y_j|), one per source.
        max_violation (float): Largest excess of Σ_j φ_j over the strategy's payoff at any (θ, y).
    """

    value: float
    strategy: Strategy
    potentials: tuple[np.ndarray, ...]
    max_violation: float


def _normalized_rows(sigma: np.ndarray) -> np.ndarray:
    """Clips σ to the simplex; a row with no mass left plays the first action."""
    sigma = np.clip(sigma, 0.0, None)
    totals = sigma.sum(axis=1)
    empty = totals <= COMPUTED_TOL
    if np.any(empty):
        logger.warning(f"Maxmin strategy has {int(empty.sum())} empty row(s); they play the first action")
        sigma[empty] = 0.0
        sigma[empty, 0] = 1.0
        totals[empty] = 1.0
    return sigma / totals[:, None]


def solve_maxmin(
    experiments: Sequence[Experiment], problem: DecisionProblem, cap: int | None = None
) -> MaxminSolution:
    """
    Solves the joint strategy/potential program.

    Args:
        experiments (Sequence[Experiment]): The marginals.
        problem (DecisionProblem): The decision problem.
        cap (int | None): Product-space cap; None uses ROBUST_FUSION_CAP.

    Returns:
        MaxminSolution: The value, an optimal strategy and the potentials.

    Raises:
        InstanceTooLargeError: If the product signal space exceeds the cap.
        NumericalFailureError: If the program does not end optimal.
    """
    start_time = time.time()
    space = CouplingSpace.of(experiments, cap)
    if space.n_states != problem.n_states:
        raise StateMismatchError(f"experiments have {space.n_states} states, problem has {problem.n_states}")
    n_cells, n_actions, n_states = space.n_cells, problem.n_actions, space.n_states
    n_sigma = n_cells * n_actions
    offsets = np.cumsum([0] + [n_states * experiment.n_signals for experiment in experiments])
    n_variables = n_sigma + int(offsets[-1])
    coordinates = np.indices(space.shape).reshape(len(experiments), -1)

    objective = np.zeros(n_variables)
    for source, experiment in enumerate(experiments):
        objective[n_sigma + offsets[source]:n_sigma + offsets[source + 1]] = experiment.kernel.reshape(-1)

    a_eq = np.zeros((n_cells, n_variables))
    for cell in range(n_cells):
        a_eq[cell, cell * n_actions:(cell + 1) * n_actions] = 1.0

    a_ub = np.zeros((n_states * n_cells, n_variables))
    for state in range(n_states):
        for cell in range(n_cells):
            row = state * n_cells + cell
            a_ub[row, cell * n_actions:(cell + 1) * n_actions] = -problem.weighted_utility[state]
            for source, experiment in enumerate(experiments):
                column = n_sigma + offsets[source] + state * experiment.n_signals + coordinates[source, cell]
                a_ub[row, column] += 1.0

    lp = LpProblem(
        objective=objective,
        sense=Sense.MAXIMIZE,
        a_eq=a_eq,
        b_eq=np.ones(n_cells),
        a_ub=a_ub,
        b_ub=np.zeros(a_ub.shape[0]),
        bounds=[(0.0, None)] * n_sigma + [(None, None)] * int(offsets[-1]),
    )
    logger.debug(f"Maxmin program: {lp.n_variables} variables, {n_cells} equalities, {a_ub.shape[0]} rows")
    solution = solve(lp)
    if not solution.is_optimal:
        raise NumericalFailureError(f"maxmin program ended with status {solution.status.value}")

    sigma = _normalized_rows(solution.primal[:n_sigma].reshape(n_cells, n_actions))
    potentials = tuple(
        solution.primal[n_sigma + offsets[source]:n_sigma + offsets[source + 1]].reshape(n_states, experiment.n_signals)
        for source, experiment in enumerate(experiments)
    )
    summed = sum(potentials[source][:, coordinates[source]] for source in range(len(experiments)))
    violation = float(np.max(summed - problem.weighted_utility @ sigma.T))
    if not np.isfinite(violation) or violation > VALUE_TOL:
        raise NumericalFailureError(f"maxmin potentials exceed the strategy's payoff by {violation!r}")
    elapsed = time.time() - start_time
    logger.debug(f"Solved maxmin program in {elapsed:.2f} seconds, value {solution.objective:.6f}")
    return MaxminSolution(
        value=solution.objective,
        strategy=Strategy.from_flat(space.shape, sigma),
        potentials=potentials,
        max_violation=violation,
    )


def weak_decomposition(
    experiments: Sequence[Experiment], problem: DecisionProblem, cap: int | None = None
) -> Decomposition:
    """
    Decomposes a problem of any state count into one subproblem per source.

    Subproblem j lets the agent pick a signal of source j as an action, with utility φ_j(θ, y_j).
    Each source then reports its own signal optimally in its subproblem, and the subproblem
    values add up to the robust value.

    Args:
        experiments (Sequence[Experiment]): The marginals.
        problem (DecisionProblem): The decision problem.
        cap (int | None): Product-space cap; None uses ROBUST_FUSION_CAP.

    Returns:
        Decomposition: The weak decomposition with the potentials, σ* and the program's value.
    """
    return decomposition_from_maxmin(solve_maxmin(experiments, problem, cap), experiments, problem)


def decomposition_from_maxmin(
    maxmin: MaxminSolution, experiments: Sequence[Experiment], problem: DecisionProblem
) -> Decomposition:
    subproblems = tuple(
        DecisionProblem.from_weighted(problem.states, experiment.signals, potential)
        for experiment, potential in zip(experiments, maxmin.potentials)
    )
    logger.info(f"Weak decomposition into {len(subproblems)} subproblems, value {maxmin.value:.6f}")
    return Decomposition(
        kind=DecompositionKind.WEAK,
        subproblems=subproblems,
        states=problem.states,
        potentials=maxmin.potentials,
        strategy=maxmin.strategy,
        value=maxmin.value,
    )
