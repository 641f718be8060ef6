"""
Queries on the payoff polyhedron H(A, u): mixed-action payoff vectors and everything
they weakly dominate.
"""

from typing import Sequence

import numpy as np
from loguru import logger

from robust_fusion.core.models import DecisionProblem
from robust_fusion.core.tolerances import FEASIBILITY_TOL
from robust_fusion.errors import DimensionMismatchError, NumericalFailureError, TargetOutsidePolyhedronError
from robust_fusion.linprog.simplex import LpProblem, Sense, solve

_SLACK_TIE_TOL = 1e-9
_INDEX_PENALTY = 1e-6


def _target(problem: DecisionProblem, point: Sequence[float]) -> np.ndarray:
    target = np.asarray(point, dtype=float).reshape(-1)
    if target.shape[0] != problem.n_states:
        raise DimensionMismatchError(f"payoff vector has {target.shape[0]} entries, problem has {problem.n_states} states")
    return target


def _mixture_lp(payoffs: np.ndarray, target: np.ndarray, objective: np.ndarray, min_slack: float | None) -> LpProblem:
    # Variables: α (one per column of payoffs) and the uniform slack s.
    n_states, n_actions = payoffs.shape
    a_ub = np.hstack([-payoffs, np.ones((n_states, 1))])
    bounds = [(0.0, None)] * n_actions + [(min_slack, None)]
    return LpProblem(
        objective=objective,
        sense=Sense.MAXIMIZE,
        a_eq=np.concatenate([np.ones(n_actions), [0.0]])[None, :],
        b_eq=[1.0],
        a_ub=a_ub,
        b_ub=-target,
        bounds=bounds,
    )


def max_uniform_slack(payoffs: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """
    Maximizes s such that some mixture α of the payoff columns satisfies payoffs·α ≥ target + s.

    Args:
        payoffs (np.ndarray): Shape (|Θ|, k), one column per candidate action.
        target (np.ndarray): Shape (|Θ|,).

    Returns:
        tuple[float, np.ndarray]: The optimal slack and a maximizing mixture.
    """
    n_actions = payoffs.shape[1]
    objective = np.concatenate([np.zeros(n_actions), [1.0]])
    solution = solve(_mixture_lp(payoffs, target, objective, None))
    if not solution.is_optimal:
        raise NumericalFailureError(f"uniform slack program ended with status {solution.status.value}")
    return solution.objective, solution.primal[:n_actions]


def polyhedron_contains(problem: DecisionProblem, point: Sequence[float]) -> bool:
    """
    Whether some mixed action weakly dominates the point.

    Raises:
        DimensionMismatchError: If the point does not have one entry per state.
    """
    slack, _ = max_uniform_slack(problem.weighted_utility, _target(problem, point))
    return slack >= -FEASIBILITY_TOL


def equivalent(problem_a: DecisionProblem, problem_b: DecisionProblem) -> bool:
    """
    Whether two problems have the same payoff polyhedron, checked by mutual vertex containment.

    Raises:
        DimensionMismatchError: If the problems have different state counts.
    """
    if problem_a.n_states != problem_b.n_states:
        raise DimensionMismatchError(
            f"problems have {problem_a.n_states} and {problem_b.n_states} states"
        )
    return all(
        polyhedron_contains(container, contained.payoff(action))
        for container, contained in ((problem_a, problem_b), (problem_b, problem_a))
        for action in range(contained.n_actions)
    )


def dominating_mixed_action(problem: DecisionProblem, target: Sequence[float]) -> np.ndarray:
    """
    A mixed action whose payoff weakly dominates the target in every state.

    Among dominating mixtures the one with the largest uniform slack is returned; remaining
    ties go to the largest total slack and then to the lowest-index support.

    Args:
        problem (DecisionProblem): The decision problem.
        target (Sequence[float]): A payoff vector inside H(A, u).

    Returns:
        np.ndarray: A probability vector over problem.actions.

    Raises:
        TargetOutsidePolyhedronError: If no mixed action dominates the target.
    """
    payoffs = problem.weighted_utility
    target = _target(problem, target)
    slack, _ = max_uniform_slack(payoffs, target)
    if slack < -FEASIBILITY_TOL:
        raise TargetOutsidePolyhedronError(f"target {target.tolist()} lies outside the payoff polyhedron")

    floor = slack - _SLACK_TIE_TOL
    n_actions = problem.n_actions
    # Total slack first; a tiny index penalty settles the remaining ties toward low indices.
    penalty = _INDEX_PENALTY * np.arange(n_actions) / n_actions
    objective = np.concatenate([payoffs.sum(axis=0) - penalty, [0.0]])
    solution = solve(_mixture_lp(payoffs, target, objective, floor))
    if not solution.is_optimal:
        raise NumericalFailureError(f"total slack program ended with status {solution.status.value}")
    mixture = np.clip(solution.primal[:n_actions], 0.0, None)
    mixture /= mixture.sum()
    logger.debug(f"Dominating mixture for {target.tolist()}: {np.round(mixture, 6).tolist()}")
    return mixture
