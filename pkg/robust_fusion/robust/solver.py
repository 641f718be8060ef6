"""
Robust value and robustly optimal strategies.

robust_strategy dispatches on the instance shape: binary-state binary-action problems are
solved by the best single source, other binary-state problems by assembling threshold
strategies over the canonical decomposition, and everything else by the maxmin program.
Every strategy is priced by Nature's best response before it is returned.
"""

import time
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np
from loguru import logger

from robust_fusion.blackwell.coupling import min_cost_coupling, nature_null_cells, worst_case_joint
from robust_fusion.blackwell.zonotope import blackwell_supremum
from robust_fusion.core.bayes import bayes_strategy, bayes_value, first_best, validate_instance
from robust_fusion.core.models import (
    DecisionProblem,
    Experiment,
    JointExperiment,
    Strategy,
    composite_signals,
    product_shape,
)
from robust_fusion.core.tolerances import COMPUTED_TOL, VALUE_TOL
from robust_fusion.decompose.composition import Decomposition, canonical_decomposition
from robust_fusion.decompose.polyhedron import dominating_mixed_action
from robust_fusion.decompose.weak import decomposition_from_maxmin, solve_maxmin
from robust_fusion.errors import (
    DimensionMismatchError,
    EmptyInputError,
    InconsistentSolutionError,
    NotBinaryStateError,
)


class Method(str, Enum):
    BINARY_ACTION = "binary_action"
    CANONICAL_ASSEMBLY = "canonical_assembly"
    DUAL_LP = "dual_lp"


@dataclass(frozen=True, eq=False)
class SourceChoice:
    """
    The winning source of one canonical subproblem.

    Attributes:
        source (int): Index of the experiment with the highest Bayes value in the subproblem.
        value (float): That Bayes value.
        rule (np.ndarray): The winner's threshold rule, 1 on signals where it moves to the next action.
    """

    source: int
    value: float
    rule: np.ndarray


@dataclass(frozen=True, eq=False)
class RobustSolution:
    """
    Attributes:
        value (float): The robust value V(P_1, ..., P_m; (A, u)).
        strategy (Strategy): A robustly optimal strategy.
        certificate_value (float): Nature's best-response value against the strategy.
        certificate_joint (JointExperiment): The coupling attaining certificate_value.
        method (Method): How the strategy was built.
        decomposition (Decomposition | None): The decomposition used, if any.
        choices (tuple[SourceChoice, ...]): Canonical assembly only; the winner of each subproblem.
    """

    value: float
    strategy: Strategy
    certificate_value: float
    certificate_joint: JointExperiment
    method: Method
    decomposition: Decomposition | None = None
    choices: tuple[SourceChoice, ...] = ()

    @property
    def gap(self) -> float:
        return abs(self.value - self.certificate_value)


def _require_binary(problem: DecisionProblem) -> None:
    if problem.n_states != 2:
        raise NotBinaryStateError(f"problem has {problem.n_states} states, expected 2")


def best_single_source(experiments: Sequence[Experiment], problem: DecisionProblem) -> tuple[int, float]:
    """
    The experiment with the highest Bayes value, lowest index on ties.

    Returns:
        tuple[int, float]: Its index and its Bayes value.
    """
    if not experiments:
        raise EmptyInputError("at least one experiment is required")
    validate_instance(problem, experiments)
    values = np.array([bayes_value(experiment, problem) for experiment in experiments])
    index = first_best(values)
    return index, float(values[index])


def envelope_value(experiments: Sequence[Experiment], problem: DecisionProblem) -> float:
    """The robust value of a binary-state instance through the Blackwell supremum of the sources."""
    return bayes_value(blackwell_supremum(experiments), problem)


def subproblem_choices(decomposition: Decomposition, experiments: Sequence[Experiment]) -> tuple[SourceChoice, ...]:
    choices = []
    for subproblem in decomposition.subproblems:
        source, value = best_single_source(experiments, subproblem)
        choices.append(SourceChoice(source, value, bayes_strategy(experiments[source], subproblem)))
    return tuple(choices)


def decomposed_value(experiments: Sequence[Experiment], problem: DecisionProblem) -> float:
    """
    The robust value of a binary-state instance as Σ_θ u(θ, a_1) + Σ_ℓ max_j V(P_j; subproblem ℓ).

    Raises:
        NotBinaryStateError: If the problem does not have exactly two states.
    """
    _require_binary(problem)
    decomposition = canonical_decomposition(problem)
    choices = subproblem_choices(decomposition, experiments)
    return float(decomposition.base.sum()) + sum(choice.value for choice in choices)


def robust_value(
    experiments: Sequence[Experiment], problem: DecisionProblem, cap: int | None = None, tolerance: float = VALUE_TOL
) -> float:
    """
    The worst-case expected payoff of the best strategy, max_σ min_P.

    Nature's program gives the value; binary-state instances are cross-checked against
    the Blackwell supremum.

    Args:
        experiments (Sequence[Experiment]): The marginal experiments.
        problem (DecisionProblem): The decision problem.
        cap (int | None): Product-space cap; None uses ROBUST_FUSION_CAP.
        tolerance (float): Largest accepted disagreement of the cross-check.

    Returns:
        float: The robust value.

    Raises:
        InstanceTooLargeError: If the product signal space exceeds the cap.
        InconsistentSolutionError: If the cross-check fails.
    """
    start_time = time.time()
    validate_instance(problem, experiments)
    _, value = worst_case_joint(experiments, problem, cap)
    if problem.n_states == 2:
        envelope = envelope_value(experiments, problem)
        if abs(envelope - value) > tolerance:
            raise InconsistentSolutionError(f"Nature's program gives {value!r}, the supremum gives {envelope!r}")
    elapsed = time.time() - start_time
    logger.info(f"Robust value {value:.6f} found in {elapsed:.2f} seconds")
    return value


def nature_best_response(
    strategy: Strategy, experiments: Sequence[Experiment], problem: DecisionProblem, cap: int | None = None
) -> tuple[JointExperiment, float]:
    """
    The coupling that minimizes the expected payoff of a fixed strategy.

    Raises:
        DimensionMismatchError: If the strategy does not cover the product signal space.
        InstanceTooLargeError: If the product signal space exceeds the cap.
    """
    if strategy.signal_shape != product_shape(experiments) or strategy.n_actions != problem.n_actions:
        raise DimensionMismatchError(
            f"strategy of shape {strategy.table.shape} does not fit {product_shape(experiments)} signals "
            f"and {problem.n_actions} actions"
        )
    cost = problem.weighted_utility @ strategy.flat().T
    joint, value, _ = min_cost_coupling(experiments, cost, cap)
    return joint, value


def _binary_action_strategy(experiments: Sequence[Experiment], problem: DecisionProblem) -> tuple[Strategy, float]:
    source, value = best_single_source(experiments, problem)
    rule = bayes_strategy(experiments[source], problem)
    shape = product_shape(experiments)
    choices = [rule[signal[source]] for signal in composite_signals(shape)]
    logger.debug(f"Binary-action problem follows '{experiments[source].name}' alone")
    return Strategy.deterministic(shape, choices, problem.n_actions), value


def _covering_action(problem: DecisionProblem, target: np.ndarray) -> np.ndarray:
    # A pure action weakly above the target with the least total excess, else a dominating mixture.
    payoffs = problem.weighted_utility
    excess = payoffs - target[:, None]
    feasible = np.flatnonzero(np.all(excess >= -COMPUTED_TOL, axis=0))
    mixture = np.zeros(problem.n_actions)
    if feasible.size:
        totals = excess[:, feasible].sum(axis=0)
        mixture[feasible[first_best(-totals)]] = 1.0
        return mixture
    return dominating_mixed_action(problem, target)


def _assembled_strategy(
    experiments: Sequence[Experiment], problem: DecisionProblem
) -> tuple[Strategy, float, Decomposition, tuple[SourceChoice, ...]]:
    decomposition = canonical_decomposition(problem)
    choices = subproblem_choices(decomposition, experiments)
    shape = product_shape(experiments)
    table = np.zeros((len(composite_signals(shape)), problem.n_actions))
    for cell, signal in enumerate(composite_signals(shape)):
        target = np.array(decomposition.base, dtype=float)
        for increment, choice in zip(decomposition.increments, choices):
            target += increment * choice.rule[signal[choice.source]]
        table[cell] = _covering_action(problem, target)
    value = float(decomposition.base.sum()) + sum(choice.value for choice in choices)
    for index, choice in enumerate(choices):
        logger.debug(f"Subproblem {index} won by '{experiments[choice.source].name}' with {choice.value:.6f}")
    return Strategy.from_flat(shape, table), value, decomposition, choices


def _dual_strategy(
    experiments: Sequence[Experiment], problem: DecisionProblem, cap: int | None
) -> tuple[Strategy, float, Decomposition]:
    maxmin = solve_maxmin(experiments, problem, cap)
    decomposition = decomposition_from_maxmin(maxmin, experiments, problem)
    return maxmin.strategy, maxmin.value, decomposition


def _first_action_on_null_cells(strategy: Strategy, experiments: Sequence[Experiment]) -> Strategy:
    null = nature_null_cells(experiments).reshape(-1)
    if not np.any(null):
        return strategy
    table = np.array(strategy.flat())
    table[null] = 0.0
    table[null, 0] = 1.0
    logger.debug(f"{int(null.sum())} coupling-null cell(s) play the first action")
    return Strategy.from_flat(strategy.signal_shape, table)


def robust_strategy(
    experiments: Sequence[Experiment],
    problem: DecisionProblem,
    cap: int | None = None,
    tolerance: float = VALUE_TOL,
    method: Method | None = None,
) -> RobustSolution:
    """
    Synthesizes a robustly optimal strategy and certifies it against Nature's best response.

    Args:
        experiments (Sequence[Experiment]): The marginal experiments.
        problem (DecisionProblem): The decision problem.
        cap (int | None): Product-space cap; None uses ROBUST_FUSION_CAP.
        tolerance (float): Largest accepted gap between the value and the certificate.
        method (Method | None): Forces a construction; None picks it from the instance shape.

    Returns:
        RobustSolution: The value, the strategy and its certificate.

    Raises:
        NotBinaryStateError: If a binary-state method is forced on a larger state space.
        InconsistentSolutionError: If the certificate does not match the value.
    """
    start_time = time.time()
    validate_instance(problem, experiments)
    if method is None:
        if problem.n_states == 2:
            method = Method.BINARY_ACTION if problem.n_actions == 2 else Method.CANONICAL_ASSEMBLY
        else:
            method = Method.DUAL_LP

    decomposition, choices = None, ()
    if method is Method.BINARY_ACTION:
        _require_binary(problem)
        strategy, value = _binary_action_strategy(experiments, problem)
    elif method is Method.CANONICAL_ASSEMBLY:
        _require_binary(problem)
        strategy, value, decomposition, choices = _assembled_strategy(experiments, problem)
    else:
        strategy, value, decomposition = _dual_strategy(experiments, problem, cap)
    strategy = _first_action_on_null_cells(strategy, experiments)

    joint, certificate = nature_best_response(strategy, experiments, problem, cap)
    if abs(certificate - value) > tolerance:
        raise InconsistentSolutionError(
            f"{method.value} strategy guarantees {certificate!r}, expected the robust value {value!r}"
        )
    elapsed = time.time() - start_time
    logger.info(f"Robust strategy via {method.value}: value {value:.6f}, built in {elapsed:.2f} seconds")
    return RobustSolution(
        value=value,
        strategy=strategy,
        certificate_value=certificate,
        certificate_joint=joint,
        method=method,
        decomposition=decomposition,
        choices=choices,
    )
