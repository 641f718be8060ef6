from typing import Sequence

import numpy as np
from loguru import logger

from robust_fusion.core.models import DecisionProblem, Experiment, JointExperiment, Strategy
from robust_fusion.core.tolerances import TIE_TOL
from robust_fusion.errors import DimensionMismatchError


def validate_instance(problem: DecisionProblem, experiments: Sequence[Experiment]) -> None:
    """
    Checks a decision problem and its sources against every structural invariant.

    Args:
        problem (DecisionProblem): The decision problem.
        experiments (Sequence[Experiment]): The marginal experiments.

    Raises:
        DimensionMismatchError: If shapes disagree.
        NonStochasticRowError: If a kernel row is not a probability vector.
        BadPriorError: If the prior is not a probability vector.
    """
    problem.validate()
    for experiment in experiments:
        experiment.validate(problem.n_states)
    logger.debug(f"Validated instance with {problem.n_states} states, {problem.n_actions} actions, "
                 f"{len(experiments)} experiments")


def _check_states(experiment: Experiment, problem: DecisionProblem) -> None:
    if experiment.n_states != problem.n_states:
        raise DimensionMismatchError(
            f"experiment '{experiment.name}' has {experiment.n_states} states, problem has {problem.n_states}"
        )


def signal_payoffs(experiment: Experiment, problem: DecisionProblem) -> np.ndarray:
    """Returns the (|Y|, |A|) matrix Σ_θ P(y|θ)·u(θ, a)."""
    _check_states(experiment, problem)
    return experiment.kernel.T @ problem.weighted_utility


def bayes_value(experiment: Experiment, problem: DecisionProblem) -> float:
    """
    The classical value of a single experiment: Σ_y max_a Σ_θ P(y|θ)·u(θ, a).

    Args:
        experiment (Experiment): The information source.
        problem (DecisionProblem): The decision problem.

    Returns:
        float: The Bayes value.
    """
    return float(signal_payoffs(experiment, problem).max(axis=1).sum())


def no_information_value(problem: DecisionProblem) -> float:
    """The value attainable without any source: max_a Σ_θ u(θ, a)."""
    return float(problem.weighted_utility.sum(axis=0).max())


def first_best(payoffs: np.ndarray) -> int:
    """Index of the first entry within TIE_TOL of the maximum."""
    return int(np.flatnonzero(payoffs >= payoffs.max() - TIE_TOL)[0])


def bayes_strategy(experiment: Experiment, problem: DecisionProblem) -> np.ndarray:
    """
    A Bayes-optimal pure decision rule for a single experiment.

    Indifferent signals take the lowest-index optimal action.

    Returns:
        np.ndarray: Action index per signal of the experiment.
    """
    payoffs = signal_payoffs(experiment, problem)
    return np.array([first_best(row) for row in payoffs], dtype=int)


def evaluate_strategy(strategy: Strategy, joint: JointExperiment, problem: DecisionProblem) -> float:
    """
    Expected payoff Σ_θ Σ_y P(y|θ)·u(θ, σ(y)) of a mixed strategy under a given joint experiment.

    Raises:
        DimensionMismatchError: If the strategy, the joint and the problem disagree on shapes.
    """
    _check_states(joint.joint, problem)
    if strategy.signal_shape != joint.signal_shape:
        raise DimensionMismatchError(
            f"strategy covers signal space {strategy.signal_shape}, joint has {joint.signal_shape}"
        )
    if strategy.n_actions != problem.n_actions:
        raise DimensionMismatchError(f"strategy mixes {strategy.n_actions} actions, problem has {problem.n_actions}")
    cell_payoffs = joint.joint.kernel.T @ problem.weighted_utility
    return float(np.sum(cell_payoffs * strategy.flat()))
