"""
Reference instances and seeded random instance generators.

The two-asset portfolio instance carries prior-weighted utilities
(0,0), (2,-1), (-1,2), (1,1); it is encoded with a uniform prior and doubled raw
utilities so the weighted utilities come out exactly.
"""

from fractions import Fraction

import numpy as np

from robust_fusion.core.models import DecisionProblem, Experiment

BINARY_STATES = ("theta1", "theta2")


def portfolio_experiments() -> list[Experiment]:
    return [
        Experiment(name="P1", signals=("1", "0"), kernel=[[0.9, 0.1], [0.5, 0.5]]),
        Experiment(name="P2", signals=("1", "0"), kernel=[[0.5, 0.5], [0.9, 0.1]]),
    ]


def portfolio_problem() -> DecisionProblem:
    return DecisionProblem(
        states=BINARY_STATES,
        prior=[0.5, 0.5],
        actions=("nothing", "asset 1", "asset 2", "both"),
        raw_utility=[[0.0, 4.0, -2.0, 2.0], [0.0, -2.0, 4.0, 2.0]],
    )


def asset_one_problem() -> DecisionProblem:
    return DecisionProblem(
        states=BINARY_STATES,
        prior=[0.5, 0.5],
        actions=("not invest", "invest"),
        raw_utility=[[0.0, 4.0], [0.0, -2.0]],
    )


def asset_two_problem() -> DecisionProblem:
    return DecisionProblem(
        states=BINARY_STATES,
        prior=[0.5, 0.5],
        actions=("not invest", "invest"),
        raw_utility=[[0.0, -2.0], [0.0, 4.0]],
    )


def three_action_problem() -> DecisionProblem:
    """Three undominated actions with weighted payoffs (-1,2), (1,1), (2,-1)."""
    return DecisionProblem(
        states=BINARY_STATES,
        prior=[0.5, 0.5],
        actions=("a1", "a2", "a3"),
        raw_utility=[[-2.0, 2.0, 4.0], [4.0, 2.0, -2.0]],
    )


def three_state_experiments() -> list[Experiment]:
    return [
        Experiment(name="PX", signals=("x1", "x2"), kernel=[[1, 0], [1, 0], [0, 1]]),
        Experiment(name="PY", signals=("y1", "y2"), kernel=[[1, 0], [0, 1], [0, 1]]),
    ]


def three_state_problem() -> DecisionProblem:
    third = float(Fraction(1, 3))
    return DecisionProblem(
        states=("theta1", "theta2", "theta3"),
        prior=[third, third, third],
        actions=("1", "0"),
        raw_utility=[[3.0, 0.0], [-3.0, 0.0], [3.0, 0.0]],
    )


def complementary_problem() -> DecisionProblem:
    """The three-state binary-action problem where each three-state source alone is worthless."""
    third = float(Fraction(1, 3))
    return DecisionProblem(
        states=("theta1", "theta2", "theta3"),
        prior=[third, third, third],
        actions=("1", "0"),
        raw_utility=[[-3.0, 0.0], [3.0, 0.0], [-3.0, 0.0]],
    )


def symmetric_experiment(accuracy: float, name: str = "P") -> Experiment:
    return Experiment(name=name, signals=("0", "1"), kernel=[[accuracy, 1 - accuracy], [1 - accuracy, accuracy]])


def random_experiment(rng: np.random.Generator, n_states: int, n_signals: int, name: str) -> Experiment:
    kernel = rng.dirichlet(np.ones(n_signals), size=n_states)
    kernel[:, -1] = np.clip(1.0 - kernel[:, :-1].sum(axis=1), 0.0, 1.0)
    return Experiment(name=name, signals=tuple(f"s{index}" for index in range(n_signals)), kernel=kernel)


def random_problem(rng: np.random.Generator, n_states: int, n_actions: int) -> DecisionProblem:
    prior = rng.dirichlet(np.ones(n_states))
    prior[-1] = 1.0 - prior[:-1].sum()
    raw = np.round(rng.uniform(-3.0, 3.0, size=(n_states, n_actions)), 3)
    return DecisionProblem(
        states=tuple(f"theta{index + 1}" for index in range(n_states)),
        prior=prior,
        actions=tuple(f"a{index}" for index in range(n_actions)),
        raw_utility=raw,
    )


def random_instance(
    rng: np.random.Generator, n_states: int, n_actions: int, max_sources: int = 3, max_signals: int = 4
) -> tuple[DecisionProblem, list[Experiment]]:
    """
    Draws a problem and between one and max_sources experiments with 2..max_signals signals each.
    """
    problem = random_problem(rng, n_states, n_actions)
    n_sources = int(rng.integers(1, max_sources + 1))
    experiments = [
        random_experiment(rng, n_states, int(rng.integers(2, max_signals + 1)), f"P{index + 1}")
        for index in range(n_sources)
    ]
    return problem, experiments
