"""
Independent checks of the robust value.

oracle_value solves the agent's maxmin program, a different formulation from Nature's
program used by robust_value. deterministic_bound and sampled_coupling_bound bracket the
value from below and above without any minimax argument.
"""

import itertools
import math
import time
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from loguru import logger

from robust_fusion.core.bayes import bayes_strategy, bayes_value
from robust_fusion.core.models import (
    DecisionProblem,
    Experiment,
    JointExperiment,
    Strategy,
    check_product_cap,
    composite_signals,
    independent_product,
    product_shape,
)
from robust_fusion.core.tolerances import VALUE_TOL
from robust_fusion.decompose.weak import solve_maxmin
from robust_fusion.env_variables import ROBUST_FUSION_ORACLE_CAP
from robust_fusion.errors import InstanceTooLargeError
from robust_fusion.robust.solver import nature_best_response, robust_value

DETERMINISTIC_CELL_CAP = 1024
ENUMERATION_LIMIT = 512


@dataclass(frozen=True)
class OracleReport:
    """
    Attributes:
        instance_id (str): Identifies the instance, usually its file digest.
        main_value (float): robust_value.
        oracle_value (float): The maxmin program's value.
        gap (float): |main_value − oracle_value|.
        lower_bound (float | None): Best guaranteed value among deterministic strategies; None when skipped.
        upper_bound (float): Smallest Bayes value among sampled couplings.
        tolerance (float): Tolerance used for the pass flag.
        passed (bool): Whether the gap and both bounds are within tolerance.
    """

    instance_id: str
    main_value: float
    oracle_value: float
    gap: float
    lower_bound: float | None
    upper_bound: float
    tolerance: float
    passed: bool


def oracle_value(experiments: Sequence[Experiment], problem: DecisionProblem, cap: int | None = None) -> float:
    """
    The robust value from the agent's side: the joint strategy/potential program.

    Raises:
        InstanceTooLargeError: If the product signal space exceeds the cap (ROBUST_FUSION_ORACLE_CAP by default).
    """
    return solve_maxmin(experiments, problem, ROBUST_FUSION_ORACLE_CAP if cap is None else cap).value


def _candidate_strategies(
    experiments: Sequence[Experiment], problem: DecisionProblem, samples: int, rng: np.random.Generator
) -> list[list[int]]:
    shape = product_shape(experiments)
    cells = composite_signals(shape)
    n_cells, n_actions = len(cells), problem.n_actions
    if n_actions ** n_cells <= ENUMERATION_LIMIT:
        return [list(choices) for choices in itertools.product(range(n_actions), repeat=n_cells)]

    candidates = []
    for source, experiment in enumerate(experiments):
        rule = bayes_strategy(experiment, problem)
        candidates.append([int(rule[signal[source]]) for signal in cells])
    candidates.append(bayes_strategy(independent_product(experiments).joint, problem).tolist())
    candidates.extend(rng.integers(0, n_actions, size=(samples, n_cells)).tolist())
    return candidates


def deterministic_bound(
    experiments: Sequence[Experiment], problem: DecisionProblem, samples: int = 200, seed: int = 0
) -> float:
    """
    A lower bound on the robust value: the best guarantee among deterministic strategies.

    Every deterministic strategy is tried when there are at most ENUMERATION_LIMIT of them;
    otherwise each single-source Bayes rule, the Bayes rule of the independent product and
    `samples` random strategies are tried.

    Raises:
        InstanceTooLargeError: If the product signal space exceeds DETERMINISTIC_CELL_CAP.
    """
    check_product_cap(experiments, DETERMINISTIC_CELL_CAP)
    rng = np.random.default_rng(seed)
    shape = product_shape(experiments)
    best = -math.inf
    for choices in _candidate_strategies(experiments, problem, samples, rng):
        strategy = Strategy.deterministic(shape, choices, problem.n_actions)
        _, value = nature_best_response(strategy, experiments, problem, DETERMINISTIC_CELL_CAP)
        best = max(best, value)
    return best


def comonotone_coupling(experiments: Sequence[Experiment], orders: Sequence[np.ndarray]) -> np.ndarray:
    """
    Couples the sources through one uniform draw per state, read through each source's quantiles.

    Args:
        experiments (Sequence[Experiment]): The marginals.
        orders (Sequence[np.ndarray]): Per source, the order in which its signals fill [0, 1].

    Returns:
        np.ndarray: A coupling tensor of shape (|Θ|, |Y_1|, ..., |Y_m|).
    """
    n_states = experiments[0].n_states
    tensor = np.zeros((n_states,) + product_shape(experiments))
    for state in range(n_states):
        cumulative = [np.cumsum(experiment.kernel[state, order]) for experiment, order in zip(experiments, orders)]
        breakpoints = np.unique(np.concatenate([[0.0, 1.0]] + [np.clip(c, 0.0, 1.0) for c in cumulative]))
        for low, high in zip(breakpoints[:-1], breakpoints[1:]):
            middle = 0.5 * (low + high)
            cell = tuple(
                int(order[min(int(np.searchsorted(c, middle, side="right")), len(order) - 1)])
                for c, order in zip(cumulative, orders)
            )
            tensor[(state,) + cell] += high - low
    return tensor


def _sampled_couplings(
    experiments: Sequence[Experiment], samples: int, rng: np.random.Generator
) -> list[np.ndarray]:
    identity = [np.arange(experiment.n_signals) for experiment in experiments]
    couplings = [comonotone_coupling(experiments, identity), independent_product(experiments).tensor]
    for _ in range(samples):
        n_mix = int(rng.integers(1, 4))
        per_state = []
        for state in range(experiments[0].n_states):
            weights = rng.dirichlet(np.ones(n_mix))
            vertices = [
                comonotone_coupling(experiments, [rng.permutation(e.n_signals) for e in experiments])[state]
                for _ in range(n_mix)
            ]
            per_state.append(sum(weight * vertex for weight, vertex in zip(weights, vertices)))
        couplings.append(np.stack(per_state))
    return couplings


def sampled_coupling_bound(
    experiments: Sequence[Experiment], problem: DecisionProblem, samples: int = 200, seed: int = 0
) -> float:
    """
    An upper bound on the robust value: the smallest Bayes value among sampled couplings.

    Samples mix comonotone couplings under random signal orders, independently per state. The
    identity-order comonotone coupling and the independent product are always included.
    """
    rng = np.random.default_rng(seed)
    values = [
        bayes_value(JointExperiment.from_tensor(experiments, tensor).joint, problem)
        for tensor in _sampled_couplings(experiments, samples, rng)
    ]
    return min(values)


def run_oracle_suite(
    experiments: Sequence[Experiment],
    problem: DecisionProblem,
    instance_id: str = "",
    seed: int = 0,
    samples: int = 200,
    tolerance: float = VALUE_TOL,
    cap: int | None = None,
) -> OracleReport:
    """
    Compares robust_value with the maxmin oracle and brackets it with both bounds.

    Args:
        experiments (Sequence[Experiment]): The marginals.
        problem (DecisionProblem): The decision problem.
        instance_id (str): Label carried into the report.
        seed (int): Seed of every sampled quantity.
        samples (int): Number of sampled strategies and couplings.
        tolerance (float): Tolerance of every comparison.
        cap (int | None): Product-space cap for the main value and the oracle.

    Returns:
        OracleReport: The comparison, with passed set when everything agrees.
    """
    start_time = time.time()
    main = robust_value(experiments, problem, cap, tolerance)
    oracle = oracle_value(experiments, problem, cap)
    try:
        lower = deterministic_bound(experiments, problem, samples, seed)
    except InstanceTooLargeError as error:
        logger.warning(f"Skipping the deterministic bound: {error}")
        lower = None
    upper = sampled_coupling_bound(experiments, problem, samples, seed)
    gap = abs(main - oracle)
    passed = gap <= tolerance and upper >= main - tolerance and (lower is None or lower <= main + tolerance)
    elapsed = time.time() - start_time
    logger.info(f"Oracle suite {'passed' if passed else 'FAILED'} with gap {gap:.2e} in {elapsed:.2f} seconds")
    return OracleReport(
        instance_id=instance_id,
        main_value=main,
        oracle_value=oracle,
        gap=gap,
        lower_bound=lower,
        upper_bound=upper,
        tolerance=tolerance,
        passed=passed,
    )
