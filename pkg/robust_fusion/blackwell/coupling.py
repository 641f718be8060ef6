"""
Couplings of marginal experiments and Nature's minimization over them.

A coupling is stored as a flat vector with one entry per (state, composite signal),
state-major and composite signals in row-major order. Its constraints say that summing
out every source but j reproduces P_j(y_j | θ).
"""

import time
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from loguru import logger

from robust_fusion.core.models import (
    DecisionProblem,
    Experiment,
    JointExperiment,
    check_product_cap,
    independent_product,
    product_shape,
)
from robust_fusion.env_variables import ROBUST_FUSION_CAP
from robust_fusion.errors import EmptyInputError, NumericalFailureError, StateMismatchError
from robust_fusion.linprog.simplex import LpProblem, LpSolution, solve


@dataclass(frozen=True)
class CouplingSpace:
    """
    Index bookkeeping for couplings of a fixed list of experiments.

    Attributes:
        experiments (tuple[Experiment, ...]): The marginals.
        n_states (int): |Θ|.
        shape (tuple[int, ...]): Signal counts per source.
        n_cells (int): Number of composite signals.
    """

    experiments: tuple[Experiment, ...]
    n_states: int
    shape: tuple[int, ...]
    n_cells: int

    @classmethod
    def of(cls, experiments: Sequence[Experiment], cap: int | None = None) -> "CouplingSpace":
        if not experiments:
            raise EmptyInputError("at least one experiment is required")
        n_states = experiments[0].n_states
        for experiment in experiments:
            if experiment.n_states != n_states:
                raise StateMismatchError(
                    f"experiment '{experiment.name}' has {experiment.n_states} states, expected {n_states}"
                )
        n_cells = check_product_cap(experiments, ROBUST_FUSION_CAP if cap is None else cap)
        return cls(tuple(experiments), n_states, product_shape(experiments), n_cells)

    @property
    def n_variables(self) -> int:
        return self.n_states * self.n_cells

    def marginal_constraints(self) -> tuple[np.ndarray, np.ndarray]:
        """
        Equality rows Σ_{y_-j} P(θ, y) = P_j(y_j | θ), one per (θ, j, y_j).

        Returns:
            tuple[np.ndarray, np.ndarray]: The coefficient matrix over the coupling variables and the right-hand side.
        """
        coordinates = np.indices(self.shape).reshape(len(self.shape), -1)
        rows, rhs = [], []
        for state in range(self.n_states):
            offset = state * self.n_cells
            for source, experiment in enumerate(self.experiments):
                for signal in range(experiment.n_signals):
                    row = np.zeros(self.n_variables)
                    row[offset + np.flatnonzero(coordinates[source] == signal)] = 1.0
                    rows.append(row)
                    rhs.append(experiment.kernel[state, signal])
        return np.array(rows), np.array(rhs)

    def to_joint(self, flat: np.ndarray, name: str) -> JointExperiment:
        tensor = np.asarray(flat[: self.n_variables]).reshape((self.n_states,) + self.shape)
        return JointExperiment.from_tensor(self.experiments, tensor, name=name)


def _require_optimal(solution: LpSolution, what: str) -> LpSolution:
    if not solution.is_optimal:
        raise NumericalFailureError(f"{what} ended with status {solution.status.value}")
    return solution


def min_cost_coupling(
    experiments: Sequence[Experiment], cost: np.ndarray, cap: int | None = None
) -> tuple[JointExperiment, float, LpSolution]:
    """
    Transportation LP: minimizes Σ_θ Σ_y cost[θ, y]·P(y|θ) over all couplings of the marginals.

    Args:
        experiments (Sequence[Experiment]): The marginals.
        cost (np.ndarray): Shape (|Θ|, number of composite signals).
        cap (int | None): Product-space cap; None uses ROBUST_FUSION_CAP.

    Returns:
        tuple[JointExperiment, float, LpSolution]: The minimizing coupling, the minimum and the raw LP solution.
    """
    space = CouplingSpace.of(experiments, cap)
    a_eq, b_eq = space.marginal_constraints()
    lp = LpProblem(objective=np.asarray(cost, dtype=float).reshape(-1), a_eq=a_eq, b_eq=b_eq)
    solution = _require_optimal(solve(lp), "coupling LP")
    return space.to_joint(solution.primal, "min-cost coupling"), solution.objective, solution


def worst_case_joint(
    experiments: Sequence[Experiment], problem: DecisionProblem, cap: int | None = None
) -> tuple[JointExperiment, float]:
    """
    Solves Nature's program in epigraph form.

    Variables are the coupling P(y|θ) ≥ 0 and a free t_y per composite signal, with
    t_y ≥ Σ_θ P(y|θ)·u(θ, a) for every action; the objective Σ_y t_y is minimized.

    Args:
        experiments (Sequence[Experiment]): The marginals.
        problem (DecisionProblem): The decision problem.
        cap (int | None): Product-space cap; None uses ROBUST_FUSION_CAP.

    Returns:
        tuple[JointExperiment, float]: The worst-case joint experiment and the robust value.

    Raises:
        InstanceTooLargeError: If the product signal space exceeds the cap.
    """
    start_time = time.time()
    space = CouplingSpace.of(experiments, cap)
    if space.n_states != problem.n_states:
        raise StateMismatchError(f"experiments have {space.n_states} states, problem has {problem.n_states}")
    n_cells, n_actions = space.n_cells, problem.n_actions
    a_marg, b_marg = space.marginal_constraints()
    a_eq = np.hstack([a_marg, np.zeros((a_marg.shape[0], n_cells))])

    a_ub = np.zeros((n_cells * n_actions, space.n_variables + n_cells))
    for cell in range(n_cells):
        for action in range(n_actions):
            row = cell * n_actions + action
            a_ub[row, cell + n_cells * np.arange(space.n_states)] = problem.weighted_utility[:, action]
            a_ub[row, space.n_variables + cell] = -1.0

    lp = LpProblem(
        objective=np.concatenate([np.zeros(space.n_variables), np.ones(n_cells)]),
        a_eq=a_eq,
        b_eq=b_marg,
        a_ub=a_ub,
        b_ub=np.zeros(a_ub.shape[0]),
        bounds=[(0.0, None)] * space.n_variables + [(None, None)] * n_cells,
    )
    logger.debug(f"Nature's program: {lp.n_variables} variables, {a_eq.shape[0]} equalities, {a_ub.shape[0]} rows")
    solution = _require_optimal(solve(lp), "Nature's program")
    elapsed = time.time() - start_time
    logger.debug(f"Solved Nature's program in {elapsed:.2f} seconds after {solution.iterations} pivots")
    return space.to_joint(solution.primal, "worst case"), solution.objective


def nature_null_cells(experiments: Sequence[Experiment]) -> np.ndarray:
    """
    Composite signals with probability zero under every coupling.

    A cell can carry mass iff some state gives every coordinate positive probability,
    which is exactly when the independent product puts mass on it.

    Returns:
        np.ndarray: Boolean array of shape (|Y_1|, ..., |Y_m|).
    """
    tensor = independent_product(experiments).tensor
    return tensor.sum(axis=0) <= 0.0
