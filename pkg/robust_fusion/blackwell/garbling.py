from dataclasses import dataclass
from typing import Sequence

import numpy as np
from loguru import logger

from robust_fusion.blackwell.zonotope import blackwell_supremum
from robust_fusion.core.models import Experiment, JointExperiment
from robust_fusion.core.tolerances import COMPUTED_TOL, FEASIBILITY_TOL
from robust_fusion.errors import DimensionMismatchError, InconsistentSolutionError, NonStochasticRowError
from robust_fusion.linprog.simplex import LpProblem, solve


@dataclass(frozen=True, eq=False)
class GarblingMatrix:
    """
    A Markov kernel g(z|y) from source signals to target signals.

    Attributes:
        matrix (np.ndarray): Row-stochastic, rows indexed by source signals, columns by target signals.
    """

    matrix: np.ndarray

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=float)
        if matrix.ndim != 2:
            raise DimensionMismatchError(f"garbling must be a matrix, got shape {matrix.shape}")
        if np.any(matrix < -FEASIBILITY_TOL) or np.any(np.abs(matrix.sum(axis=1) - 1.0) > FEASIBILITY_TOL):
            raise NonStochasticRowError("garbling rows must be probability vectors")
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)

    def apply(self, source: Experiment, name: str = "garbled") -> Experiment:
        return Experiment(name=name, signals=tuple(f"z{i + 1}" for i in range(self.matrix.shape[1])),
                          kernel=source.kernel @ self.matrix)


def is_garbling(target: Experiment, source: Experiment) -> GarblingMatrix | None:
    """
    Looks for g with Σ_y source(y|θ)·g(z|y) = target(z|θ).

    The feasibility program carries slack variables on both sides of every matching row and
    minimizes their total, so the answer tolerates rounding in computed experiments.

    Args:
        target (Experiment): The experiment that should be a garbling.
        source (Experiment): The more informative candidate.

    Returns:
        GarblingMatrix | None: A garbling when one exists within COMPUTED_TOL, None otherwise.

    Raises:
        DimensionMismatchError: If the experiments have different state counts.
    """
    if target.n_states != source.n_states:
        raise DimensionMismatchError(
            f"experiments '{target.name}' and '{source.name}' have {target.n_states} and {source.n_states} states"
        )
    n_states, n_from, n_to = source.n_states, source.n_signals, target.n_signals
    n_g = n_from * n_to
    n_match = n_states * n_to

    # g is row-major: variable y * n_to + z.
    a_match = np.zeros((n_match, n_g + 2 * n_match))
    for state in range(n_states):
        for z in range(n_to):
            row = state * n_to + z
            a_match[row, np.arange(n_from) * n_to + z] = source.kernel[state]
            a_match[row, n_g + row] = 1.0
            a_match[row, n_g + n_match + row] = -1.0
    a_rows = np.zeros((n_from, n_g + 2 * n_match))
    for y in range(n_from):
        a_rows[y, y * n_to:(y + 1) * n_to] = 1.0

    lp = LpProblem(
        objective=np.concatenate([np.zeros(n_g), np.ones(2 * n_match)]),
        a_eq=np.vstack([a_match, a_rows]),
        b_eq=np.concatenate([target.kernel.reshape(-1), np.ones(n_from)]),
    )
    solution = solve(lp)
    if not solution.is_optimal or solution.objective > COMPUTED_TOL:
        logger.debug(f"'{target.name}' is not a garbling of '{source.name}'")
        return None
    matrix = np.clip(solution.primal[:n_g].reshape(n_from, n_to), 0.0, None)
    matrix /= matrix.sum(axis=1, keepdims=True)
    if np.max(np.abs(source.kernel @ matrix - target.kernel)) > COMPUTED_TOL:
        return None
    return GarblingMatrix(matrix)


def supremum_joint(experiments: Sequence[Experiment]) -> JointExperiment:
    """
    A coupling of the marginals that is Blackwell-equivalent to their supremum.

    With P̄ the supremum and g_j a garbling of P̄ onto P_j, the joint is
    P(y_1, ..., y_m | θ) = Σ_z P̄(z|θ)·Π_j g_j(y_j | z).

    Raises:
        NotBinaryStateError: If an input is not binary-state.
        InconsistentSolutionError: If an input fails to be a garbling of the supremum.
    """
    supremum = blackwell_supremum(experiments)
    garblings = []
    for experiment in experiments:
        garbling = is_garbling(experiment, supremum)
        if garbling is None:
            raise InconsistentSolutionError(f"'{experiment.name}' is not a garbling of the computed supremum")
        garblings.append(garbling.matrix)

    shape = tuple(experiment.n_signals for experiment in experiments)
    tensor = np.zeros((supremum.n_states,) + shape)
    for z in range(supremum.n_signals):
        cell = np.ones(())
        for matrix in garblings:
            cell = np.multiply.outer(cell, matrix[z])
        tensor += np.multiply.outer(supremum.kernel[:, z], cell)
    return JointExperiment.from_tensor(experiments, tensor, name=supremum.name)
