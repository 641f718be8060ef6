from dataclasses import dataclass
from typing import Sequence

from loguru import logger

from robust_fusion.asymptotics.chernoff import chernoff_index
from robust_fusion.asymptotics.power import iid_power
from robust_fusion.core.bayes import bayes_value
from robust_fusion.core.models import DecisionProblem, Experiment
from robust_fusion.core.tolerances import TIE_TOL
from robust_fusion.decompose.composition import canonical_decomposition
from robust_fusion.env_variables import ROBUST_FUSION_T_MAX
from robust_fusion.errors import EmptyInputError, NoStrictLeaderError, NotBinaryStateError
from robust_fusion.robust.solver import decomposed_value


@dataclass(frozen=True)
class SweepRow:
    """
    Values at one sample size t.

    Attributes:
        t (int): Number of i.i.d. draws from every source.
        joint_value (float): The robust value of all powered sources together.
        single_values (tuple[float, ...]): The Bayes value of each powered source alone.
    """

    t: int
    joint_value: float
    single_values: tuple[float, ...]


def _require_binary(problem: DecisionProblem) -> None:
    if problem.n_states != 2:
        raise NotBinaryStateError(f"problem has {problem.n_states} states, expected 2")


def _check_leader(experiments: Sequence[Experiment]) -> list[float]:
    indices = [chernoff_index(experiment) for experiment in experiments]
    rival = max(indices[1:])
    if not indices[0] > rival:
        raise NoStrictLeaderError(
            f"'{experiments[0].name}' has Chernoff index {indices[0]:.6f}, a rival reaches {rival:.6f}"
        )
    return indices


def dominance_threshold(
    experiments: Sequence[Experiment],
    problem: DecisionProblem,
    t_max: int | None = None,
    power_cap: int | None = None,
) -> int | None:
    """
    The smallest t at which t draws of the first source beat t draws of every other source in
    every canonical subproblem.

    From that t on, the robust value of all powered sources equals the Bayes value of the
    powered first source alone.

    Args:
        experiments (Sequence[Experiment]): The sources; the first must have the strictly largest Chernoff index.
        problem (DecisionProblem): A two-state decision problem.
        t_max (int | None): Largest t tried; None uses ROBUST_FUSION_T_MAX.
        power_cap (int | None): Count-signal cap per power; None uses ROBUST_FUSION_POWER_CAP.

    Returns:
        int | None: The threshold, or None if it is not reached by t_max.

    Raises:
        NotBinaryStateError: If the problem does not have exactly two states.
        NoStrictLeaderError: If the first source is not the strict Chernoff leader.
        PowerOverflowError: If a power exceeds its signal cap.
    """
    _require_binary(problem)
    if not experiments:
        raise EmptyInputError("at least one experiment is required")
    if len(experiments) == 1:
        return 1
    indices = _check_leader(experiments)
    logger.debug(f"Chernoff indices {[round(index, 6) for index in indices]}")
    t_max = ROBUST_FUSION_T_MAX if t_max is None else t_max
    subproblems = canonical_decomposition(problem).subproblems

    for t in range(1, t_max + 1):
        powers = [iid_power(experiment, t, power_cap) for experiment in experiments]
        dominated = all(
            bayes_value(powers[0], subproblem)
            >= max(bayes_value(power, subproblem) for power in powers[1:]) - TIE_TOL
            for subproblem in subproblems
        )
        if dominated:
            logger.info(f"'{experiments[0].name}' dominates every subproblem from t = {t}")
            return t
    logger.info(f"No dominance threshold up to t = {t_max}")
    return None


def power_sweep(
    experiments: Sequence[Experiment],
    problem: DecisionProblem,
    t_max: int | None = None,
    power_cap: int | None = None,
) -> list[SweepRow]:
    """
    Robust and single-source values of the i.i.d. powers for t = 1, ..., t_max.

    Raises:
        NotBinaryStateError: If the problem does not have exactly two states.
        PowerOverflowError: If a power exceeds its signal cap.
    """
    _require_binary(problem)
    t_max = ROBUST_FUSION_T_MAX if t_max is None else t_max
    rows = []
    for t in range(1, t_max + 1):
        powers = [iid_power(experiment, t, power_cap) for experiment in experiments]
        rows.append(
            SweepRow(
                t=t,
                joint_value=decomposed_value(powers, problem),
                single_values=tuple(bayes_value(power, problem) for power in powers),
            )
        )
    return rows
