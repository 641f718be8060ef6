from typing import Sequence

from loguru import logger

from robust_fusion.core.bayes import bayes_value, no_information_value
from robust_fusion.core.models import DecisionProblem, Experiment
from robust_fusion.core.tolerances import VALUE_TOL
from robust_fusion.decompose.composition import canonical_decomposition
from robust_fusion.errors import InconsistentSolutionError, NotBinaryStateError
from robust_fusion.robust.solver import best_single_source, robust_value, subproblem_choices


def _require_binary(problem: DecisionProblem) -> None:
    if problem.n_states != 2:
        raise NotBinaryStateError(f"problem has {problem.n_states} states, expected 2")


def _value_without(experiments: Sequence[Experiment], problem: DecisionProblem, cap: int | None) -> float:
    if not experiments:
        return no_information_value(problem)
    return robust_value(experiments, problem, cap)


def marginal_contribution(
    index: int, experiments: Sequence[Experiment], problem: DecisionProblem, cap: int | None = None
) -> tuple[float, list[int]]:
    """
    How much source `index` adds to the robust value, and the canonical subproblems it wins.

    The contribution equals the sum over canonical subproblems of the source's lead over
    the best other source there (zero where it does not lead). The lead sum and the value
    difference are computed independently and compared. Subproblems where the lead exceeds
    VALUE_TOL count as won.

    Args:
        index (int): The source under scrutiny.
        experiments (Sequence[Experiment]): All sources.
        problem (DecisionProblem): A two-state decision problem.
        cap (int | None): Product-space cap; None uses ROBUST_FUSION_CAP.

    Returns:
        tuple[float, list[int]]: V(all) − V(all but index) and the indices of the subproblems won.

    Raises:
        NotBinaryStateError: If the problem does not have exactly two states.
        InconsistentSolutionError: If the contribution and the lead sum disagree.
    """
    _require_binary(problem)
    others = [experiment for position, experiment in enumerate(experiments) if position != index]
    contribution = robust_value(experiments, problem, cap) - _value_without(others, problem, cap)

    subproblems = canonical_decomposition(problem).subproblems
    leads = []
    for subproblem in subproblems:
        own = bayes_value(experiments[index], subproblem)
        rivals = max((bayes_value(other, subproblem) for other in others), default=no_information_value(subproblem))
        leads.append(max(own - rivals, 0.0))
    wins = [position for position, lead in enumerate(leads) if lead > VALUE_TOL]

    if abs(contribution - sum(leads)) > VALUE_TOL * (1 + len(subproblems)):
        raise InconsistentSolutionError(
            f"source {index} contributes {contribution!r} but leads its subproblems by {sum(leads)!r}"
        )
    logger.info(f"Source '{experiments[index].name}' contributes {contribution:.6f}, wins subproblems {wins}")
    return contribution, wins


def select_support(experiments: Sequence[Experiment], problem: DecisionProblem) -> list[int]:
    """
    A set of at most n − 1 sources that already attains the robust value, n the undominated action count.

    It collects the winning source of every canonical subproblem; a problem with a single
    undominated action keeps the best single source.

    Raises:
        NotBinaryStateError: If the problem does not have exactly two states.
    """
    _require_binary(problem)
    choices = subproblem_choices(canonical_decomposition(problem), experiments)
    support = sorted({choice.source for choice in choices})
    if not support:
        support = [best_single_source(experiments, problem)[0]]
    logger.debug(f"Support {[experiments[position].name for position in support]}")
    return support
