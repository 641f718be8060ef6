"""
Dense two-phase tableau simplex with dual multipliers.

Every program is brought to the standard form min c'z, A'z = b', z >= 0: variable
bounds become shifts, reflections, free splits and extra rows; inequality rows get
slack columns; equality rows stay equalities. The basis starts from the slacks where
possible and from artificial columns elsewhere. Dantzig's rule drives the pivots until
the iteration count reaches ``bland_after``; Bland's rule takes over from there. The tableau
is rebuilt from the original data after each phase, and a basis that turns singular or a
point that misses the original constraints ends in NumericalFailureError.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np
from loguru import logger

from robust_fusion.core.tolerances import FEASIBILITY_TOL, PIVOT_TOL
from robust_fusion.errors import DimensionMismatchError, NumericalFailureError

_OPTIMALITY_TOL = 1e-9
_RATIO_TIE_TOL = 1e-12
_DRIVE_OUT_TOL = 1e-7
_RESIDUAL_TOL = 1e-7
_CONDITION_LIMIT = 1e12
_REFACTOR_ROUNDS = 5

Bound = tuple[float | None, float | None]


class Sense(str, Enum):
    MINIMIZE = "minimize"
    MAXIMIZE = "maximize"


class Status(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


def _matrix(values, n_columns: int, what: str) -> np.ndarray:
    if values is None:
        return np.zeros((0, n_columns))
    matrix = np.atleast_2d(np.asarray(values, dtype=float))
    if matrix.size == 0:
        return np.zeros((0, n_columns))
    if matrix.shape[1] != n_columns:
        raise DimensionMismatchError(f"{what} has {matrix.shape[1]} columns, expected {n_columns}")
    return matrix


def _vector(values, length: int, what: str) -> np.ndarray:
    vector = np.zeros(0) if values is None else np.asarray(values, dtype=float).reshape(-1)
    if vector.shape[0] != length:
        raise DimensionMismatchError(f"{what} has {vector.shape[0]} entries, expected {length}")
    return vector


@dataclass(frozen=True, eq=False)
class LpProblem:
    """
    A linear program: optimize objective·x subject to a_eq·x = b_eq, a_ub·x <= b_ub and bounds.

    Attributes:
        objective (np.ndarray): Cost vector.
        sense (Sense): Minimize or maximize.
        a_eq, b_eq: Equality rows and right-hand side.
        a_ub, b_ub: Less-or-equal rows and right-hand side.
        bounds (tuple[Bound, ...]): Per-variable (lower, upper); None means unbounded on that side.
            Defaults to (0, None) for every variable.
    """

    objective: np.ndarray
    sense: Sense = Sense.MINIMIZE
    a_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    a_ub: np.ndarray | None = None
    b_ub: np.ndarray | None = None
    bounds: Sequence[Bound] | None = None

    def __post_init__(self):
        objective = np.asarray(self.objective, dtype=float).reshape(-1)
        n = objective.shape[0]
        a_eq = _matrix(self.a_eq, n, "a_eq")
        a_ub = _matrix(self.a_ub, n, "a_ub")
        b_eq = _vector(self.b_eq, a_eq.shape[0], "b_eq")
        b_ub = _vector(self.b_ub, a_ub.shape[0], "b_ub")
        bounds = tuple((0.0, None) for _ in range(n)) if self.bounds is None else tuple(self.bounds)
        if len(bounds) != n:
            raise DimensionMismatchError(f"bounds has {len(bounds)} entries, expected {n}")
        for array, what in ((objective, "objective"), (a_eq, "a_eq"), (b_eq, "b_eq"), (a_ub, "a_ub"), (b_ub, "b_ub")):
            if not np.all(np.isfinite(array)):
                raise NumericalFailureError(f"{what} contains a non-finite coefficient")
        for name, value in (("objective", objective), ("a_eq", a_eq), ("b_eq", b_eq), ("a_ub", a_ub), ("b_ub", b_ub)):
            object.__setattr__(self, name, value)
        object.__setattr__(self, "bounds", bounds)
        object.__setattr__(self, "sense", Sense(self.sense))

    @property
    def n_variables(self) -> int:
        return self.objective.shape[0]


@dataclass(frozen=True, eq=False)
class LpSolution:
    """
    Result of solve().

    Attributes:
        status (Status): Optimal, infeasible or unbounded.
        primal (np.ndarray): Variable values (valid when optimal).
        objective (float): objective·primal in the problem's own sense.
        eq_duals (np.ndarray): Marginal change of the optimal objective per unit increase of each b_eq entry.
        ub_duals (np.ndarray): The same for each b_ub entry.
        iterations (int): Pivots performed over both phases.
    """

    status: Status
    primal: np.ndarray = field(default_factory=lambda: np.zeros(0))
    objective: float = float("nan")
    eq_duals: np.ndarray = field(default_factory=lambda: np.zeros(0))
    ub_duals: np.ndarray = field(default_factory=lambda: np.zeros(0))
    iterations: int = 0

    @property
    def is_optimal(self) -> bool:
        return self.status is Status.OPTIMAL

    @property
    def duals(self) -> np.ndarray:
        return np.concatenate([self.eq_duals, self.ub_duals])


@dataclass
class _StandardForm:
    matrix: np.ndarray
    rhs: np.ndarray
    cost: np.ndarray
    transform: np.ndarray
    offset: np.ndarray
    row_sign: np.ndarray
    n_eq: int
    n_ub: int
    initial_basis: list[int | None]


def _standardize(lp: LpProblem, cost: np.ndarray) -> _StandardForm:
    """Rewrites the program over nonnegative variables z with x = offset + transform·z."""
    columns: list[np.ndarray] = []
    offset = np.zeros(lp.n_variables)
    upper_rows: list[tuple[int, float]] = []
    for index, (lower, upper) in enumerate(lp.bounds):
        unit = np.zeros(lp.n_variables)
        unit[index] = 1.0
        if lower is not None:
            offset[index] = lower
            columns.append(unit)
            if upper is not None:
                upper_rows.append((len(columns) - 1, upper - lower))
        elif upper is not None:
            offset[index] = upper
            columns.append(-unit)
        else:
            columns.append(unit)
            columns.append(-unit)
    transform = np.array(columns).T if columns else np.zeros((lp.n_variables, 0))
    n_z = transform.shape[1]

    n_eq, n_ub, n_bound = lp.a_eq.shape[0], lp.a_ub.shape[0], len(upper_rows)
    n_slack = n_ub + n_bound
    matrix = np.zeros((n_eq + n_slack, n_z + n_slack))
    rhs = np.zeros(n_eq + n_slack)
    matrix[:n_eq, :n_z] = lp.a_eq @ transform
    rhs[:n_eq] = lp.b_eq - lp.a_eq @ offset
    matrix[n_eq:n_eq + n_ub, :n_z] = lp.a_ub @ transform
    rhs[n_eq:n_eq + n_ub] = lp.b_ub - lp.a_ub @ offset
    for position, (column, width) in enumerate(upper_rows):
        matrix[n_eq + n_ub + position, column] = 1.0
        rhs[n_eq + n_ub + position] = width
    matrix[n_eq:, n_z:] = np.eye(n_slack)

    row_sign = np.where(rhs < 0, -1.0, 1.0)
    matrix *= row_sign[:, None]
    rhs *= row_sign
    initial_basis: list[int | None] = [None] * n_eq + [
        n_z + slack if row_sign[n_eq + slack] > 0 else None for slack in range(n_slack)
    ]
    full_cost = np.concatenate([transform.T @ cost, np.zeros(n_slack)])
    return _StandardForm(
        matrix=matrix,
        rhs=rhs,
        cost=full_cost,
        transform=transform,
        offset=offset,
        row_sign=row_sign,
        n_eq=n_eq,
        n_ub=n_ub,
        initial_basis=initial_basis,
    )


class _Tableau:
    """
    Rows [B^-1 A | B^-1 b] and a reduced-cost row [c - c_B B^-1 A | -c_B B^-1 b].

    `rows` lists the standard-form rows still in the tableau; redundant equalities are dropped.
    """

    def __init__(self, matrix: np.ndarray, rhs: np.ndarray, basis: list[int], bland_after: int, max_iterations: int):
        self.body = np.hstack([matrix, rhs[:, None]])
        self.basis = np.array(basis, dtype=int)
        self.rows = np.arange(matrix.shape[0])
        self.reduced = np.zeros(matrix.shape[1] + 1)
        self.bland_after = bland_after
        self.max_iterations = max_iterations
        self.iterations = 0

    @property
    def uses_bland(self) -> bool:
        return self.iterations >= self.bland_after

    def price(self, cost: np.ndarray) -> None:
        self.reduced = np.append(cost, 0.0)
        for row, column in enumerate(self.basis):
            self.reduced -= self.reduced[column] * self.body[row]

    def pivot(self, row: int, column: int) -> None:
        self.body[row] /= self.body[row, column]
        factors = self.body[:, column].copy()
        factors[row] = 0.0
        self.body -= np.outer(factors, self.body[row])
        self.reduced -= self.reduced[column] * self.body[row]
        self.basis[row] = column
        self.iterations += 1

    def drop_rows(self, rows: np.ndarray) -> None:
        keep = np.ones(self.body.shape[0], dtype=bool)
        keep[rows] = False
        self.body = self.body[keep]
        self.basis = self.basis[keep]
        self.rows = self.rows[keep]

    def basis_matrix(self, matrix: np.ndarray) -> np.ndarray:
        return matrix[np.ix_(self.rows, self.basis)]

    def refactor(self, matrix: np.ndarray, rhs: np.ndarray) -> None:
        """
        Rebuilds the body from the original data and the current basis.

        Raises:
            NumericalFailureError: If the basis is singular or too badly conditioned to trust.
        """
        if self.rows.size == 0:
            return
        basis_matrix = self.basis_matrix(matrix)
        condition = np.linalg.cond(basis_matrix)
        if not np.isfinite(condition) or condition > _CONDITION_LIMIT:
            raise NumericalFailureError(f"simplex basis is numerically singular (condition number {condition:.3e})")
        data = np.hstack([matrix[self.rows], rhs[self.rows, None]])
        try:
            self.body = np.linalg.solve(basis_matrix, data)
        except np.linalg.LinAlgError as error:
            raise NumericalFailureError("simplex basis is singular") from error
        self.body[:, self.basis] = np.eye(self.rows.size)

    def entering(self, allowed: np.ndarray) -> int | None:
        candidates = np.flatnonzero(allowed & (self.reduced[:-1] < -_OPTIMALITY_TOL))
        if candidates.size == 0:
            return None
        if self.uses_bland:
            if self.iterations == self.bland_after:
                logger.warning(f"Simplex switched to Bland's rule after {self.iterations} pivots")
            return int(candidates[0])
        return int(candidates[np.argmin(self.reduced[candidates])])

    def leaving(self, column: int) -> int | None:
        entries = self.body[:, column]
        positive = np.flatnonzero(entries > PIVOT_TOL * max(1.0, float(np.abs(entries).max(initial=0.0))))
        if positive.size == 0:
            return None
        ratios = np.maximum(self.body[positive, -1], 0.0) / entries[positive]
        ties = positive[ratios <= ratios.min() + _RATIO_TIE_TOL]
        if self.uses_bland:
            return int(ties[np.argmin(self.basis[ties])])
        return int(ties[np.argmax(entries[ties])])

    def run(self, allowed: np.ndarray) -> Status:
        while True:
            column = self.entering(allowed)
            if column is None:
                return Status.OPTIMAL
            row = self.leaving(column)
            if row is None:
                return Status.UNBOUNDED
            if self.iterations >= self.max_iterations:
                raise NumericalFailureError(f"simplex exceeded {self.max_iterations} pivots")
            self.pivot(row, column)


def _optimize(tableau: _Tableau, matrix: np.ndarray, rhs: np.ndarray, cost: np.ndarray, allowed: np.ndarray) -> Status:
    """Runs pivots to optimality, refactoring from the original data until the reduced costs agree."""
    for _ in range(_REFACTOR_ROUNDS):
        if tableau.run(allowed) is Status.UNBOUNDED:
            return Status.UNBOUNDED
        tableau.refactor(matrix, rhs)
        tableau.price(cost)
        if tableau.entering(allowed) is None:
            return Status.OPTIMAL
        logger.debug(f"Simplex resumes after refactoring at pivot {tableau.iterations}")
    raise NumericalFailureError(f"simplex did not settle after {_REFACTOR_ROUNDS} refactorizations")


def solve(lp: LpProblem, bland_after: int | None = None, max_iterations: int | None = None) -> LpSolution:
    """
    Solves a linear program with the two-phase simplex method.

    Args:
        lp (LpProblem): The program.
        bland_after (int | None): Pivots allowed under Dantzig's rule before switching to Bland's rule.
            Defaults to 20 * (rows + columns).
        max_iterations (int | None): Total pivot guard. Defaults to 50 * (rows + columns) + 1000.

    Returns:
        LpSolution: The optimal basic solution with duals, or an infeasible/unbounded status.

    Raises:
        NumericalFailureError: If the pivot guard is exceeded, a basis turns singular or the
            returned point fails the original constraints.
    """
    sign = 1.0 if lp.sense is Sense.MINIMIZE else -1.0
    form = _standardize(lp, sign * lp.objective)
    n_rows, n_columns = form.matrix.shape

    artificial_rows = [row for row, column in enumerate(form.initial_basis) if column is None]
    artificial = np.zeros((n_rows, len(artificial_rows)))
    artificial[artificial_rows, np.arange(len(artificial_rows))] = 1.0
    matrix = np.hstack([form.matrix, artificial])
    basis = list(form.initial_basis)
    for position, row in enumerate(artificial_rows):
        basis[row] = n_columns + position
    total_columns = matrix.shape[1]

    size = n_rows + total_columns
    tableau = _Tableau(
        matrix,
        form.rhs.copy(),
        basis,
        bland_after=20 * size if bland_after is None else bland_after,
        max_iterations=50 * size + 1000 if max_iterations is None else max_iterations,
    )
    logger.debug(f"Simplex: {n_rows} rows, {n_columns} structural columns, {len(artificial_rows)} artificials")

    is_artificial = np.zeros(total_columns, dtype=bool)
    is_artificial[n_columns:] = True
    if artificial_rows:
        _optimize(tableau, matrix, form.rhs, is_artificial.astype(float), np.ones(total_columns, dtype=bool))
        infeasibility = float(tableau.body[is_artificial[tableau.basis], -1].sum())
        if infeasibility > FEASIBILITY_TOL * max(1.0, float(np.abs(form.rhs).max(initial=0.0))):
            logger.debug(f"Simplex phase 1 ended with infeasibility {infeasibility:.3e}")
            return LpSolution(status=Status.INFEASIBLE, iterations=tableau.iterations)
        _drive_out_artificials(tableau, is_artificial, max(1.0, float(np.abs(form.matrix).max(initial=0.0))))

    cost = np.concatenate([form.cost, np.zeros(len(artificial_rows))])
    tableau.refactor(matrix, form.rhs)
    tableau.price(cost)
    if _optimize(tableau, matrix, form.rhs, cost, ~is_artificial) is Status.UNBOUNDED:
        return LpSolution(status=Status.UNBOUNDED, iterations=tableau.iterations)

    primal_std, row_duals = _basic_solution(matrix, cost, tableau)
    primal = form.offset + form.transform @ primal_std[: form.transform.shape[1]]
    _check_primal(lp, primal)
    duals = sign * form.row_sign * row_duals
    logger.debug(f"Simplex finished after {tableau.iterations} pivots")
    return LpSolution(
        status=Status.OPTIMAL,
        primal=primal,
        objective=float(lp.objective @ primal),
        eq_duals=duals[: form.n_eq],
        ub_duals=duals[form.n_eq: form.n_eq + form.n_ub],
        iterations=tableau.iterations,
    )


def _drive_out_artificials(tableau: _Tableau, is_artificial: np.ndarray, scale: float) -> None:
    """
    Pivots zero-level artificials out of the basis on the largest structural entry of their row.

    `scale` is the largest coefficient of the standard-form matrix.
    Rows whose structural entries are all negligible are linear combinations of the others
    and are dropped.
    """
    threshold = _DRIVE_OUT_TOL * scale
    redundant = []
    for row in range(tableau.body.shape[0]):
        if not is_artificial[tableau.basis[row]]:
            continue
        entries = np.abs(tableau.body[row, :-1])
        entries[is_artificial] = 0.0
        column = int(np.argmax(entries)) if entries.size else 0
        if entries.size and entries[column] > threshold:
            tableau.body[row, -1] = 0.0
            tableau.pivot(row, column)
        else:
            redundant.append(row)
    if redundant:
        logger.debug(f"Simplex dropped {len(redundant)} redundant row(s)")
        tableau.drop_rows(np.array(redundant, dtype=int))


def _basic_solution(matrix: np.ndarray, cost: np.ndarray, tableau: _Tableau) -> tuple[np.ndarray, np.ndarray]:
    """Reads x_B from the refactored tableau and solves y = B^-T c_B; dropped rows get a zero multiplier."""
    values = tableau.body[:, -1]
    values = np.where((values < 0) & (values > -FEASIBILITY_TOL), 0.0, values)
    solution = np.zeros(matrix.shape[1])
    solution[tableau.basis] = values
    row_duals = np.zeros(matrix.shape[0])
    if tableau.rows.size:
        try:
            row_duals[tableau.rows] = np.linalg.solve(tableau.basis_matrix(matrix).T, cost[tableau.basis])
        except np.linalg.LinAlgError as error:
            raise NumericalFailureError("simplex basis is singular") from error
    return solution, row_duals


def _check_primal(lp: LpProblem, primal: np.ndarray) -> None:
    """
    Raises:
        NumericalFailureError: If the point is not finite or breaks a row or bound of the original program.
    """
    if not np.all(np.isfinite(primal)):
        raise NumericalFailureError("simplex produced a non-finite point")
    coefficients = max(1.0, float(np.abs(lp.a_eq).max(initial=0.0)), float(np.abs(lp.a_ub).max(initial=0.0)))
    scale = max(1.0, float(np.abs(primal).max(initial=0.0))) * coefficients
    tolerance = _RESIDUAL_TOL * scale
    violation = 0.0
    if lp.b_eq.size:
        violation = max(violation, float(np.abs(lp.a_eq @ primal - lp.b_eq).max()))
    if lp.b_ub.size:
        violation = max(violation, float((lp.a_ub @ primal - lp.b_ub).max()))
    for value, (lower, upper) in zip(primal, lp.bounds):
        if lower is not None:
            violation = max(violation, lower - value)
        if upper is not None:
            violation = max(violation, value - upper)
    if violation > tolerance:
        raise NumericalFailureError(f"simplex point violates the constraints by {violation:.3e}")
