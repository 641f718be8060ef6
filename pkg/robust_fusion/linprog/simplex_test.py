import numpy as np
import pytest
from scipy.optimize import linprog

from robust_fusion.errors import DimensionMismatchError, NumericalFailureError
from robust_fusion.linprog.simplex import LpProblem, Sense, Status, solve


def _random_feasible_lp(seed: int) -> LpProblem:
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 41))
    n_eq = int(rng.integers(0, n // 2 + 1))
    n_ub = int(rng.integers(1, n + 1))
    anchor = rng.uniform(0.0, 1.0, n)
    a_eq = rng.normal(size=(n_eq, n))
    a_ub = rng.normal(size=(n_ub, n))
    return LpProblem(
        objective=rng.uniform(0.1, 1.0, n),
        a_eq=a_eq,
        b_eq=a_eq @ anchor,
        a_ub=a_ub,
        b_ub=a_ub @ anchor + rng.uniform(0.0, 1.0, n_ub),
    )


def test_bound_tight_minimum():
    solution = solve(LpProblem(objective=[1.0], bounds=[(3.0, None)]))

    assert solution.status is Status.OPTIMAL
    assert solution.objective == pytest.approx(3.0)


def test_lower_bound_as_inequality_row_has_dual():
    solution = solve(LpProblem(objective=[1.0], a_ub=[[-1.0]], b_ub=[-3.0]))

    assert solution.objective == pytest.approx(3.0)
    assert solution.ub_duals[0] == pytest.approx(-1.0)


def test_maximize_free_variable_bounded_by_zero():
    solution = solve(LpProblem(objective=[1.0], sense=Sense.MAXIMIZE, a_ub=[[1.0]], b_ub=[0.0], bounds=[(None, None)]))

    assert solution.status is Status.OPTIMAL
    assert solution.objective == pytest.approx(0.0)


def test_infeasible():
    solution = solve(LpProblem(objective=[1.0], a_ub=[[1.0]], b_ub=[-1.0]))

    assert solution.status is Status.INFEASIBLE


def test_unbounded():
    solution = solve(LpProblem(objective=[1.0], sense=Sense.MAXIMIZE))

    assert solution.status is Status.UNBOUNDED


def test_equality_duals_are_marginal_values():
    solution = solve(LpProblem(objective=[1.0, 2.0], a_eq=[[1.0, 1.0]], b_eq=[1.0]))

    assert solution.primal == pytest.approx([1.0, 0.0])
    assert solution.eq_duals[0] == pytest.approx(1.0)


def test_redundant_equalities_keep_zero_dual():
    solution = solve(LpProblem(objective=[1.0, 1.0], a_eq=[[1.0, 1.0], [2.0, 2.0]], b_eq=[1.0, 2.0]))

    assert solution.status is Status.OPTIMAL
    assert solution.objective == pytest.approx(1.0)
    assert solution.eq_duals @ np.array([1.0, 2.0]) == pytest.approx(1.0)


def test_upper_bounds_and_reflected_variables():
    lp = LpProblem(
        objective=[-1.0, 1.0],
        a_ub=[[1.0, 1.0]],
        b_ub=[10.0],
        bounds=[(None, 2.5), (-4.0, 7.0)],
    )

    solution = solve(lp)

    assert solution.primal == pytest.approx([2.5, -4.0])
    assert solution.objective == pytest.approx(-6.5)


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        LpProblem(objective=[1.0, 1.0], a_eq=[[1.0]], b_eq=[1.0])


@pytest.mark.parametrize("seed", range(200))
def test_strong_duality_on_random_programs(seed: int):
    lp = _random_feasible_lp(seed)

    solution = solve(lp)

    assert solution.status is Status.OPTIMAL
    dual_objective = lp.b_eq @ solution.eq_duals + lp.b_ub @ solution.ub_duals
    assert solution.objective == pytest.approx(dual_objective, abs=1e-8)
    assert np.all(lp.a_ub @ solution.primal <= lp.b_ub + 1e-9)
    assert np.allclose(lp.a_eq @ solution.primal, lp.b_eq, atol=1e-9)
    assert np.all(solution.ub_duals <= 1e-9)
    reference = linprog(lp.objective, A_ub=lp.a_ub, b_ub=lp.b_ub, A_eq=lp.a_eq if lp.b_eq.size else None,
                        b_eq=lp.b_eq if lp.b_eq.size else None, method="highs")
    assert solution.objective == pytest.approx(reference.fun, abs=1e-7)


@pytest.mark.parametrize("seed", range(20))
def test_dual_program_reaches_primal_optimum(seed: int):
    lp = _random_feasible_lp(seed)
    n_eq, n_ub = lp.b_eq.size, lp.b_ub.size
    dual = LpProblem(
        objective=np.concatenate([lp.b_eq, lp.b_ub]),
        sense=Sense.MAXIMIZE,
        a_ub=np.hstack([lp.a_eq.T, lp.a_ub.T]),
        b_ub=lp.objective,
        bounds=[(None, None)] * n_eq + [(None, 0.0)] * n_ub,
    )

    assert solve(dual).objective == pytest.approx(solve(lp).objective, abs=1e-8)


def test_solution_is_deterministic():
    lp = _random_feasible_lp(7)

    first, second = solve(lp), solve(lp)

    assert np.array_equal(first.primal, second.primal)
    assert np.array_equal(first.duals, second.duals)


@pytest.mark.parametrize("seed", range(10))
def test_bland_rule_from_the_start(seed: int):
    lp = _random_feasible_lp(seed)

    assert solve(lp, bland_after=0).objective == pytest.approx(solve(lp).objective, abs=1e-8)


def test_iteration_guard():
    with pytest.raises(NumericalFailureError):
        solve(LpProblem(objective=[1.0], a_ub=[[-1.0]], b_ub=[-3.0]), max_iterations=0)


def _transport_lp(seed: int) -> LpProblem:
    # Row and column sums repeat the same total, so one equality is always redundant.
    rng = np.random.default_rng(seed)
    n_rows, n_columns = int(rng.integers(2, 6)), int(rng.integers(2, 6))
    supply = rng.dirichlet(np.ones(n_rows))
    demand = rng.dirichlet(np.ones(n_columns))
    if seed % 3 == 0:
        supply = np.round(supply, 1)
        supply[-1] = 1.0 - supply[:-1].sum()
        supply = np.abs(supply)
        supply /= supply.sum()
    a_eq = np.vstack([
        np.kron(np.eye(n_rows), np.ones(n_columns)),
        np.kron(np.ones(n_rows), np.eye(n_columns)),
    ])
    return LpProblem(
        objective=rng.normal(size=n_rows * n_columns),
        a_eq=a_eq,
        b_eq=np.concatenate([supply, demand]),
    )


@pytest.mark.parametrize("seed", range(300))
def test_degenerate_transport_programs_match_highs(seed: int):
    lp = _transport_lp(seed)

    solution = solve(lp)

    reference = linprog(lp.objective, A_eq=lp.a_eq, b_eq=lp.b_eq, method="highs")
    assert solution.status is Status.OPTIMAL
    assert solution.objective == pytest.approx(reference.fun, abs=1e-8)
    assert np.allclose(lp.a_eq @ solution.primal, lp.b_eq, atol=1e-9)
    assert np.all(solution.primal >= -1e-9)
    assert lp.b_eq @ solution.eq_duals == pytest.approx(solution.objective, abs=1e-8)


def test_nearly_parallel_equalities_are_dropped_not_pivoted_on():
    lp = LpProblem(
        objective=[1.0, 2.0, 3.0],
        a_eq=[[1.0, 1.0, 1.0], [1.0, 1.0, 1.0 + 1e-12]],
        b_eq=[1.0, 1.0],
    )

    solution = solve(lp)

    assert solution.status is Status.OPTIMAL
    assert np.all(np.isfinite(solution.primal))
    assert solution.objective == pytest.approx(1.0, abs=1e-9)


def test_non_finite_coefficients_are_numerical_failures():
    with pytest.raises(NumericalFailureError):
        LpProblem(objective=[float("nan"), 1.0])
