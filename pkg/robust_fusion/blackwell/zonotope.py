"""
Feasible-set zonotopes of binary-state experiments and Blackwell suprema.

A signal y contributes the likelihood vector (P(y|θ1), P(y|θ2)). Sorted by
decreasing slope P(y|θ2)/P(y|θ1), the cumulative sums trace the upper boundary of
the feasible set from (0, 0) to (1, 1); the lower boundary is its point reflection
through (1/2, 1/2).
"""

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from loguru import logger

from robust_fusion.core.models import Experiment
from robust_fusion.errors import EmptyInputError, NotBinaryStateError

_PARALLEL_TOL = 1e-12
_COLLINEAR_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class Zonotope2:
    """
    Upper boundary of a binary-state feasible set.

    Attributes:
        upper_path (np.ndarray): Vertices from (0, 0) to (1, 1), shape (k + 1, 2).
        generators (np.ndarray): Likelihood vectors sorted by strictly decreasing slope, shape (k, 2).
    """

    upper_path: np.ndarray
    generators: np.ndarray

    def height(self, x: float) -> float:
        """Largest y with (x, y) on the upper boundary."""
        path = self.upper_path
        best = -np.inf
        for start, end in zip(path[:-1], path[1:]):
            if start[0] - _PARALLEL_TOL <= x <= end[0] + _PARALLEL_TOL:
                if end[0] - start[0] <= _PARALLEL_TOL:
                    best = max(best, start[1], end[1])
                else:
                    weight = (x - start[0]) / (end[0] - start[0])
                    best = max(best, start[1] + weight * (end[1] - start[1]))
        return best

    def contains(self, point: Sequence[float], tol: float = 1e-9) -> bool:
        x, y = point
        if x < -tol or x > 1 + tol:
            return False
        x = min(max(x, 0.0), 1.0)
        return 1.0 - self.height(1.0 - x) - tol <= y <= self.height(x) + tol

    def dominates(self, other: "Zonotope2", tol: float = 1e-9) -> bool:
        """Whether other's feasible set lies inside this one (Blackwell dominance for binary states)."""
        return all(self.contains(vertex, tol) for vertex in other.upper_path)


def _require_binary(experiment: Experiment) -> None:
    if experiment.n_states != 2:
        raise NotBinaryStateError(f"experiment '{experiment.name}' has {experiment.n_states} states, expected 2")


def _slope_order(vector: np.ndarray) -> float:
    # 0 for a vertical generator (infinite slope), π/2 for a horizontal one.
    return float(np.arctan2(vector[0], vector[1]))


def feasible_zonotope(experiment: Experiment) -> Zonotope2:
    """
    Builds the feasible-set zonotope of a binary-state experiment.

    Signals with equal likelihood ratio are merged and signals with zero probability in
    both states dropped; the remaining generators are sorted by decreasing slope.

    Raises:
        NotBinaryStateError: If the experiment does not have exactly two states.
    """
    _require_binary(experiment)
    vectors = [column for column in experiment.kernel.T if column.sum() > _PARALLEL_TOL]
    vectors.sort(key=_slope_order)
    merged: list[np.ndarray] = []
    for vector in vectors:
        if merged:
            last = merged[-1]
            cross = last[0] * vector[1] - last[1] * vector[0]
            if abs(cross) <= _PARALLEL_TOL * max(1.0, np.linalg.norm(last) * np.linalg.norm(vector)):
                merged[-1] = last + vector
                continue
        merged.append(vector.copy())
    generators = np.array(merged).reshape(-1, 2)
    path = np.vstack([np.zeros((1, 2)), np.cumsum(generators, axis=0)])
    return Zonotope2(upper_path=path, generators=generators)


def _cross(origin: np.ndarray, first: np.ndarray, second: np.ndarray) -> float:
    return float((first[0] - origin[0]) * (second[1] - origin[1]) - (first[1] - origin[1]) * (second[0] - origin[0]))


def upper_concave_envelope(points: np.ndarray) -> np.ndarray:
    """
    Upper concave envelope through (0, 0) and (1, 1) of points inside the unit square.

    Collinear vertices are fused so the returned edges have strictly decreasing slopes.
    """
    ordered = sorted({(round(float(x), 15), round(float(y), 15)) for x, y in points})
    hull: list[np.ndarray] = []
    for point in map(np.array, ordered):
        while len(hull) >= 2 and _cross(hull[-2], hull[-1], point) >= -_COLLINEAR_TOL:
            hull.pop()
        hull.append(point)
    return np.array(hull)


def blackwell_supremum(experiments: Sequence[Experiment], name: str | None = None) -> Experiment:
    """
    The least informative experiment dominating every input (binary states only).

    Its feasible set is the convex hull of the union of the inputs' feasible sets; the
    returned signals are the edges of the upper concave envelope of all zonotope vertices.

    Raises:
        EmptyInputError: If no experiment is given.
        NotBinaryStateError: If an input does not have exactly two states.
    """
    if not experiments:
        raise EmptyInputError("blackwell_supremum needs at least one experiment")
    zonotopes = [feasible_zonotope(experiment) for experiment in experiments]
    vertices = np.vstack([zonotope.upper_path for zonotope in zonotopes])
    envelope = upper_concave_envelope(vertices)
    edges = np.diff(envelope, axis=0)
    kernel = edges.T.copy()
    kernel[:, -1] = 1.0 - kernel[:, :-1].sum(axis=1)
    label = name or "sup(" + ",".join(experiment.name for experiment in experiments) + ")"
    logger.debug(f"Blackwell supremum {label} has {edges.shape[0]} signals")
    return Experiment(name=label, signals=tuple(f"z{index + 1}" for index in range(edges.shape[0])), kernel=kernel)
