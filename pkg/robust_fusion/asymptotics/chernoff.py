"""
Chernoff information of binary-state experiments.

C(P) = −min_{s ∈ [0, 1]} log Σ_y P(y|θ1)^{1−s}·P(y|θ2)^s, which also equals
min_ν max_θ KL(ν ‖ P(·|θ)). The first form is what chernoff_index computes; the
second is a grid search kept as an independent check.
"""

import math

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import logsumexp, rel_entr

from robust_fusion.asymptotics.power import count_vectors
from robust_fusion.core.models import Experiment
from robust_fusion.errors import NotBinaryStateError


def _require_binary(experiment: Experiment) -> None:
    if experiment.n_states != 2:
        raise NotBinaryStateError(f"experiment '{experiment.name}' has {experiment.n_states} states, expected 2")


def chernoff_index(experiment: Experiment) -> float:
    """
    The Chernoff information between the two rows of a binary-state experiment.

    Returns:
        float: 0 for identical rows, math.inf for rows with disjoint supports.

    Raises:
        NotBinaryStateError: If the experiment does not have exactly two states.
    """
    _require_binary(experiment)
    first, second = experiment.kernel
    common = (first > 0) & (second > 0)
    if not common.any():
        return math.inf
    log_first, log_second = np.log(first[common]), np.log(second[common])

    def log_affinity(s: float) -> float:
        return float(logsumexp((1.0 - s) * log_first + s * log_second))

    result = minimize_scalar(log_affinity, bounds=(0.0, 1.0), method="bounded", options={"xatol": 1e-10})
    lowest = min(result.fun, log_affinity(0.0), log_affinity(1.0))
    return max(0.0, -lowest)


def _max_divergence(points: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    return np.max([rel_entr(points, row).sum(axis=1) for row in kernel], axis=0)


def kl_grid_chernoff(experiment: Experiment, resolution: int = 40, span: int = 10, rounds: int = 20) -> float:
    """
    min_ν max_θ KL(ν ‖ P(·|θ)) by a zooming grid over the signal simplex.

    The first pass scans the simplex at the given resolution; every later pass scans a
    (2·span + 1)^(k−1) lattice around the incumbent with a step four times smaller.

    Args:
        experiment (Experiment): A binary-state experiment.
        resolution (int): Grid resolution of the first pass.
        span (int): Lattice half-width, in steps, of the zooming passes.
        rounds (int): Number of zooming passes.

    Returns:
        float: The grid estimate of the Chernoff information.
    """
    _require_binary(experiment)
    k = experiment.n_signals
    if k == 1:
        return 0.0
    points = count_vectors(k, resolution) / resolution
    values = _max_divergence(points, experiment.kernel)
    best = points[int(np.argmin(values))]
    best_value = float(values.min())

    step = 1.0 / resolution
    offsets = np.array(list(np.ndindex(*([2 * span + 1] * (k - 1))))) - span
    for _ in range(rounds):
        step /= 4.0
        head = best[:-1] + offsets * step
        candidates = np.hstack([head, 1.0 - head.sum(axis=1, keepdims=True)])
        candidates = candidates[np.all(candidates >= 0.0, axis=1)]
        values = _max_divergence(candidates, experiment.kernel)
        if values.min() < best_value:
            best, best_value = candidates[int(np.argmin(values))], float(values.min())
    return best_value
