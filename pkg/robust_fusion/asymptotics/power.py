"""
i.i.d. powers of an experiment, reduced to count statistics.

t independent draws are summarized by how often each signal occurred; the count vector
is a sufficient statistic, so the reduced experiment is Blackwell-equivalent to the
full product over Y^t while having only C(t + k − 1, k − 1) signals.
"""

import itertools
import math

import numpy as np
from loguru import logger
from scipy.special import gammaln, logsumexp, xlogy

from robust_fusion.core.models import Experiment
from robust_fusion.env_variables import ROBUST_FUSION_POWER_CAP
from robust_fusion.errors import PowerOverflowError, ValidationError


def count_vectors(n_signals: int, t: int) -> np.ndarray:
    """All count vectors of t draws over n_signals signals, as rows, in lexicographic draw order."""
    draws = itertools.combinations_with_replacement(range(n_signals), t)
    return np.array([np.bincount(draw, minlength=n_signals) for draw in draws], dtype=int)


def iid_power(base: Experiment, t: int, cap: int | None = None) -> Experiment:
    """
    The experiment observing t independent draws of base, as a distribution over count vectors.

    Args:
        base (Experiment): The experiment drawn repeatedly.
        t (int): Number of draws, at least 1.
        cap (int | None): Largest allowed number of count vectors; None uses ROBUST_FUSION_POWER_CAP.

    Returns:
        Experiment: base itself for t = 1, the count-vector experiment otherwise.

    Raises:
        ValidationError: If t is smaller than 1.
        PowerOverflowError: If the count-vector space exceeds the cap.
    """
    if t < 1:
        raise ValidationError(f"power t must be at least 1, got {t}")
    if t == 1:
        return base
    cap = ROBUST_FUSION_POWER_CAP if cap is None else cap
    size = math.comb(t + base.n_signals - 1, base.n_signals - 1)
    if size > cap:
        raise PowerOverflowError(f"'{base.name}' to the power {t} has {size} count signals, cap is {cap}")

    counts = count_vectors(base.n_signals, t)
    log_multinomial = gammaln(t + 1) - gammaln(counts + 1).sum(axis=1)
    log_kernel = log_multinomial[None, :] + np.stack(
        [xlogy(counts, row).sum(axis=1) for row in base.kernel]
    )
    kernel = np.exp(log_kernel - logsumexp(log_kernel, axis=1, keepdims=True))
    labels = tuple("(" + ",".join(str(count) for count in vector) + ")" for vector in counts)
    logger.debug(f"Power {t} of '{base.name}' has {size} count signals")
    return Experiment(name=f"{base.name}^{t}", signals=labels, kernel=kernel)
