import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from robust_fusion.core.tolerances import COMPUTED_TOL, INPUT_TOL
from robust_fusion.errors import (
    BadPriorError,
    DimensionMismatchError,
    InstanceTooLargeError,
    NonStochasticRowError,
)

# Action labels are strings, or tuples of labels once problems are composed.
Label = str | tuple
CompositeSignal = tuple[int, ...]


def _frozen_array(values, ndim: int, what: str) -> np.ndarray:
    array = np.array(values, dtype=float)
    if array.ndim != ndim:
        raise DimensionMismatchError(f"{what} must have {ndim} dimension(s), got shape {array.shape}")
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class Experiment:
    """
    A Blackwell experiment over a finite state space.

    Attributes:
        name (str): Human-readable label of the source.
        signals (tuple[str, ...]): Signal labels, one per kernel column.
        kernel (np.ndarray): Row-stochastic matrix, kernel[state, signal] = P(signal | state).
    """

    name: str
    signals: tuple[str, ...]
    kernel: np.ndarray

    def __post_init__(self):
        kernel = _frozen_array(self.kernel, 2, f"experiment '{self.name}' kernel")
        signals = tuple(str(signal) for signal in self.signals)
        if not signals:
            raise DimensionMismatchError(f"experiment '{self.name}' signals: at least one signal is required")
        if kernel.shape[1] != len(signals):
            raise DimensionMismatchError(
                f"experiment '{self.name}' kernel: {kernel.shape[1]} columns for {len(signals)} signals"
            )
        object.__setattr__(self, "kernel", kernel)
        object.__setattr__(self, "signals", signals)

    @property
    def n_states(self) -> int:
        return self.kernel.shape[0]

    @property
    def n_signals(self) -> int:
        return self.kernel.shape[1]

    def validate(self, n_states: int | None = None) -> None:
        """
        Checks the stochastic-kernel invariants.

        Args:
            n_states (int | None): The state count the experiment must match, if any.

        Raises:
            DimensionMismatchError: If the row count differs from n_states.
            NonStochasticRowError: If an entry leaves [0, 1] or a row does not sum to 1.
        """
        if n_states is not None and self.n_states != n_states:
            raise DimensionMismatchError(
                f"experiment '{self.name}' kernel: {self.n_states} rows for a {n_states}-state problem"
            )
        if not np.all(np.isfinite(self.kernel)):
            raise NonStochasticRowError(f"experiment '{self.name}' kernel: non-finite entry")
        for row_index, row in enumerate(self.kernel):
            if np.any(row < -INPUT_TOL) or np.any(row > 1 + INPUT_TOL):
                raise NonStochasticRowError(
                    f"experiment '{self.name}' kernel row {row_index}: entries must lie in [0, 1]"
                )
            total = math.fsum(row)
            if abs(total - 1.0) > INPUT_TOL:
                raise NonStochasticRowError(
                    f"experiment '{self.name}' kernel row {row_index}: sums to {total!r}, expected 1"
                )


@dataclass(frozen=True, eq=False)
class DecisionProblem:
    """
    A finite decision problem with its prior-weighted utility u(θ, a) = ν(θ)·ρ(θ, a).

    Attributes:
        states (tuple[str, ...]): State labels.
        prior (np.ndarray): Prior ν over states.
        actions (tuple[Label, ...]): Action labels.
        raw_utility (np.ndarray): ρ, one row per state, one column per action.
        weighted_utility (np.ndarray): u, derived at construction.
    """

    states: tuple[str, ...]
    prior: np.ndarray
    actions: tuple[Label, ...]
    raw_utility: np.ndarray
    weighted_utility: np.ndarray = field(init=False)

    def __post_init__(self):
        states = tuple(str(state) for state in self.states)
        actions = tuple(self.actions)
        prior = _frozen_array(self.prior, 1, "problem prior")
        raw = _frozen_array(self.raw_utility, 2, "problem utilities")
        if prior.shape[0] != len(states):
            raise DimensionMismatchError(f"problem prior: {prior.shape[0]} entries for {len(states)} states")
        if raw.shape != (len(states), len(actions)):
            raise DimensionMismatchError(
                f"problem utilities: shape {raw.shape}, expected ({len(states)}, {len(actions)})"
            )
        weighted = prior[:, None] * raw
        weighted.setflags(write=False)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "actions", actions)
        object.__setattr__(self, "prior", prior)
        object.__setattr__(self, "raw_utility", raw)
        object.__setattr__(self, "weighted_utility", weighted)

    @classmethod
    def from_weighted(cls, states: Sequence[str], actions: Sequence[Label], weighted) -> "DecisionProblem":
        """
        Builds a problem directly from prior-weighted utilities, using a uniform prior.

        Args:
            states (Sequence[str]): State labels.
            actions (Sequence[Label]): Action labels.
            weighted: The matrix u(θ, a).

        Returns:
            DecisionProblem: A problem whose weighted_utility equals the given matrix up to rounding.
        """
        weighted = np.asarray(weighted, dtype=float)
        prior = np.full(len(states), 1.0 / len(states))
        return cls(states=tuple(states), prior=prior, actions=tuple(actions), raw_utility=weighted / prior[:, None])

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def n_actions(self) -> int:
        return len(self.actions)

    def payoff(self, action: int) -> np.ndarray:
        return self.weighted_utility[:, action]

    def validate(self) -> None:
        if self.n_states < 2:
            raise DimensionMismatchError(f"problem states: at least 2 states are required, got {self.n_states}")
        if self.n_actions < 1:
            raise DimensionMismatchError("problem actions: at least 1 action is required")
        for index, weight in enumerate(self.prior):
            if not np.isfinite(weight) or weight < 0:
                raise BadPriorError(f"problem prior entry {index}: {weight!r} is not a probability")
        total = math.fsum(self.prior)
        if abs(total - 1.0) > INPUT_TOL:
            raise BadPriorError(f"problem prior: sums to {total!r}, expected 1")
        if not np.all(np.isfinite(self.raw_utility)):
            raise DimensionMismatchError("problem utilities: non-finite entry")


@dataclass(frozen=True, eq=False)
class Strategy:
    """
    A map from composite signals to mixed actions.

    Attributes:
        table (np.ndarray): Shape (|Y_1|, ..., |Y_m|, |A|); table[y] is the action distribution at y.
        sources_used (frozenset[int]): The sources the table actually varies with.
    """

    table: np.ndarray
    sources_used: frozenset[int] = field(init=False)

    def __post_init__(self):
        table = np.array(self.table, dtype=float)
        if table.ndim < 2:
            raise DimensionMismatchError(f"strategy table needs a signal axis and an action axis, got {table.shape}")
        table.setflags(write=False)
        object.__setattr__(self, "table", table)
        self.validate()
        used = frozenset(
            axis
            for axis in range(table.ndim - 1)
            if not np.allclose(table, table.take([0], axis=axis), rtol=0.0, atol=INPUT_TOL)
        )
        object.__setattr__(self, "sources_used", used)

    @classmethod
    def from_flat(cls, signal_shape: Sequence[int], flat) -> "Strategy":
        flat = np.asarray(flat, dtype=float)
        return cls(flat.reshape(tuple(signal_shape) + (flat.shape[-1],)))

    @classmethod
    def deterministic(cls, signal_shape: Sequence[int], choices: Sequence[int], n_actions: int) -> "Strategy":
        flat = np.zeros((len(choices), n_actions))
        flat[np.arange(len(choices)), np.asarray(choices, dtype=int)] = 1.0
        return cls.from_flat(signal_shape, flat)

    @property
    def signal_shape(self) -> tuple[int, ...]:
        return self.table.shape[:-1]

    @property
    def n_actions(self) -> int:
        return self.table.shape[-1]

    def flat(self) -> np.ndarray:
        return self.table.reshape(-1, self.n_actions)

    def __getitem__(self, signal: CompositeSignal) -> np.ndarray:
        if len(signal) != len(self.signal_shape) or any(
            not 0 <= index < size for index, size in zip(signal, self.signal_shape)
        ):
            raise DimensionMismatchError(f"composite signal {signal} outside the product space {self.signal_shape}")
        return self.table[tuple(signal)]

    def validate(self) -> None:
        """
        Raises:
            NonStochasticRowError: If some row is not a probability distribution over actions.
        """
        flat = self.flat()
        if not np.all(np.isfinite(flat)):
            raise NonStochasticRowError("strategy table: non-finite entry")
        if np.any(flat < -COMPUTED_TOL) or np.any(flat > 1 + COMPUTED_TOL):
            raise NonStochasticRowError("strategy table: entries must lie in [0, 1]")
        sums = flat.sum(axis=1)
        worst = int(np.argmax(np.abs(sums - 1.0)))
        if abs(sums[worst] - 1.0) > COMPUTED_TOL:
            raise NonStochasticRowError(f"strategy table row {worst}: sums to {sums[worst]!r}, expected 1")


def product_shape(experiments: Sequence[Experiment]) -> tuple[int, ...]:
    return tuple(experiment.n_signals for experiment in experiments)


def check_product_cap(experiments: Sequence[Experiment], cap: int) -> int:
    """
    Returns the product signal space size, raising when it exceeds the cap.

    Raises:
        InstanceTooLargeError: If the product of signal counts exceeds cap.
    """
    size = math.prod(product_shape(experiments))
    if size > cap:
        raise InstanceTooLargeError(f"product signal space has {size} cells, cap is {cap}")
    return size


def composite_signals(shape: Sequence[int]) -> list[CompositeSignal]:
    """Composite signals in row-major order, the order used by every flattened joint kernel."""
    return list(itertools.product(*(range(size) for size in shape)))


def composite_label(experiments: Sequence[Experiment], signal: CompositeSignal) -> str:
    return "|".join(experiment.signals[index] for experiment, index in zip(experiments, signal))


def marginalize(tensor: np.ndarray, source: int) -> np.ndarray:
    """Sums a (|Θ|, |Y_1|, ..., |Y_m|) tensor down to source's (|Θ|, |Y_j|) marginal."""
    axes = tuple(axis for axis in range(1, tensor.ndim) if axis != source + 1)
    return tensor.sum(axis=axes)


@dataclass(frozen=True, eq=False)
class JointExperiment:
    """
    An experiment on the composite signal space with its marginal-consistency certificate.

    Attributes:
        marginals (tuple[Experiment, ...]): The declared marginal experiments.
        joint (Experiment): The experiment over composite signals (row-major order).
        max_marginal_error (float): Largest deviation of a marginalization from its declared marginal.
    """

    marginals: tuple[Experiment, ...]
    joint: Experiment
    max_marginal_error: float = field(init=False)

    def __post_init__(self):
        marginals = tuple(self.marginals)
        object.__setattr__(self, "marginals", marginals)
        expected = math.prod(product_shape(marginals))
        if self.joint.n_signals != expected:
            raise DimensionMismatchError(
                f"joint experiment '{self.joint.name}': {self.joint.n_signals} signals, expected {expected}"
            )
        tensor = self.tensor
        errors = [
            float(np.max(np.abs(marginalize(tensor, source) - marginal.kernel)))
            for source, marginal in enumerate(marginals)
        ]
        error = max(errors, default=0.0)
        object.__setattr__(self, "max_marginal_error", error)

    @classmethod
    def from_tensor(cls, marginals: Sequence[Experiment], tensor, name: str = "joint") -> "JointExperiment":
        """
        Wraps a (|Θ|, |Y_1|, ..., |Y_m|) probability tensor as a joint experiment.

        Entries within round-off of zero are clipped to zero.
        """
        tensor = np.where(np.abs(tensor) < 1e-15, 0.0, np.asarray(tensor, dtype=float))
        tensor = np.maximum(tensor, 0.0)
        shape = product_shape(marginals)
        signals = [composite_label(marginals, signal) for signal in composite_signals(shape)]
        joint = Experiment(name=name, signals=signals, kernel=tensor.reshape(tensor.shape[0], -1))
        return cls(marginals=tuple(marginals), joint=joint)

    @property
    def signal_shape(self) -> tuple[int, ...]:
        return product_shape(self.marginals)

    @property
    def tensor(self) -> np.ndarray:
        return self.joint.kernel.reshape((self.joint.n_states,) + self.signal_shape)


def independent_product(experiments: Sequence[Experiment]) -> JointExperiment:
    """The coupling under which sources are conditionally independent given the state."""
    n_states = experiments[0].n_states
    rows = [_outer_rows([experiment.kernel[state] for experiment in experiments]) for state in range(n_states)]
    return JointExperiment.from_tensor(experiments, np.stack(rows), name="independent")


def _outer_rows(rows: Sequence[np.ndarray]) -> np.ndarray:
    result = np.ones(())
    for row in rows:
        result = np.multiply.outer(result, row)
    return result


def uninformative_experiment(n_states: int, name: str = "uninformative") -> Experiment:
    return Experiment(name=name, signals=("-",), kernel=np.ones((n_states, 1)))


def fully_revealing_experiment(states: Sequence[str], name: str = "revealing") -> Experiment:
    return Experiment(name=name, signals=tuple(states), kernel=np.eye(len(states)))
