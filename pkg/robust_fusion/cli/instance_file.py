import hashlib
import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from loguru import logger

from robust_fusion.core.bayes import validate_instance
from robust_fusion.core.models import DecisionProblem, Experiment
from robust_fusion.errors import EmptyInputError, ParseError

_TOP_KEYS = {"problem", "experiments"}
_PROBLEM_KEYS = {"states", "prior", "actions", "utility"}
_EXPERIMENT_KEYS = {"name", "signals", "kernel"}


@dataclass(frozen=True)
class Instance:
    """
    A parsed and validated instance file.

    Attributes:
        path (Path): Where the instance was read from.
        digest (str): SHA-256 of the file bytes, hex encoded.
        problem (DecisionProblem): The decision problem block.
        experiments (tuple[Experiment, ...]): The experiments block, in file order.
    """

    path: Path
    digest: str
    problem: DecisionProblem
    experiments: tuple[Experiment, ...]


def parse_number(value, where: str) -> float:
    """
    Converts a JSON number or an exact string such as "1/3" or "0.25" to a float.

    Raises:
        ParseError: If the value is neither a number nor a rational literal.
    """
    if isinstance(value, bool):
        raise ParseError(f"{where}: expected a number, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            return float(Fraction(value.strip()))
        except (ValueError, ZeroDivisionError):
            raise ParseError(f"{where}: '{value}' is not a number or a fraction a/b") from None
    raise ParseError(f"{where}: expected a number, got {type(value).__name__}")


def _reject_pairs(pairs: list[tuple[str, object]]) -> dict:
    result = {}
    for key, value in pairs:
        if key in result:
            raise ParseError(f"duplicate key '{key}'")
        result[key] = value
    return result


def _reject_constant(name: str):
    raise ParseError(f"non-finite constant {name} is not allowed")


def _check_keys(block, allowed: set[str], where: str) -> None:
    if not isinstance(block, dict):
        raise ParseError(f"{where}: expected an object")
    unknown = sorted(set(block) - allowed)
    if unknown:
        raise ParseError(f"{where}: unknown key(s) {', '.join(unknown)}")
    missing = sorted(allowed - set(block))
    if missing:
        raise ParseError(f"{where}: missing key(s) {', '.join(missing)}")


def _labels(values, where: str) -> list[str]:
    if not isinstance(values, list) or not all(isinstance(value, str) for value in values):
        raise ParseError(f"{where}: expected a list of strings")
    return values


def _vector(values, where: str) -> list[float]:
    if not isinstance(values, list):
        raise ParseError(f"{where}: expected a list")
    return [parse_number(value, f"{where}[{index}]") for index, value in enumerate(values)]


def _matrix(rows, where: str) -> list[list[float]]:
    if not isinstance(rows, list):
        raise ParseError(f"{where}: expected a list of rows")
    return [_vector(row, f"{where}[{index}]") for index, row in enumerate(rows)]


def parse_instance(text: str) -> tuple[DecisionProblem, list[Experiment]]:
    """
    Parses the JSON text of an instance and validates it.

    Args:
        text (str): The instance document.

    Returns:
        tuple[DecisionProblem, list[Experiment]]: The problem and its experiments.

    Raises:
        ParseError: On malformed JSON (with line and column) or a schema violation.
        ValidationError: If the parsed instance breaks a structural invariant.
    """
    try:
        document = json.loads(text, object_pairs_hook=_reject_pairs, parse_constant=_reject_constant)
    except json.JSONDecodeError as error:
        raise ParseError(error.msg, error.lineno, error.colno) from None

    _check_keys(document, _TOP_KEYS, "instance")
    block = document["problem"]
    _check_keys(block, _PROBLEM_KEYS, "problem")
    problem = DecisionProblem(
        states=_labels(block["states"], "problem.states"),
        prior=_vector(block["prior"], "problem.prior"),
        actions=_labels(block["actions"], "problem.actions"),
        raw_utility=_matrix(block["utility"], "problem.utility"),
    )

    if not isinstance(document["experiments"], list):
        raise ParseError("experiments: expected a list")
    experiments = []
    for index, entry in enumerate(document["experiments"]):
        where = f"experiments[{index}]"
        _check_keys(entry, _EXPERIMENT_KEYS, where)
        if not isinstance(entry["name"], str):
            raise ParseError(f"{where}.name: expected a string")
        experiments.append(
            Experiment(
                name=entry["name"],
                signals=_labels(entry["signals"], f"{where}.signals"),
                kernel=_matrix(entry["kernel"], f"{where}.kernel"),
            )
        )
    if not experiments:
        raise EmptyInputError("experiments: at least one experiment is required")

    validate_instance(problem, experiments)
    return problem, experiments


def load_instance(path: str | Path) -> Instance:
    """
    Reads, parses and validates an instance file.

    Raises:
        ParseError: If the file is unreadable, not UTF-8 or not a valid instance document.
        ValidationError: If the instance breaks a structural invariant.
    """
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as error:
        raise ParseError(f"cannot read {path}: {error.strerror}") from None
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as error:
        raise ParseError(f"{path} is not UTF-8: {error.reason} at byte {error.start}") from None

    problem, experiments = parse_instance(text)
    digest = hashlib.sha256(raw).hexdigest()
    logger.info(f"Loaded {path.name}: {problem.n_states} states, {problem.n_actions} actions, "
                f"{len(experiments)} experiments")
    return Instance(path=path, digest=digest, problem=problem, experiments=tuple(experiments))
