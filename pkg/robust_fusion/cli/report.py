import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from loguru import logger

from robust_fusion.asymptotics.threshold import SweepRow
from robust_fusion.core.models import DecisionProblem, Experiment, Strategy, composite_label, composite_signals

_PURE_TOL = 1e-12


@dataclass(frozen=True)
class RunReport:
    """
    Everything a CLI command prints.

    Attributes:
        command (str): The subcommand that produced the report.
        instance (str): File name of the instance.
        digest (str): SHA-256 of the instance file.
        values (dict[str, float | int | str | None]): Named scalar results, in print order.
        strategy (list[dict]): One row per composite signal: its label and the action distribution.
        decomposition (list[dict]): One row per subproblem.
        certificate_gap (float | None): |value − Nature's best response to the strategy|.
        passed (bool | None): The oracle verdict, check only.
        wall_time (float): Seconds spent; printed in text mode, left out of machine output.
    """

    command: str
    instance: str
    digest: str
    values: dict = field(default_factory=dict)
    strategy: list = field(default_factory=list)
    decomposition: list = field(default_factory=list)
    certificate_gap: float | None = None
    passed: bool | None = None
    wall_time: float = 0.0


def action_label(label) -> str:
    return "+".join(str(part) for part in label) if isinstance(label, tuple) else str(label)


def strategy_rows(strategy: Strategy, experiments: Sequence[Experiment], problem: DecisionProblem) -> list[dict]:
    """Tabulates a strategy by composite signal label; actions with zero probability are left out."""
    rows = []
    for signal in composite_signals(strategy.signal_shape):
        distribution = strategy[signal]
        rows.append(
            {
                "signal": composite_label(experiments, signal),
                "action": {
                    action_label(problem.actions[index]): float(probability)
                    for index, probability in enumerate(distribution)
                    if probability > _PURE_TOL
                },
            }
        )
    return rows


def _plain(value):
    if isinstance(value, dict):
        return {str(key): _plain(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(item) for item in value]
    if isinstance(value, np.ndarray):
        return _plain(value.tolist())
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value


def to_machine(report: RunReport) -> str:
    """
    The machine-readable report: sorted-key JSON without the wall time.

    Floats are written in their shortest round-trip form, so from_machine restores them exactly.
    """
    document = _plain(asdict(report))
    del document["wall_time"]
    return json.dumps(document, sort_keys=True, indent=2, allow_nan=False) + "\n"


def from_machine(text: str) -> RunReport:
    document = json.loads(text)
    return RunReport(**document)


def _format_value(value) -> str:
    if isinstance(value, float):
        return f"{value:.6f}"
    if isinstance(value, list):
        return "(" + ", ".join(_format_value(item) for item in value) + ")"
    return "none" if value is None else str(value)


def _format_action(action: dict) -> str:
    if len(action) == 1 and abs(next(iter(action.values())) - 1.0) <= 1e-9:
        return next(iter(action))
    return ", ".join(f"{probability:.6f} {label}" for label, probability in action.items())


def _format_row(row: dict) -> str:
    return ", ".join(f"{key}={_format_value(value)}" for key, value in row.items())


def to_text(report: RunReport) -> str:
    """The human-readable report, values to six decimals."""
    lines = [f"command: {report.command}", f"instance: {report.instance} (sha256 {report.digest[:12]})"]
    lines.extend(f"{name}: {_format_value(value)}" for name, value in report.values.items())
    if report.strategy:
        lines.append("strategy:")
        lines.extend(f"  {row['signal']} -> {_format_action(row['action'])}" for row in report.strategy)
    if report.decomposition:
        lines.append("decomposition:")
        lines.extend(f"  {_format_row(row)}" for row in report.decomposition)
    if report.certificate_gap is not None:
        lines.append(f"certificate_gap: {report.certificate_gap:.6f}")
    if report.passed is not None:
        lines.append(f"passed: {'yes' if report.passed else 'no'}")
    lines.append(f"wall_time: {report.wall_time:.2f} seconds")
    return "\n".join(lines) + "\n"


def render(report: RunReport, output_format: str) -> str:
    return to_machine(report) if output_format == "machine" else to_text(report)


def sweep_header(experiments: Sequence[Experiment]) -> list[str]:
    return ["t", "V_joint"] + [f"V_{index + 1}" for index in range(len(experiments))]


def write_sweep_csv(rows: Sequence[SweepRow], experiments: Sequence[Experiment], path: str | Path) -> None:
    """
    Writes the per-t values as `t,V_joint,V_1,...,V_m`, one row per sample size.

    Args:
        rows (Sequence[SweepRow]): The sweep.
        experiments (Sequence[Experiment]): The sources, for the column count.
        path (str | Path): The CSV file to write.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(sweep_header(experiments))
        for row in rows:
            writer.writerow([row.t, repr(float(row.joint_value))] + [repr(float(value)) for value in row.single_values])
    logger.info(f"Wrote {len(rows)} sweep rows to {path}")
