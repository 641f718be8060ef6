"""
Command-line entry point: `robust-fusion [global flags] <command> <instance.json> [command flags]`.

Exit codes: 0 success, 1 oracle check failed, 2 usage error, 3 parse error, 4 validation
error, 5 size cap exceeded, 6 numerical failure, 7 other domain precondition failure.
"""

import argparse
import sys
import time
from typing import Callable, Sequence

from loguru import logger

from robust_fusion.asymptotics.threshold import dominance_threshold, power_sweep
from robust_fusion.cli.instance_file import Instance, load_instance
from robust_fusion.cli.report import RunReport, action_label, render, strategy_rows, write_sweep_csv
from robust_fusion.core.tolerances import VALUE_TOL
from robust_fusion.decompose.composition import canonical_decomposition
from robust_fusion.decompose.weak import weak_decomposition
from robust_fusion.env_variables import LOG_LEVEL
from robust_fusion.errors import NoStrictLeaderError, RobustFusionError
from robust_fusion.oracle.verify import run_oracle_suite
from robust_fusion.robust.solver import best_single_source, robust_strategy, robust_value, subproblem_choices

EXIT_CHECK_FAILED = 1


def configure_logging(level: str = LOG_LEVEL) -> None:
    logger.remove()
    logger.add(sys.stderr, level=level)


def _report(command: str, instance: Instance, start_time: float, **fields) -> RunReport:
    return RunReport(
        command=command,
        instance=instance.path.name,
        digest=instance.digest,
        wall_time=time.time() - start_time,
        **fields,
    )


def cmd_value(instance: Instance, args: argparse.Namespace) -> RunReport:
    """Robust value, best single source and the gain from combining sources."""
    start_time = time.time()
    experiments, problem = instance.experiments, instance.problem
    value = robust_value(experiments, problem, args.cap, args.tolerance)
    source, single = best_single_source(experiments, problem)
    values = {
        "robust_value": value,
        "best_source": experiments[source].name,
        "best_single_value": single,
        "gap": value - single,
    }
    return _report("value", instance, start_time, values=values)


def cmd_strategy(instance: Instance, args: argparse.Namespace) -> RunReport:
    """A robustly optimal strategy table with Nature's best-response certificate."""
    start_time = time.time()
    experiments, problem = instance.experiments, instance.problem
    solution = robust_strategy(experiments, problem, args.cap, args.tolerance)
    values = {
        "robust_value": solution.value,
        "certificate_value": solution.certificate_value,
        "method": solution.method.value,
    }
    decomposition = []
    if solution.decomposition is not None and solution.choices:
        decomposition = [
            {
                "subproblem": index,
                "actions": [action_label(label) for label in subproblem.actions],
                "winner": experiments[choice.source].name,
                "winner_value": choice.value,
            }
            for index, (subproblem, choice) in enumerate(zip(solution.decomposition.subproblems, solution.choices))
        ]
    return _report(
        "strategy",
        instance,
        start_time,
        values=values,
        strategy=strategy_rows(solution.strategy, experiments, problem),
        decomposition=decomposition,
        certificate_gap=solution.gap,
    )


def _canonical_rows(instance: Instance) -> tuple[dict, list[dict]]:
    experiments = instance.experiments
    decomposition = canonical_decomposition(instance.problem)
    choices = subproblem_choices(decomposition, experiments)
    base = float(decomposition.base.sum())
    rows = [
        {
            "subproblem": index,
            "actions": [action_label(label) for label in subproblem.actions],
            "increment": increment.tolist(),
            "winner": experiments[choice.source].name,
            "winner_value": choice.value,
        }
        for index, (subproblem, increment, choice) in enumerate(
            zip(decomposition.subproblems, decomposition.increments, choices)
        )
    ]
    values = {
        "mode": "canonical",
        "base_value": base,
        "decomposed_value": base + sum(choice.value for choice in choices),
    }
    return values, rows


def _weak_rows(instance: Instance, args: argparse.Namespace) -> tuple[dict, list[dict]]:
    experiments = instance.experiments
    decomposition = weak_decomposition(experiments, instance.problem, args.cap)
    rows = []
    for experiment, subproblem, potential in zip(experiments, decomposition.subproblems, decomposition.potentials):
        winner, winner_value = best_single_source(experiments, subproblem)
        rows.append(
            {
                "source": experiment.name,
                "potential": potential.tolist(),
                "winner": experiments[winner].name,
                "winner_value": winner_value,
            }
        )
    values = {
        "mode": "weak",
        "robust_value": decomposition.value,
        "subproblem_total": sum(row["winner_value"] for row in rows),
    }
    return values, rows


def cmd_decompose(instance: Instance, args: argparse.Namespace) -> RunReport:
    """Canonical increments or weak potentials, with the winning source of every subproblem."""
    start_time = time.time()
    values, rows = _canonical_rows(instance) if args.mode == "canonical" else _weak_rows(instance, args)
    return _report("decompose", instance, start_time, values=values, decomposition=rows)


def cmd_sweep(instance: Instance, args: argparse.Namespace) -> RunReport:
    """Per-t robust and single-source values of i.i.d. powers, with the dominance threshold."""
    start_time = time.time()
    experiments, problem = instance.experiments, instance.problem
    try:
        threshold = dominance_threshold(experiments, problem, args.t_max)
    except NoStrictLeaderError as error:
        logger.warning(f"No dominance threshold: {error}")
        threshold = None
    rows = power_sweep(experiments, problem, args.t_max)
    if args.out:
        write_sweep_csv(rows, experiments, args.out)
    last = rows[-1]
    values = {
        "threshold": threshold,
        "t_max": last.t,
        "final_joint_value": last.joint_value,
        "final_gap": last.joint_value - max(last.single_values),
    }
    return _report("sweep", instance, start_time, values=values)


def cmd_check(instance: Instance, args: argparse.Namespace) -> RunReport:
    """Runs the oracle suite on the instance."""
    start_time = time.time()
    seed = args.seed if args.check_seed is None else args.check_seed
    oracle = run_oracle_suite(
        instance.experiments,
        instance.problem,
        instance_id=instance.digest,
        seed=seed,
        tolerance=args.tolerance,
        cap=args.cap,
    )
    values = {
        "main_value": oracle.main_value,
        "oracle_value": oracle.oracle_value,
        "gap": oracle.gap,
        "lower_bound": oracle.lower_bound,
        "upper_bound": oracle.upper_bound,
        "seed": seed,
    }
    return _report("check", instance, start_time, values=values, passed=oracle.passed)


COMMANDS: dict[str, Callable[[Instance, argparse.Namespace], RunReport]] = {
    "value": cmd_value,
    "strategy": cmd_strategy,
    "decompose": cmd_decompose,
    "sweep": cmd_sweep,
    "check": cmd_check,
}


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="robust-fusion",
        description="Robust decisions from information sources of unknown correlation.",
    )
    parser.add_argument("--tolerance", type=float, default=VALUE_TOL, help="value comparison tolerance")
    parser.add_argument("--cap", type=_positive_int, default=None, help="product signal space cap")
    parser.add_argument("--format", choices=["text", "machine"], default="text", dest="output_format")
    parser.add_argument("--seed", type=int, default=0, help="seed of every sampled quantity")

    commands = parser.add_subparsers(dest="command", required=True)
    for name in ("value", "strategy"):
        commands.add_parser(name, help=COMMANDS[name].__doc__).add_argument("path")

    decompose = commands.add_parser("decompose", help=cmd_decompose.__doc__)
    decompose.add_argument("path")
    decompose.add_argument("--mode", choices=["canonical", "weak"], default="canonical")

    sweep = commands.add_parser("sweep", help=cmd_sweep.__doc__)
    sweep.add_argument("path")
    sweep.add_argument("--t-max", type=_positive_int, default=None, dest="t_max")
    sweep.add_argument("--out", default=None, help="CSV file for the per-t rows")

    check = commands.add_parser("check", help=cmd_check.__doc__)
    check.add_argument("path")
    check.add_argument("--seed", type=int, default=None, dest="check_seed")
    return parser


def run(argv: Sequence[str] | None = None) -> int:
    """
    Parses arguments, runs one command and writes its report to stdout.

    Args:
        argv (Sequence[str] | None): Arguments without the program name; None reads sys.argv.

    Returns:
        int: The process exit code.
    """
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as error:
        return int(error.code or 0)

    try:
        instance = load_instance(args.path)
        report = COMMANDS[args.command](instance, args)
    except RobustFusionError as error:
        logger.error(f"{type(error).__name__}: {error}")
        return error.exit_code

    sys.stdout.write(render(report, args.output_format))
    if report.passed is False:
        logger.error("Oracle check failed")
        return EXIT_CHECK_FAILED
    return 0


def main() -> None:
    configure_logging()
    sys.exit(run())


if __name__ == "__main__":
    main()
