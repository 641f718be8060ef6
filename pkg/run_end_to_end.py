from pathlib import Path

from loguru import logger

from robust_fusion.cli.main import configure_logging, run

_FIXTURES = Path("fixtures")
_OUTPUT = Path("tmp")

_RUNS = [
    ["value", "portfolio.json"],
    ["value", "three-state.json"],
    ["value", "covid-binary.json"],
    ["strategy", "portfolio.json"],
    ["strategy", "three-state.json"],
    ["decompose", "example2.json", "--mode", "canonical"],
    ["decompose", "three-state.json", "--mode", "weak"],
    ["sweep", "covid-binary.json", "--t-max", "16", "--out", str(_OUTPUT / "covid-sweep.csv")],
    ["check", "portfolio.json", "--seed", "1"],
    ["check", "three-state.json", "--seed", "1"],
    ["check", "example2.json", "--seed", "1"],
    ["check", "covid-binary.json", "--seed", "1"],
]

if __name__ == "__main__":
    configure_logging()
    failures = 0
    for command, name, *flags in _RUNS:
        code = run([command, str(_FIXTURES / name), *flags])
        if code != 0:
            logger.error(f"{command} {name} exited with {code}")
            failures += 1
    logger.info(f"End-to-end run finished with {failures} failure(s)")
    raise SystemExit(1 if failures else 0)
