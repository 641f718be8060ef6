import hashlib
import json
from pathlib import Path

import pytest

from robust_fusion.cli.instance_file import load_instance, parse_instance, parse_number
from robust_fusion.errors import EmptyInputError, NonStochasticRowError, ParseError

FIXTURES = Path(__file__).parents[2] / "fixtures"


def _document(**overrides) -> dict:
    document = {
        "problem": {
            "states": ["theta1", "theta2"],
            "prior": ["1/2", "1/2"],
            "actions": ["stay", "go"],
            "utility": [[0, 2], [0, -1]],
        },
        "experiments": [{"name": "P", "signals": ["a", "b"], "kernel": [[0.8, 0.2], [0.3, 0.7]]}],
    }
    document.update(overrides)
    return document


@pytest.mark.parametrize("name", ["portfolio.json", "three-state.json", "example2.json", "covid-binary.json"])
def test_shipped_fixtures_load(name: str):
    instance = load_instance(FIXTURES / name)

    assert instance.path.name == name
    assert instance.digest == hashlib.sha256((FIXTURES / name).read_bytes()).hexdigest()
    assert len(instance.experiments) == 2


def test_portfolio_fixture_matches_the_weighted_utilities():
    instance = load_instance(FIXTURES / "portfolio.json")

    assert instance.problem.weighted_utility.tolist() == [[0.0, 2.0, -1.0, 1.0], [0.0, -1.0, 2.0, 1.0]]
    assert [experiment.name for experiment in instance.experiments] == ["P1", "P2"]


def test_fractions_are_parsed_exactly():
    assert parse_number("1/3", "x") == 1 / 3
    assert parse_number("0.25", "x") == 0.25
    assert parse_number(2, "x") == 2.0


@pytest.mark.parametrize("value", ["one half", "1/0", True, None, [1]])
def test_bad_numbers_are_rejected(value):
    with pytest.raises(ParseError):
        parse_number(value, "problem.prior[0]")


def test_syntax_errors_carry_line_and_column():
    with pytest.raises(ParseError) as error:
        parse_instance('{\n  "problem": ,\n}')

    assert error.value.line == 2
    assert error.value.column == 14


def test_unknown_keys_are_rejected():
    with pytest.raises(ParseError, match="unknown key"):
        parse_instance(json.dumps(_document(comment="extra")))


def test_unknown_experiment_keys_are_rejected():
    document = _document()
    document["experiments"][0]["weight"] = 1

    with pytest.raises(ParseError, match=r"experiments\[0\]"):
        parse_instance(json.dumps(document))


def test_missing_keys_are_rejected():
    document = _document()
    del document["problem"]["prior"]

    with pytest.raises(ParseError, match="missing key"):
        parse_instance(json.dumps(document))


def test_duplicate_keys_are_rejected():
    with pytest.raises(ParseError, match="duplicate"):
        parse_instance('{"problem": {}, "problem": {}}')


def test_non_finite_constants_are_rejected():
    text = json.dumps(_document()).replace("0.8", "NaN")

    with pytest.raises(ParseError, match="NaN"):
        parse_instance(text)


def test_non_stochastic_kernel_fails_validation():
    document = _document()
    document["experiments"][0]["kernel"] = [[0.8, 0.1], [0.3, 0.7]]

    with pytest.raises(NonStochasticRowError):
        parse_instance(json.dumps(document))


def test_empty_experiment_list_fails_validation():
    with pytest.raises(EmptyInputError):
        parse_instance(json.dumps(_document(experiments=[])))


def test_non_utf8_file(tmp_path: Path):
    path = tmp_path / "latin1.json"
    path.write_bytes(b'{"problem": "\xe9"}')

    with pytest.raises(ParseError, match="UTF-8"):
        load_instance(path)


def test_missing_file(tmp_path: Path):
    with pytest.raises(ParseError, match="cannot read"):
        load_instance(tmp_path / "absent.json")
