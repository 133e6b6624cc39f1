from __future__ import annotations

import json
from fractions import Fraction

import pytest
from hypothesis import given, settings

from conftest import FIXTURES, rational_functions
from ratsys.exprio import (
    ParseError,
    SpecError,
    dump_system,
    emit_report,
    load_system,
    parse_expression,
    parse_polynomial,
    parse_rational,
    render,
    system_from_dict,
    system_to_dict,
)
from ratsys.ratfunc import RationalFunction, coordinates

N2 = ["x1", "x2"]
x1, x2 = coordinates(2)


def test_parse_basic():
    r = parse_expression("-x2/(1 + x1^2)", N2)
    assert r == -x2 / (1 + x1**2)
    assert parse_expression("3/4*x1 - 1/2", N2) == x1 * Fraction(3, 4) - Fraction(1, 2)
    assert parse_expression("(x1 + x2)^2", N2) == (x1 + x2) ** 2


def test_parse_errors_carry_position():
    with pytest.raises(ParseError) as e:
        parse_expression("x1 + y", N2)
    assert e.value.position == 5
    with pytest.raises(ParseError):
        parse_expression("x1 / (x2 - x2)", N2)
    with pytest.raises(ParseError):
        parse_expression("x1 +", N2)
    with pytest.raises(ParseError):
        parse_expression("", N2)
    with pytest.raises(ParseError):
        parse_expression("x1 ^ x2", N2)
    with pytest.raises(ParseError):
        parse_expression("x1 $ 2", N2)


def test_parse_polynomial_rejects_fractions():
    assert parse_polynomial("x1^2 - 2", N2).format(N2) == "x1^2 - 2"
    with pytest.raises(ParseError):
        parse_polynomial("1/x1", N2)


def test_parse_rational_literals():
    assert parse_rational(3) == 3
    assert parse_rational("-3/4") == Fraction(-3, 4)
    for bad in (0.5, True, "1.5", "1/0", None):
        with pytest.raises(ValueError):
            parse_rational(bad)


@settings(max_examples=150, deadline=None)
@given(rational_functions(2))
def test_render_parse_round_trip(r):
    assert parse_expression(render(r, N2), N2) == r


def test_fixtures_round_trip():
    for path in sorted(FIXTURES.glob("*.json")):
        s = load_system(path.read_text())
        again = load_system(dump_system(s))
        assert system_to_dict(again) == system_to_dict(s)


def _doc(**over):
    doc = {
        "variables": ["x1", "x2"],
        "f0": ["x2", "0"],
        "f1": ["0", "1"],
        "h": "x1",
        "x0": [0, 0],
        "input_values": [0, 1],
    }
    doc.update(over)
    return doc


@pytest.mark.parametrize(
    "doc, kind",
    [
        ("[1, 2]", "schema"),
        ("{not json", "json"),
        (json.dumps(_doc(f0=["x2"])), "schema"),
        (json.dumps({"variables": ["x1"]}), "schema"),
        (json.dumps(_doc(h="x3")), "parse"),
        (json.dumps(_doc(x0=[0.5, 0])), "schema"),
        (json.dumps(_doc(variables=["x1", "x1"])), "schema"),
        (json.dumps(_doc(assumptions={"bogus": True})), "schema"),
        (json.dumps(_doc(variety=["x1 - 1"])), "validation"),
        (json.dumps(_doc(variety=["1"])), "validation"),
        (json.dumps(_doc(f1=["0", "1/x1"])), "validation"),
        (json.dumps(_doc(input_values=[1, 2])), "validation"),
    ],
)
def test_spec_errors(doc, kind):
    with pytest.raises(SpecError) as e:
        load_system(doc)
    assert e.value.kind == kind


def test_validation_violations_are_structured():
    with pytest.raises(SpecError) as e:
        load_system(json.dumps(_doc(variety=["x1 - 1"], f1=["0", "1/x1"])))
    codes = {v.code for v in e.value.violations}
    assert "x0-off-variety" in codes


def test_parametrization_block():
    s = system_from_dict(
        _doc(
            variety=["x2 - x1^2"],
            parametrization={"parameters": ["t"], "map": ["t", "t^2"]},
            f0=["1", "2*x1"],
            f1=["0", "0"],
        )
    )
    assert s.X.kind == "parametrized"
    assert system_to_dict(s)["parametrization"] == {"parameters": ["t"], "map": ["t", "t^2"]}


def test_emit_report_is_deterministic():
    a = emit_report({"b": Fraction(1, 3), "a": [x1 + x2, (1, 2)]})
    b = emit_report({"a": [x1 + x2, (1, 2)], "b": Fraction(1, 3)})
    assert a == b
    assert json.loads(a) == {"a": ["x1 + x2", [1, 2]], "b": "1/3"}
    with pytest.raises(TypeError):
        emit_report({"x": object()})
