import json
from fractions import Fraction

import pytest

from trunclab.constructions import theorem2_spec
from trunclab.exceptions import TrunclabConfigException
from trunclab.formats import (
    assignment_from_dict,
    assignment_to_dict,
    dump_json,
    load_assignment,
    load_multspec,
    multspec_to_dict,
    parse_class,
    rational_to_str,
    sum_to_dict,
)
from trunclab.multfunc import ExactSum, PrimeAssignment


def test_rational_to_str():
    assert rational_to_str(Fraction(-437, 2520)) == "-437/2520"
    assert rational_to_str(Fraction(4, 2)) == "2"
    assert rational_to_str(3) == "3"
    assert rational_to_str(0.1) == "0.1"


def test_parse_class():
    assert parse_class("f1") == "F1"
    assert parse_class("F0") == "F0"
    with pytest.raises(TrunclabConfigException):
        parse_class("f2")


def test_sum_to_dict():
    exact = sum_to_dict(ExactSum("exact", Fraction(823, 2520)))
    assert exact == {"mode": "exact", "value": "823/2520", "decimal": format(823 / 2520, ".17g")}
    approx = sum_to_dict(ExactSum("float", 0.25, 1e-15))
    assert approx["mode"] == "float"
    assert float(approx["error_bound"]) == 1e-15


def test_assignment_document():
    f = PrimeAssignment(7, "F", {2: "1/2", 3: -1, 5: 0, 7: "-3/4"})
    document = assignment_to_dict(f)
    assert document == {"x_max": 7, "class": "F", "primes": {"2": "1/2", "3": "-1", "5": "0", "7": "-3/4"}}
    assert assignment_from_dict(json.loads(json.dumps(document))) == f


def test_assignment_class_defaults_to_F():
    f = assignment_from_dict({"x_max": 3, "primes": {"2": "1/3", "3": 1}})
    assert f.fclass == "F"
    assert f[2] == Fraction(1, 3)


@pytest.mark.parametrize("payload", [
    {"primes": {"2": 1}},
    {"x_max": "ten", "primes": {}},
    {"x_max": 3, "primes": ["1", "1"]},
    {"x_max": 3, "class": "f1", "primes": {"2": "1/2", "3": 1}},
])
def test_malformed_assignments(payload):
    with pytest.raises(TrunclabConfigException):
        assignment_from_dict(payload)


def test_load_assignment(tmp_path):
    path = tmp_path / "f.json"
    dump_json(assignment_to_dict(PrimeAssignment.liouville(20)), path)
    assert load_assignment(path).signs() == PrimeAssignment.liouville(20).signs()


def test_load_errors(tmp_path):
    with pytest.raises(TrunclabConfigException):
        load_assignment(tmp_path / "missing.json")
    broken = tmp_path / "broken.json"
    broken.write_text("{")
    with pytest.raises(TrunclabConfigException):
        load_assignment(broken)


def test_multspec_document(tmp_path):
    spec = theorem2_spec(100)
    document = multspec_to_dict(spec)
    assert document["prime_powers"]["2"] == ["-1"] * 6
    assert document["continuation"]["2"] == "constant"
    path = tmp_path / "spec.json"
    dump_json(document, path)
    assert load_multspec(path) == spec


def test_multspec_from_plain_assignment(tmp_path):
    path = tmp_path / "f.json"
    dump_json(assignment_to_dict(PrimeAssignment.liouville(10)), path)
    spec = load_multspec(path)
    assert spec.values[2] == (-1, 1, -1)
    assert spec.continuation == {}


def test_dump_json_is_stable(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    dump_json({"b": 1, "a": [1, 2]}, a)
    dump_json({"a": [1, 2], "b": 1}, b)
    assert a.read_bytes() == b.read_bytes()
