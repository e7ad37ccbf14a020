import json

import pytest

from trunclab.cli import build_parser, config_from_args, dispatch, main
from trunclab.client import Client
from trunclab.exceptions import TrunclabConfigException
from trunclab.formats import assignment_to_dict, dump_json
from trunclab.multfunc import PrimeAssignment


def run(capsys, *argv):
    status = main(list(argv))
    out = capsys.readouterr().out
    return status, json.loads(out) if out.strip() else None


def test_constants(capsys, tmp_path):
    status, payload = run(capsys, "constants", "--out-dir", str(tmp_path))
    assert status == 0
    assert float(payload["kappa"]) == 0.32867
    assert float(payload["inner"]) == pytest.approx(-0.656999, abs=1e-5)
    assert set(payload["notes"]) == {"inner", "full", "kappa"}
    assert (tmp_path / "constants.json").exists()


def test_delta_brute(capsys, tmp_path):
    status, payload = run(capsys, "delta", "--x", "10", "--class", "f1", "--method", "brute", "--out-dir", str(tmp_path))
    assert status == 0
    assert payload["value"] == "823/2520"
    assert payload["certificate"] == "global"
    assert payload["minimizer"]["primes"] == {"2": "-1", "3": "-1", "5": "-1", "7": "-1"}


def test_delta_descent(capsys, tmp_path):
    status, payload = run(capsys, "delta", "--x", "9", "--class", "f", "--method", "descent", "--starts", "0",
                          "--out-dir", str(tmp_path))
    assert status == 0
    assert payload["value"] == "123/560"
    assert payload["certificate"] == "local"
    assert payload["at_vertex"] is False


def test_method_must_fit_the_class(capsys, tmp_path):
    status, _ = run(capsys, "delta", "--x", "10", "--class", "f0", "--method", "bnb", "--out-dir", str(tmp_path))
    assert status == 2


def test_bad_global_flag_exits_with_config_status(capsys, tmp_path):
    status, payload = run(capsys, "delta", "--x", "10", "--threads", "0", "--out-dir", str(tmp_path))
    assert status == 2
    assert payload is None


def test_budget_status(capsys, tmp_path):
    status, _ = run(capsys, "delta", "--x", "200", "--method", "brute", "--out-dir", str(tmp_path))
    assert status == 3


def test_artifacts_are_byte_identical(capsys, tmp_path):
    first, second = tmp_path / "first", tmp_path / "second"
    for out_dir in (first, second):
        status, _ = run(capsys, "delta", "--x", "12", "--method", "bnb", "--seed", "3", "--out-dir", str(out_dir))
        assert status == 0
    assert (first / "delta_bnb_12.json").read_bytes() == (second / "delta_bnb_12.json").read_bytes()


def test_scan_and_resume(capsys, tmp_path):
    flags = ("--segment-size", "512", "--sample-every", "1000", "--flush-every", "1024", "--out-dir", str(tmp_path))
    status, first = run(capsys, "scan", "--kind", "turan", "--bound", "5000", *flags)
    assert status == 0
    assert first["sign_holds"]
    assert (tmp_path / "turan_scan.csv").read_text().splitlines()[0] == "x,L,T,T_err"

    checkpoint = first["checkpoint"]
    status, resumed = run(capsys, "scan", "--kind", "turan", "--bound", "9000", "--resume", checkpoint, *flags)
    assert status == 0
    status, direct = run(capsys, "scan", "--kind", "turan", "--bound", "9000", *flags)
    assert resumed["T"] == direct["T"]
    assert resumed["L"] == direct["L"]


def test_resume_from_corrupt_checkpoint(capsys, tmp_path):
    broken = tmp_path / "broken.json"
    broken.write_text("[]")
    status, _ = run(capsys, "scan", "--kind", "polya", "--bound", "1000", "--resume", str(broken),
                    "--out-dir", str(tmp_path))
    assert status == 5


def test_round(capsys, tmp_path):
    source = tmp_path / "f.json"
    dump_json(assignment_to_dict(PrimeAssignment.constant(30, "1/3")), source)
    trace = tmp_path / "trace.json"
    status, payload = run(capsys, "round", "--x", "30", "--input", str(source), "--trace", str(trace),
                          "--out-dir", str(tmp_path))
    assert status == 0
    assert payload["sign_property_holds"]
    assert payload["rounded"]["class"] == "F1"
    assert json.loads(trace.read_text()) == payload


def test_round_missing_input(capsys, tmp_path):
    status, _ = run(capsys, "round", "--x", "30", "--input", str(tmp_path / "none.json"), "--out-dir", str(tmp_path))
    assert status == 2


def test_construct(capsys, tmp_path):
    status, window = run(capsys, "construct", "--kind", "window", "--x", "25", "--N", "2", "--out-dir", str(tmp_path))
    assert status == 0
    assert window["lhs_excess"] == "1/11"
    assert window["identity_holds"]
    assert window["window_primes"] == [11]

    status, extremal = run(capsys, "construct", "--kind", "extremal", "--x", "10", "--out-dir", str(tmp_path))
    assert status == 0
    assert extremal["value"]["value"] == "-437/2520"
    assert extremal["condition"]["two_adic_mass"] == "0"
    assert extremal["h_decomposition"]["H0"] == "0"


def test_window_without_N(capsys, tmp_path):
    status, _ = run(capsys, "construct", "--kind", "window", "--x", "25", "--out-dir", str(tmp_path))
    assert status == 2


def test_realize(capsys, tmp_path):
    pattern = tmp_path / "pattern.json"
    dump_json(assignment_to_dict(PrimeAssignment.liouville(10)), pattern)
    status, payload = run(capsys, "realize", "--pattern", str(pattern), "--x", "10", "--out-dir", str(tmp_path))
    assert status == 0
    assert payload["q"] == 43
    assert payload["verified"]
    status, _ = run(capsys, "realize", "--pattern", str(pattern), "--x", "10", "--max-candidates", "3",
                    "--out-dir", str(tmp_path))
    assert status == 3


def test_rho(capsys, tmp_path):
    status, payload = run(capsys, "rho", "--u", "2", "--out-dir", str(tmp_path))
    assert status == 0
    assert float(payload["rho"]) == pytest.approx(0.30685281944005469, abs=1e-10)
    status, _ = run(capsys, "rho", "--u", "2", "--precision", "1e-20", "--out-dir", str(tmp_path))
    assert status == 6


def test_verify_quick_bounds(capsys, tmp_path):
    status, payload = run(capsys, "verify", "--suite", "bounds", "--out-dir", str(tmp_path))
    assert status == 0
    assert payload["passed"]
    assert (tmp_path / "verify_bounds.json").exists()


def test_unknown_suite_through_the_client(make_config):
    status, payload = dispatch(make_config("verify", suite="everything"))
    assert status == 2
    assert payload is None


def test_parser_keeps_globals_out_of_args():
    namespace = build_parser().parse_args(["scan", "--kind", "polya", "--bound", "100", "--threads", "2"])
    config = config_from_args(namespace, environ={})
    assert config.threads == 2
    assert config.args == {"kind": "polya", "bound": 100}


def test_client_needs_a_config():
    with pytest.raises(TrunclabConfigException):
        Client(None)
