"""JSON forms of the lab's results. Rationals are always written as "p/q" strings."""
import json
import logging
from fractions import Fraction

from trunclab.exceptions import TrunclabConfigException
from trunclab.multfunc import MultSpec, PrimeAssignment, as_rational

logger = logging.getLogger(__name__)

CLASS_NAMES = {"f": "F", "f0": "F0", "f1": "F1"}


def rational_to_str(value):
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, int) and not isinstance(value, bool):
        return str(value)
    return repr(float(value))


def parse_class(name):
    fclass = CLASS_NAMES.get(str(name).lower())
    if fclass is None:
        raise TrunclabConfigException(f"Unknown class '{name}'; expected one of f, f0, f1")
    return fclass


def sum_to_dict(total):
    if total.mode == "exact":
        return {"mode": "exact", "value": rational_to_str(total.value), "decimal": format(float(total.value), ".17g")}
    return {"mode": "float", "value": format(total.value, ".17g"), "error_bound": format(total.error_bound, ".17g")}


def assignment_to_dict(f):
    return {
        "x_max": f.x_max,
        "class": f.fclass,
        "primes": {str(p): rational_to_str(v) for p, v in f.values.items()},
    }


def assignment_from_dict(payload):
    try:
        x_max = int(payload["x_max"])
        fclass = parse_class(payload.get("class", "F"))
        primes = payload["primes"]
        values = {int(p): as_rational(v) for p, v in primes.items()}
    except (KeyError, TypeError, ValueError, AttributeError) as e:
        raise TrunclabConfigException(f"Malformed assignment: {e!r}")
    return PrimeAssignment(x_max, fclass, values)


def multspec_to_dict(spec):
    return {
        "x_max": spec.x_max,
        "class": "multiplicative",
        "primes": {str(p): rational_to_str(seq[0]) for p, seq in spec.values.items()},
        "prime_powers": {str(p): [rational_to_str(v) for v in seq] for p, seq in spec.values.items()},
        "continuation": {str(p): c for p, c in spec.continuation.items()},
    }


def multspec_from_dict(payload):
    try:
        x_max = int(payload["x_max"])
        if "prime_powers" in payload:
            values = {int(p): tuple(as_rational(v) for v in seq) for p, seq in payload["prime_powers"].items()}
            continuation = {int(p): c for p, c in payload.get("continuation", {}).items()}
            return MultSpec(x_max, values, continuation)
    except (KeyError, TypeError, ValueError, AttributeError) as e:
        raise TrunclabConfigException(f"Malformed multiplicative spec: {e!r}")
    return MultSpec.from_assignment(assignment_from_dict(payload))


def min_result_to_dict(result):
    return {
        "x": result.x,
        "class": result.fclass,
        "method": result.method,
        "value": rational_to_str(result.value.value),
        "decimal": format(float(result.value.value), ".17g"),
        "minimizer": assignment_to_dict(result.minimizer),
        "certificate": result.certificate,
        "nodes_visited": result.nodes_visited,
        "at_vertex": result.at_vertex,
    }


def trace_to_dict(rounded, trace):
    return {
        "x": trace.x,
        "initial_sum": rational_to_str(trace.initial_sum),
        "final_sum": rational_to_str(trace.final_sum),
        "sign_property_holds": trace.sign_property_holds,
        "steps": [
            {
                "j": step.j,
                "p": step.p,
                "S_j_x": rational_to_str(step.S_j_x),
                "S_j_prime": rational_to_str(step.S_j_prime),
                "old_value": rational_to_str(step.old_value),
                "new_sign": step.new_sign,
                "delta": rational_to_str(step.delta),
                "regime": step.regime,
            }
            for step in trace.steps
        ],
        "rounded": assignment_to_dict(rounded),
    }


def witness_to_dict(witness):
    return {
        "q": witness.q,
        "x": witness.x,
        "candidates_tested": witness.candidates_tested,
        "verified": witness.verified,
        "checks": [{"n": c.n, "jacobi": c.jacobi, "expected": c.expected} for c in witness.residue_checks],
    }


def load_json(path):
    try:
        with open(path) as f:
            return json.load(f)
    except OSError as e:
        raise TrunclabConfigException(f"Cannot read input file {path}: {e.strerror}")
    except json.JSONDecodeError as e:
        raise TrunclabConfigException(f"Input file {path} is not valid JSON: {e.msg} at line {e.lineno}")


def dump_json(payload, path):
    with open(path, "w") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")
    logger.debug(f"Wrote {path}")
    return path


def load_assignment(path):
    return assignment_from_dict(load_json(path))


def load_multspec(path):
    return multspec_from_dict(load_json(path))
