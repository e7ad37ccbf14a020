import os

from trunclab.controller import Controller
from trunclab.digest_utils import generate_run_id_from_seed
from trunclab.exceptions import TrunclabConfigException, TrunclabVerificationException
from trunclab.formats import (
    assignment_to_dict,
    dump_json,
    min_result_to_dict,
    multspec_to_dict,
    rational_to_str,
    sum_to_dict,
    trace_to_dict,
    witness_to_dict,
)


class Client:
    """Front end of the lab: every method returns a JSON-ready dict and writes it as an artifact"""

    def __init__(self, config):
        if config is None:
            raise TrunclabConfigException("Missing run configuration")
        config.validate()
        if not os.path.isdir(config.out_dir):
            try:
                os.makedirs(config.out_dir, exist_ok=True)
            except OSError as e:
                raise TrunclabConfigException(f"Cannot create output directory {config.out_dir}: {e.strerror}")

        self.config = config
        self.controller = Controller(config)
        self.run_id = generate_run_id_from_seed(config.command, config.seed, config.args)

    def _artifact(self, name, payload):
        document = {
            "run_id": self.run_id,
            "command": self.config.command,
            "seed": self.config.seed,
            "args": {k: v for k, v in sorted(self.config.args.items())},
            "result": payload,
        }
        path = os.path.join(self.config.out_dir, f"{name}.json")
        dump_json(document, path)
        return path

    def run(self):
        """Run config.command with config.args"""
        args = self.config.args
        command = self.config.command
        if command == "scan":
            return self.scan(_require(args, "kind"), _require(args, "bound"), args.get("resume"), args.get("csv"))
        if command == "delta":
            return self.delta(_require(args, "x"), args.get("fclass", "f1"), args.get("method", "brute"),
                              args.get("starts", 4), args.get("out"))
        if command == "round":
            return self.round(_require(args, "x"), _require(args, "input"), args.get("trace"))
        if command == "construct":
            kind = _require(args, "kind")
            if kind == "window":
                return self.window(_require(args, "x"), _require(args, "N"))
            if kind == "extremal":
                return self.extremal(_require(args, "x"))
            raise TrunclabConfigException(f"Unknown construction '{kind}'; expected window or extremal")
        if command == "realize":
            return self.realize(_require(args, "pattern"), _require(args, "x"), args.get("max_candidates"))
        if command == "constants":
            return self.constants()
        if command == "rho":
            return self.rho(_require(args, "u"), args.get("precision", 1e-12))
        if command == "verify":
            return self.verify(args.get("suite", "all"), args.get("size", "quick"))
        raise TrunclabConfigException(f"Unknown command '{command}'")

    def scan(self, kind, bound, resume=None, csv_path=None):
        anchor, report = self.controller.scan(kind, bound, resume)
        csv_path = csv_path or os.path.join(self.config.out_dir, f"{kind}_scan.csv")
        report.write_csv(csv_path)

        summary = report.summary()
        summary["csv"] = csv_path
        summary["checkpoint"] = self.controller.checkpoint_path(kind)
        summary["checkpoint_next_n"] = anchor.next_n
        summary["records"] = [{"x": r.x, "value": r.value if kind == "polya" else format(r.value, ".17g")}
                              for r in anchor.records]
        self._artifact(f"{kind}_scan", summary)
        return summary

    def delta(self, x, fclass="f1", method="brute", starts=4, out=None):
        result = self.controller.delta(x, fclass, method, starts)
        payload = min_result_to_dict(result)
        if out is not None:
            dump_json(payload, out)
        self._artifact(f"delta_{method}_{x}", payload)
        return payload

    def round(self, x, input_path, trace_path=None):
        rounded, trace = self.controller.round(x, input_path)
        payload = trace_to_dict(rounded, trace)
        if trace_path is not None:
            dump_json(payload, trace_path)
        self._artifact(f"round_{x}", payload)
        return payload

    def window(self, x, N):
        report = self.controller.window(x, N)
        construction = report.construction
        payload = {
            "x": x,
            "N": N,
            "window_primes": list(construction.window_primes),
            "primes_below_root": list(report.primes_below_root),
            "lhs_excess": rational_to_str(report.lhs_excess),
            "single_prime_excess": rational_to_str(report.single_prime_excess),
            "general_excess": rational_to_str(report.general_excess),
            "identity_holds": report.identity_holds,
            "T_x": sum_to_dict(report.T_x),
            "lhs": sum_to_dict(report.lhs),
            "rhs": sum_to_dict(report.rhs),
            "haselgrove_delta": rational_to_str(report.haselgrove_delta),
            "limit_excess": None if report.limit_excess is None else format(report.limit_excess, ".17g"),
            "assignment": assignment_to_dict(construction.assignment),
        }
        self._artifact(f"window_{x}_{N}", payload)
        return payload

    def extremal(self, x):
        result, condition, decomposition = self.controller.extremal(x)
        payload = {
            "x": x,
            "y": format(result.y, ".17g"),
            "value": sum_to_dict(result.value),
        }
        if result.spec is not None:
            payload["spec"] = multspec_to_dict(result.spec)
        if condition is not None:
            payload["condition"] = {
                "two_adic_mass": rational_to_str(condition.two_adic_mass),
                "small_prime_defect": rational_to_str(condition.small_prime_defect),
                "large_prime_excess": rational_to_str(condition.large_prime_excess),
                "total": format(condition.total, ".17g"),
            }
        if decomposition is not None:
            payload["h_decomposition"] = {
                "H0": rational_to_str(decomposition.H0),
                "H1": format(decomposition.H1, ".17g"),
                "approximation": format(decomposition.approximation, ".17g"),
                "gap": format(decomposition.gap, ".17g"),
            }
        self._artifact(f"extremal_{x}", payload)
        return payload

    def realize(self, pattern_path, x, max_candidates=None):
        witness = self.controller.realize(pattern_path, x, max_candidates)
        payload = witness_to_dict(witness)
        self._artifact(f"witness_{x}", payload)
        return payload

    def constants(self):
        payload = {k: format(v, ".17g") if isinstance(v, float) else v for k, v in self.controller.constants().items()}
        payload["notes"] = {
            "inner": "1 - 2 log(1 + sqrt e) + 4 int_1^sqrt(e) log t / (t + 1) dt, printed as -0.656999...",
            "full": "inner times log 2, printed as -0.4553...",
            "kappa": "0.32867 as printed, a truncation",
        }
        self._artifact("constants", payload)
        return payload

    def rho(self, u, precision=1e-12):
        value = self.controller.rho(u, precision)
        payload = {
            "u": format(value.u, ".17g"),
            "rho": format(value.value, ".17g"),
            "error_bound": format(value.error_bound, ".17g"),
            "panels_per_unit": value.panels_per_unit,
        }
        self._artifact("rho", payload)
        return payload

    def verify(self, suite="all", size="quick"):
        report = self.controller.verify(suite, size)
        payload = report.to_dict()
        path = self._artifact(f"verify_{suite}", payload)
        if not report.passed:
            names = ", ".join(f"{c.suite}/{c.name}" for c in report.failures)
            raise TrunclabVerificationException(f"Verification failed for {names}; counterexamples in {path}")
        return payload


def _require(args, name):
    value = args.get(name)
    if value is None:
        raise TrunclabConfigException(f"Missing required argument --{name.replace('_', '-')}")
    return value
