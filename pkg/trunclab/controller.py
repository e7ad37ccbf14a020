import logging
import os

from trunclab.analysis import (
    EULER_GAMMA,
    KAPPA,
    LOG2,
    dickman_value,
    fractional_part_constant,
    theorem2_constant,
)
from trunclab.constructions import (
    extremal_condition,
    h_decomposition,
    liouville_window,
    realize_as_character,
    theorem2_extremal,
)
from trunclab.exceptions import TrunclabConfigException, TrunclabVerificationException
from trunclab.formats import load_assignment, parse_class
from trunclab.minimize import BnBConfig, delta0_brute, delta1_bnb, delta1_brute, delta_descent
from trunclab.rounding import round_to_pm1
from trunclab.scan import KINDS, ScanCheckpoint, Scanner
from trunclab.verify import verify_suite

METHODS_BY_CLASS = {
    "F": ("descent",),
    "F0": ("brute",),
    "F1": ("brute", "bnb"),
}


class Controller:
    """Runs the lab's operations under one RunConfig and checks what they return"""

    def __init__(self, config):
        self.config = config
        self.logger = logging.getLogger(__name__)

    def checkpoint_path(self, kind):
        return os.path.join(self.config.out_dir, f"{kind}_checkpoint.json")

    def scan(self, kind, bound, resume=None):
        if kind not in KINDS:
            raise TrunclabConfigException(f"Unknown scan kind '{kind}'; expected polya or turan")

        checkpoint = None
        if resume is not None:
            checkpoint = ScanCheckpoint.load(resume, expected_kind=kind)

        path = self.checkpoint_path(kind)
        scanner = Scanner(
            kind,
            threads=self.config.threads,
            sample_every=self.config.sample_every,
            flush_every=self.config.flush_every,
            segment_size=self.config.segment_size,
            on_flush=lambda anchor: anchor.save(path),
        )
        anchor, report = scanner.run(bound, checkpoint)
        anchor.save(path)
        return anchor, report

    def delta(self, x, fclass, method, starts=4):
        fclass = parse_class(fclass)
        if method not in METHODS_BY_CLASS[fclass]:
            raise TrunclabConfigException(f"Method '{method}' is not available for class {fclass}; "
                                          f"use one of {', '.join(METHODS_BY_CLASS[fclass])}")

        if method == "descent":
            return delta_descent(x, starts=starts, seed=self.config.seed, threads=self.config.threads)
        if method == "bnb":
            cfg = BnBConfig(node_budget=self.config.node_budget, parallel_width=self.config.threads)
            result = delta1_bnb(x, cfg)
            if result.certificate == "local":
                self.logger.warning(f"delta_1({x}) is only an upper bound: node budget {self.config.node_budget} hit")
            return result
        if fclass == "F0":
            return delta0_brute(x, ternary_budget=self.config.ternary_budget)
        return delta1_brute(x, max_primes=self.config.brute_max_primes)

    def round(self, x, input_path):
        f = load_assignment(input_path)
        rounded, trace = round_to_pm1(f, x)
        if not trace.sign_property_holds:
            bad = next(step for step in trace.steps if not step.sign_property_holds)
            raise TrunclabVerificationException(f"Rounding step j={bad.j} at p={bad.p} moved against S'={bad.S_j_prime}")
        return rounded, trace

    def window(self, x, N):
        report = liouville_window(x, N, threads=self.config.threads, segment_size=self.config.segment_size)
        if not report.identity_holds:
            self.logger.error(f"Window identity failed at x={x}, N={N}")
            raise TrunclabVerificationException(f"Window identity fails at x={x}, N={N}: "
                                                f"direct excess {report.lhs_excess}, expansion {report.general_excess}")
        return report

    def extremal(self, x):
        result = theorem2_extremal(x, threads=self.config.threads, segment_size=self.config.segment_size)
        condition = None
        decomposition = None
        if result.spec is not None:
            condition = extremal_condition(result.spec, x)
            decomposition = h_decomposition(result.spec, x)
        return result, condition, decomposition

    def realize(self, pattern_path, x, max_candidates=None):
        pattern = load_assignment(pattern_path)
        return realize_as_character(
            pattern,
            x,
            max_candidates=max_candidates or self.config.candidate_budget,
            threads=self.config.threads,
        )

    def constants(self, J=10 ** 6):
        report = theorem2_constant()
        fractional, gap = fractional_part_constant(J)
        return {
            "inner": report.inner,
            "full": report.full,
            "error_bound": report.error_bound,
            "inner_digits": report.inner_digits,
            "full_digits": report.full_digits,
            "kappa": KAPPA,
            "euler_gamma": EULER_GAMMA,
            "log2": LOG2,
            "fractional_part_constant": fractional,
            "fractional_part_gap": gap,
        }

    def rho(self, u, precision=1e-12):
        return dickman_value(u, precision)

    def verify(self, suite, size="quick"):
        report = verify_suite(suite, size=size, seed=self.config.seed, threads=self.config.threads)
        if not report.passed:
            names = ", ".join(f"{c.suite}/{c.name}" for c in report.failures)
            self.logger.error(f"Verification failed: {names}")
        return report
