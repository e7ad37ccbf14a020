"""Cross-module verification suites: exact identities, oracle equivalences and bound properties.

Failures are data: every check records how many cases it ran and dumps its first counterexamples.
"""
import itertools
import logging
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List

from trunclab.analysis import trivial_bounds
from trunclab.constructions import (
    harmonic_weights,
    prop31_decomposition,
    realize_as_character,
    theorem2_extremal,
    window_identity,
)
from trunclab.exceptions import TrunclabConfigException, TrunclabVerificationException
from trunclab.formats import rational_to_str
from trunclab.minimize import BnBConfig, delta0_brute, delta1_bnb, delta1_brute, delta_descent, large_prime_reduction
from trunclab.multfunc import (
    PrimeAssignment,
    convolution_check,
    divisor_transform,
    h_transform,
    lcm_up_to,
    random_assignment,
    random_multspec,
    truncated_sum,
)
from trunclab.rounding import round_to_pm1
from trunclab.scan import turan_scan
from trunclab.sieve import liouville_range, omega_parity_oracle, primes_up_to

SUITES = ("identities", "oracles", "bounds", "all")
SIZES = ("quick", "full")
MAX_COUNTEREXAMPLES = 10

logger = logging.getLogger(__name__)


@dataclass
class CheckResult:
    suite: str
    name: str
    cases: int = 0
    counterexamples: List[Dict[str, Any]] = field(default_factory=list)
    failures: int = 0

    @property
    def passed(self):
        return self.failures == 0

    def record(self, ok, **details):
        self.cases += 1
        if not ok:
            self.failures += 1
            if len(self.counterexamples) < MAX_COUNTEREXAMPLES:
                self.counterexamples.append({k: _jsonable(v) for k, v in details.items()})

    def to_dict(self):
        return {
            "suite": self.suite,
            "name": self.name,
            "passed": self.passed,
            "cases": self.cases,
            "failures": self.failures,
            "counterexamples": self.counterexamples,
        }


@dataclass
class SuiteReport:
    name: str
    size: str
    seed: int
    checks: List[CheckResult] = field(default_factory=list)

    @property
    def passed(self):
        return all(check.passed for check in self.checks)

    @property
    def failures(self):
        return [check for check in self.checks if not check.passed]

    def to_dict(self):
        return {
            "suite": self.name,
            "size": self.size,
            "seed": self.seed,
            "passed": self.passed,
            "checks": [check.to_dict() for check in self.checks],
        }


def _jsonable(value):
    if isinstance(value, (Fraction, int)) and not isinstance(value, bool):
        return rational_to_str(value)
    if isinstance(value, float):
        return format(value, ".17g")
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def _within(exact_num, scale, approx, bound):
    """|exact_num / scale - approx| <= bound, decided in integers"""
    return abs(Fraction(approx) * scale - exact_num) <= Fraction(bound) * scale


def _sizes(size, quick, full):
    return quick if size == "quick" else full


# identities


def check_window(size, seed, threads=1):
    result = CheckResult("identities", "window")
    N_max, x_max = _sizes(size, (3, 600), (5, 10 ** 4))
    weights = harmonic_weights(x_max)
    for N in range(1, N_max + 1):
        for x in range(N * N + 1, x_max + 1):
            excess = window_identity(x, N, weights)
            result.record(excess.holds, x=x, N=N, lhs=excess.lhs, general=excess.general,
                          single_prime=excess.single_prime, primes_below_root=excess.primes_below_root)
    return result


def check_divisor_floor(size, seed, threads=1):
    result = CheckResult("identities", "divisor_floor")
    count, x_max = _sizes(size, (10, 200), (100, 1000))
    rng = random.Random(seed)
    for _ in range(count):
        x = rng.randint(1, x_max)
        f = random_assignment(x, "F", rng)
        report = prop31_decomposition(f, x)
        result.record(report.identity_holds, x=x, f=f.signs(), divisor_sum=report.divisor_sum,
                      floor_sum=report.floor_sum, fractional_sum=report.fractional_sum)
    return result


def check_convolution(size, seed, threads=1):
    result = CheckResult("identities", "convolution")
    count, x_max = _sizes(size, (5, 500), (50, 10 ** 4))
    rng = random.Random(seed + 1)
    for _ in range(count):
        fstar = random_multspec(x_max, rng)
        ok, deviation = convolution_check(fstar, x_max)
        result.record(ok, x=x_max, deviation=deviation)
    return result


# oracles


def check_bnb_vs_brute(size, seed, threads=1):
    result = CheckResult("oracles", "bnb_vs_brute")
    cfg = BnBConfig(parallel_width=threads)
    for x in range(1, _sizes(size, 30, 60) + 1):
        bnb = delta1_bnb(x, cfg)
        brute = delta1_brute(x)
        same = bnb.value.value == brute.value.value and bnb.minimizer.signs() == brute.minimizer.signs()
        result.record(same and bnb.certificate == "global", x=x, bnb=bnb.value.value, brute=brute.value.value,
                      bnb_minimizer=bnb.minimizer.signs(), brute_minimizer=brute.minimizer.signs())
    return result


def check_class_chain(size, seed, threads=1):
    """descent <= delta_0 <= delta_1, all of them >= -1; descent also starts from the delta_0 minimizer"""
    result = CheckResult("oracles", "class_chain")
    for x in range(1, _sizes(size, 12, 23) + 1):
        one = delta1_brute(x).value.value
        zero = delta0_brute(x)
        local = delta_descent(x, starts=2, seed=seed, extra_starts=[zero.minimizer], threads=threads).value.value
        result.record(-1 <= local <= zero.value.value <= one, x=x, descent=local, delta0=zero.value.value, delta1=one)
    return result


def check_large_prime_reduction(size, seed, threads=1):
    """Every partial on the primes <= sqrt(x) against all of its completions"""
    result = CheckResult("oracles", "large_prime_reduction")
    for x in range(1, _sizes(size, 20, 30) + 1):
        primes = primes_up_to(x).primes
        root = math.isqrt(x)
        small = [p for p in primes if p <= root]
        large = [p for p in primes if p > root]
        for signs in itertools.product((-1, 1), repeat=len(small)):
            partial = PrimeAssignment(root, "F1", dict(zip(small, signs)))
            reduced = truncated_sum(large_prime_reduction(partial, x), x).value
            best = min(
                truncated_sum(PrimeAssignment(x, "F1", {**dict(zip(small, signs)), **dict(zip(large, rest))}), x).value
                for rest in itertools.product((-1, 1), repeat=len(large))
            )
            result.record(reduced == best, x=x, partial=signs, reduced=reduced, brute=best)
    return result


KNOWN_MINIMA = (
    ("delta1", 4, Fraction(5, 12)),
    ("delta0", 4, Fraction(5, 12)),
    ("delta1", 10, Fraction(823, 2520)),
    ("descent", 2, Fraction(1, 2)),
    ("descent", 4, Fraction(5, 12)),
    ("descent", 9, Fraction(123, 560)),
    ("descent", 10, Fraction(179, 560)),
)


def check_known_minima(size, seed, threads=1):
    result = CheckResult("oracles", "known_minima")
    for kind, x, expected in KNOWN_MINIMA:
        if kind == "delta1":
            found = delta1_brute(x)
        elif kind == "delta0":
            found = delta0_brute(x)
        else:
            found = delta_descent(x, starts=0, seed=seed)
        result.record(found.value.value == expected, kind=kind, x=x, expected=expected, found=found.value.value)
    liouville = delta1_brute(10).minimizer
    result.record(liouville.signs() == PrimeAssignment.liouville(10).signs(), kind="minimizer", x=10,
                  found=liouville.signs())
    return result


def check_sieve_vs_oracle(size, seed, threads=1):
    result = CheckResult("oracles", "sieve_vs_oracle")
    bound = _sizes(size, 2000, 10 ** 5)
    block = liouville_range(1, bound, segment_size=997)
    for n in range(1, bound + 1):
        result.record(block.at(n) == omega_parity_oracle(n), n=n, sieve=block.at(n))
    return result


def check_float_T(size, seed, threads=1):
    """The Turan scan's T(x) encloses the exact rational T(x) at every x"""
    result = CheckResult("oracles", "float_T_vs_exact")
    bound = _sizes(size, 2000, 10 ** 5)
    _, report = turan_scan(bound, segment_size=1024, sample_every=1)
    scale = lcm_up_to(bound)
    # rows are in ascending x
    numerator, n = 0, 0
    for x, _, T, T_err in report.rows:
        while n < x:
            n += 1
            numerator += omega_parity_oracle(n) * (scale // n)
        result.record(_within(numerator, scale, T, T_err), x=x, T=T, T_err=T_err)
    return result


def check_extremal(size, seed, threads=1):
    result = CheckResult("oracles", "extremal_exact_vs_float")
    ten = theorem2_extremal(10).value.value
    result.record(ten == Fraction(-437, 2520), x=10, exact=ten)
    x = _sizes(size, 1000, 10 ** 5)
    exact = theorem2_extremal(x, mode="exact").value
    approx = theorem2_extremal(x, mode="float", segment_size=4096).value
    result.record(abs(float(exact.value) - approx.value) <= max(approx.error_bound, 1e-12),
                  x=x, exact=float(exact.value), float_value=approx.value, error_bound=approx.error_bound)
    return result


def check_witnesses(size, seed, threads=1):
    result = CheckResult("oracles", "character_witnesses")
    rng = random.Random(seed + 2)
    count, x_max = _sizes(size, (5, 12), (20, 20))
    patterns = [(PrimeAssignment.liouville(10), 10)]
    for _ in range(count):
        x = rng.randint(2, x_max)
        patterns.append((random_assignment(x, "F1", rng), x))
    for pattern, x in patterns:
        try:
            witness = realize_as_character(pattern, x, threads=threads)
            ok = witness.verified and witness.q > x
            q = witness.q
        except TrunclabVerificationException as e:
            ok, q = False, str(e)
        result.record(ok, x=x, pattern=pattern.signs(), q=q)
    return result


# bounds


def check_divisor_nonnegative(size, seed, threads=1):
    result = CheckResult("bounds", "divisor_nonnegative")
    count, x = _sizes(size, (20, 1000), (1000, 10 ** 5))
    rng = random.Random(seed + 3)
    for _ in range(count):
        f = random_assignment(x, "F", rng)
        g = divisor_transform(f, x)
        bad = next((n for n in range(1, x + 1) if g[n] < 0), None)
        result.record(bad is None, x=x, f=f.signs()[:10], n=bad, g=None if bad is None else g[bad])
    return result


def check_sums_above_minus_one(size, seed, threads=1):
    result = CheckResult("bounds", "sum_above_minus_one")
    count, x_max = _sizes(size, (10, 200), (100, 500))
    rng = random.Random(seed + 4)
    for _ in range(count):
        x = rng.randint(1, x_max)
        f = random_assignment(x, rng.choice(("F", "F0", "F1")), rng)
        bounds = trivial_bounds(f, x)
        result.record(bounds.chain_holds and bounds.above_minus_one and bounds.above_harmonic_floor,
                      x=x, f=f.signs(), S=bounds.S, divisor_sum=bounds.divisor_sum)
    return result


def check_H0_nonnegative(size, seed, threads=1):
    result = CheckResult("bounds", "H0_nonnegative")
    count, x_max = _sizes(size, (5, 100), (50, 1000))
    rng = random.Random(seed + 5)
    for _ in range(count):
        fstar = random_multspec(x_max, rng)
        series = h_transform(fstar, truncation_bound=x_max)
        result.record(series.H0 >= 0, x_max=x_max, H0=series.H0)
    return result


def check_rounding(size, seed, threads=1):
    result = CheckResult("bounds", "rounding_sign_property")
    count, x_max = _sizes(size, (20, 100), (200, 500))
    rng = random.Random(seed + 6)
    for _ in range(count):
        x = rng.randint(2, x_max)
        f = random_assignment(x, "F", rng)
        rounded, trace = round_to_pm1(f, x)
        bad = [step.j for step in trace.steps if not step.sign_property_holds]
        result.record(not bad and rounded.tightest_class() == "F1", x=x, f=f.signs(), failing_steps=bad)
    return result


CHECKS = {
    "identities": (check_window, check_divisor_floor, check_convolution),
    "oracles": (check_bnb_vs_brute, check_class_chain, check_large_prime_reduction, check_known_minima,
                check_sieve_vs_oracle, check_float_T, check_extremal, check_witnesses),
    "bounds": (check_divisor_nonnegative, check_sums_above_minus_one, check_H0_nonnegative, check_rounding),
}


def verify_suite(name, size="quick", seed=0, threads=1):
    """Run one suite (or all of them); never raises on a failed invariant"""
    if name not in SUITES:
        raise TrunclabConfigException(f"Unknown suite '{name}'; expected one of {', '.join(SUITES)}")
    if size not in SIZES:
        raise TrunclabConfigException(f"Unknown suite size '{size}'; expected quick or full")

    suites = ("identities", "oracles", "bounds") if name == "all" else (name,)
    report = SuiteReport(name, size, seed)
    for suite in suites:
        for check in CHECKS[suite]:
            logger.info(f"Running {suite}/{check.__name__}")
            outcome = check(size, seed, threads=threads)
            if not outcome.passed:
                logger.warning(f"{suite}/{outcome.name}: {outcome.failures} of {outcome.cases} cases failed")
            report.checks.append(outcome)
    return report
