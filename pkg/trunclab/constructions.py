"""Explicit extremal and near-extremal functions, with the exact identities behind them."""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Tuple

import numpy as np
import sympy

from trunclab.analysis import EULER_GAMMA
from trunclab.exceptions import (
    TrunclabBudgetExceededException,
    TrunclabConfigException,
    TrunclabVerificationException,
)
from trunclab.multfunc import (
    ExactSum,
    MultSpec,
    PrimeAssignment,
    divisor_transform,
    exact_harmonic_sum,
    factorization,
    h_transform,
    lcm_up_to,
    mean_value,
    multiplicative_table,
    prime_power_mass,
    truncated_sum,
    two_adic_mass,
    values_table,
)
from trunclab.scan import turan_scan
from trunclab.sieve import (
    DEFAULT_SEGMENT_SIZE,
    liouville_segment,
    prime_array,
    primes_up_to,
    restricted_signs,
    segment_bounds,
)
from trunclab.summation import CompensatedSum, fsum_with_bound, harmonic_terms

logger = logging.getLogger(__name__)

EXACT_LIMIT = 10 ** 4
SQRT_E = math.sqrt(math.e)
DEFAULT_MAX_CANDIDATES = 1_000_000


def exact_T(x):
    if x < 1:
        return Fraction(0)
    return truncated_sum(PrimeAssignment.liouville(x), x).value


@dataclass(frozen=True)
class WindowConstruction:
    x: int
    N: int
    window_primes: Tuple[int, ...]
    assignment: PrimeAssignment


@dataclass(frozen=True)
class WindowReport:
    """Both sides of S_f(x) = T(x) + excess, where T(x) is common to every form

    lhs_excess is S_f(x) - T(x) summed directly over the n where f and lambda differ;
    single_prime_excess is 2 sum_p T(x/p)/p; general_excess switches window primes one at a time and
    always equals lhs_excess. The single-prime form needs no window prime <= sqrt(x).
    """

    construction: WindowConstruction
    lhs_excess: Fraction
    single_prime_excess: Fraction
    general_excess: Fraction
    primes_below_root: Tuple[int, ...]
    T_x: Optional[ExactSum] = None
    haselgrove_delta: Optional[Fraction] = None
    limit_excess: Optional[float] = None

    @property
    def single_prime_form_applies(self):
        return not self.primes_below_root

    @property
    def general_holds(self):
        return self.lhs_excess == self.general_excess

    @property
    def single_prime_holds(self):
        return self.lhs_excess == self.single_prime_excess

    @property
    def identity_holds(self):
        return self.general_holds and (self.single_prime_holds or not self.single_prime_form_applies)

    @property
    def lhs(self):
        return None if self.T_x is None else _shift(self.T_x, self.lhs_excess)

    @property
    def rhs(self):
        return None if self.T_x is None else _shift(self.T_x, self.single_prime_excess)


def _shift(total, excess):
    if total.mode == "exact":
        return ExactSum("exact", total.value + excess)
    return ExactSum("float", total.value + float(excess), total.error_bound + abs(float(excess)) * 2.0 ** -52)


def window_primes(x, N):
    return tuple(p for p in primes_up_to(x // N) if p * (N + 1) > x)


def harmonic_weights(x):
    """(D, [0, D/1, ..., D/x]) with D = lcm(1, ..., x); any n <= x can reuse them"""
    scale = lcm_up_to(x)
    return scale, [0] + [scale // n for n in range(1, x + 1)]


@dataclass(frozen=True)
class WindowExcess:
    lhs: Fraction
    single_prime: Fraction
    general: Fraction
    primes_below_root: Tuple[int, ...]

    @property
    def holds(self):
        return self.lhs == self.general and (self.lhs == self.single_prime or bool(self.primes_below_root))


def window_identity(x, N, weights=None):
    """The three excess forms of the window identity, without the common T(x)

    Every multiple of a window prime p up to x is p l with l <= N, so all three forms are short
    sums; they are accumulated as integers over the common denominator of `weights`.
    """
    if N < 1:
        raise TrunclabConfigException(f"N must be at least 1 (got {N})")
    if x <= N * N:
        raise TrunclabConfigException(f"The window construction needs x > N^2 (got x={x}, N={N})")
    scale, W = weights or harmonic_weights(x)
    if len(W) <= x:
        raise TrunclabConfigException(f"Harmonic weights cover n <= {len(W) - 1}, need n <= {x}")

    window = window_primes(x, N)
    in_window = set(window)

    def window_count(m):
        return sum(k for p, k in factorization(m) if p in in_window)

    lhs = 0
    seen = set()
    for p in window:
        for l in range(1, x // p + 1):
            n = p * l
            if n in seen:
                continue
            seen.add(n)
            if (1 + window_count(l)) % 2:
                # f(n) = -lambda(n) = lambda(l)
                lhs += 2 * _liouville_except(l, ()) * W[n]

    single_prime = 0
    for p in window:
        single_prime += 2 * sum(_liouville_except(l, ()) * W[p * l] for l in range(1, x // p + 1))

    # switch window primes in ascending order; g is lambda with the earlier ones already flipped
    general = 0
    switched = set()
    for p in window:
        pv, v = p, 1
        while pv <= x:
            if v % 2:
                general += 2 * sum(_liouville_except(m, switched) * W[pv * m] for m in range(1, x // pv + 1) if m % p)
            pv *= p
            v += 1
        switched.add(p)

    root = math.isqrt(x)
    return WindowExcess(
        lhs=Fraction(lhs, scale),
        single_prime=Fraction(single_prime, scale),
        general=Fraction(general, scale),
        primes_below_root=tuple(p for p in window if p <= root),
    )


def _liouville_except(m, switched):
    """lambda(m) with every prime in `switched` counted as +1"""
    return -1 if sum(k for p, k in factorization(m) if p not in switched) % 2 else 1


def liouville_window(x, N, exact=None, threads=1, segment_size=DEFAULT_SEGMENT_SIZE):
    """The F1 function equal to lambda except +1 on the primes in (x/(N+1), x/N]

    The common term T(x) is summed exactly when exact (default: x <= 10^4), else by a Turan scan
    with its rigorous error bound.
    """
    excess = window_identity(x, N)
    window = window_primes(x, N)
    in_window = set(window)
    values = {p: Fraction(1 if p in in_window else -1) for p in primes_up_to(x)}
    construction = WindowConstruction(x, N, window, PrimeAssignment(x, "F1", values))
    exact = x <= EXACT_LIMIT if exact is None else exact

    if exact:
        T_x = ExactSum("exact", exact_T(x))
    else:
        _, report = turan_scan(x, threads=threads, segment_size=min(segment_size, max(1, x)))
        T_x = ExactSum("float", report.final_T, report.final_T_err)

    delta = -exact_T(N)
    limit_excess = None
    if construction.window_primes and x > N + 1:
        # prime number theorem estimate of sum 1/p over the window
        limit_excess = -2 * float(delta) * math.log(math.log(x / N) / math.log(x / (N + 1)))

    report = WindowReport(
        construction=construction,
        lhs_excess=excess.lhs,
        single_prime_excess=excess.single_prime,
        general_excess=excess.general,
        primes_below_root=excess.primes_below_root,
        T_x=T_x,
        haselgrove_delta=delta,
        limit_excess=limit_excess,
    )
    logger.info(f"Window x={x} N={N}: {len(construction.window_primes)} primes, identity holds: {report.identity_holds}")
    return report


@dataclass(frozen=True)
class Prop31Report:
    x: int
    S: Fraction
    G: Fraction
    M: Fraction
    residual: float
    divisor_sum: Fraction
    floor_sum: Fraction
    fractional_sum: Fraction

    @property
    def identity_holds(self):
        """sum g(n) = sum f(d) [x/d] = x S - sum f(d) {x/d}"""
        return self.divisor_sum == self.floor_sum == self.x * self.S - self.fractional_sum


def prop31_decomposition(f, x):
    """S = G + (1 - gamma) M + residual with G = (1/x) sum g(n), M = (1/x) sum f(n)"""
    if x > f.x_max:
        raise TrunclabConfigException(f"x={x} exceeds x_max={f.x_max}")
    if not f.is_exact:
        raise TrunclabConfigException("The decomposition needs exact rational prime values")

    table = values_table(f, x)
    g = divisor_transform(f, x)
    S = exact_harmonic_sum(table, x)
    divisor_sum = sum((Fraction(v) for v in g[1:]), Fraction(0))
    floor_sum = sum((Fraction(table[d]) * (x // d) for d in range(1, x + 1)), Fraction(0))
    fractional_sum = sum((Fraction(table[d]) * Fraction(x % d, d) for d in range(1, x + 1)), Fraction(0))

    G = divisor_sum / x
    M = mean_value(f, x).value
    residual = float(S) - float(G) - (1 - EULER_GAMMA) * float(M)
    return Prop31Report(x, S, G, M, residual, divisor_sum, floor_sum, fractional_sum)


def theorem2_threshold(x):
    return x ** (1 / (1 + SQRT_E))


def theorem2_spec(x):
    """f*(2^k) = -1, f*(p^k) = +1 for odd p <= y, and completely multiplicative -1 above y"""
    if x < 2:
        raise TrunclabConfigException(f"The extremal function needs x >= 2 (got {x})")
    y = theorem2_threshold(x)

    def rule(p, k):
        if p == 2:
            return -1
        if p <= y:
            return 1
        return (-1) ** k

    continuation = {p: "constant" for p in primes_up_to(x) if p == 2 or p <= y}
    return MultSpec.from_rule(x, rule, continuation)


@dataclass(frozen=True)
class ExtremalResult:
    x: int
    y: float
    value: ExactSum
    spec: Optional[MultSpec] = None


def theorem2_extremal(x, mode=None, threads=1, segment_size=DEFAULT_SEGMENT_SIZE):
    """S_f*(x) for the extremal multiplicative f*; exact up to 10^4 by default, sieved above"""
    if x < 2:
        raise TrunclabConfigException(f"The extremal function needs x >= 2 (got {x})")
    mode = mode or ("exact" if x <= EXACT_LIMIT else "float")
    y = theorem2_threshold(x)

    if mode == "exact":
        spec = theorem2_spec(x)
        table = multiplicative_table(x, spec.primes, spec.power_value)
        value = ExactSum("exact", exact_harmonic_sum(table, x))
        return ExtremalResult(x, y, value, spec)
    if mode != "float":
        raise TrunclabConfigException(f"Unknown evaluation mode '{mode}'")

    return ExtremalResult(x, y, _extremal_float(x, y, threads, segment_size))


def _extremal_segment(lo, hi, base_primes, small_primes):
    """f*(n) on [lo, hi): lambda(n) times (-1)^(Omega over primes <= y and 2) times -1 if n is even"""
    values = liouville_segment(lo, hi, base_primes).astype(np.int64) * restricted_signs(lo, hi, small_primes)
    even_start = lo + (lo % 2)
    if even_start < hi:
        values[even_start - lo::2] *= -1
    return values


def _extremal_float(x, y, threads, segment_size):
    base_primes = prime_array(math.isqrt(x))
    small = prime_array(int(y))
    small = small[small <= y]
    small_primes = np.union1d(np.array([2], dtype=np.int64), small)
    bounds = segment_bounds(1, x + 1, segment_size)

    def partial(bound):
        lo, hi = bound
        return fsum_with_bound(harmonic_terms(lo, hi, _extremal_segment(lo, hi, base_primes, small_primes)))

    if threads > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            partials = list(executor.map(partial, bounds))
    else:
        partials = [partial(b) for b in bounds]

    total = CompensatedSum()
    for value, bound in partials:
        total.add(value, bound)
    return ExactSum("float", total.total, total.error_bound + 2.0 ** -53 * abs(total.total))


@dataclass(frozen=True)
class HDecomposition:
    x: int
    exact: Fraction
    approximation: float
    H0: Fraction
    H1: float
    G: Fraction
    M: Fraction

    @property
    def gap(self):
        return float(self.exact) - self.approximation


def h_decomposition(fstar, x):
    """S_f*(x) next to H0 G + ((1 - gamma) H0 + H1) M, with G and M taken for the associated f"""
    if x > fstar.x_max:
        raise TrunclabConfigException(f"x={x} exceeds x_max={fstar.x_max}")
    series = h_transform(fstar)
    f = fstar.associated()
    exact = truncated_sum(fstar, x).value
    g = divisor_transform(f, x)
    G = sum((Fraction(v) for v in g[1:]), Fraction(0)) / x
    M = mean_value(f, x).value
    approximation = float(series.H0) * float(G) + ((1 - EULER_GAMMA) * float(series.H0) + series.H1) * float(M)
    return HDecomposition(x, exact, approximation, series.H0, series.H1, G, M)


@dataclass(frozen=True)
class ExtremalCondition:
    x: int
    y: float
    two_adic_mass: Fraction
    small_prime_defect: Fraction
    large_prime_excess: Fraction

    @property
    def total(self):
        return float(self.two_adic_mass) * math.log(self.x) + float(self.small_prime_defect + self.large_prime_excess)


def extremal_condition(fstar, x=None):
    """The three non-negative terms whose total must vanish for f* to be extremal"""
    x = x or fstar.x_max
    if x > fstar.x_max or x < 2:
        raise TrunclabConfigException(f"x={x} must lie in [2, {fstar.x_max}]")
    y = theorem2_threshold(x)
    defect = Fraction(0)
    excess = Fraction(0)
    for p in fstar.primes:
        if p > x or p == 2:
            continue
        if p <= y:
            defect += prime_power_mass(fstar, p, -1)
        else:
            excess += (1 + fstar.values[p][0]) / p
    return ExtremalCondition(x, y, two_adic_mass(fstar), defect, excess)


def jacobi(a, n):
    if isinstance(n, bool) or not isinstance(n, int) or n <= 0 or n % 2 == 0:
        raise TrunclabConfigException(f"The Jacobi symbol needs an odd positive modulus (got {n})")

    negate = False
    a = a % n
    while a != 0:
        while a % 2 == 0:
            a = a // 2
            if n % 8 == 3 or n % 8 == 5:
                negate = not negate

        if a % 4 == 3 and n % 4 == 3:
            negate = not negate

        (n, a) = (a, n)

        a = a % n

    if n == 1:
        return -1 if negate else 1

    return 0


@dataclass(frozen=True)
class ResidueCheck:
    n: int
    jacobi: int
    expected: int


@dataclass(frozen=True)
class CharacterWitness:
    pattern: PrimeAssignment
    x: int
    q: int
    residue_checks: Tuple[ResidueCheck, ...]
    candidates_tested: int = 0

    @property
    def verified(self):
        return all(check.jacobi == check.expected for check in self.residue_checks)


def _residue_classes(pattern):
    if 2 not in pattern.values:
        return None
    return (1, 7) if pattern[2] == 1 else (3, 5)


def _passes_legendre(q, odd_primes, expected):
    for r, e in zip(odd_primes, expected):
        if jacobi(r, q) != e:
            return False
    return sympy.isprime(q)


def realize_as_character(pattern, x, max_candidates=DEFAULT_MAX_CANDIDATES, threads=1, batch_size=256):
    """The least prime q > x with (n/q) = pattern(n) for every n <= x

    Candidates run through the residue classes mod 8 fixed by pattern(2), then the Legendre
    conditions are tested smallest prime first, then q is tested for primality; the witness is
    finally re-verified at every n <= x.
    """
    if x < 2:
        check = ResidueCheck(1, 1, 1)
        empty = PrimeAssignment(1, "F1", {})
        return CharacterWitness(empty, x, 2, (check,), 1)

    if pattern.x_max < x:
        raise TrunclabConfigException(f"Pattern covers primes <= {pattern.x_max}, needs all primes <= {x}")
    pattern = pattern.restricted(x) if pattern.x_max > x else pattern
    if pattern.tightest_class() != "F1":
        raise TrunclabConfigException("Character realization needs a +-1 pattern")

    classes = _residue_classes(pattern)
    odd_primes = tuple(p for p in pattern.primes if p != 2)
    expected = tuple(int(pattern[p]) for p in odd_primes)

    def candidates():
        q = x + 1
        while True:
            if q % 8 in classes:
                yield q
            q += 1

    found = None
    tested = 0
    stream = candidates()
    executor = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        while found is None:
            if tested >= max_candidates:
                logger.error(f"Character search for x={x} gave up after {tested} candidates")
                raise TrunclabBudgetExceededException(f"No witness among the first {tested} candidates q > {x} "
                                                      f"(max_candidates={max_candidates})")
            batch = [next(stream) for _ in range(min(batch_size, max_candidates - tested))]
            if executor is not None:
                outcomes = list(executor.map(lambda q: _passes_legendre(q, odd_primes, expected), batch))
            else:
                outcomes = [_passes_legendre(q, odd_primes, expected) for q in batch]
            for q, ok in zip(batch, outcomes):
                tested += 1
                if ok:
                    found = q
                    break
    finally:
        if executor is not None:
            executor.shutdown()

    checks = tuple(ResidueCheck(n, jacobi(n, found), int(_pattern_value(pattern, n))) for n in range(1, x + 1))
    witness = CharacterWitness(pattern, x, found, checks, tested)
    if not witness.verified:
        bad = next(c for c in checks if c.jacobi != c.expected)
        raise TrunclabVerificationException(f"Witness q={found} fails at n={bad.n}: ({bad.n}/{found}) = {bad.jacobi}, "
                                            f"pattern gives {bad.expected}")
    logger.info(f"Pattern on primes <= {x} realized by q={found} after {tested} candidates")
    return witness


def _pattern_value(pattern, n):
    return math.prod(pattern[p] ** k for p, k in factorization(n))
