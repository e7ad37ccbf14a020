"""Completely multiplicative and multiplicative functions bounded by one, and their truncated sums.

Every n <= x is generated exactly once as a product of prime powers with ascending primes, so
tables of f(n) cost one multiplication per integer and never factor anything.
"""
import functools
import logging
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Mapping, Optional, Tuple, Union

from sympy import factorint

from trunclab.exceptions import TrunclabConfigException
from trunclab.sieve import primes_up_to
from trunclab.summation import UNIT_ROUNDOFF, gamma

logger = logging.getLogger(__name__)

CLASSES = ("F", "F0", "F1")
CONTINUATIONS = ("multiplicative", "constant")
DEFAULT_H_TRUNCATION = 10 ** 6

Number = Union[Fraction, float]


def as_rational(value):
    """Parse ints, Fractions and "p/q" strings; floats stay floats (float mode only)"""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TrunclabConfigException(f"Not a number: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return value
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError):
            raise TrunclabConfigException(f"Cannot parse '{value}' as a rational p/q")
    raise TrunclabConfigException(f"Unsupported value type {type(value).__name__}")


def _compact(value):
    # integral Fractions become ints so that integer-valued tables stay in fast int arithmetic
    if isinstance(value, Fraction) and value.denominator == 1:
        return int(value.numerator)
    return value


def _check_class(p, value, fclass):
    if not -1 <= value <= 1:
        raise TrunclabConfigException(f"f({p}) = {value} lies outside [-1, 1]")
    if fclass == "F1" and value not in (-1, 1):
        raise TrunclabConfigException(f"Class F1 needs f({p}) in {{-1, +1}} (got {value})")
    if fclass == "F0" and value not in (-1, 0, 1):
        raise TrunclabConfigException(f"Class F0 needs f({p}) in {{-1, 0, +1}} (got {value})")
    if fclass != "F" and isinstance(value, float):
        raise TrunclabConfigException(f"Class {fclass} values must be exact (got float at {p})")


@dataclass(frozen=True)
class PrimeAssignment:
    """A completely multiplicative f given by its values on the primes <= x_max"""

    x_max: int
    fclass: str
    values: Mapping[int, Number]

    def __post_init__(self):
        if self.x_max < 1:
            raise TrunclabConfigException(f"x_max must be at least 1 (got {self.x_max})")
        if self.fclass not in CLASSES:
            raise TrunclabConfigException(f"Unknown class '{self.fclass}'; expected one of {', '.join(CLASSES)}")

        primes = primes_up_to(self.x_max).primes
        parsed = {int(p): as_rational(v) for p, v in self.values.items()}
        if set(parsed) != set(primes):
            missing = sorted(set(primes) - set(parsed))[:5]
            extra = sorted(set(parsed) - set(primes))[:5]
            raise TrunclabConfigException(f"Assignment keys must be exactly the primes <= {self.x_max} "
                                          f"(missing {missing}, unexpected {extra})")
        for p in primes:
            _check_class(p, parsed[p], self.fclass)

        object.__setattr__(self, "values", {p: parsed[p] for p in primes})

    @classmethod
    def constant(cls, x_max, value, fclass="F"):
        value = as_rational(value)
        return cls(x_max, fclass, {p: value for p in primes_up_to(x_max)})

    @classmethod
    def liouville(cls, x_max):
        return cls.constant(x_max, -1, "F1")

    @classmethod
    def ones(cls, x_max):
        return cls.constant(x_max, 1, "F1")

    @classmethod
    def from_sequence(cls, x_max, values, fclass):
        primes = primes_up_to(x_max).primes
        if len(values) != len(primes):
            raise TrunclabConfigException(f"Expected {len(primes)} prime values, got {len(values)}")
        return cls(x_max, fclass, dict(zip(primes, values)))

    @property
    def primes(self):
        return tuple(self.values)

    @property
    def is_exact(self):
        return all(isinstance(v, Fraction) for v in self.values.values())

    def __getitem__(self, p):
        return self.values[p]

    def signs(self):
        """Prime values in ascending prime order; the key used for lexicographic tie-breaks"""
        return tuple(self.values.values())

    def with_value(self, p, value, fclass=None):
        values = dict(self.values)
        values[p] = as_rational(value)
        return PrimeAssignment(self.x_max, fclass or self.fclass, values)

    def reclassified(self, fclass):
        return PrimeAssignment(self.x_max, fclass, self.values)

    def tightest_class(self):
        values = set(self.values.values())
        if values <= {-1, 1}:
            return "F1"
        if values <= {-1, 0, 1}:
            return "F0"
        return "F"

    def power_value(self, p, k):
        return _compact(self.values[p]) ** k

    def restricted(self, x):
        return PrimeAssignment(x, self.fclass, {p: v for p, v in self.values.items() if p <= x})


@dataclass(frozen=True)
class MultSpec:
    """A multiplicative f* given by (f*(p), f*(p^2), ...) for every p^k <= x_max

    Beyond the stored powers a prime continues either completely multiplicatively
    (f*(p^(k+1)) = f*(p) f*(p^k)) or constantly (f*(p^k) = last stored value).
    """

    x_max: int
    values: Mapping[int, Tuple[Number, ...]]
    continuation: Mapping[int, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.x_max < 1:
            raise TrunclabConfigException(f"x_max must be at least 1 (got {self.x_max})")

        primes = primes_up_to(self.x_max).primes
        parsed = {int(p): tuple(as_rational(v) for v in seq) for p, seq in self.values.items()}
        if set(parsed) != set(primes):
            raise TrunclabConfigException(f"MultSpec keys must be exactly the primes <= {self.x_max}")
        for p in primes:
            expected = _max_power(p, self.x_max)
            if len(parsed[p]) != expected:
                raise TrunclabConfigException(f"Prime {p} needs {expected} stored powers up to {self.x_max} "
                                              f"(got {len(parsed[p])})")
            for k, v in enumerate(parsed[p], start=1):
                if not -1 <= v <= 1:
                    raise TrunclabConfigException(f"f*({p}^{k}) = {v} lies outside [-1, 1]")

        continuation = {int(p): c for p, c in self.continuation.items()}
        for p, c in continuation.items():
            if c not in CONTINUATIONS:
                raise TrunclabConfigException(f"Unknown continuation '{c}' for prime {p}")
            if p not in parsed:
                raise TrunclabConfigException(f"Continuation given for {p}, which is not a stored prime")

        object.__setattr__(self, "values", {p: parsed[p] for p in primes})
        object.__setattr__(self, "continuation", continuation)

    @classmethod
    def from_assignment(cls, f):
        values = {p: tuple(f[p] ** k for k in range(1, _max_power(p, f.x_max) + 1)) for p in f.primes}
        return cls(f.x_max, values)

    @classmethod
    def from_rule(cls, x_max, rule, continuation=None):
        """Build from a callable rule(p, k) -> f*(p^k)"""
        values = {p: tuple(rule(p, k) for k in range(1, _max_power(p, x_max) + 1)) for p in primes_up_to(x_max)}
        return cls(x_max, values, continuation or {})

    @property
    def primes(self):
        return tuple(self.values)

    @property
    def is_exact(self):
        return all(isinstance(v, Fraction) for seq in self.values.values() for v in seq)

    def continuation_of(self, p):
        return self.continuation.get(p, "multiplicative")

    def at(self, p, k):
        """f*(p^k) for any k >= 0, following the continuation rule past the stored powers"""
        if k == 0:
            return Fraction(1)
        seq = self.values[p]
        if k <= len(seq):
            return seq[k - 1]
        if self.continuation_of(p) == "constant":
            return seq[-1]
        return seq[-1] * seq[0] ** (k - len(seq))

    def power_value(self, p, k):
        return _compact(self.values[p][k - 1])

    def associated(self):
        """The completely multiplicative f with f(p) = f*(p)"""
        return PrimeAssignment(self.x_max, "F", {p: seq[0] for p, seq in self.values.items()})


@dataclass(frozen=True)
class ExactSum:
    mode: str
    value: Number
    error_bound: float = 0.0

    def __post_init__(self):
        if self.mode not in ("exact", "float"):
            raise TrunclabConfigException(f"Unknown summation mode '{self.mode}'")
        if self.mode == "exact" and not isinstance(self.value, Fraction):
            raise TrunclabConfigException("Exact sums must hold a rational value")
        if self.mode == "exact" and self.error_bound != 0:
            raise TrunclabConfigException("Exact sums carry no error")

    def __float__(self):
        return float(self.value)

    def encloses(self, true_value):
        return abs(float(self.value) - float(true_value)) <= self.error_bound if self.mode == "float" \
            else self.value == true_value


@dataclass(frozen=True)
class HSeries:
    """The h of f* = h * f, with H0 and H1 and the data behind them"""

    h_values: Dict[int, Fraction]
    H0: Fraction
    H1: float
    truncation_bound: int
    H0_truncated: Fraction
    H1_truncated: float
    tail_bound: float
    local_factors: Dict[int, Fraction]
    two_adic_moment: Fraction
    odd_part: Fraction

    def h(self, d):
        if d == 1:
            return Fraction(1)
        value = Fraction(1)
        for p, k in factorization(d):
            value *= self.h_values.get(p ** k, Fraction(0))
        return value


def _max_power(p, x):
    k = 0
    pk = p
    while pk <= x:
        k += 1
        pk *= p
    return k


@functools.lru_cache(maxsize=4096)
def factorization(n):
    return tuple(sorted((int(p), int(k)) for p, k in factorint(n).items()))


def multiplicative_table(x, primes, power_value, one=1):
    """[0, f(1), ..., f(x)] for the multiplicative f with f(p^k) = power_value(p, k)"""
    table = [0] * (x + 1)
    if x < 1:
        return table
    table[1] = one
    stack = [(1, one, 0)]
    while stack:
        n, value, i = stack.pop()
        for j in range(i, len(primes)):
            p = primes[j]
            if n * p > x:
                break
            m, k = n * p, 1
            while m <= x:
                v = value * power_value(p, k)
                table[m] = v
                stack.append((m, v, j + 1))
                m *= p
                k += 1
    return table


def smooth_layers(x, primes):
    """For each prime index i, the triples (n, m, k) with n = m p_i^k <= x and m p_{i-1}-smooth

    Walking the layers in order rebuilds any completely multiplicative table one prime at a time.
    """
    layers = [[] for _ in primes]
    stack = [(1, 0)]
    while stack:
        n, i = stack.pop()
        for j in range(i, len(primes)):
            p = primes[j]
            if n * p > x:
                break
            m, k = n * p, 1
            while m <= x:
                layers[j].append((m, n, k))
                stack.append((m, j + 1))
                m *= p
                k += 1
    for layer in layers:
        layer.sort()
    return layers


def lcm_up_to(x):
    result = 1
    for p in primes_up_to(x):
        result *= p ** _max_power(p, x)
    return result


def values_table(f, x):
    _check_range(f, x)
    primes = [p for p in f.primes if p <= x]
    one = 1 if f.is_exact else 1.0
    return multiplicative_table(x, primes, f.power_value, one)


def exact_harmonic_sum(table, x):
    if all(isinstance(v, int) for v in table[1:x + 1]):
        D = lcm_up_to(x)
        return Fraction(sum(table[n] * (D // n) for n in range(1, x + 1) if table[n]), D)
    total = Fraction(0)
    for n in range(1, x + 1):
        if table[n]:
            total += Fraction(table[n]) / n
    return total


def truncated_sum(f, x, mode="exact"):
    """S_f(x) = sum_{n<=x} f(n)/n"""
    if mode == "exact" and not f.is_exact:
        raise TrunclabConfigException("Exact mode needs rational values; use mode='float'")
    if x < 1:
        return ExactSum("exact", Fraction(0)) if mode == "exact" else ExactSum("float", 0.0, 0.0)

    if mode == "exact":
        return ExactSum("exact", exact_harmonic_sum(values_table(f, x), x))
    if mode != "float":
        raise TrunclabConfigException(f"Unknown summation mode '{mode}'")

    table = [float(v) for v in values_table(f, x)]
    terms = [table[n] / n for n in range(1, x + 1)]
    total = math.fsum(terms)
    mass = math.fsum(abs(t) for t in terms)
    # products of at most log2(x) factors, one division, one final rounding
    bound = gamma(x.bit_length() + 2) * mass + UNIT_ROUNDOFF * abs(total)
    return ExactSum("float", total, bound)


def mean_value(f, x, mode="exact"):
    """F(x) = (1/x) sum_{n<=x} f(n)"""
    if mode == "exact" and not f.is_exact:
        raise TrunclabConfigException("Exact mode needs rational values; use mode='float'")
    if x < 1:
        raise TrunclabConfigException(f"Mean value needs x >= 1 (got {x})")
    table = values_table(f, x)
    if mode == "exact":
        return ExactSum("exact", Fraction(sum(Fraction(v) for v in table[1:])) / x)
    values = [float(v) for v in table[1:]]
    total = math.fsum(values)
    mass = math.fsum(abs(v) for v in values)
    mean = total / x
    bound = (gamma(x.bit_length() + 1) * mass + UNIT_ROUNDOFF * abs(total)) / x + UNIT_ROUNDOFF * abs(mean)
    return ExactSum("float", mean, bound)


def eval_cm(f, n):
    if not 1 <= n <= f.x_max:
        raise TrunclabConfigException(f"n={n} is outside [1, {f.x_max}]")
    value = 1 if f.is_exact else 1.0
    for p, k in factorization(n):
        value *= f.power_value(p, k)
    return Fraction(value) if f.is_exact else value


def divisor_transform(f, x):
    """[0, g(1), ..., g(x)] with g(n) = sum_{d|n} f(d), built from g(p^k) = 1 + f(p) + ... + f(p)^k"""
    _check_range(f, x)
    primes = [p for p in f.primes if p <= x]

    def geometric(p, k):
        a = _compact(f[p])
        return sum(a ** i for i in range(k + 1))

    return multiplicative_table(x, primes, geometric, 1 if f.is_exact else 1.0)


def floor_identity(f, x):
    """Both sides of sum_{n<=x} g(n) = sum_{d<=x} f(d) [x/d], exactly"""
    g = divisor_transform(f, x)
    table = values_table(f, x)
    lhs = sum(Fraction(v) for v in g[1:])
    rhs = sum(Fraction(table[d]) * (x // d) for d in range(1, x + 1))
    return lhs, rhs


def prime_power_mass(fstar, p, sign=1):
    """sum_{k>=1} (1 + sign f*(p^k)) / p^k, summed in closed form past the stored powers"""
    if p not in fstar.values:
        raise TrunclabConfigException(f"Prime {p} is not stored (x_max={fstar.x_max})")
    seq = fstar.values[p]
    K = len(seq)
    r = Fraction(1, p)
    mass = sum((1 + sign * v) * r ** k for k, v in enumerate(seq, start=1))
    geometric_tail = r ** K / (p - 1)
    if fstar.continuation_of(p) == "constant":
        return mass + (1 + sign * seq[-1]) * geometric_tail
    # multiplicative tail: sum_{j>=1} (1 + sign c a^j) / p^(K+j)
    a, c = seq[0], seq[-1]
    return mass + geometric_tail + sign * c * r ** K * (a * r) / (1 - a * r)


def two_adic_mass(fstar):
    """sum_k (1 + f*(2^k)) / 2^k; small mass is necessary for a large negative S_f*(x)"""
    if 2 not in fstar.values:
        raise TrunclabConfigException("The 2-adic mass needs x_max >= 2")
    return prime_power_mass(fstar, 2, 1)


def h_transform(fstar, truncation_bound=None):
    """h(p^k) = f*(p^k) - f(p) f*(p^(k-1)), and H0 = sum h(d)/d, H1 = -sum h(d) log d / d

    H0 and H1 are evaluated exactly through local factors E_p = sum_k h(p^k)/p^k (h vanishes
    on primes, so only primes where f* leaves complete multiplicativity contribute); the sums over
    d <= truncation_bound are reported alongside with a tail bound for sum_{d>B} |h(d)|/d.
    """
    if not fstar.is_exact:
        raise TrunclabConfigException("The h-transform needs rational prime-power values")
    B = truncation_bound or max(fstar.x_max, DEFAULT_H_TRUNCATION)

    h_values = {}
    local_factors = {}
    moments = {}
    rankin = {}
    for p in fstar.primes:
        a = fstar.values[p][0]
        K = len(fstar.values[p])
        h_stored = [fstar.at(p, k) - a * fstar.at(p, k - 1) for k in range(1, K + 1)]
        tail = Fraction(0)
        if fstar.continuation_of(p) == "constant":
            tail = fstar.values[p][-1] * (1 - a)

        if not any(h_stored) and tail == 0:
            continue

        r = Fraction(1, p)
        E = 1 + sum(h * r ** k for k, h in enumerate(h_stored, start=1))
        A = sum(k * h * r ** k for k, h in enumerate(h_stored, start=1))
        R = 1 + sum(abs(float(h)) * p ** (-2 * k / 3) for k, h in enumerate(h_stored, start=1))
        if tail:
            E += tail * r ** (K + 1) / (1 - r)
            A += tail * r ** (K + 1) * ((K + 1) - K * r) / (1 - r) ** 2
            R += abs(float(tail)) * p ** (-2 * (K + 1) / 3) / (1 - p ** (-2 / 3))

        local_factors[p] = E
        moments[p] = A
        rankin[p] = R

        pk, k = p, 1
        while pk <= B:
            h = h_stored[k - 1] if k <= K else tail
            if h:
                h_values[pk] = h
            pk *= p
            k += 1

    H0 = Fraction(1)
    for E in local_factors.values():
        H0 *= E

    H1 = 0.0
    for p, A in moments.items():
        others = Fraction(1)
        for q, E in local_factors.items():
            if q != p:
                others *= E
        H1 -= math.log(p) * float(A * others)

    H0_truncated, H1_truncated = _truncated_h_sums(h_values, B)
    tail_bound = B ** (-1 / 3) * math.prod(rankin.values())

    odd_part = Fraction(1)
    for p, E in local_factors.items():
        if p != 2:
            odd_part *= E

    logger.debug(f"h-transform: {len(local_factors)} non-trivial primes, H0={H0}, H1={H1:.6g}")
    return HSeries(
        h_values=h_values,
        H0=H0,
        H1=H1,
        truncation_bound=B,
        H0_truncated=H0_truncated,
        H1_truncated=H1_truncated,
        tail_bound=tail_bound,
        local_factors=local_factors,
        two_adic_moment=moments.get(2, Fraction(0)),
        odd_part=odd_part,
    )


def _h_support(h_values, bound):
    """All (d, h(d)) with d <= bound and h(d) != 0, d = 1 first, built from the stored prime powers"""
    by_prime = {}
    for pk, h in sorted(h_values.items()):
        if pk <= bound:
            by_prime.setdefault(factorization(pk)[0][0], []).append((pk, h))
    primes = sorted(by_prime)
    support = []
    stack = [(1, Fraction(1), 0)]
    while stack:
        d, h, i = stack.pop()
        support.append((d, h))
        for j in range(i, len(primes)):
            for pk, hp in by_prime[primes[j]]:
                if d * pk > bound:
                    break
                stack.append((d * pk, h * hp, j + 1))
    return support


def _truncated_h_sums(h_values, B):
    """sum_{d<=B} h(d)/d exactly and -sum_{d<=B} h(d) log d / d in floating point"""
    H0 = Fraction(0)
    H1 = 0.0
    for d, h in _h_support(h_values, B):
        H0 += h / d
        if d > 1:
            H1 -= float(h) * math.log(d) / d
    return H0, H1


def convolution_check(fstar, x):
    """Exact check of f*(n) = sum_{d|n} h(d) f(n/d) for every n <= x; returns (ok, max |deviation|)"""
    if x > fstar.x_max:
        raise TrunclabConfigException(f"x={x} exceeds x_max={fstar.x_max}")
    series = h_transform(fstar, truncation_bound=max(x, 1))
    f = fstar.associated()
    f_table = values_table(f, x)
    fstar_table = multiplicative_table(x, [p for p in fstar.primes if p <= x], fstar.power_value)

    convolved = [Fraction(0)] * (x + 1)
    divisors = sorted(_h_support(series.h_values, x))
    for d, h in divisors:
        for m in range(1, x // d + 1):
            convolved[d * m] += h * f_table[m]

    deviation = max((abs(Fraction(fstar_table[n]) - convolved[n]) for n in range(1, x + 1)), default=Fraction(0))
    return deviation == 0, deviation


def random_assignment(x_max, fclass, rng: Optional[random.Random] = None, denominator=4):
    """A seeded random member of F, F0 or F1; class F values are multiples of 1/denominator"""
    rng = rng or random.Random(0)
    primes = primes_up_to(x_max).primes
    if fclass == "F1":
        values = [rng.choice((-1, 1)) for _ in primes]
    elif fclass == "F0":
        values = [rng.choice((-1, 0, 1)) for _ in primes]
    elif fclass == "F":
        values = [Fraction(rng.randint(-denominator, denominator), denominator) for _ in primes]
    else:
        raise TrunclabConfigException(f"Unknown class '{fclass}'")
    return PrimeAssignment.from_sequence(x_max, values, fclass)


def random_multspec(x_max, rng: Optional[random.Random] = None, denominator=2):
    rng = rng or random.Random(0)
    return MultSpec.from_rule(x_max, lambda p, k: Fraction(rng.randint(-denominator, denominator), denominator))


def _check_range(f, x):
    if x > f.x_max:
        raise TrunclabConfigException(f"x={x} exceeds x_max={f.x_max}")
