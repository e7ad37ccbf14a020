"""Prime-by-prime rounding of any f in F to a member of F1 whose truncated sum is no larger."""
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Tuple

from trunclab.exceptions import TrunclabConfigException
from trunclab.multfunc import PrimeAssignment, values_table

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RoundingStep:
    j: int
    p: int
    S_j_x: Fraction
    S_j_prime: Fraction
    old_value: Fraction
    new_sign: int
    delta: Fraction
    regime: str

    @property
    def sign_property_holds(self):
        return (self.new_sign - self.old_value) * self.S_j_prime <= 0


@dataclass(frozen=True)
class RoundingTrace:
    x: int
    steps: Tuple[RoundingStep, ...]
    initial_sum: Fraction
    final_sum: Fraction

    @property
    def sign_property_holds(self):
        return all(step.sign_property_holds for step in self.steps)


def s_prime(f, p, y):
    """S'(y) = sum over m <= y coprime to p of f(m)/m, exactly"""
    if y > f.x_max:
        raise TrunclabConfigException(f"y={y} exceeds x_max={f.x_max}")
    if y < 1:
        return Fraction(0)
    table = values_table(f, y)
    return _coprime_sum(table, p, y)


def _coprime_sum(table, p, y):
    return sum((Fraction(table[m]) / m for m in range(1, y + 1) if m % p and table[m]), Fraction(0))


def round_to_pm1(f, x):
    """Replace f(p_j) for j = k down to 1 by -1 when S_j'(x/p_j) > 0 and by +1 otherwise

    The value table and S_j(x) are updated in place over the multiples of p_j after each step,
    so every recorded sum is exact.
    """
    if x > f.x_max:
        raise TrunclabConfigException(f"x={x} exceeds x_max={f.x_max}")
    if not f.is_exact:
        raise TrunclabConfigException("Rounding needs exact rational prime values")
    if x < 1:
        raise TrunclabConfigException(f"x must be at least 1 (got {x})")

    current = f.restricted(x) if f.x_max > x else f
    values = dict(current.values)
    table = [Fraction(v) for v in values_table(current, x)]
    total = sum((table[n] / n for n in range(1, x + 1)), Fraction(0))
    initial_sum = total
    threshold = math.log(x) ** 2 if x > 1 else 0.0

    primes = current.primes
    steps = []
    for j in range(len(primes), 0, -1):
        p = primes[j - 1]
        S_prime = _coprime_sum(table, p, x // p)
        old = values[p]
        new = -1 if S_prime > 0 else 1

        before = total
        if new != old:
            total += _reassign(table, p, x, Fraction(new))
            values[p] = Fraction(new)

        steps.append(RoundingStep(
            j=j,
            p=p,
            S_j_x=before,
            S_j_prime=S_prime,
            old_value=old,
            new_sign=new,
            delta=total - before,
            regime="small" if p <= threshold else "large",
        ))
        logger.debug(f"Rounding step j={j} p={p}: S'={S_prime} -> {new:+d}")

    rounded = PrimeAssignment(x, "F1", values)
    trace = RoundingTrace(x=x, steps=tuple(steps), initial_sum=initial_sum, final_sum=total)
    logger.info(f"Rounded at x={x}: {initial_sum} -> {total}")
    return rounded, trace


def _reassign(table, p, x, value):
    """Rewrite f(p^v m) = value^v f(m) for p not dividing m; returns the change of the sum"""
    delta = Fraction(0)
    pv, v = p, 1
    while pv <= x:
        scale = value ** v
        for m in range(1, x // pv + 1):
            if m % p == 0:
                continue
            n = m * pv
            updated = table[m] * scale
            delta += (updated - table[n]) / n
            table[n] = updated
        pv *= p
        v += 1
    return delta
