"""Numerical backend: the Dickman function, the extremal constant and diagnostic bound shapes.

Bound reports evaluate right-hand sides without their implied constants and never assert an
inequality; they are data for comparison only.
"""
import functools
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, Optional

import mpmath
import numpy as np
from numpy.polynomial import legendre

from trunclab.exceptions import TrunclabConfigException, TrunclabPrecisionException
from trunclab.multfunc import divisor_transform, exact_harmonic_sum, mean_value, values_table
from trunclab.sieve import DEFAULT_SEGMENT_SIZE, liouville_segment, prime_array, restricted_signs, segment_bounds

logger = logging.getLogger(__name__)

EULER_GAMMA_DIGITS = "0.57721566490153286061"
LOG2_DIGITS = "0.69314718055994530942"
EULER_GAMMA = float(EULER_GAMMA_DIGITS)
LOG2 = float(LOG2_DIGITS)
KAPPA = 0.32867

MIN_PRECISION = 1e-14
DICKMAN_NODES = 12
DICKMAN_PANELS = 8
DICKMAN_MAX_PANELS = 128
BOUND_NAMES = ("lipschitz31", "lipschitz32", "hildebrand35", "halltenenbaum36", "theorem1")


@functools.lru_cache(maxsize=None)
def _panel_rule(nodes):
    """Gauss-Legendre nodes, weights, partial-integration matrix and inverse Vandermonde on [-1, 1]"""
    xi, w = legendre.leggauss(nodes)
    vandermonde = legendre.legvander(xi, nodes - 1)
    inverse = np.linalg.inv(vandermonde)
    # antiderivatives of P_j from -1, evaluated at every node
    partial = np.empty((nodes, nodes))
    for j in range(nodes):
        basis = np.zeros(nodes)
        basis[j] = 1.0
        partial[:, j] = legendre.legval(xi, legendre.legint(basis, lbnd=-1))
    return xi, w, partial @ inverse, inverse


class DickmanTable:
    """rho on [0, u_max] as piecewise polynomials on panels of width 1/panels_per_unit

    Panels are aligned with the integers, where rho loses smoothness. On each panel the integral
    equation u rho(u) = int_{u-1}^{u} rho(t) dt becomes a small linear system at the Gauss nodes;
    the part of the integral that reaches back one unit is read from already solved panels.
    """

    def __init__(self, u_max, panels_per_unit=DICKMAN_PANELS, nodes=DICKMAN_NODES):
        if u_max < 0:
            raise TrunclabConfigException(f"u_max must be non-negative (got {u_max})")
        self.u_max = max(1, math.ceil(u_max))
        self.panels_per_unit = panels_per_unit
        self.nodes = nodes
        self.step = 1.0 / panels_per_unit

        xi, w, A, inverse = _panel_rule(nodes)
        self._inverse = inverse
        M = panels_per_unit
        h = self.step
        half = h / 2

        total_panels = self.u_max * M
        values = np.ones((total_panels, nodes))
        integrals = np.empty(total_panels)
        integrals[:M] = h
        for j in range(M, total_panels):
            a = j * h
            t = a + half * (1 + xi)
            previous = values[j - M]
            # tail of the panel one unit back, then the full panels between
            history = half * ((w - A) @ previous) + integrals[j - M + 1:j].sum()
            system = np.diag(t) - half * A
            values[j] = np.linalg.solve(system, history)
            integrals[j] = half * (w @ values[j])

        self.values = values
        self.integrals = integrals
        self._cumulative = np.concatenate(([0.0], np.cumsum(integrals)))

    def _locate(self, u):
        if u < 0 or u > self.u_max:
            raise TrunclabConfigException(f"u={u} is outside the table range [0, {self.u_max}]")
        j = min(int(u / self.step), len(self.values) - 1)
        s = 2 * (u - j * self.step) / self.step - 1
        return j, s

    def __call__(self, u):
        if u <= 1:
            return 1.0
        j, s = self._locate(u)
        return float(legendre.legval(s, self._inverse @ self.values[j]))

    def cumulative(self, u):
        """int_0^u rho(t) dt"""
        j, s = self._locate(u)
        coefficients = self._inverse @ self.values[j]
        partial = legendre.legval(s, legendre.legint(coefficients, lbnd=-1)) * self.step / 2
        return float(self._cumulative[j] + partial)

    def integral(self, a, b):
        return self.cumulative(b) - self.cumulative(a)

    def residual(self, u):
        """rho(u) - (1/u) int_{u-1}^{u} rho, which vanishes for u >= 1"""
        return self(u) - self.integral(u - 1, u) / u


@functools.lru_cache(maxsize=32)
def dickman_table(u_max, panels_per_unit=DICKMAN_PANELS):
    return DickmanTable(u_max, panels_per_unit)


@dataclass(frozen=True)
class DickmanValue:
    u: float
    value: float
    error_bound: float
    panels_per_unit: int


def dickman_rho(u, precision=1e-12):
    """rho(u) to an absolute precision, estimated by comparing two panel widths"""
    return dickman_value(u, precision).value


def dickman_value(u, precision=1e-12):
    if u < 0:
        raise TrunclabConfigException(f"The Dickman function needs u >= 0 (got {u})")
    if precision < MIN_PRECISION:
        raise TrunclabPrecisionException(f"Precision {precision:g} is below the attainable {MIN_PRECISION:g}")
    if u <= 1:
        return DickmanValue(u, 1.0, 0.0, 0)

    u_max = math.ceil(u)
    M = DICKMAN_PANELS
    coarse = dickman_table(u_max, M)(u)
    while M <= DICKMAN_MAX_PANELS:
        fine = dickman_table(u_max, 2 * M)(u)
        error = abs(fine - coarse) + 64 * np.finfo(float).eps * abs(fine)
        if error <= precision:
            return DickmanValue(u, fine, error, 2 * M)
        coarse = fine
        M *= 2

    logger.error(f"Dickman rho({u}) did not reach {precision:g} with {DICKMAN_MAX_PANELS} panels per unit")
    raise TrunclabPrecisionException(f"rho({u}) cannot be computed to {precision:g} with the configured grid")


def sigma_minus(xi):
    if xi < 0:
        raise TrunclabConfigException(f"sigma_minus needs xi >= 0 (got {xi})")
    return xi * dickman_rho(xi)


@dataclass(frozen=True)
class ConstantReport:
    inner: float
    full: float
    error_bound: float
    inner_digits: str
    full_digits: str


def _inner_constant(dps):
    with mpmath.workdps(dps):
        root_e = mpmath.sqrt(mpmath.e)
        integral, error = mpmath.quad(lambda t: mpmath.log(t) / (t + 1), [1, root_e], error=True)
        return 1 - 2 * mpmath.log(1 + root_e) + 4 * integral, error


def theorem2_constant():
    """1 - 2 log(1 + sqrt e) + 4 int_1^sqrt(e) log t / (t + 1) dt, and the same times log 2"""
    coarse, _ = _inner_constant(20)
    inner, quad_error = _inner_constant(40)
    error = float(abs(inner - coarse) + abs(quad_error))
    with mpmath.workdps(40):
        full = inner * mpmath.mpf(LOG2_DIGITS)
        return ConstantReport(
            inner=float(inner),
            full=float(full),
            error_bound=error,
            inner_digits=mpmath.nstr(inner, 15),
            full_digits=mpmath.nstr(full, 15),
        )


def fractional_part_constant(J):
    """sum_{j<=J} (log(1 + 1/j) - 1/(j + 1)) = log(J + 1) - H_{J+1} + 1, which tends to 1 - gamma"""
    if J < 1:
        raise TrunclabConfigException(f"J must be at least 1 (got {J})")
    with mpmath.workdps(30):
        value = mpmath.log(J + 1) - mpmath.harmonic(J + 1) + 1
        return float(value), float(value - (1 - mpmath.mpf(EULER_GAMMA_DIGITS)))


@dataclass(frozen=True)
class BoundReport:
    name: str
    inputs: Dict[str, Any]
    lhs: Optional[float]
    rhs_shape: float
    note: str
    extras: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.name not in BOUND_NAMES:
            raise TrunclabConfigException(f"Unknown bound '{self.name}'")


def hildebrand_bound(u, x):
    if u < 0:
        raise TrunclabConfigException(f"u must be non-negative (got {u})")
    if x <= 1:
        raise TrunclabConfigException(f"x must exceed 1 (got {x})")
    shape = math.exp(-u * math.exp(u / 2)) * math.log(x)
    return BoundReport(
        name="hildebrand35",
        inputs={"u": u, "x": x},
        lhs=None,
        rhs_shape=shape,
        note="shape e^(-u e^(u/2)) log x only; beta and the implied constant are unspecified",
    )


def hall_tenenbaum_u(f, x):
    """u = sum_{p<=x} (1 - f(p))/p next to the shape e^(-kappa u) and the measured |F(x)|"""
    if x > f.x_max:
        raise TrunclabConfigException(f"x={x} exceeds x_max={f.x_max}")
    u_exact = sum((Fraction(1 - f[p]) / p for p in f.primes if p <= x), Fraction(0))
    u = float(u_exact)
    measured = abs(mean_value(f, x, "exact" if f.is_exact else "float").value)
    return BoundReport(
        name="halltenenbaum36",
        inputs={"x": x, "u": u, "u_exact": u_exact},
        lhs=float(measured),
        rhs_shape=math.exp(-KAPPA * u),
        note=f"kappa = {KAPPA} as printed (truncated); implied constant unspecified",
    )


def lipschitz_check(f, x, w):
    """|F(x) - F(x/w)| with F(t) = (1/t) sum_{n<=t} f(n), next to both Lipschitz shapes"""
    if x > f.x_max:
        raise TrunclabConfigException(f"x={x} exceeds x_max={f.x_max}")
    if not 1 <= w <= x / 10:
        raise TrunclabConfigException(f"w must satisfy 1 <= w <= x/10 (got w={w}, x={x})")

    table = values_table(f, x)
    prefix_x = sum((Fraction(v) for v in table[1:]), Fraction(0))
    prefix_w = sum((Fraction(v) for v in table[1:x // w + 1]), Fraction(0))
    F_x = prefix_x / x
    F_w = prefix_w * w / x
    lhs = abs(F_x - F_w)

    ratio = math.log(2 * w) / math.log(x)
    log_log = math.log(math.log(x)) if x > math.e else 0.0
    shape31 = ratio ** (1 - 2 / math.pi) * math.log(1 / ratio) + log_log / math.log(x) ** (2 - math.sqrt(3))
    return BoundReport(
        name="lipschitz32",
        inputs={"x": x, "w": w},
        lhs=float(lhs),
        rhs_shape=ratio ** 0.25,
        note="shapes without implied constants; diagnostic only",
        extras={"lhs_exact": lhs, "lhs31": float(abs(abs(F_x) - abs(F_w))), "rhs31_shape": shape31},
    )


def theorem1_bounds(x, value=None):
    """Lower shape -1/(log log x)^(3/5) and upper shape -1/log x, next to an optional computed minimum"""
    if x <= math.e:
        raise TrunclabConfigException(f"x must exceed e (got {x})")
    return BoundReport(
        name="theorem1",
        inputs={"x": x},
        lhs=None if value is None else float(value),
        rhs_shape=-1 / math.log(math.log(x)) ** 0.6 if math.log(x) > 1 else -math.inf,
        note="lower and upper shapes without implied constants",
        extras={"upper_shape": -1 / math.log(x)},
    )


@dataclass(frozen=True)
class TrivialBounds:
    x: int
    S: Fraction
    divisor_sum: Fraction
    harmonic_floor: Fraction

    @property
    def chain_holds(self):
        """0 <= sum g(n) <= x S + x, hence S >= -1"""
        return 0 <= self.divisor_sum <= self.x * self.S + self.x

    @property
    def above_minus_one(self):
        return self.S >= -1

    @property
    def above_harmonic_floor(self):
        return self.S >= self.harmonic_floor


def trivial_bounds(f, x):
    if x > f.x_max:
        raise TrunclabConfigException(f"x={x} exceeds x_max={f.x_max}")
    table = values_table(f, x)
    S = exact_harmonic_sum(table, x)
    divisor_sum = sum((Fraction(v) for v in divisor_transform(f, x)[1:]), Fraction(0))
    harmonic_floor = -exact_harmonic_sum([0] + [1] * x, x)
    return TrivialBounds(x, S, divisor_sum, harmonic_floor)


def r_function_mean(x, segment_size=DEFAULT_SEGMENT_SIZE):
    """(1/x) sum r(n) for the completely multiplicative r = +1 on p <= x^(1/(1+sqrt e)), -1 above"""
    if x < 1:
        raise TrunclabConfigException(f"x must be at least 1 (got {x})")
    y = x ** (1 / (1 + math.sqrt(math.e)))
    base_primes = prime_array(math.isqrt(x))
    small = prime_array(int(y))
    small = small[small <= y]

    total = 0
    for lo, hi in segment_bounds(1, x + 1, segment_size):
        values = liouville_segment(lo, hi, base_primes).astype(np.int64)
        total += int((values * restricted_signs(lo, hi, small)).sum())
    return Fraction(total, x)
