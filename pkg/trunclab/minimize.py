"""Minima of S_f(x) over F, F0 and F1.

Exhaustive searches and the branch-and-bound work on integers: every weight 1/n is scaled by
D = lcm(1, ..., x), so a partial objective is an exact int and one Fraction is built at the end.
"""
import itertools
import logging
import math
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Tuple

import sympy as sp
from sympy import Poly, Rational

from trunclab.exceptions import TrunclabBudgetExceededException, TrunclabConfigException
from trunclab.multfunc import ExactSum, PrimeAssignment, lcm_up_to, smooth_layers, truncated_sum, values_table
from trunclab.sieve import primes_up_to

logger = logging.getLogger(__name__)

METHODS = ("brute", "bnb", "descent")
DEFAULT_BRUTE_MAX_PRIMES = 28
DEFAULT_TERNARY_BUDGET = 3 ** 13
DESCENT_TOLERANCE = Fraction(1, 10 ** 12)
ROOT_WIDTH = Rational(1, 10 ** 15)


@dataclass(frozen=True)
class MinResult:
    x: int
    fclass: str
    value: ExactSum
    minimizer: PrimeAssignment
    method: str
    certificate: str
    nodes_visited: int = 0

    def __post_init__(self):
        if self.method not in METHODS:
            raise TrunclabConfigException(f"Unknown method '{self.method}'")
        if self.certificate not in ("global", "local"):
            raise TrunclabConfigException(f"Unknown certificate '{self.certificate}'")
        if self.certificate == "global" and self.method == "descent":
            raise TrunclabConfigException("Descent can only certify a local minimum")
        if self.minimizer.fclass != self.fclass:
            raise TrunclabConfigException(f"Minimizer class {self.minimizer.fclass} does not match {self.fclass}")

    @property
    def at_vertex(self):
        return all(v in (-1, 1) for v in self.minimizer.values.values())


@dataclass(frozen=True)
class BnBConfig:
    node_budget: int = 10_000_000
    parallel_width: int = 1
    split_depth: int = 3
    tie_break: str = "lexicographic"

    def __post_init__(self):
        if self.node_budget < 1:
            raise TrunclabConfigException(f"node_budget must be at least 1 (got {self.node_budget})")
        if self.parallel_width < 1:
            raise TrunclabConfigException(f"parallel_width must be at least 1 (got {self.parallel_width})")
        if self.split_depth < 0:
            raise TrunclabConfigException(f"split_depth must be non-negative (got {self.split_depth})")
        if self.tie_break != "lexicographic":
            raise TrunclabConfigException(f"Unsupported tie-break rule '{self.tie_break}'")


@dataclass(frozen=True)
class VertexReport:
    x: int
    descent: MinResult
    bnb: MinResult
    gap: Fraction = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "gap", self.bnb.value.value - self.descent.value.value)

    @property
    def at_vertex(self):
        return self.descent.at_vertex

    @property
    def values_equal(self):
        return self.gap == 0


class _SearchSpace:
    """Integer-scaled objective over n <= x, filled one prime layer at a time"""

    def __init__(self, x, primes):
        self.x = x
        self.primes = tuple(primes)
        self.layers = smooth_layers(x, self.primes)
        self.scale = lcm_up_to(x)
        self.weights = [0] + [self.scale // n for n in range(1, x + 1)]
        self.layer_mass = [sum(self.weights[n] for n, _, _ in layer) for layer in self.layers]

    def new_table(self):
        table = [0] * (self.x + 1)
        table[1] = 1
        return table

    def extend(self, table, depth, value):
        """Write f on layer depth given f(p_depth) = value; returns the scaled contribution"""
        total = 0
        for n, m, k in self.layers[depth]:
            v = table[m] * value ** k
            table[n] = v
            total += v * self.weights[n]
        return total


def _check_x(x):
    if x < 1:
        raise TrunclabConfigException(f"x must be at least 1 (got {x})")


def _exhaustive(x, fclass, choices):
    space = _SearchSpace(x, primes_up_to(x).primes)
    table = space.new_table()
    depth_count = len(space.primes)
    best = [None, ()]
    current = []
    nodes = 0

    # leaves arrive in lexicographic order, so only a strict improvement replaces the incumbent
    def descend(depth, partial):
        nonlocal nodes
        nodes += 1
        if depth == depth_count:
            if best[0] is None or partial < best[0]:
                best[0], best[1] = partial, tuple(current)
            return
        for a in choices:
            current.append(a)
            descend(depth + 1, partial + space.extend(table, depth, a))
            current.pop()

    descend(0, space.weights[1])

    minimizer = PrimeAssignment.from_sequence(x, best[1], fclass)
    value = ExactSum("exact", Fraction(best[0], space.scale))
    logger.info(f"Exhaustive {fclass} search at x={x}: {value.value} after {nodes} nodes")
    return MinResult(x, fclass, value, minimizer, "brute", "global", nodes)


def delta1_brute(x, max_primes=DEFAULT_BRUTE_MAX_PRIMES):
    _check_x(x)
    count = len(primes_up_to(x))
    if count > max_primes:
        logger.error(f"Refusing a 2^{count} enumeration at x={x}")
        raise TrunclabBudgetExceededException(f"pi({x}) = {count} exceeds the brute-force bound of {max_primes} primes")
    return _exhaustive(x, "F1", (-1, 1))


def delta0_brute(x, ternary_budget=DEFAULT_TERNARY_BUDGET):
    _check_x(x)
    count = len(primes_up_to(x))
    if 3 ** count > ternary_budget:
        logger.error(f"Refusing a 3^{count} enumeration at x={x}")
        raise TrunclabBudgetExceededException(f"3^pi({x}) = 3^{count} exceeds the ternary budget of {ternary_budget} assignments")
    return _exhaustive(x, "F0", (-1, 0, 1))


def large_prime_reduction(partial, x):
    """Complete a partial assignment on the primes <= sqrt(x) optimally on the primes in (sqrt(x), x]

    For p > sqrt(x) the multiples of p up to x are p m with m <= x/p < p, so the total contribution
    of p is f(p)/p times S(x/p), and f(p) = -sign(S(x/p)) with -1 on ties.
    """
    _check_x(x)
    root = math.isqrt(x)
    if partial.x_max < root:
        raise TrunclabConfigException(f"Partial assignment covers primes <= {partial.x_max}, needs all primes <= {root}")
    small = partial.restricted(root) if partial.x_max > root else partial

    table = values_table(small, root)
    prefix = [Fraction(0)] * (root + 1)
    for m in range(1, root + 1):
        prefix[m] = prefix[m - 1] + Fraction(table[m]) / m

    values = dict(small.values)
    for p in primes_up_to(x):
        if p > root:
            values[p] = Fraction(-1) if prefix[x // p] >= 0 else Fraction(1)
    return PrimeAssignment(x, small.fclass, values)


class _BranchAndBound:
    def __init__(self, x, cfg):
        self.x = x
        self.cfg = cfg
        primes = primes_up_to(x).primes
        self.root = math.isqrt(x)
        self.small = tuple(p for p in primes if p <= self.root)
        self.large = tuple(p for p in primes if p > self.root)
        self.space = _SearchSpace(x, self.small)
        total_mass = sum(self.space.weights[2:])
        determined = 0
        # mass of the n <= x not yet fixed once the first d small primes are assigned
        self.open_mass = [total_mass]
        for mass in self.space.layer_mass:
            determined += mass
            self.open_mass.append(total_mass - determined)

    def complete(self, table):
        """Scaled value of the best completion over the large primes, and their signs"""
        weights = self.space.weights
        prefix = [0] * (self.root + 1)
        for m in range(1, self.root + 1):
            prefix[m] = prefix[m - 1] + table[m] * weights[m]
        total = 0
        signs = []
        for p in self.large:
            s = prefix[self.x // p]
            sign = -1 if s >= 0 else 1
            signs.append(sign)
            total += sign * (s // p)
        return total, tuple(signs)

    def incumbent(self):
        table = self.space.new_table()
        partial = self.space.weights[1]
        for depth in range(len(self.small)):
            partial += self.space.extend(table, depth, -1)
        tail, signs = self.complete(table)
        return partial + tail, (-1,) * len(self.small) + signs

    def explore(self, prefix, incumbent_value, budget):
        """Search the subtree below a fixed prefix; returns (value, signs, nodes, exhausted)"""
        table = self.space.new_table()
        partial = self.space.weights[1]
        for depth, a in enumerate(prefix):
            partial += self.space.extend(table, depth, a)

        best = [incumbent_value, None]
        current = list(prefix)
        nodes = 0
        exhausted = False
        depth_count = len(self.small)

        def descend(depth, partial):
            nonlocal nodes, exhausted
            if exhausted:
                return
            if nodes >= budget:
                exhausted = True
                return
            nodes += 1

            if depth == depth_count:
                tail, signs = self.complete(table)
                if partial + tail < best[0]:
                    best[0], best[1] = partial + tail, tuple(current) + signs
                return

            if partial - self.open_mass[depth] >= best[0]:
                return

            for a in (-1, 1):
                current.append(a)
                descend(depth + 1, partial + self.space.extend(table, depth, a))
                current.pop()

        descend(len(prefix), partial)
        return best[0], best[1], nodes, exhausted

    def run(self):
        incumbent_value, incumbent_signs = self.incumbent()
        split = min(self.cfg.split_depth, len(self.small))
        prefixes = list(itertools.product((-1, 1), repeat=split))
        budget = max(1, self.cfg.node_budget // len(prefixes))

        def task(prefix):
            return self.explore(prefix, incumbent_value, budget)

        if self.cfg.parallel_width > 1 and len(prefixes) > 1:
            with ThreadPoolExecutor(max_workers=self.cfg.parallel_width) as executor:
                outcomes = list(executor.map(task, prefixes))
        else:
            outcomes = [task(prefix) for prefix in prefixes]

        best_value, best_signs = incumbent_value, incumbent_signs
        nodes = 0
        exhausted = False
        for value, signs, visited, ran_out in outcomes:
            nodes += visited
            exhausted = exhausted or ran_out
            if signs is not None and value < best_value:
                best_value, best_signs = value, signs
        return best_value, best_signs, nodes, exhausted


def delta1_bnb(x, cfg: Optional[BnBConfig] = None):
    """delta_1(x) by branching on the primes <= sqrt(x) and completing the rest by large_prime_reduction"""
    _check_x(x)
    cfg = cfg or BnBConfig()
    search = _BranchAndBound(x, cfg)
    value, signs, nodes, exhausted = search.run()

    minimizer = PrimeAssignment.from_sequence(x, signs, "F1")
    certificate = "local" if exhausted else "global"
    if exhausted:
        logger.warning(f"Node budget {cfg.node_budget} exhausted at x={x}; returning the best incumbent")
    logger.info(f"Branch-and-bound at x={x}: {Fraction(value, search.space.scale)} after {nodes} nodes ({certificate})")
    return MinResult(x, "F1", ExactSum("exact", Fraction(value, search.space.scale)), minimizer, "bnb", certificate, nodes)


def coordinate_polynomial(f, x, p):
    """Coefficients c_0..c_K of S_f(x) as a polynomial in a = f(p), the other prime values fixed

    c_v = sum over m <= x/p^v with p not dividing m of f(m) / (m p^v).
    """
    table = values_table(f, x)
    coefficients = []
    pv = 1
    while pv <= x:
        coefficients.append(sum((Fraction(table[m]) / (m * pv) for m in range(1, x // pv + 1) if m % p), Fraction(0)))
        pv *= p
    return coefficients


def evaluate_polynomial(coefficients, a):
    value = Fraction(0)
    for c in reversed(coefficients):
        value = value * a + c
    return value


def minimize_on_box(coefficients):
    """The least point of the polynomial on [-1, 1]; ties go to the smaller argument"""
    candidates = {Fraction(-1), Fraction(1)}
    if len(coefficients) > 2:
        a = sp.Symbol("a")
        derivative = Poly([Rational(k * c.numerator, c.denominator) for k, c in reversed(list(enumerate(coefficients)))][:-1], a)
        if not derivative.is_zero:
            for root in derivative.real_roots(radicals=False):
                if root.is_Rational:
                    r = Fraction(int(root.p), int(root.q))
                else:
                    approx = root.eval_rational(dx=ROOT_WIDTH)
                    r = Fraction(int(approx.p), int(approx.q))
                if -1 < r < 1:
                    candidates.add(r)
    return min(candidates, key=lambda a: (evaluate_polynomial(coefficients, a), a))


@dataclass(frozen=True)
class DescentRun:
    value: Fraction
    minimizer: PrimeAssignment
    steps: int
    converged: bool
    objective_path: Tuple[Fraction, ...]


def descent_run(x, start, tolerance=DESCENT_TOLERANCE, max_sweeps=200):
    """One exact coordinate descent from `start`; objective_path holds S_f(x) after every accepted move"""
    primes = start.primes
    values = dict(start.values)
    path = [truncated_sum(PrimeAssignment(x, "F", values), x).value]
    steps = 0
    converged = False
    for _ in range(max_sweeps):
        moved = False
        for p in reversed(primes):
            f = PrimeAssignment(x, "F", values)
            coefficients = coordinate_polynomial(f, x, p)
            current = evaluate_polynomial(coefficients, values[p])
            a = minimize_on_box(coefficients)
            steps += 1
            lowered = current - evaluate_polynomial(coefficients, a)
            if lowered > tolerance:
                values[p] = a
                moved = True
                path.append(path[-1] - lowered)
        if not moved:
            converged = True
            break

    final = PrimeAssignment(x, "F", values)
    if not converged:
        logger.warning(f"Descent at x={x} stopped after {max_sweeps} sweeps without converging")
    return DescentRun(truncated_sum(final, x).value, final, steps, converged, tuple(path))


def delta_descent(x, starts=4, seed=0, extra_starts: Sequence[PrimeAssignment] = (), threads=1,
                  tolerance=DESCENT_TOLERANCE, max_sweeps=200):
    """Local minima of S_f(x) over F by exact coordinate descent from several starts

    Starts are the all -1 function, then `starts` seeded random points, then any extra_starts.
    """
    _check_x(x)
    if starts < 0:
        raise TrunclabConfigException(f"Number of random starts must be non-negative (got {starts})")

    rng = random.Random(seed)
    primes = primes_up_to(x).primes
    initial = [PrimeAssignment.constant(x, -1, "F")]
    for _ in range(starts):
        initial.append(PrimeAssignment.from_sequence(x, [Fraction(rng.randint(-1024, 1024), 1024) for _ in primes], "F"))
    for extra in extra_starts:
        initial.append(extra.restricted(x).reclassified("F") if extra.x_max > x else extra.reclassified("F"))

    def task(start):
        return descent_run(x, start, tolerance, max_sweeps)

    if threads > 1 and len(initial) > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            outcomes = list(executor.map(task, initial))
    else:
        outcomes = [task(start) for start in initial]

    best = min(outcomes, key=lambda run: (run.value, run.minimizer.signs()))
    steps = sum(run.steps for run in outcomes)
    logger.info(f"Descent at x={x} from {len(initial)} starts: {best.value}")
    return MinResult(x, "F", ExactSum("exact", best.value), best.minimizer, "descent", "local", steps)


def vertex_report(x, cfg: Optional[BnBConfig] = None, starts=4, seed=0):
    """Compare the best continuous local minimum with delta_1(x); an empirical report only"""
    cfg = cfg or BnBConfig()
    exact = delta1_bnb(x, cfg)
    descent = delta_descent(x, starts=starts, seed=seed, extra_starts=[exact.minimizer], threads=cfg.parallel_width)
    return VertexReport(x, descent, exact)
