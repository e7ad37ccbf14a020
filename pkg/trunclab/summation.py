"""Compensated floating-point summation with rigorous error bookkeeping."""
import math
from dataclasses import dataclass

import numpy as np

UNIT_ROUNDOFF = 2.0 ** -53


def two_sum(u, v):
    # Error free transformation of a sum: u + v == s + t exactly
    s = u + v
    up = s - v
    vpp = s - up
    up -= u
    vpp -= v
    t = -(up + vpp)
    return s, t


def gamma(k):
    """The classical bound gamma_k = k u / (1 - k u) for k successive roundings"""
    ku = k * UNIT_ROUNDOFF
    if ku >= 1:
        return math.inf
    return ku / (1 - ku)


@dataclass
class CompensatedSum:
    """A running sum held as (value, compensation) plus a proven bound on |stored - true|"""

    value: float = 0.0
    compensation: float = 0.0
    error_bound: float = 0.0

    def add(self, term, term_error=0.0):
        """Add a float whose own distance from the exact quantity is at most term_error"""
        self.value, t = two_sum(self.value, term)
        self.compensation += t
        self.error_bound += term_error + UNIT_ROUNDOFF * abs(self.compensation)
        return self

    def add_segment(self, terms):
        """Add a block of once-rounded terms through a correctly rounded math.fsum"""
        partial, bound = fsum_with_bound(terms)
        return self.add(partial, bound)

    @property
    def total(self):
        return self.value + self.compensation

    def running_values(self, terms):
        """Sums total + t_0 + ... + t_i for every i, with one bound valid for all of them

        The bound covers the stored error, the recursive cumulative sum (gamma_m times the
        absolute mass of the block) and the final rounding of each value.
        """
        terms = np.asarray(terms, dtype=np.float64)
        running = np.cumsum(terms) + self.total
        mass = float(np.abs(terms).sum()) if len(terms) else 0.0
        peak = float(np.abs(running).max()) if len(running) else 0.0
        bound = self.error_bound + gamma(len(terms) + 2) * (mass + abs(self.total)) + UNIT_ROUNDOFF * peak
        return running, bound

    def copy(self):
        return CompensatedSum(self.value, self.compensation, self.error_bound)


def harmonic_terms(lo, hi, signs):
    """signs[i] / (lo + i) as float64; each term is correctly rounded"""
    return np.asarray(signs, dtype=np.float64) / np.arange(lo, hi, dtype=np.float64)


def fsum_with_bound(terms):
    """A correctly rounded sum of float terms that carry a one-rounding error each

    Returns (sum, bound) where bound covers the representation error of every term
    (at most u times its magnitude) and the final rounding.
    """
    terms = np.asarray(terms, dtype=np.float64)
    total = math.fsum(terms)
    mass = float(np.abs(terms).sum()) if len(terms) else 0.0
    return total, UNIT_ROUNDOFF * (mass * (1 + 2 * UNIT_ROUNDOFF) + abs(total))
