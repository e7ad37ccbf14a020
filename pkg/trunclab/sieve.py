"""Segmented sieves for primes and the Liouville function.

The Liouville function is sieved through the parity of Omega: every prime-power hit flips the
parity of the integers it divides, and a remainder array catches the one prime factor above the
square root of the segment end that a sieve by small primes cannot see.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from trunclab.exceptions import TrunclabBudgetExceededException, TrunclabConfigException

logger = logging.getLogger(__name__)

DEFAULT_SEGMENT_SIZE = 1 << 20
DEFAULT_BUDGET_MEM = 1 << 22


@dataclass(frozen=True)
class PrimeList:
    bound: int
    primes: Tuple[int, ...]

    def __len__(self):
        return len(self.primes)

    def __iter__(self):
        return iter(self.primes)

    def __contains__(self, n):
        return n in self._as_set()

    def _as_set(self):
        cached = self.__dict__.get("_set")
        if cached is None:
            cached = frozenset(self.primes)
            object.__setattr__(self, "_set", cached)
        return cached


@dataclass(frozen=True, eq=False)
class LiouvilleBlock:
    start: int
    values: np.ndarray

    def __len__(self):
        return len(self.values)

    @property
    def stop(self):
        return self.start + len(self.values)

    def at(self, n):
        if not self.start <= n < self.stop:
            raise TrunclabConfigException(f"{n} is outside the block [{self.start}, {self.stop})")
        return int(self.values[n - self.start])


def prime_array(bound):
    """All primes <= bound as an int64 numpy array"""
    if bound < 2:
        return np.array([], dtype=np.int64)

    is_prime = np.ones(bound + 1, dtype=bool)
    is_prime[:2] = False
    for p in range(2, math.isqrt(bound) + 1):
        if is_prime[p]:
            is_prime[p * p::p] = False
    return np.flatnonzero(is_prime).astype(np.int64)


def primes_up_to(bound):
    if bound < 0:
        raise TrunclabConfigException(f"Prime bound must be non-negative (got {bound})")
    return PrimeList(bound=bound, primes=tuple(int(p) for p in prime_array(bound)))


def liouville_segment(lo, hi, base_primes):
    """lambda(n) for lo <= n < hi as an int8 array; base_primes must cover sqrt(hi - 1)"""
    if lo < 1 or hi <= lo:
        raise TrunclabConfigException(f"Invalid segment [{lo}, {hi})")

    last = hi - 1
    remainder = np.arange(lo, hi, dtype=np.int64)
    parity = np.zeros(hi - lo, dtype=np.int8)

    for p in base_primes:
        p = int(p)
        if p * p > last:
            break
        pk = p
        while pk <= last:
            first = -(-lo // pk) * pk
            if first <= last:
                hits = slice(first - lo, None, pk)
                remainder[hits] //= p
                parity[hits] ^= 1
            pk *= p

    # at most one prime factor above sqrt(last) survives
    parity[remainder > 1] ^= 1
    return (1 - 2 * parity).astype(np.int8)


def restricted_signs(lo, hi, primes):
    """(-1)^(number of prime factors of n from `primes`, with multiplicity) for lo <= n < hi, as int64"""
    parity = np.zeros(hi - lo, dtype=np.int8)
    last = hi - 1
    for p in primes:
        p = int(p)
        pk = p
        while pk <= last:
            first = -(-lo // pk) * pk
            if first <= last:
                parity[first - lo::pk] ^= 1
            pk *= p
    return 1 - 2 * parity.astype(np.int64)


def segment_bounds(start, stop, segment_size):
    """Split [start, stop) on the fixed grid of multiples of segment_size"""
    bounds = []
    lo = start
    while lo < stop:
        hi = min((lo // segment_size + 1) * segment_size, stop)
        bounds.append((lo, hi))
        lo = hi
    return bounds


def liouville_range(start, length, segment_size=DEFAULT_SEGMENT_SIZE, budget_mem=DEFAULT_BUDGET_MEM, threads=1):
    if start < 1 or length < 1:
        raise TrunclabConfigException(f"liouville_range needs start >= 1 and len >= 1 (got start={start}, len={length})")
    if length > budget_mem:
        raise TrunclabBudgetExceededException(f"Block of {length} values exceeds the memory budget of {budget_mem} integers")
    if segment_size < 1:
        raise TrunclabConfigException(f"Segment size must be positive (got {segment_size})")

    stop = start + length
    base_primes = prime_array(math.isqrt(stop - 1))
    bounds = segment_bounds(start, stop, segment_size)
    logger.debug(f"Sieving lambda on [{start}, {stop}) in {len(bounds)} segments")

    if threads > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            pieces = list(executor.map(lambda b: liouville_segment(b[0], b[1], base_primes), bounds))
    else:
        pieces = [liouville_segment(lo, hi, base_primes) for lo, hi in bounds]

    return LiouvilleBlock(start=start, values=np.concatenate(pieces))


def omega_parity_oracle(n):
    """(-1)^Omega(n) by trial division; the reference the sieve is tested against"""
    count = 0
    d = 2
    while d * d <= n:
        while n % d == 0:
            n //= d
            count += 1
        d += 1
    if n > 1:
        count += 1
    return -1 if count % 2 else 1
