import math
from fractions import Fraction

import pytest
import sympy

from trunclab.constructions import (
    exact_T,
    extremal_condition,
    h_decomposition,
    harmonic_weights,
    jacobi,
    liouville_window,
    prop31_decomposition,
    realize_as_character,
    theorem2_extremal,
    theorem2_spec,
    window_identity,
    window_primes,
)
from trunclab.exceptions import TrunclabBudgetExceededException, TrunclabConfigException
from trunclab.multfunc import MultSpec, PrimeAssignment, random_assignment, truncated_sum


def test_exact_T():
    assert exact_T(0) == 0
    assert exact_T(9) == Fraction(571, 2520)
    assert exact_T(10) == Fraction(823, 2520)


@pytest.mark.parametrize("x,N,excess", [(25, 2, Fraction(1, 11)), (49, 3, Fraction(1, 39))])
def test_window_single_prime_examples(x, N, excess):
    identity = window_identity(x, N)
    assert identity.lhs == identity.single_prime == identity.general == excess
    assert identity.primes_below_root == ()
    assert identity.holds


def test_window_with_prime_below_root():
    identity = window_identity(5, 2)
    assert window_primes(5, 2) == (2,)
    assert identity.primes_below_root == (2,)
    assert identity.lhs == identity.general == 1
    assert identity.single_prime == Fraction(1, 2)
    assert identity.holds


@pytest.mark.parametrize("x,N", [(25, 2), (49, 3), (5, 2), (200, 3), (1000, 7)])
def test_window_report_matches_direct_sum(x, N):
    report = liouville_window(x, N)
    assert report.identity_holds
    assert report.T_x.value == exact_T(x)
    assert report.lhs.value == truncated_sum(report.construction.assignment, x).value
    assert report.haselgrove_delta == -exact_T(N)


def test_window_needs_x_above_N_squared():
    with pytest.raises(TrunclabConfigException):
        window_identity(9, 3)
    with pytest.raises(TrunclabConfigException):
        window_identity(10, 0)
    with pytest.raises(TrunclabConfigException):
        window_identity(100, 2, weights=harmonic_weights(50))


def test_window_sweep():
    weights = harmonic_weights(400)
    for N in (1, 2, 3):
        for x in range(N * N + 1, 401):
            assert window_identity(x, N, weights).holds, (x, N)


def test_window_excess_is_the_difference_of_sums():
    for N in (1, 2, 3):
        for x in range(N * N + 1, 150):
            report = liouville_window(x, N)
            direct = truncated_sum(report.construction.assignment, x).value - exact_T(x)
            assert report.lhs_excess == direct, (x, N)


@pytest.mark.slow
def test_window_full_sweep():
    weights = harmonic_weights(10 ** 4)
    for N in range(1, 6):
        for x in range(N * N + 1, 10 ** 4 + 1):
            assert window_identity(x, N, weights).holds, (x, N)


def test_window_float_mode():
    report = liouville_window(2000, 3, exact=False, segment_size=256)
    assert report.T_x.mode == "float"
    assert report.T_x.encloses(exact_T(2000))
    assert report.identity_holds
    assert report.limit_excess is not None


def test_extremal_value_at_ten():
    result = theorem2_extremal(10)
    assert result.value.value == Fraction(-437, 2520)
    assert result.spec is not None


def test_extremal_float_encloses_exact():
    exact = theorem2_extremal(1000).value.value
    approx = theorem2_extremal(1000, mode="float", segment_size=128).value
    assert approx.encloses(exact)
    assert approx.error_bound < 1e-12


def test_extremal_float_is_independent_of_threads_and_segments():
    one = theorem2_extremal(50000, mode="float", threads=1, segment_size=4096).value
    four = theorem2_extremal(50000, mode="float", threads=4, segment_size=4096).value
    assert one == four
    other = theorem2_extremal(50000, mode="float", segment_size=1000).value
    assert abs(other.value - one.value) <= other.error_bound + one.error_bound


def test_extremal_needs_x_at_least_two():
    with pytest.raises(TrunclabConfigException):
        theorem2_extremal(1)
    with pytest.raises(TrunclabConfigException):
        theorem2_extremal(100, mode="interval")


def test_extremal_condition_vanishes():
    condition = extremal_condition(theorem2_spec(500))
    assert condition.two_adic_mass == 0
    assert condition.small_prime_defect == 0
    assert condition.large_prime_excess == 0
    assert condition.total == 0


def test_extremal_condition_of_liouville():
    condition = extremal_condition(MultSpec.from_assignment(PrimeAssignment.liouville(500)))
    assert condition.two_adic_mass == Fraction(2, 3)
    assert condition.large_prime_excess == 0
    assert condition.total > 0


def test_h_decomposition_of_the_extremal_function():
    decomposition = h_decomposition(theorem2_spec(300), 300)
    assert decomposition.H0 == 0
    assert abs(decomposition.H1 - 3 * math.log(2)) < 1e-12
    assert decomposition.exact == theorem2_extremal(300).value.value
    assert math.isfinite(decomposition.gap)


def test_prop31_for_ones():
    report = prop31_decomposition(PrimeAssignment.ones(1000), 1000)
    assert report.identity_holds
    assert abs(report.residual) < 0.02


def test_prop31_identity_random(rng):
    for fclass in ("F", "F0", "F1"):
        report = prop31_decomposition(random_assignment(300, fclass, rng), 300)
        assert report.identity_holds


def test_jacobi_matches_sympy():
    for n in range(1, 200, 2):
        for a in range(-10, 60):
            assert jacobi(a, n) == sympy.jacobi_symbol(a, n), (a, n)


def test_jacobi_needs_odd_modulus():
    with pytest.raises(TrunclabConfigException):
        jacobi(3, 10)
    with pytest.raises(TrunclabConfigException):
        jacobi(3, -5)


def test_liouville_pattern_witness():
    witness = realize_as_character(PrimeAssignment.liouville(10), 10)
    assert witness.q == 43
    assert witness.verified
    assert [check.n for check in witness.residue_checks] == list(range(1, 11))


def test_all_plus_pattern_witness():
    witness = realize_as_character(PrimeAssignment.ones(3), 3)
    assert witness.q == 23
    assert witness.verified


def test_trivial_pattern_witness():
    witness = realize_as_character(PrimeAssignment.ones(1), 1)
    assert witness.q == 2
    assert witness.verified


def test_random_patterns_are_realized(rng):
    for _ in range(5):
        pattern = random_assignment(20, "F1", rng)
        one = realize_as_character(pattern, 20)
        four = realize_as_character(pattern, 20, threads=4, batch_size=16)
        assert one.q == four.q
        assert one.verified
        assert sympy.isprime(one.q) and one.q > 20


def test_character_budget():
    with pytest.raises(TrunclabBudgetExceededException):
        realize_as_character(PrimeAssignment.liouville(10), 10, max_candidates=3)


def test_character_pattern_validation():
    with pytest.raises(TrunclabConfigException):
        realize_as_character(PrimeAssignment.liouville(5), 10)
    with pytest.raises(TrunclabConfigException):
        realize_as_character(PrimeAssignment.constant(10, 0, "F0"), 10)
