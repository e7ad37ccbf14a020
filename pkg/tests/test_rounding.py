from fractions import Fraction

import pytest

from trunclab.exceptions import TrunclabConfigException
from trunclab.multfunc import PrimeAssignment, random_assignment, truncated_sum
from trunclab.rounding import round_to_pm1, s_prime


def test_s_prime():
    assert s_prime(PrimeAssignment.ones(10), 2, 5) == Fraction(23, 15)
    assert s_prime(PrimeAssignment.ones(10), 3, 0) == 0
    with pytest.raises(TrunclabConfigException):
        s_prime(PrimeAssignment.ones(10), 2, 11)


@pytest.mark.parametrize("x", [1, 2, 10, 57, 150])
def test_rounding_trace(rng, x):
    f = random_assignment(150, "F", rng, denominator=5)
    rounded, trace = round_to_pm1(f, x)

    assert rounded.fclass == "F1"
    assert rounded.x_max == x
    assert set(rounded.values.values()) <= {-1, 1}
    assert trace.sign_property_holds
    assert trace.initial_sum == truncated_sum(f, x).value
    assert trace.final_sum == truncated_sum(rounded, x).value

    js = [step.j for step in trace.steps]
    assert js == sorted(js, reverse=True)
    assert [step.p for step in trace.steps] == sorted(rounded.primes, reverse=True)


def test_steps_chain_exact_sums(rng):
    f = random_assignment(80, "F", rng, denominator=3)
    _, trace = round_to_pm1(f, 80)
    running = trace.initial_sum
    for step in trace.steps:
        assert step.S_j_x == running
        running += step.delta
        assert step.new_sign == (-1 if step.S_j_prime > 0 else 1)
    assert running == trace.final_sum


def test_rounding_liouville_is_stable():
    rounded, trace = round_to_pm1(PrimeAssignment.liouville(30), 30)
    assert rounded.signs() == PrimeAssignment.liouville(30).signs()
    assert trace.final_sum == trace.initial_sum


def test_regimes():
    _, trace = round_to_pm1(PrimeAssignment.constant(100, "1/2"), 100)
    regime = {step.p: step.regime for step in trace.steps}
    assert regime[19] == "small"
    assert regime[23] == "large"


def test_rounding_errors():
    with pytest.raises(TrunclabConfigException):
        round_to_pm1(PrimeAssignment.ones(10), 11)
    with pytest.raises(TrunclabConfigException):
        round_to_pm1(PrimeAssignment(3, "F", {2: 0.25, 3: 1.0}), 3)
