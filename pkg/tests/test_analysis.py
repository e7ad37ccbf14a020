import math
from fractions import Fraction

import pytest

from trunclab.analysis import (
    EULER_GAMMA,
    KAPPA,
    LOG2,
    BoundReport,
    dickman_rho,
    dickman_table,
    dickman_value,
    fractional_part_constant,
    hall_tenenbaum_u,
    hildebrand_bound,
    lipschitz_check,
    r_function_mean,
    sigma_minus,
    theorem1_bounds,
    theorem2_constant,
    trivial_bounds,
)
from trunclab.exceptions import TrunclabConfigException, TrunclabPrecisionException
from trunclab.multfunc import PrimeAssignment, random_assignment


def test_rho_is_one_up_to_one():
    assert dickman_rho(0) == 1
    assert dickman_rho(0.5) == 1
    assert dickman_rho(1) == 1


def test_rho_at_two():
    assert abs(dickman_rho(2) - (1 - math.log(2))) < 1e-10


def test_rho_on_first_interval():
    for i in range(100):
        u = 1 + i / 100
        assert abs(dickman_rho(u) - (1 - math.log(u))) < 1e-10


def test_rho_at_three():
    assert abs(dickman_rho(3) - 0.0486083882911) < 1e-9


def test_rho_is_decreasing():
    table = dickman_table(10)
    values = [table(1 + i / 20) for i in range(181)]
    assert all(a > b for a, b in zip(values, values[1:]))
    assert values[-1] > 0


def test_delay_equation_residual():
    table = dickman_table(8)
    for u in (1.5, 2.25, 3.7, 5.3, 7.9):
        assert abs(table.residual(u)) < 1e-9


def test_rho_cumulative_integral():
    table = dickman_table(3)
    assert abs(table.cumulative(1) - 1) < 1e-12
    assert abs(table.cumulative(2) - (3 - 2 * math.log(2))) < 1e-10


def test_dickman_value_reports_its_error():
    value = dickman_value(4.5, 1e-11)
    assert value.error_bound <= 1e-11
    assert value.panels_per_unit >= 16
    assert 0 < value.value < dickman_rho(4)


def test_dickman_errors():
    with pytest.raises(TrunclabConfigException):
        dickman_rho(-1)
    with pytest.raises(TrunclabPrecisionException):
        dickman_rho(2.5, precision=1e-16)
    with pytest.raises(TrunclabConfigException):
        dickman_table(20)(21)


def test_sigma_minus():
    assert sigma_minus(0) == 0
    assert abs(sigma_minus(2) - 2 * (1 - math.log(2))) < 1e-10
    with pytest.raises(TrunclabConfigException):
        sigma_minus(-0.5)


def test_extremal_constant():
    report = theorem2_constant()
    assert abs(report.inner - (-0.656999)) < 1e-5
    assert abs(report.full - report.inner * LOG2) < 1e-15
    assert abs(report.full - (-0.4553)) < 1e-4
    assert report.error_bound < 1e-15


def test_known_constants():
    assert abs(EULER_GAMMA - 0.5772156649015329) < 1e-16
    assert abs(LOG2 - math.log(2)) < 1e-16
    assert KAPPA == 0.32867


def test_fractional_part_constant():
    value, gap = fractional_part_constant(10 ** 6)
    assert abs(value - (1 - EULER_GAMMA)) < 1e-6
    assert abs(gap) < 1e-6
    assert gap < 0
    with pytest.raises(TrunclabConfigException):
        fractional_part_constant(0)


def test_hildebrand_shape():
    assert hildebrand_bound(0, 1000).rhs_shape == pytest.approx(math.log(1000))
    assert hildebrand_bound(2, math.e).rhs_shape == pytest.approx(math.exp(-2 * math.e))
    assert hildebrand_bound(1, 10 ** 6).rhs_shape == pytest.approx(2.657, abs=1e-3)
    with pytest.raises(TrunclabConfigException):
        hildebrand_bound(-1, 100)
    with pytest.raises(TrunclabConfigException):
        hildebrand_bound(1, 1)


def test_hall_tenenbaum():
    report = hall_tenenbaum_u(PrimeAssignment.ones(100), 100)
    assert report.inputs["u"] == 0
    assert report.rhs_shape == 1
    assert report.lhs == 1

    liouville = hall_tenenbaum_u(PrimeAssignment.liouville(30), 30)
    primes = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29)
    assert liouville.inputs["u_exact"] == sum(Fraction(2, p) for p in primes)
    assert liouville.rhs_shape == pytest.approx(math.exp(-KAPPA * liouville.inputs["u"]))


def test_hall_tenenbaum_u_is_additive_over_primes(rng):
    f = random_assignment(60, "F", rng)
    low = hall_tenenbaum_u(f, 30).inputs["u_exact"]
    high = hall_tenenbaum_u(f, 60).inputs["u_exact"]
    assert high - low == sum((1 - f[p]) / p for p in f.primes if 30 < p <= 60)


def test_lipschitz_check():
    f = PrimeAssignment.liouville(500)
    assert lipschitz_check(f, 500, 1).lhs == 0
    report = lipschitz_check(f, 500, 7)
    assert report.lhs >= 0
    assert 0 < report.rhs_shape < 1
    with pytest.raises(TrunclabConfigException):
        lipschitz_check(f, 500, 51)
    with pytest.raises(TrunclabConfigException):
        lipschitz_check(f, 501, 2)


def test_theorem1_shapes():
    report = theorem1_bounds(10 ** 6, value=-0.1)
    assert report.lhs == -0.1
    assert report.rhs_shape < report.extras["upper_shape"] < 0
    with pytest.raises(TrunclabConfigException):
        theorem1_bounds(2)


def test_bound_names_are_checked():
    with pytest.raises(TrunclabConfigException):
        BoundReport("lipschitz33", {}, None, 0.0, "")


@pytest.mark.parametrize("fclass", ["F", "F0", "F1"])
def test_trivial_bounds(rng, fclass):
    for _ in range(10):
        report = trivial_bounds(random_assignment(120, fclass, rng), 120)
        assert report.chain_holds
        assert report.above_minus_one
        assert report.above_harmonic_floor


def test_r_function_mean():
    assert r_function_mean(10) == 0
    assert r_function_mean(1) == 1
    assert abs(r_function_mean(10 ** 5, segment_size=4096)) <= 1


def test_hall_tenenbaum_single_prime_change():
    f = PrimeAssignment.ones(100).with_value(2, -1)
    assert hall_tenenbaum_u(f, 100).inputs["u_exact"] == 1


def test_delay_equation_at_random_points(rng):
    table = dickman_table(10)
    for _ in range(100):
        assert abs(table.residual(rng.uniform(1, 10))) < 1e-9


def test_lipschitz_for_ones():
    f = PrimeAssignment.ones(1000)
    for w in (2, 7, 100):
        assert lipschitz_check(f, 1000, w).lhs <= 2 * w / 1000
