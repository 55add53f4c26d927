from fractions import Fraction
from math import comb

import pytest

from smp.analytics import DiscreteUniformSpec, occupation_probability
from smp.bursts import (BurstTable, burst_count_pmf, burst_duration_count, enumerate_realizations,
                        time_average_mixture, time_average_occupation, visit_count)

RATES = [Fraction(1, 10), Fraction(1, 3), Fraction(9, 10)]


def test_no_reset_probability():
    assert burst_count_pmf(10, 1, Fraction(1, 10), exact=True) == Fraction(9, 10) ** 10


def test_two_step_pmf():
    assert [burst_count_pmf(2, k, "0.1", exact=True) for k in (1, 2, 3)] == [
        Fraction(81, 100), Fraction(18, 100), Fraction(1, 100)]


def test_pmf_outside_range_and_r_zero():
    assert burst_count_pmf(5, 0, 0.1) == 0.0
    assert burst_count_pmf(5, 7, 0.1) == 0.0
    assert [burst_count_pmf(4, k, 0) for k in range(1, 6)] == [1.0, 0, 0, 0, 0]


def test_duration_counts():
    assert burst_duration_count(7, 1, 7) == 1
    assert burst_duration_count(3, 2, 1) == 2
    assert burst_duration_count(3, 2, 3) == 0


def test_visit_counts():
    assert [visit_count(2, 1, m) for m in range(3)] == [1, 1, 1]
    assert sum(visit_count(3, 2, m) for m in range(4)) == 12
    assert visit_count(5, 3, 4) == 0


def test_time_average_examples():
    assert [time_average_occupation(m, 1, "0.1", exact=True) for m in (0, 1)] == [
        Fraction(55, 100), Fraction(45, 100)]
    assert all(time_average_occupation(m, 6, 0, exact=True) == Fraction(1, 7) for m in range(7))
    r = Fraction(1, 10)
    deep = time_average_occupation(2, 100_000, r)
    assert deep == pytest.approx(float(r * (1 - r) ** 2), rel=1e-4)


@pytest.mark.parametrize("r", RATES)
@pytest.mark.parametrize("tau", range(0, 21))
def test_exact_identities(tau, r):
    assert sum(burst_count_pmf(tau, k, r, exact=True) for k in range(1, tau + 2)) == 1
    assert sum(time_average_occupation(m, tau, r, exact=True) for m in range(tau + 1)) == 1
    for k in range(1, tau + 2):
        assert sum(visit_count(tau, k, m) for m in range(tau + 1)) == (tau + 1) * comb(tau, k - 1)
    BurstTable.from_formulas(tau, r).check()


@pytest.mark.parametrize("r", RATES)
@pytest.mark.parametrize("tau", [0, 1, 5, 12])
def test_mixture_identity(tau, r):
    for m in range(tau + 1):
        assert time_average_mixture(m, tau, r, exact=True) == time_average_occupation(m, tau, r, exact=True)


@pytest.mark.parametrize("r", RATES)
@pytest.mark.parametrize("tau", [0, 1, 2, 3, 7, 10])
def test_enumeration_matches_closed_forms(tau, r):
    en = enumerate_realizations(tau, r)
    formulas = BurstTable.from_formulas(tau, r)
    assert en.table.K == formulas.K
    assert en.table.M == formulas.M
    assert en.table.rho == formulas.rho
    spec = DiscreteUniformSpec(2.0, r)
    for t in range(tau + 1):
        assert en.occupation[t] == [occupation_probability(spec, m, t) for m in range(tau + 1)]
    assert en.time_average == [time_average_occupation(m, tau, r, exact=True) for m in range(tau + 1)]


def test_enumeration_with_initial_distribution():
    r = Fraction(1, 3)
    p0 = [Fraction(1, 2), Fraction(1, 4), Fraction(1, 4)]
    en = enumerate_realizations(6, r, initial=dict(enumerate(p0)))
    spec = DiscreteUniformSpec(2.0, r)
    for t in range(7):
        expect = [occupation_probability(spec, m, t, p0) for m in range(9)]
        assert en.occupation[t] == expect
        assert sum(en.occupation[t]) == 1


def test_enumeration_trivial_horizon():
    en = enumerate_realizations(0, Fraction(1, 10))
    assert en.table.rho == {1: 1}
    assert en.table.M == {(1, 0): 1}
    assert en.occupation == [[1]]


def test_enumeration_cap():
    with pytest.raises(ValueError):
        enumerate_realizations(21, 0.1)
