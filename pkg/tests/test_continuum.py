import math

import numpy as np
import pytest

from smp import continuum as cn
from smp.continuum import ContinuousUniformSpec, StateDependentSpec, StationaryGeneral


@pytest.fixture
def unit():
    return ContinuousUniformSpec(1.0, 1.0)


def test_initial_time_returns_f0(unit):
    x = np.linspace(1, 20, 50)
    assert np.allclose(cn.transient_density(unit, x, 0.0), np.exp(1 - x), rtol=0, atol=1e-15)


def test_boundary_value(unit):
    for t in (0.5, 2.0, 7.0):
        assert cn.transient_density(unit, 1.0 + 1e-12, t) == pytest.approx(1.0, rel=1e-9)
    spec = ContinuousUniformSpec(2.0, 3.0)
    assert cn.transient_density(spec, 1.0, 1.0) == pytest.approx(1.5)


def test_plug_in_value_beyond_front(unit):
    expect = math.exp(-4) * math.exp(1 - 10 * math.exp(-2))
    assert cn.transient_density(unit, 10.0, 2.0) == pytest.approx(expect, rel=1e-14)
    assert expect == pytest.approx(0.0128636, abs=1e-7)


@pytest.mark.parametrize("t", [0.0, 0.5, 2.0, 5.0])
def test_transient_norm_preserved(unit, t):
    front = math.exp(unit.lam * t)
    total, _ = cn.integrate_density(lambda v: float(cn.transient_density(unit, v, t)), breakpoints=[front])
    assert total == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("t", [0.0, 0.5, 2.0, 5.0])
def test_cdf_consistent_with_density(unit, t):
    for x in (1.5, 4.0, math.exp(t) * 1.3, 60.0):
        front = math.exp(t)
        val, _ = cn.integrate_density(lambda v: float(cn.transient_density(unit, v, t)), 1.0, x,
                                      breakpoints=[front])
        assert cn.transient_cdf(unit, x, t) == pytest.approx(val, abs=1e-8)


def test_transient_approaches_stationary(unit):
    x = np.linspace(1, 10, 200)
    gap = np.max(np.abs(cn.transient_density(unit, x, 100.0) - cn.stationary_density_uniform(unit, x)))
    assert gap < 1e-9


def test_stationary_uniform(unit):
    x = np.array([1.0, 2.0, 5.0])
    assert np.allclose(cn.stationary_density_uniform(unit, x), x ** -2.0)
    for lam, q in ((1, 1), (2, 1), (1, 3)):
        spec = ContinuousUniformSpec(lam, q)
        total, _ = cn.integrate_density(lambda v: float(cn.stationary_density_uniform(spec, v)))
        assert total == pytest.approx(1.0, abs=1e-8)
        assert spec.exponent == pytest.approx(q / lam)


def test_custom_initial_density_without_cdf():
    # uniform initial density on [2, 3]
    f0 = lambda x: np.where((np.asarray(x) >= 2) & (np.asarray(x) <= 3), 1.0, 0.0)
    spec = ContinuousUniformSpec(1.0, 0.5, f0=f0, f0_support=2.0, f0_cdf=None, f0_ppf=None)
    assert spec.check_normalized(tol=1e-8) == pytest.approx(1.0)
    assert cn.transient_cdf(spec, 2.5, 0.0) == pytest.approx(0.5, abs=1e-8)
    total, _ = cn.integrate_density(lambda v: float(cn.transient_density(spec, v, 1.0)),
                                    breakpoints=[math.e, 2 * math.e, 3 * math.e])
    assert total == pytest.approx(1.0, abs=1e-6)


def test_spec_validation():
    with pytest.raises(ValueError):
        ContinuousUniformSpec(0.0, 1.0)
    with pytest.raises(ValueError):
        ContinuousUniformSpec(1.0, -1.0)
    with pytest.raises(ValueError):
        ContinuousUniformSpec(1.0, 1.0, f0_support=0.5)
    with pytest.raises(ValueError):
        cn.transient_density(ContinuousUniformSpec(1.0, 1.0), 2.0, -1.0)


def test_leak_checks():
    assert cn.check_no_leak(StateDependentSpec.algebraic(1.0, 0.0, 1.0)).no_leak
    bad = cn.check_no_leak(StateDependentSpec.algebraic(1.0, -1.0, 1.0))
    assert not bad.no_leak and bad.method == "analytic"
    quad = cn.check_no_leak(StateDependentSpec(lambda x: x * x, lambda x: 1.0))
    assert not quad.no_leak and quad.method == "heuristic"
    assert quad.integral == pytest.approx(1.0, rel=1e-6)
    cut = cn.check_no_leak(StateDependentSpec(lambda x: 1.0, lambda x: 1.0 if x < 5 else 0.0))
    assert not cut.no_leak
    linear = cn.check_no_leak(StateDependentSpec(lambda x: x, lambda x: 1.0))
    assert linear.no_leak and "heuristic" in linear.detail


def test_leaking_spec_refuses_normalization():
    with pytest.raises(cn.NormalizationError):
        StationaryGeneral(StateDependentSpec(lambda x: x * x, lambda x: 1.0))


@pytest.mark.parametrize("alpha", [0.0, 0.5, 1.0, 2.0])
def test_weibull_family_normalized(alpha):
    st = StationaryGeneral(StateDependentSpec.algebraic(1.0, alpha, 1.0))
    total, _ = cn.integrate_density(lambda v: float(st(v)))
    assert total == pytest.approx(1.0, abs=1e-8)
    assert st(1.0) == pytest.approx(1.0)  # q / lam(1)
    assert st.cdf(1e6) == pytest.approx(1.0, abs=1.01e-6)
    assert st.cdf(3.0) == pytest.approx(cn.integrate_density(lambda v: float(st(v)), 1.0, 3.0)[0], abs=1e-10)


def test_alpha_one_is_exponential():
    st = StationaryGeneral(StateDependentSpec.algebraic(1.0, 1.0, 1.0))
    x = np.linspace(1, 30, 300)
    assert np.max(np.abs(st(x) - np.exp(-(x - 1)))) < 1e-10


def test_alpha_zero_is_power_law():
    st = StationaryGeneral(StateDependentSpec.algebraic(1.0, 0.0, 1.0))
    x = np.linspace(1, 30, 30)
    assert np.allclose(st(x), x ** -2.0, rtol=1e-14)
    small = StationaryGeneral(StateDependentSpec.algebraic(1.0, 1e-7, 1.0))
    assert np.allclose(small(x), x ** -2.0, rtol=1e-5)


def test_general_path_matches_closed_form():
    lam0, alpha, q = 1.3, 0.7, 0.8
    closed = StationaryGeneral(StateDependentSpec.algebraic(lam0, alpha, q))
    generic = StationaryGeneral(StateDependentSpec(lambda x: lam0 * x ** (1 - alpha), lambda x: q))
    x = np.array([1.0, 1.7, 4.0, 12.0])
    assert np.allclose(generic(x), closed(x), rtol=1e-6)
    assert generic.norm == pytest.approx(q, rel=1e-6)


def test_uniform_reduction_through_general_path():
    generic = StationaryGeneral(StateDependentSpec(lambda x: x, lambda x: 1.0))
    x = np.array([1.0, 3.0, 10.0])
    assert np.allclose(generic(x), x ** -2.0, rtol=1e-6)


def test_flux_self_consistency():
    spec = StateDependentSpec(lambda x: 1.0 + 0.5 * x, lambda x: 0.5 + 1.0 / x)
    st = StationaryGeneral(spec)
    assert st.reset_flux() == pytest.approx(st.norm, rel=1e-6)
    assert st(1.0) == pytest.approx(st.norm / 1.5, rel=1e-9)


def test_density_continuous_above_one():
    st = StationaryGeneral(StateDependentSpec.algebraic(1.0, 0.5, 1.0))
    for x0 in (1.5, 2.0, 7.3):
        assert st(x0 - 1e-9) == pytest.approx(st(x0 + 1e-9), rel=1e-7)
