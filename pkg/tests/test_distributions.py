import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smp.distributions import (EmpiricalAtoms, LawError, LogNormal, LogUniform, PointMass, QuadratureWarning,
                               TwoDelta, law_from_dict, law_moment, log_char, log_char_quad, sample)
from smp.rng import RandomStream


def test_point_mass_sampling_constant():
    assert np.all(sample(PointMass(1.1), RandomStream(0), 100) == 1.1)


def test_two_delta_with_a_one_is_constant():
    assert np.all(sample(TwoDelta(1.0, 2.0), RandomStream(0), 1000) == 2.0)


def test_two_delta_atom_frequency():
    draws = sample(TwoDelta(0.5, 2.0), RandomStream(42), 10 ** 6)
    assert abs(np.mean(draws == 2.0) - 0.5) < 0.002
    assert set(np.unique(draws)) == {0.5, 2.0}


def test_moments():
    assert law_moment(PointMass(3.0), 2.5) == pytest.approx(3.0 ** 2.5)
    assert law_moment(TwoDelta(0.5, 2.0), 1.0) == pytest.approx(1.25)
    assert law_moment(LogNormal(0.0, 1.0), 0.0) == 1.0
    assert law_moment(LogNormal(0.3, 0.7), 2.0) == pytest.approx(math.exp(0.6 + 0.5 * 4 * 0.49))
    lu = LogUniform(0.5, 2.0)
    a, b = math.log(0.5), math.log(2.0)
    assert law_moment(lu, 1.0) == pytest.approx((2.0 - 0.5) / (b - a))


def test_two_delta_moment_matches_sample_mean():
    draws = sample(TwoDelta(0.5, 2.0), RandomStream(5), 10 ** 6)
    assert abs(draws.mean() - 1.25) < 4 * draws.std() / 1e3


def test_moment_overflow_reports_inf():
    assert law_moment(LogNormal(0.0, 1.0), 100.0) == math.inf
    with pytest.raises(ValueError):
        law_moment(PointMass(2.0), math.inf)


@pytest.mark.parametrize("law", [PointMass(1.7), TwoDelta(0.3, 2.0), LogUniform(0.5, 3.0),
                                 LogNormal(0.1, 0.4), EmpiricalAtoms(((0.5, 0.2), (1.5, 0.8)))])
def test_char_normalized_and_bounded(law):
    assert log_char(law, 0.0) == pytest.approx(1 + 0j, abs=1e-15)
    for eta in np.linspace(-3, 3, 61):
        assert abs(log_char(law, float(eta))) <= 1 + 1e-12


def test_char_point_mass_at_e():
    for eta in (0.1, 0.37, -1.2):
        assert log_char(PointMass(math.e), eta) == pytest.approx(cmath.exp(-2j * math.pi * eta))


def test_char_two_delta_quarter():
    assert abs(log_char(TwoDelta(0.5, math.e), 0.25)) < 1e-15


def test_char_continuation_gives_moments():
    law = TwoDelta(0.3, 2.0)
    for g in (0.5, 1.0, 2.0):
        assert log_char(law, 1j * g / (2 * math.pi)).real == pytest.approx(law_moment(law, g), rel=1e-12)


@pytest.mark.parametrize("law", [LogUniform(0.5, 3.0), LogNormal(0.1, 0.4)])
def test_closed_form_char_agrees_with_quadrature(law):
    for eta in (0.05, 0.3, 1.1):
        val, err = log_char_quad(law, eta)
        assert abs(val - log_char(law, eta)) < 1e-9


def test_quadrature_warns_when_unconverged():
    with pytest.warns(QuadratureWarning):
        log_char_quad(LogUniform(0.5, 3.0), 50.0, rtol=1e-16)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.0, 1.0), st.floats(1.01, 10.0), st.floats(-3.0, 3.0))
def test_two_delta_char_bound_property(a, mu0, eta):
    assert abs(log_char(TwoDelta(a, mu0), eta)) <= 1 + 1e-12


@pytest.mark.parametrize("bad", [
    lambda: TwoDelta(1.5, 2.0), lambda: TwoDelta(0.5, 0.9), lambda: PointMass(0.0),
    lambda: LogUniform(2.0, 1.0), lambda: LogNormal(0.0, 0.0),
    lambda: EmpiricalAtoms(((1.0, 0.5), (2.0, 0.4))), lambda: EmpiricalAtoms(((-1.0, 1.0),)),
])
def test_invalid_laws_rejected(bad):
    with pytest.raises(LawError):
        bad()


def test_atom_weights_rescaled_within_tolerance():
    law = EmpiricalAtoms(((1.0, 0.5), (2.0, 0.5 + 5e-10)))
    assert math.fsum(w for _, w in law.atoms) == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("law", [PointMass(1.7), TwoDelta(0.3, 2.0), LogUniform(0.5, 3.0),
                                 LogNormal(0.1, 0.4), EmpiricalAtoms(((0.5, 0.2), (1.5, 0.8)))])
def test_dict_round_trip(law):
    assert law_from_dict(law.to_dict()) == law


def test_law_from_dict_errors():
    for d in ({}, {"kind": "nope"}, {"kind": "two_delta", "a": 0.5}, {"kind": "point_mass", "value": 1, "x": 2}):
        with pytest.raises(LawError):
            law_from_dict(d)


def test_log_sampling_statistics():
    y = np.log(sample(LogNormal(0.2, 0.5), RandomStream(8), 200_000))
    assert abs(y.mean() - 0.2) < 4 * 0.5 / math.sqrt(y.size)
    assert abs(y.std() - 0.5) < 0.005
    lu = np.log(sample(LogUniform(0.5, 2.0), RandomStream(9), 200_000))
    assert lu.min() >= math.log(0.5) and lu.max() <= math.log(2.0)
