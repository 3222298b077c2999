import math
import warnings
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sdestab import coefficients as C
from sdestab import drift_removal as dr
from sdestab.errors import DomainError, SetupError
from sdestab.noise import NoiseKey
from sdestab.sde_engine import SimSpec


def _s_exact(x, beta, lo=0.0, hi=1.0):
    """Closed-form scale function for b = beta 1[lo, hi], sigma = 1, base point 0 <= lo."""
    x = np.asarray(x, dtype=float)
    c = np.clip(x, lo, hi) - lo
    inner = lo + (1 - np.exp(-2 * beta * c)) / (2 * beta)
    tail = inner + np.exp(-2 * beta * (hi - lo)) * (x - hi)
    return np.where(x < lo, x, np.where(x <= hi, inner, tail))


def _sp_exact(x, beta, lo=0.0, hi=1.0):
    return np.exp(-2 * beta * (np.clip(x, lo, hi) - lo))


def test_zero_drift_is_identity_bit_exact():
    sig = C.step(1, 2, 0)
    for b in (None, C.constant(0.0)):
        sf = dr.ScaleFunction(b, sig)
        x = np.linspace(-4, 4, 1001)
        assert sf.identity
        assert np.array_equal(sf.scale(x), x)
        assert np.array_equal(sf.scale_inverse(x), x)
        assert np.array_equal(sf.scale_prime(x), np.ones_like(x))
        assert np.array_equal(sf.transformed_sigma(x), sig(x))


@pytest.mark.parametrize("beta", [0.7, -0.4, 2.0])
def test_closed_form_indicator_drift(beta):
    sf = dr.ScaleFunction(C.indicator_drift(beta, 0, 1), C.constant(1.0))
    x = np.linspace(-5, 5, 2001)
    assert np.max(np.abs(sf.scale(x) - _s_exact(x, beta))) < 1e-9
    assert np.max(np.abs(sf.scale_prime(x) - _sp_exact(x, beta))) < 1e-9
    assert np.max(np.abs(sf.transformed_sigma(_s_exact(x, beta)) - _sp_exact(x, beta))) < 1e-9


def test_inverse_roundtrip_and_monotone():
    sf = dr.ScaleFunction(C.indicator_drift(1.0, -0.5, 1.5), C.step(1, 2, 0))
    x = np.linspace(-9.9, 9.9, 1000)
    y = sf.scale(x)
    assert np.all(np.diff(y) > 0)
    assert np.max(np.abs(sf.scale_inverse(y) - x)) < 1e-9


def test_inverse_derivative_is_reciprocal_slope():
    sf = dr.ScaleFunction(C.indicator_drift(0.8, -1, 1), C.constant(1.5))
    ybar = np.linspace(-2, 2, 41)
    d = 1e-5
    fd = (sf.scale_inverse(ybar + d) - sf.scale_inverse(ybar - d)) / (2 * d)
    assert np.allclose(fd, 1 / sf.scale_prime(sf.scale_inverse(ybar)), atol=1e-7)


def test_sandwich_bounds():
    sf = dr.ScaleFunction(C.indicator_drift(-1.2, 0, 1), C.step(1, 2, 0.5))
    x = np.linspace(-10, 10, 5001)
    sp = sf.scale_prime(x)
    assert np.all(sp >= sf.c_s1 * (1 - 1e-12)) and np.all(sp <= sf.c_s2 * (1 + 1e-12))


def test_base_point_shifts_affinely():
    b, sig = C.indicator_drift(0.5, 0, 1), C.constant(1.0)
    sf0 = dr.ScaleFunction(b, sig)
    sf1 = dr.ScaleFunction(b, sig, base_point=-2.0)
    x = np.linspace(-3, 3, 101)
    assert sf1.scale(-2.0) == pytest.approx(0, abs=1e-15)
    # moving the base below the drift support leaves s' unchanged, shifts s by a constant
    assert np.allclose(sf1.scale(x) - sf0.scale(x), 2.0, atol=1e-12)


def test_domain_errors():
    sf = dr.ScaleFunction(C.indicator_drift(0.5, 0, 1), C.constant(1.0), domain=(-2.0, 3.0))
    lo, hi = sf.image
    with pytest.raises(DomainError):
        sf.scale(3.5)
    with pytest.raises(DomainError):
        sf.scale_inverse(hi + 0.1)
    with pytest.raises(DomainError):
        sf.transformed_sigma(lo - 0.1)


def test_extrapolation_warns():
    sf = dr.ScaleFunction(C.indicator_drift(0.5, 0, 1), C.constant(1.0), box=(-2, 2))
    with pytest.warns(RuntimeWarning):
        val = sf.scale(5.0)
    assert val == pytest.approx(float(_s_exact(5.0, 0.5)), abs=1e-9)


def test_setup_errors():
    sig = C.constant(1.0)
    with pytest.raises(SetupError):
        dr.ScaleFunction(C.Coefficient(func=lambda x: x, name="identity"), sig)
    with pytest.raises(SetupError):  # bounded but not integrable on R
        dr.ScaleFunction(C.constant(0.5), sig)
    with pytest.raises(SetupError):
        dr.ScaleFunction(C.indicator_drift(1, 0, 1), C.Coefficient(func=lambda x: x))
    # a bounded domain makes a constant drift admissible
    dr.ScaleFunction(C.constant(0.5), sig, domain=(-8.0, 8.0))


def test_invariance_report_zero_drift():
    rep = dr.verify_invariance(dr.ScaleFunction(None, C.step(1, 2, 0)))
    assert rep.passed
    assert rep.eps_prime == 1.0 and rep.lipschitz_empirical == 0.0 and rep.lipschitz_bound == 0.0


def test_invariance_report_unit_jump():
    sig = C.step(1, 2, 0)
    rep = dr.verify_invariance(dr.ScaleFunction(C.indicator_drift(1.0, 0, 1), sig))
    assert rep.passed
    assert rep.eps_prime >= sig.epsilon * math.exp(-2) - 1e-9
    assert rep.eps_prime >= rep.eps_prime_bound - 1e-9
    assert rep.lipschitz_empirical <= rep.lipschitz_bound


def test_transformed_distance_exact_family_is_zero():
    fam = replace(C.with_drift(C.exact_family(C.step(1, 2, 0)), C.indicator_drift(0.5, -1, 1)),
                  domain=(-3.0, 3.0))
    td = dr.transformed_family_distance(fam, [4, 8, 16])
    assert td.distances == (0.0, 0.0, 0.0)
    assert td.fit is None


def test_transformed_distance_zero_drift_equals_plain():
    fam = replace(C.mollified_jump_family(1, 2, 0, "L1"), domain=(-3.0, 3.0))
    td = dr.transformed_family_distance(fam, [4, 16, 64])
    assert list(td.distances) == C.family_distances(fam, [4, 16, 64])


def test_domain_excluding_origin_moves_base_point():
    sf = dr.ScaleFunction(C.indicator_drift(0.5, 1.5, 2.5), C.constant(1.0), domain=(1.0, 4.0))
    assert sf.base_point == 1.0 and sf.scale(1.0) == 0.0
    fam = replace(C.with_drift(C.mollified_jump_family(1, 2, 2.0, "L1"),
                               C.indicator_drift(0.5, 1.5, 2.5)), domain=(1.0, 4.0))
    td = dr.transformed_family_distance(fam, [4, 8, 16, 32])
    assert 0.8 <= td.fit.q <= 1.2


def test_roundtrip_zero_drift_is_exactly_zero():
    spec = SimSpec(C.step(1, 2, 0), C.constant(0.0), 0.0, 1.0, 2.0 ** -6)
    rt = dr.roundtrip_drift_removal(spec, NoiseKey(3, 0), [2.0 ** -6, 2.0 ** -8], replicas=8)
    assert all(p.discrepancy == 0.0 for p in rt.points)


def test_roundtrip_refines():
    spec = SimSpec(C.constant(1.0), C.constant(0.5), 0.0, 1.0, 2.0 ** -6)
    rt = dr.roundtrip_drift_removal(spec, NoiseKey(3, 0), [2.0 ** -6, 2.0 ** -8, 2.0 ** -10],
                                    replicas=64, domain=(-8.0, 8.0))
    assert rt.monotone
    assert 0.3 < rt.q_free < 0.7


@settings(max_examples=15, deadline=None)
@given(st.floats(-1.5, 1.5).filter(lambda b: abs(b) > 1e-3), st.floats(0.0, 2.0),
       st.floats(0.2, 3.0))
def test_closed_form_oracle_property(beta, lo, width):
    hi = lo + width
    sf = dr.ScaleFunction(C.indicator_drift(beta, lo, hi), C.constant(1.0))
    x = np.linspace(-6, 6, 301)
    assert np.max(np.abs(sf.scale(x) - _s_exact(x, beta, lo, hi))) < 1e-9
    assert np.max(np.abs(sf.scale_inverse(sf.scale(x)) - x)) < 1e-9
