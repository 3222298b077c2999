import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from sdestab import yamada_watanabe as yw
from sdestab.errors import InvalidInputError


@pytest.mark.parametrize("m", range(1, 9))
def test_log_ratio_is_level_index(m):
    lvl = yw.level(m)
    assert abs((lvl.log_a_prev - lvl.log_a_m) - m) <= 1e-12
    assert math.isclose(yw.a(m - 1) / yw.a(m), math.exp(m), rel_tol=1e-12)


def test_a_sequence_basics():
    assert yw.a(0) == 1.0
    assert yw.a(1) == pytest.approx(math.exp(-1))
    with pytest.raises(InvalidInputError):
        yw.a(-1)
    with pytest.raises(InvalidInputError):
        yw.a(1.5)


def test_select_level_examples():
    assert yw.select_level(404) == 3
    assert yw.select_level(3) == 1
    with pytest.raises(InvalidInputError):
        yw.select_level(2)


def _scan_level(n):
    m = 0
    while (m + 1) * (m + 2) / 2 <= math.log(n):
        m += 1
    return m


@given(st.integers(min_value=3, max_value=10 ** 12))
def test_select_level_matches_scan(n):
    assert yw.select_level(n) == _scan_level(n)


def test_select_level_vectorised():
    ns = np.arange(3, 5000)
    assert np.array_equal(yw.select_level(ns), [_scan_level(int(n)) for n in ns])


@pytest.mark.parametrize("m", [1, 2, 5])
def test_phi_symmetric_and_supported(m):
    lvl = yw.level(m)
    x = yw.level_grid(lvl, 2048)
    assert np.array_equal(lvl.phi(x), lvl.phi(-x))
    outside = (np.abs(x) <= lvl.a_m) | (np.abs(x) >= lvl.a_prev)
    assert np.all(lvl.phi(x[outside]) == 0)
    assert np.all(lvl.phi(x) >= 0)


@pytest.mark.parametrize("m", [1, 3, 6])
def test_lobe_mass_independent_quadrature(m):
    # oracle: adaptive quadrature directly in x, independent of the log-coordinate code
    lvl = yw.level(m)
    val, _ = integrate.quad(lambda x: float(lvl.phi(x)), lvl.a_m, lvl.a_prev,
                            points=np.geomspace(lvl.a_m, lvl.a_prev, 9)[1:-1],
                            epsabs=0, epsrel=1e-11, limit=500)
    assert val == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("m", range(1, 9))
def test_u_sandwich_and_slope(m):
    lvl = yw.level(m)
    x = yw.level_grid(lvl)
    gap = np.abs(x) - lvl.u(x)
    assert gap.min() >= 0
    assert gap.max() <= lvl.a_prev
    assert np.abs(lvl.u_prime(x)).max() <= 1.0
    assert lvl.u(0.0) == 0.0


@pytest.mark.parametrize("m", [1, 4, 8])
def test_second_derivative_matches_bump(m):
    lvl = yw.level(m)
    x = yw.level_grid(lvl, 512)
    x = x[(np.abs(x) > lvl.a_m) & (np.abs(x) < lvl.a_prev)]
    errs = []
    for k in (1e-3, 5e-4):
        d = k * np.abs(x) * m
        fd = (lvl.u_prime(x + d) - lvl.u_prime(x - d)) / (2 * d)
        errs.append(np.max(np.abs(fd - lvl.phi(x)) * np.abs(x) * m))
    assert 3.0 < errs[0] / errs[1] < 5.0


def test_first_derivative_of_u_by_differences():
    lvl = yw.level(2)
    x = np.linspace(-0.5, 0.5, 101)
    d = 1e-6
    fd = (lvl.u(x + d) - lvl.u(x - d)) / (2 * d)
    assert np.allclose(fd, lvl.u_prime(x), atol=1e-7)


def test_level_diagnostics_all_margins_nonnegative():
    for m in range(1, 9):
        diag = yw.level_diagnostics(yw.level(m))
        assert min(v for k, v in diag.items() if k.endswith("_margin")) >= 0


def test_custom_radii_validated():
    with pytest.raises(InvalidInputError):
        yw.YWLevel(2, a_m=0.1, a_prev=0.5)
    lvl = yw.YWLevel(2, a_m=math.exp(-3), a_prev=math.exp(-1))
    assert lvl.a_m == pytest.approx(math.exp(-3))


@pytest.mark.parametrize("alpha,x", [(1.5, 0.0), (1.5, 0.3), (1.2, -2.0), (1.8, 0.05)])
def test_v_matches_direct_convolution(alpha, x):
    # oracle: convolution in x, integrating each lobe with scipy quad
    lvl = yw.level(1)
    beta = alpha - 1

    def lobe(y):
        return float(lvl.phi(y)) / 2 * (abs(x - y) ** beta + abs(x + y) ** beta)

    pts = [p for p in (abs(x),) if lvl.a_m < p < lvl.a_prev]
    val, _ = integrate.quad(lobe, lvl.a_m, lvl.a_prev, points=pts or None,
                            epsabs=1e-12, epsrel=1e-12, limit=400)
    assert yw.v_m(lvl, alpha, x) == pytest.approx(val, rel=1e-8)


def test_v_is_smoothed_power():
    lvl = yw.level(3)
    assert yw.v_m(lvl, 1.5, 10.0) == pytest.approx(10.0 ** 0.5, rel=1e-3)
    assert yw.v_m(lvl, 1.5, 0.0) <= lvl.a_prev ** 0.5
    with pytest.raises(InvalidInputError):
        yw.v_m(lvl, 2.0, 0.0)


def test_k_alpha_against_mpmath():
    mpmath = pytest.importorskip("mpmath")
    for alpha in (1.1, 1.5, 1.9):
        ref = -mpmath.gamma(alpha) * mpmath.cos(alpha * mpmath.pi / 2) / 2
        assert yw.k_alpha(alpha) == pytest.approx(float(ref), rel=1e-13)


def test_theoretical_bound_terms():
    n, m = 1000, 2
    val = yw.theoretical_bound(n, m, 1.0, 1.0)
    assert val == pytest.approx(yw.a(1) + 2 / m + 2 / (m * yw.a(m) * n))
    with pytest.raises(InvalidInputError):
        yw.theoretical_bound(2, 1, 1, 1)
    with pytest.raises(InvalidInputError):
        yw.theoretical_bound(10, 1, -1, 1)


@settings(max_examples=50)
@given(st.integers(1, 8), st.floats(-3.0, 3.0))
def test_u_even_and_below_abs(m, x):
    lvl = yw.level(m)
    assert float(lvl.u(x)) == pytest.approx(float(lvl.u(-x)), abs=1e-15)
    assert float(lvl.u(x)) <= abs(x) + 1e-15
