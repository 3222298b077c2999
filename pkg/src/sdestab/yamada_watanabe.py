"""Yamada-Watanabe smoothing of the absolute value.

Levels are indexed by ``m``.  The support sequence is
``a_m = exp(-m(m+1)/2)`` (so that ``log(a_{m-1}/a_m) = m``), the bump
``phi_m`` lives on ``+-(a_m, a_{m-1})`` and ``u_m`` is its double
antiderivative, a smooth under-approximation of ``|x|``.

The bump is written in the logarithmic coordinate
``t = log(x/a_m)/m`` in ``(0, 1)``:

    phi_m(x) = g(t) / (G * m * x)

with ``g`` a flat-topped C2 bump on ``(0, 1)`` and ``G = int_0^1 g``.  Because
``dt = dx/(m x)``, each lobe has unit mass and the first antiderivative of
``phi_m`` is ``G1(t)/G`` in closed form.
"""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy import integrate

from .errors import InvalidInputError

PLATEAU_FRACTION = 0.25

_GL_ORDER = 10
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(_GL_ORDER)
# nodes/weights mapped to [0, 1]
_GL_X = 0.5 * (_GL_NODES + 1.0)
_GL_W = 0.5 * _GL_WEIGHTS
_U_PANELS = 256


def log_a(m):
    """Exact logarithm of ``a(m)``; usable where ``a(m)`` underflows."""
    return -0.5 * m * (m + 1)


def a(m):
    """Support sequence ``a_m = exp(-m(m+1)/2)`` with ``a_0 = 1``."""
    if int(m) != m or m < 0:
        raise InvalidInputError(f"m must be a non-negative integer, got {m!r}")
    return math.exp(log_a(int(m)))


def select_level(n):
    """Largest ``m`` with ``a(m) * n >= 1``, i.e. ``m(m+1)/2 <= log n``.

    Accepts a scalar or an integer array; ``n`` must exceed 2.
    """
    arr = np.asarray(n)
    if np.any(arr <= 2):
        raise InvalidInputError(f"select_level needs n > 2, got {n!r}")
    logn = np.log(arr.astype(float))
    m = np.floor((np.sqrt(1.0 + 8.0 * logn) - 1.0) / 2.0).astype(np.int64)
    # the closed-form root can be off by one near level boundaries
    m = np.where((m + 1) * (m + 2) / 2.0 <= logn, m + 1, m)
    m = np.where(m * (m + 1) / 2.0 > logn, m - 1, m)
    if arr.ndim == 0:
        return int(m)
    return m


def _smootherstep(s):
    return s * s * s * (10.0 + s * (-15.0 + 6.0 * s))


def _smootherstep_integral(s):
    return s ** 4 * (2.5 + s * (-3.0 + s))


def bump(t, w=PLATEAU_FRACTION):
    """C2 trapezoid on (0, 1): smootherstep ramps of width ``w``, plateau 1."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    up = (t > 0) & (t < w)
    flat = (t >= w) & (t <= 1 - w)
    down = (t > 1 - w) & (t < 1)
    out[up] = _smootherstep(t[up] / w)
    out[flat] = 1.0
    out[down] = _smootherstep((1.0 - t[down]) / w)
    return out


def bump_integral(t, w=PLATEAU_FRACTION):
    """``int_0^t bump``; reaches ``1 - w`` at ``t = 1``."""
    t = np.asarray(t, dtype=float)
    out = np.empty_like(t)
    total = 1.0 - w
    lo = t <= 0
    up = (t > 0) & (t < w)
    flat = (t >= w) & (t <= 1 - w)
    down = (t > 1 - w) & (t < 1)
    hi = t >= 1
    out[lo] = 0.0
    out[up] = w * _smootherstep_integral(t[up] / w)
    out[flat] = 0.5 * w + (t[flat] - w)
    out[down] = total - w * _smootherstep_integral((1.0 - t[down]) / w)
    out[hi] = total
    return out


class YWLevel:
    """The m-th smoothing level.  Immutable after construction.

    Parameters
    ----------
    m : int
        Level index, ``m >= 1``.
    a_m, a_prev : float, optional
        Inner and outer support radii.  Default to the exponential sequence.
        User-supplied radii must satisfy ``log(a_prev/a_m) = m``.
    plateau_fraction : float
        Ramp width of the bump in the logarithmic coordinate.
    """

    def __init__(self, m, a_m=None, a_prev=None, plateau_fraction=PLATEAU_FRACTION):
        if int(m) != m or m < 1:
            raise InvalidInputError(f"level index must be a positive integer, got {m!r}")
        if not 0.0 < plateau_fraction < 0.5:
            raise InvalidInputError("plateau_fraction must lie in (0, 1/2)")
        m = int(m)
        if a_m is None and a_prev is None:
            self.log_a_m = log_a(m)
            self.log_a_prev = log_a(m - 1)
        elif a_m is not None and a_prev is not None:
            if not 0.0 < a_m < a_prev:
                raise InvalidInputError("need 0 < a_m < a_prev")
            self.log_a_m = math.log(a_m)
            self.log_a_prev = math.log(a_prev)
            gap = self.log_a_prev - self.log_a_m
            if abs(gap - m) > 1e-12 * m:
                raise InvalidInputError(
                    f"log(a_prev/a_m) = {gap!r} but must equal m = {m}")
        else:
            raise InvalidInputError("give both a_m and a_prev or neither")
        self.m = m
        self.a_m = math.exp(self.log_a_m)
        self.a_prev = math.exp(self.log_a_prev)
        self.bump_plateau_fraction = plateau_fraction
        self.bump_mass = 1.0 - plateau_fraction
        self._build_u_table()

    def __repr__(self):
        return f"YWLevel(m={self.m}, a_m={self.a_m!r}, a_prev={self.a_prev!r})"

    # coordinates ---------------------------------------------------------
    def _t_of(self, ax):
        with np.errstate(divide="ignore"):
            return (np.log(ax) - self.log_a_m) / self.m

    def _x_of(self, t):
        return np.exp(self.log_a_m + self.m * t)

    def _first_antiderivative_t(self, t):
        return bump_integral(t, self.bump_plateau_fraction) / self.bump_mass

    def _u_integrand_t(self, t):
        # d/dt of u along the lobe: Phi1(x(t)) * dx/dt, with dx/dt = m x
        return self._first_antiderivative_t(t) * self.m * self._x_of(t)

    def _build_u_table(self):
        edges = np.linspace(0.0, 1.0, _U_PANELS + 1)
        lo = edges[:-1, None]
        width = edges[1] - edges[0]
        nodes = lo + width * _GL_X[None, :]
        panel = width * (self._u_integrand_t(nodes) @ _GL_W)
        self._t_edges = edges
        self._u_edges = np.concatenate([[0.0], np.cumsum(panel)])
        self.u_outer = float(self._u_edges[-1])

    # public evaluations --------------------------------------------------
    def phi(self, x):
        x = np.asarray(x, dtype=float)
        ax = np.abs(x)
        out = np.zeros_like(ax)
        inside = (ax > self.a_m) & (ax < self.a_prev)
        if np.any(inside):
            xi = ax[inside]
            t = self._t_of(xi)
            out[inside] = bump(t, self.bump_plateau_fraction) / (self.bump_mass * self.m * xi)
        return out

    def u_prime(self, x):
        x = np.asarray(x, dtype=float)
        ax = np.abs(x)
        t = np.clip(self._t_of(np.where(ax > 0, ax, self.a_m)), 0.0, 1.0)
        val = np.where(ax <= self.a_m, 0.0, self._first_antiderivative_t(t))
        return np.sign(x) * val

    def u(self, x):
        x = np.asarray(x, dtype=float)
        ax = np.abs(x)
        out = np.zeros_like(ax)
        outer = ax >= self.a_prev
        out[outer] = self.u_outer + (ax[outer] - self.a_prev)
        inside = (ax > self.a_m) & ~outer
        if np.any(inside):
            t = np.clip(self._t_of(ax[inside]), 0.0, 1.0)
            j = np.minimum((t * _U_PANELS).astype(np.int64), _U_PANELS - 1)
            t0 = self._t_edges[j]
            span = t - t0
            nodes = t0[:, None] + span[:, None] * _GL_X[None, :]
            partial = span * (self._u_integrand_t(nodes) @ _GL_W)
            out[inside] = self._u_edges[j] + partial
        return out

    def v(self, alpha, x):
        return v_m(self, alpha, x)


@lru_cache(maxsize=64)
def level(m):
    """Cached default level for the exponential sequence."""
    return YWLevel(m)


def phi(lvl, x):
    return lvl.phi(x)


def u(lvl, x):
    return lvl.u(x)


def u_prime(lvl, x):
    return lvl.u_prime(x)


def _check_alpha(alpha):
    if not 1.0 < alpha < 2.0:
        raise InvalidInputError(f"alpha must lie in (1, 2), got {alpha!r}")


def v_m(lvl, alpha, x, tol=1e-10):
    """Convolution of ``|.|^(alpha-1)`` with the bump, normalised to unit total mass.

    The bump has mass one per lobe, so the probability kernel is ``phi_m/2``.
    Integration runs in the logarithmic coordinate, split at the ramp edges
    and at the cusp ``|x| = y``.
    """
    _check_alpha(alpha)
    beta = alpha - 1.0
    w = lvl.bump_plateau_fraction
    scalar = np.ndim(x) == 0
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty_like(xs)
    for i, xi in enumerate(xs):
        def integrand(t, xi=xi):
            y = math.exp(lvl.log_a_m + lvl.m * t)
            return float(bump(t, w)) * (abs(xi - y) ** beta + abs(xi + y) ** beta)

        breaks = [w, 1.0 - w]
        ax = abs(xi)
        if lvl.a_m < ax < lvl.a_prev:
            breaks.append((math.log(ax) - lvl.log_a_m) / lvl.m)
        val, _ = integrate.quad(integrand, 0.0, 1.0, points=sorted(breaks),
                                epsabs=tol, epsrel=tol, limit=200)
        out[i] = val / (2.0 * lvl.bump_mass)
    return float(out[0]) if scalar else out


def k_alpha(alpha):
    """``-Gamma(alpha) cos(alpha pi / 2) / 2``, non-negative on (1, 2)."""
    _check_alpha(alpha)
    return -math.gamma(alpha) * math.cos(alpha * math.pi / 2.0) / 2.0


def theoretical_bound(n, m, c_JY, c_Jsigma):
    """``a_{m-1} + 2 c_JY / m + 2 c_Jsigma / (m a_m n)``."""
    if n <= 2 or m < 1:
        raise InvalidInputError("theoretical_bound needs n > 2 and m >= 1")
    if c_JY < 0 or c_Jsigma < 0:
        raise InvalidInputError("constants must be non-negative")
    return a(m - 1) + 2.0 * c_JY / m + 2.0 * c_Jsigma * math.exp(-log_a(m)) / (m * n)


def level_grid(lvl, points=4096):
    """Log-spaced points covering both lobes plus margins on either side."""
    half = points // 2
    lo = lvl.log_a_m - 0.5
    hi = lvl.log_a_prev + 0.5
    pos = np.exp(np.linspace(lo, hi, half))
    return np.concatenate([-pos[::-1], pos])


def mass_by_quadrature(lvl):
    """Per-lobe mass of ``phi_m`` by adaptive quadrature in ``s = log x``."""
    w = lvl.bump_plateau_fraction
    m = lvl.m
    breaks = [lvl.log_a_m + m * w, lvl.log_a_m + m * (1 - w)]

    def integrand(s):
        x = math.exp(s)
        return float(lvl.phi(x)) * x

    val, _ = integrate.quad(integrand, lvl.log_a_m, lvl.log_a_prev, points=breaks,
                            epsabs=1e-13, epsrel=1e-13, limit=200)
    return val


def level_diagnostics(lvl, points=4096):
    """Invariant margins for one level; every margin is >= 0 when the level is sound."""
    x = level_grid(lvl, points)
    ax = np.abs(x)
    envelope = lvl.phi(x) * ax * lvl.m
    gap = ax - lvl.u(x)
    mass = mass_by_quadrature(lvl)
    return {
        "m": lvl.m,
        "a_m": lvl.a_m,
        "log_ratio": lvl.log_a_prev - lvl.log_a_m,
        "mass": mass,
        "mass_margin": 1e-8 - abs(mass - 1.0),
        "envelope_margin": float(2.0 - envelope.max()),
        "envelope_min": float(envelope.min()),
        "sandwich_margin": float(min(gap.min(), (lvl.a_prev - gap).min())),
        "derivative_margin": float(1.0 - np.abs(lvl.u_prime(x)).max()),
    }
