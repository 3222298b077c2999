"""Scale-function transform that removes the drift from a one-dimensional SDE.

For ``dX = b(X) dt + sigma(X) dW`` on an interval ``I`` the scale function

    s'(x) = exp(-2 int_{x0}^{x} b(u) / sigma(u)^2 du),    s(x) = int_{x0}^{x} s'(u) du

maps ``X`` to the driftless diffusion ``Xbar = s(X)`` with coefficient
``sigmabar = (sigma s') o s^{-1}``.

Tables of ``int b/sigma^2`` and of ``s`` are built with Gauss-Legendre rules on
panels whose edges include every declared discontinuity, so each panel sees a
smooth integrand.  Between table nodes ``s`` is the quintic Hermite interpolant
of ``(s, s', s'')``, with one-sided ``s''`` at discontinuities; its error is far
below ``1e-9`` at the default resolution.  A zero drift short-circuits every
operation to the identity so degeneration is bit-exact.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy.interpolate import BPoly

from .coefficients import (Coefficient, ConditionReport, DistanceMode, QuadratureSpec,
                           _check_power_condition, coefficient_distance, default_grid)
from .errors import DomainError, InvalidInputError, SetupError
from .noise import NoiseBlock
from .rate_analysis import RateModel, fit_rate, ols_line
from .sde_engine import Z95, euler_maruyama

GL_ORDER = 8
DEFAULT_PANELS = 4096
DEFAULT_BOX = (-10.0, 10.0)
INVERSE_XTOL = 1e-12
_GL_X, _GL_W = np.polynomial.legendre.leggauss(GL_ORDER)
_GL_X = 0.5 * (_GL_X + 1.0)  # nodes on [0, 1]
_GL_W = 0.5 * _GL_W


def _ratio(b, sigma, x):
    s = np.asarray(sigma(x), dtype=float)
    return np.asarray(b(x), dtype=float) / (s * s)


def _gl_partial(func, left, right):
    """``int_left^right func`` by one GL rule per (left, right) pair, vectorised."""
    left = np.asarray(left, dtype=float)
    width = np.asarray(right, dtype=float) - left
    nodes = left[..., None] + width[..., None] * _GL_X
    return width * (func(nodes) @ _GL_W)


class ScaleFunction:
    """Scale function of ``(b, sigma)`` on ``domain`` with its inverse.

    Parameters
    ----------
    drift_b, diffusion_sigma : Coefficient
        ``drift_b`` may be ``None`` for a driftless equation.
    domain : (float, float)
        The state interval ``I = (l, k)``; ends may be infinite.
    box : (float, float)
        Tabulation range used for infinite ends.  Outside it ``s'`` is frozen
        at its boundary value (with a warning).
    panels : int
        Number of equal panels before discontinuities are inserted.
    base_point : float, optional
        Lower limit of both integrals, so ``s(base_point) = 0``.  Defaults to
        0, moved to the nearest tabulated point when 0 lies outside.
    """

    def __init__(self, drift_b, diffusion_sigma, domain=(-math.inf, math.inf), box=DEFAULT_BOX,
                 panels=DEFAULT_PANELS, base_point=None):
        lo, hi = float(domain[0]), float(domain[1])
        if not lo < hi:
            raise InvalidInputError("domain must satisfy l < k")
        if diffusion_sigma.epsilon is None or not diffusion_sigma.epsilon > 0:
            raise SetupError(f"diffusion {diffusion_sigma.name!r} needs a positive floor epsilon")
        self.drift_b = drift_b
        self.diffusion_sigma = diffusion_sigma
        self.domain = (lo, hi)
        t_lo = lo if math.isfinite(lo) else float(box[0])
        t_hi = hi if math.isfinite(hi) else float(box[1])
        if not t_lo < t_hi:
            raise InvalidInputError("box does not overlap the domain")
        self.base_point = min(max(0.0, t_lo), t_hi) if base_point is None else float(base_point)
        if not t_lo <= self.base_point <= t_hi:
            raise SetupError(f"base point {self.base_point!r} outside the tabulated range")
        self.table_range = (t_lo, t_hi)

        probe = np.linspace(t_lo, t_hi, 8 * int(panels) + 1)
        self.identity = drift_b is None or not np.any(np.asarray(drift_b(probe)) != 0)
        if self.identity:
            self.ratio_l1 = 0.0
            self.ratio_sup = 0.0
            return
        if not math.isfinite(drift_b.sup_bound):
            raise SetupError(f"drift {drift_b.name!r} is not declared bounded")
        if np.max(np.abs(drift_b(probe))) > drift_b.sup_bound * (1 + 1e-12):
            raise SetupError(f"drift {drift_b.name!r} exceeds its declared bound")
        for end, inner in ((lo, t_lo), (hi, t_hi)):
            if not math.isfinite(end):
                tail = np.linspace(inner, inner + 0.01 * (t_lo - t_hi if end < 0 else t_hi - t_lo), 64)
                if np.any(np.asarray(drift_b(tail)) != 0):
                    raise SetupError("b/sigma^2 is not integrable on an unbounded domain unless "
                                     "the drift vanishes near the tabulation box; "
                                     "declare a bounded domain")
        self._build(int(panels))

    # construction ---------------------------------------------------------

    def _ratio(self, x):
        return _ratio(self.drift_b, self.diffusion_sigma, x)

    def _build(self, panels):
        t_lo, t_hi = self.table_range
        disc = {float(d) for d in (*self.drift_b.discontinuity_points,
                                   *self.diffusion_sigma.discontinuity_points)
                if t_lo < d < t_hi}
        edges = np.unique(np.concatenate([np.linspace(t_lo, t_hi, panels + 1),
                                          sorted(disc), [self.base_point]]))
        left, right = edges[:-1], edges[1:]
        # cumulative int b/sigma^2, zero at the base point
        inc = _gl_partial(self._ratio, left, right)
        cum = np.concatenate([[0.0], np.cumsum(inc)])
        i_base = int(np.searchsorted(edges, self.base_point))
        cum -= cum[i_base]
        self._edges = edges
        self._cum_ratio = cum

        def s_prime_local(nodes):
            # nodes shape (P, GL_ORDER), each row inside panel of the same index
            part = _gl_partial(self._ratio, np.broadcast_to(left[:, None], nodes.shape), nodes)
            return np.exp(-2.0 * (cum[:-1, None] + part))

        s_inc = _gl_partial(s_prime_local, left, right)
        s_nodes = np.concatenate([[0.0], np.cumsum(s_inc)])
        s_nodes -= s_nodes[i_base]
        sp_nodes = np.exp(-2.0 * cum)

        width = right - left
        delta = 1e-9 * width
        r_right_of_left = self._ratio(left + delta)    # one-sided at each panel's left end
        r_left_of_right = self._ratio(right - delta)   # one-sided at each panel's right end
        spp0 = -2.0 * r_right_of_left * sp_nodes[:-1]
        spp1 = -2.0 * r_left_of_right * sp_nodes[1:]
        p0, p1 = s_nodes[:-1], s_nodes[1:]
        m0, m1 = sp_nodes[:-1] * width, sp_nodes[1:] * width
        a0, a1 = spp0 * width ** 2, spp1 * width ** 2
        coeffs = np.stack([p0, p0 + m0 / 5, p0 + 2 * m0 / 5 + a0 / 20,
                           p1 - 2 * m1 / 5 + a1 / 20, p1 - m1 / 5, p1])
        self._poly = BPoly(coeffs, edges, extrapolate=False)
        self._dpoly = self._poly.derivative()
        self._s_nodes = s_nodes
        self._sp_nodes = sp_nodes
        self.ratio_l1 = float(np.sum(_gl_partial(lambda x: np.abs(self._ratio(x)), left, right)))
        self.ratio_sup = float(np.max(np.abs(self._ratio(np.linspace(t_lo, t_hi, 8 * panels + 1)))))

    # bounds ---------------------------------------------------------------

    @property
    def c_s1(self):
        """Lower bound ``exp(-2 ||b/sigma^2||_L1)`` for ``s'``."""
        return math.exp(-2.0 * self.ratio_l1)

    @property
    def c_s2(self):
        """Upper bound ``exp(2 ||b/sigma^2||_L1)`` for ``s'``."""
        return math.exp(2.0 * self.ratio_l1)

    @property
    def image(self):
        """``s(I)`` as an interval; infinite ends stay infinite."""
        lo, hi = self.domain
        a = self.scale(lo) if math.isfinite(lo) else -math.inf
        b = self.scale(hi) if math.isfinite(hi) else math.inf
        return (float(a), float(b))

    # evaluation -----------------------------------------------------------

    def _check_x(self, x):
        lo, hi = self.domain
        if np.any(x < lo) or np.any(x > hi) or np.any(np.isnan(x)):
            raise DomainError(f"state outside the domain ({lo}, {hi})")

    def _outside_box(self, x):
        t_lo, t_hi = self.table_range
        below, above = x < t_lo, x > t_hi
        if np.any(below) or np.any(above):
            warnings.warn("evaluating outside the tabulation box; s' frozen at its boundary value",
                          RuntimeWarning, stacklevel=3)
        return below, above

    def scale_prime(self, x):
        x = np.asarray(x, dtype=float)
        self._check_x(x)
        if self.identity:
            return np.ones_like(x)[()]
        below, above = self._outside_box(x)
        xc = np.clip(x, *self.table_range)
        i = np.clip(np.searchsorted(self._edges, xc, side="right") - 1, 0, len(self._edges) - 2)
        part = _gl_partial(self._ratio, self._edges[i], xc)
        return np.exp(-2.0 * (self._cum_ratio[i] + part))[()]

    def scale(self, x):
        x = np.asarray(x, dtype=float)
        self._check_x(x)
        if self.identity:
            return (x - self.base_point)[()]
        below, above = self._outside_box(x)
        t_lo, t_hi = self.table_range
        out = self._poly(np.clip(x, t_lo, t_hi))
        if np.any(below):
            out = np.where(below, self._s_nodes[0] + self._sp_nodes[0] * (x - t_lo), out)
        if np.any(above):
            out = np.where(above, self._s_nodes[-1] + self._sp_nodes[-1] * (x - t_hi), out)
        return out[()]

    def _interp_prime(self, x):
        """Derivative of the interpolant, consistent with :meth:`scale` (used by Newton)."""
        t_lo, t_hi = self.table_range
        out = self._dpoly(np.clip(x, t_lo, t_hi))
        out = np.where(x < t_lo, self._sp_nodes[0], out)
        return np.where(x > t_hi, self._sp_nodes[-1], out)

    def scale_inverse(self, y):
        """``s^{-1}(y)`` by safeguarded Newton inside the bracketing table panel."""
        y = np.asarray(y, dtype=float)
        if self.identity:
            lo, hi = self.domain
            x = y + self.base_point
            if np.any(x < lo) or np.any(x > hi) or np.any(np.isnan(x)):
                raise DomainError(f"value outside the image of the scale function")
            return x[()]
        s_lo, s_hi = self.image
        if np.any(y < s_lo) or np.any(y > s_hi) or np.any(np.isnan(y)):
            raise DomainError(f"value outside the image ({s_lo}, {s_hi}) of the scale function")
        yf = np.atleast_1d(y).ravel()
        t_lo, t_hi = self.table_range
        x = np.empty_like(yf)
        below = yf < self._s_nodes[0]
        above = yf > self._s_nodes[-1]
        inside = ~(below | above)
        if np.any(below | above):
            warnings.warn("inverting outside the tabulation box; s' frozen at its boundary value",
                          RuntimeWarning, stacklevel=2)
        x[below] = t_lo + (yf[below] - self._s_nodes[0]) / self._sp_nodes[0]
        x[above] = t_hi + (yf[above] - self._s_nodes[-1]) / self._sp_nodes[-1]
        yi = yf[inside]
        i = np.clip(np.searchsorted(self._s_nodes, yi, side="right") - 1, 0, len(self._edges) - 2)
        lo_b, hi_b = self._edges[i].copy(), self._edges[i + 1].copy()
        s0, s1 = self._s_nodes[i], self._s_nodes[i + 1]
        span = s1 - s0
        xi = lo_b + (hi_b - lo_b) * np.where(span > 0, (yi - s0) / np.where(span > 0, span, 1), 0)
        active = np.ones(yi.size, dtype=bool)
        for _ in range(60):
            if not active.any():
                break
            xa = xi[active]
            f = self._poly(xa) - yi[active]
            lo_a, hi_a = lo_b[active], hi_b[active]
            lo_a = np.where(f < 0, xa, lo_a)
            hi_a = np.where(f > 0, xa, hi_a)
            step = f / self._dpoly(xa)
            x_new = xa - step
            bad = ~((x_new > lo_a) & (x_new < hi_a))
            x_new = np.where(bad, 0.5 * (lo_a + hi_a), x_new)
            done = (np.abs(x_new - xa) <= INVERSE_XTOL) | (f == 0) | (hi_a - lo_a <= INVERSE_XTOL)
            xi[active] = np.where(f == 0, xa, x_new)
            lo_b[active], hi_b[active] = lo_a, hi_a
            idx = np.flatnonzero(active)
            active[idx[done]] = False
        x[inside] = xi
        return x.reshape(y.shape)[()]

    def transformed_sigma(self, xbar):
        """``sigmabar(xbar) = sigma(s^{-1}(xbar)) * s'(s^{-1}(xbar))``."""
        x = self.scale_inverse(xbar)
        if self.identity:
            return np.asarray(self.diffusion_sigma(x))[()]
        return (np.asarray(self.diffusion_sigma(x)) * self.scale_prime(x))[()]

    def _fast_sigmabar(self, xbar):
        # Simulation inner loop: derivative of the interpolant instead of the GL evaluation.
        x = self.scale_inverse(xbar)
        if self.identity:
            return self.diffusion_sigma(x)
        return self.diffusion_sigma(x) * self._interp_prime(x)

    def lipschitz_bound(self):
        """Valid Lipschitz constant of ``s'``: ``2 ||b/sigma^2||_inf * c_s2``."""
        return 2.0 * self.ratio_sup * self.c_s2

    def stated_lipschitz_bound(self):
        """The bound ``2 ||b sigma||_inf * c_s2`` (not valid in general; reported for comparison)."""
        if self.identity:
            return 0.0
        return 2.0 * self.drift_b.sup_bound * self.diffusion_sigma.sup_bound * self.c_s2

    def echo(self):
        return {"domain": list(self.domain), "table_range": list(self.table_range),
                "base_point": self.base_point, "identity": self.identity,
                "ratio_l1": self.ratio_l1, "c_s1": self.c_s1, "c_s2": self.c_s2}


def scale_prime(sf, x):
    return sf.scale_prime(x)


def scale(sf, x):
    return sf.scale(x)


def scale_inverse(sf, y):
    return sf.scale_inverse(y)


def transformed_sigma(sf, xbar):
    return sf.transformed_sigma(xbar)


def transformed_coefficient(sf):
    """``sigmabar`` as a :class:`Coefficient` with floor, constructed dominator and breakpoints.

    The dominator is ``2 c_s2^2 f(s^{-1}(xbar)) + 2 M^2 L^2 D s^{-1}(xbar)``, where
    ``M`` bounds ``sigma``, ``L`` is the Lipschitz constant of ``s'`` and ``D``
    is the diameter of the tabulated domain.  It follows from splitting
    ``sigma(x)s'(x) - sigma(y)s'(y)`` and ``|x - y|^2 <= D |x - y|``.
    """
    sig = sf.diffusion_sigma
    eps = sig.epsilon * sf.c_s1
    disc = tuple(float(sf.scale(d)) for d in sorted(
        {*sig.discontinuity_points, *(sf.drift_b.discontinuity_points if sf.drift_b else ())})
        if sf.domain[0] < d < sf.domain[1])
    if sf.identity:
        return replace(sig, func=sf.transformed_sigma, name=f"transformed[{sig.name}]",
                       discontinuity_points=disc)
    f = sig.dominator_f
    lip = sf.lipschitz_bound()
    diam = sf.table_range[1] - sf.table_range[0]
    m_sup = sig.sup_bound

    def dominator(xbar):
        x = sf.scale_inverse(xbar)
        return 2.0 * sf.c_s2 ** 2 * f(x) + 2.0 * m_sup ** 2 * lip ** 2 * diam * x

    return Coefficient(func=sf.transformed_sigma, epsilon=eps,
                       dominator_f=dominator if f is not None and math.isfinite(m_sup) else None,
                       sup_bound=m_sup * sf.c_s2, discontinuity_points=disc,
                       name=f"transformed[{sig.name}]")


@dataclass(frozen=True)
class InvarianceReport:
    """Numerical evidence that the transformed coefficient keeps the regularity class."""
    eps_prime: float
    eps_prime_bound: float
    c_s1: float
    c_s2: float
    lipschitz_empirical: float
    lipschitz_bound: float
    lipschitz_bound_stated: float
    condition: ConditionReport

    @property
    def passed(self):
        return (self.condition.passed and self.eps_prime >= self.eps_prime_bound - 1e-9
                and self.lipschitz_empirical <= self.lipschitz_bound * (1 + 1e-6) + 1e-12)

    def to_dict(self):
        return {"eps_prime": self.eps_prime, "eps_prime_bound": self.eps_prime_bound,
                "c_s1": self.c_s1, "c_s2": self.c_s2,
                "lipschitz_empirical": self.lipschitz_empirical,
                "lipschitz_bound": self.lipschitz_bound,
                "lipschitz_bound_stated": self.lipschitz_bound_stated,
                "pairwise_margin": self.condition.margin, "passed": self.passed}


def verify_invariance(sf, grid=None):
    """Check floor, Lipschitz constant of ``s'`` and the quadratic condition for ``sigmabar``.

    ``grid`` is in the original ``x`` coordinate and defaults to the
    coefficient's discontinuity-aware grid clipped to the tabulated range.
    """
    sig = sf.diffusion_sigma
    if grid is None:
        grid = default_grid(sig, sf.table_range)
        if sf.drift_b is not None:
            extra = [d for d in sf.drift_b.discontinuity_points
                     if sf.table_range[0] < d < sf.table_range[1]]
            grid = np.unique(np.concatenate([grid, *[[np.nextafter(d, -math.inf), d,
                                                      np.nextafter(d, math.inf)] for d in extra]]))
    x = np.unique(np.clip(np.asarray(grid, dtype=float), *sf.table_range))
    sp = np.asarray(sf.scale_prime(x)) * np.ones_like(x)
    dx = np.diff(x)
    wide = dx > 1e-9 * (sf.table_range[1] - sf.table_range[0])  # skip one-sided limit pairs
    lip_emp = float(np.max(np.abs(np.diff(sp))[wide] / dx[wide])) if wide.any() else 0.0
    coef = transformed_coefficient(sf)
    xbar = np.asarray(sf.scale(x)) * np.ones_like(x)
    cond = _check_power_condition(coef, 2.0, xbar)
    return InvarianceReport(eps_prime=cond.min_value, eps_prime_bound=coef.epsilon,
                       c_s1=sf.c_s1, c_s2=sf.c_s2, lipschitz_empirical=lip_emp,
                       lipschitz_bound=sf.lipschitz_bound(),
                       lipschitz_bound_stated=sf.stated_lipschitz_bound(), condition=cond)


# families -------------------------------------------------------------------

@dataclass(frozen=True)
class TransformedDistances:
    n_list: tuple
    distances: tuple
    domains: tuple
    fit: object  # RateFit, or None when some distance is exactly zero


def transformed_family_distance(family, n_list, mode=DistanceMode.L1, box=DEFAULT_BOX,
                                panels=DEFAULT_PANELS, quad=QuadratureSpec()):
    """``int_{S_n} |sigmabar - sigmabar_n|`` (or its square) with ``S_n = s_n(I) & s(I)``.

    Returns per-``n`` distances and a ``C n^-q`` fit.  The fit is omitted when
    any distance is zero (the family is exact).
    """
    mode = DistanceMode(mode)
    if mode is DistanceMode.SUP:
        raise InvalidInputError("transformed distance is an integral: use L1 or L2_SQUARED")
    n_list = [int(n) for n in n_list]
    sf = ScaleFunction(family.drift(), family.limit_sigma, family.domain, box, panels)
    tc = transformed_coefficient(sf)
    lo, hi = sf.image
    out, doms = [], []
    for n in n_list:
        sf_n = ScaleFunction(family.drift(n), family.member(n), family.domain, box, panels)
        lo_n, hi_n = sf_n.image
        a, b = max(lo, lo_n), min(hi, hi_n)
        if not a < b:
            raise DomainError(f"empty common image S_n for n = {n}")
        out.append(coefficient_distance(transformed_coefficient(sf_n), tc, mode, (a, b), quad))
        doms.append((a, b))
    fit = None
    if len(set(n_list)) >= 3 and all(d > 0 for d in out):
        fit = fit_rate(n_list, out, RateModel.POWER, min_points=3)
    return TransformedDistances(tuple(n_list), tuple(out), tuple(doms), fit)


# roundtrip ------------------------------------------------------------------

@dataclass(frozen=True)
class RoundtripPoint:
    h: float
    discrepancy: float
    ci: float


@dataclass(frozen=True)
class RoundtripResult:
    points: tuple
    c: float           # fitted constant of c * h^(1/2)
    r_squared: float   # of the fixed-exponent fit, in log coordinates
    q_free: float      # exponent of a free power fit in h
    r_squared_free: float

    @property
    def monotone(self):
        d = [p.discrepancy for p in sorted(self.points, key=lambda p: -p.h)]
        return all(b < a for a, b in zip(d[:-1], d[1:]))


def _sqrt_fit(h, d):
    """Fit ``log d = log c + log h / 2`` and report R^2 of that fixed-slope line."""
    lh, ld = np.log(h), np.log(d)
    logc = float(np.mean(ld - 0.5 * lh))
    resid = ld - logc - 0.5 * lh
    ss_tot = float(((ld - ld.mean()) ** 2).sum())
    r2 = 1.0 - float(resid @ resid) / ss_tot if ss_tot > 0 else (1.0 if not resid.any() else 0.0)
    return math.exp(logc), r2


def roundtrip_drift_removal(spec, noise_key, h_list, replicas=256, sf=None,
                            domain=(-math.inf, math.inf), box=DEFAULT_BOX, panels=DEFAULT_PANELS):
    """Compare ``s(EM path of the drifted SDE)`` with EM of the transformed driftless SDE.

    Both schemes use the same Wiener path, generated at the finest step in
    ``h_list`` and summed for coarser steps.  Replicas are
    ``noise_key.replica_id, ..., noise_key.replica_id + replicas - 1``.
    Returns the mean over replicas of ``sup_t |s(X_t) - Xbar_t|`` per ``h``
    and a ``c h^(1/2)`` fit.
    """
    if spec.driver.is_stable:
        raise InvalidInputError("the scale transform is for Wiener-driven equations")
    if sf is None:
        sf = ScaleFunction(spec.drift, spec.diffusion, domain, box, panels)
    h_list = sorted({float(h) for h in h_list}, reverse=True)
    h_min = h_list[-1]
    factors = [h / h_min for h in h_list]
    if any(abs(f - round(f)) > 1e-9 for f in factors):
        raise InvalidInputError("every step must be an integer multiple of the finest step")
    steps_min = int(round(spec.horizon_T / h_min))
    ids = np.arange(noise_key.replica_id, noise_key.replica_id + replicas)
    fine = next(iter(NoiseBlock(spec.driver, h_min, steps_min, noise_key.seed, ids,
                                stream_id=noise_key.stream_id, chunk=steps_min)))
    x0bar = float(sf.scale(spec.x0))
    bar = replace(spec, diffusion=sf._fast_sigmabar, drift=None, x0=x0bar)
    points = []
    for h, fac in zip(h_list, factors):
        fac = int(round(fac))
        dw = fine.reshape(len(ids), -1, fac).sum(axis=2) if fac > 1 else fine
        x = euler_maruyama(replace(spec, step_h=h), dw)
        xbar = euler_maruyama(replace(bar, step_h=h), dw)
        sup = np.max(np.abs(np.asarray(sf.scale(x)) - xbar), axis=-1)
        ci = float(Z95 * np.std(sup, ddof=1) / math.sqrt(sup.size)) if sup.size > 1 else 0.0
        points.append(RoundtripPoint(h, float(np.mean(sup)), ci))
    h_arr = np.array([p.h for p in points])
    d_arr = np.array([p.discrepancy for p in points])
    if np.all(d_arr > 0) and len(points) >= 2:
        c, r2 = _sqrt_fit(h_arr, d_arr)
        b0, b1, r2f = ols_line(np.log(h_arr), np.log(d_arr))
        q_free = b1
    else:
        c, r2, q_free, r2f = 0.0, math.nan, math.nan, math.nan
    return RoundtripResult(tuple(points), c, r2, q_free, r2f)
