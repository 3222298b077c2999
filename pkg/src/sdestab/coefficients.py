"""Coefficient objects, regularity checks and distances between coefficients.

A :class:`Coefficient` wraps a vectorised function of the state together with
the regularity data used by the checks: an ellipticity floor, a monotone
dominator ``f`` and a sup bound.  The checks are grid based; exact checking
of a universally quantified condition is impossible for black-box functions.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from .errors import DegenerateFitError, InvalidInputError, QuadratureError
from .rate_analysis import RateModel, fit_rate

CONDITION_TOL = 1e-12
DEFAULT_GRID_POINTS = 2048


class DistanceMode(str, enum.Enum):
    L1 = "L1"
    L2_SQUARED = "L2_SQUARED"
    SUP = "SUP"


@dataclass(frozen=True)
class Coefficient:
    """Scalar coefficient with attached regularity metadata.

    ``epsilon`` is ``None`` for drift coefficients, which carry no ellipticity
    floor.  ``f_sup`` is the sup-norm of the dominator.
    """
    func: Callable
    epsilon: Optional[float] = None
    dominator_f: Optional[Callable] = None
    sup_bound: float = math.inf
    discontinuity_points: tuple = ()
    f_sup: float = math.inf
    name: str = ""

    def __call__(self, x):
        return self.func(np.asarray(x, dtype=float))

    def eval(self, x):
        return self(x)


@dataclass(frozen=True)
class CoefficientFamily:
    """Indexed coefficients ``sigma_n`` (and optional drifts ``b_n``) with their limits."""
    limit_sigma: Coefficient
    member: Callable
    rate_constant_C0: float
    distance_mode: DistanceMode = DistanceMode.L2_SQUARED
    limit_b: Optional[Coefficient] = None
    member_b: Optional[Callable] = None
    domain: tuple = (-math.inf, math.inf)
    name: str = ""
    params: dict = field(default_factory=dict)

    def drift(self, n=None):
        if n is None:
            return self.limit_b
        return self.member_b(n) if self.member_b is not None else None


@dataclass(frozen=True)
class ConditionReport:
    passed: bool
    exponent: float
    ellipticity_ok: bool
    min_value: float
    f_monotone: bool
    worst_violation: float
    witness: Optional[tuple]
    grid_size: int

    @property
    def margin(self):
        return -self.worst_violation


@dataclass(frozen=True)
class QuadratureSpec:
    """Accuracy controls for :func:`coefficient_distance`.

    ``box`` bounds the refinement grid used in SUP mode on unbounded domains.
    """
    epsrel: float = 1e-9
    epsabs: float = 1e-13
    limit: int = 200
    box: tuple = (-10.0, 10.0)
    sup_points: int = 4097
    points_per_panel: int = 65


# builders -----------------------------------------------------------------

def constant(value, name=None):
    value = float(value)
    return Coefficient(
        func=lambda x: np.full(np.shape(x), value),
        epsilon=value if value > 0 else None,
        dominator_f=lambda x: np.zeros(np.shape(x)),
        sup_bound=abs(value),
        f_sup=0.0,
        name=name or f"const({value!r})",
    )


def step(low, high, jump_at=0.0):
    """``low + (high - low) * 1[x >= jump_at]``.

    The dominator is ``sigma^2`` (``-sigma^2`` for a downward jump, so that it
    stays non-decreasing).
    """
    low, high, jump_at = float(low), float(high), float(jump_at)
    jump = high - low
    sign = 1.0 if jump >= 0 else -1.0

    def f(x):
        return low + jump * (x >= jump_at)

    return Coefficient(
        func=f,
        epsilon=min(low, high),
        dominator_f=lambda x: sign * f(x) ** 2,
        sup_bound=max(abs(low), abs(high)),
        discontinuity_points=(jump_at,),
        f_sup=max(low * low, high * high),
        name=f"step({low!r},{high!r},{jump_at!r})",
    )


def indicator_drift(beta, lo=0.0, hi=1.0):
    """Bounded, integrable drift ``beta * 1[lo <= x <= hi]``."""
    beta, lo, hi = float(beta), float(lo), float(hi)
    if not lo < hi:
        raise InvalidInputError("indicator_drift needs lo < hi")
    return Coefficient(
        func=lambda x: beta * ((x >= lo) & (x <= hi)),
        sup_bound=abs(beta),
        discontinuity_points=(lo, hi),
        name=f"indicator({beta!r},[{lo!r},{hi!r}])",
    )


def _mollified_member(low, high, jump_at, n):
    jump = high - low
    scale = float(n)

    def f(x):
        return low + jump * np.clip((x - jump_at) * scale, 0.0, 1.0)

    return Coefficient(
        func=f,
        epsilon=low,
        dominator_f=lambda x: f(x) ** 2,
        sup_bound=high,
        discontinuity_points=(jump_at, jump_at + 1.0 / n),
        f_sup=high * high,
        name=f"mollified_jump[n={n}]",
    )


def mollified_jump_family(low, high, jump_at=0.0, distance_mode=DistanceMode.L2_SQUARED):
    """Unit-step limit with members linearly interpolated across ``[jump_at, jump_at + 1/n]``.

    Every coefficient carries ``f = sigma^2`` as dominator, valid because
    ``|a - b|^2 <= |a^2 - b^2|`` for positive ``a, b``.
    """
    low, high, jump_at = float(low), float(high), float(jump_at)
    if low <= 0:
        raise InvalidInputError(f"low must be positive, got {low!r}")
    if high <= low:
        raise InvalidInputError("need low < high")
    mode = DistanceMode(distance_mode)
    jump = high - low
    c0 = {DistanceMode.L2_SQUARED: jump ** 2 / 3.0,
          DistanceMode.L1: jump / 2.0,
          DistanceMode.SUP: jump}[mode]
    limit = replace(step(low, high, jump_at), name="mollified_jump[limit]")
    return CoefficientFamily(
        limit_sigma=limit,
        member=lambda n: _mollified_member(low, high, jump_at, n),
        rate_constant_C0=c0,
        distance_mode=mode,
        name="mollified_jump",
        params={"low": low, "high": high, "jump_at": jump_at},
    )


def constant_shift_family(base=1.0):
    """``sigma = base`` and ``sigma_n = base + 1/n``; sup distance exactly ``1/n``."""
    base = float(base)
    if base <= 0:
        raise InvalidInputError("base must be positive")
    return CoefficientFamily(
        limit_sigma=constant(base),
        member=lambda n: constant(base + 1.0 / n),
        rate_constant_C0=1.0,
        distance_mode=DistanceMode.SUP,
        name="constant_shift",
        params={"base": base},
    )


def exact_family(sigma, distance_mode=DistanceMode.SUP):
    """Degenerate family whose members all equal the limit."""
    return CoefficientFamily(
        limit_sigma=sigma,
        member=lambda n: sigma,
        rate_constant_C0=1.0,
        distance_mode=DistanceMode(distance_mode),
        name="exact",
        params={"sigma": sigma.name},
    )


def with_drift(family, drift, member_drift=None):
    """Attach a drift (shared by all members unless ``member_drift`` is given)."""
    return replace(
        family,
        limit_b=drift,
        member_b=member_drift if member_drift is not None else (lambda n: drift),
        params={**family.params, "drift": drift.name},
    )


# condition checks ---------------------------------------------------------

def default_grid(coef, domain=(-math.inf, math.inf), points=DEFAULT_GRID_POINTS, margin=5.0):
    """Equispaced points on the (boxed) domain plus one-sided limits at discontinuities."""
    lo, hi = domain
    disc = [d for d in coef.discontinuity_points if lo < d < hi]
    if not math.isfinite(lo):
        lo = (min(disc) if disc else 0.0) - margin
    if not math.isfinite(hi):
        hi = (max(disc) if disc else 0.0) + margin
    extra = []
    for d in disc:
        extra += [np.nextafter(d, -math.inf), d, np.nextafter(d, math.inf)]
    return np.unique(np.concatenate([np.linspace(lo, hi, points), extra]))


def _check_power_condition(sigma, exponent, grid, tol=CONDITION_TOL):
    grid = np.unique(np.asarray(grid, dtype=float))
    if grid.size < 2:
        raise InvalidInputError("condition check needs a grid with at least 2 points")
    if sigma.dominator_f is None:
        raise InvalidInputError(f"coefficient {sigma.name!r} has no dominator f")
    s = np.asarray(sigma(grid), dtype=float)
    f = np.asarray(sigma.dominator_f(grid), dtype=float) * np.ones_like(grid)
    min_value = float(s.min())
    ellipticity_ok = sigma.epsilon is not None and min_value >= sigma.epsilon - tol
    f_monotone = bool(np.all(np.diff(f) >= -tol))

    worst = -math.inf
    witness = None
    chunk = max(1, 2 ** 22 // grid.size)
    for start in range(0, grid.size, chunk):
        stop = min(grid.size, start + chunk)
        lhs = np.abs(s[start:stop, None] - s[None, :]) ** exponent
        rhs = np.abs(f[start:stop, None] - f[None, :])
        viol = lhs - rhs
        k = int(np.argmax(viol))
        i, j = divmod(k, grid.size)
        if viol.flat[k] > worst:
            worst = float(viol.flat[k])
            witness = (float(grid[start + i]), float(grid[j]))
    passed = ellipticity_ok and f_monotone and worst <= tol
    return ConditionReport(passed=passed, exponent=exponent, ellipticity_ok=ellipticity_ok,
                           min_value=min_value, f_monotone=f_monotone,
                           worst_violation=worst, witness=witness, grid_size=int(grid.size))


def check_nakao_legall(sigma, grid=None):
    """Grid check of ``sigma >= eps`` and ``|sigma(x)-sigma(y)|^2 <= |f(x)-f(y)|``."""
    if grid is None:
        grid = default_grid(sigma)
    return _check_power_condition(sigma, 2.0, grid)


def check_belfadli_ouknine(sigma, alpha, grid=None):
    """As :func:`check_nakao_legall` with exponent ``alpha``.

    ``alpha = 2`` is accepted and reproduces the quadratic condition.
    """
    if not 1.0 < alpha <= 2.0:
        raise InvalidInputError(f"alpha must lie in (1, 2), got {alpha!r}")
    if grid is None:
        grid = default_grid(sigma)
    return _check_power_condition(sigma, float(alpha), grid)


# distances ----------------------------------------------------------------

def _breakpoints(a, b, lo, hi):
    pts = sorted({float(d) for d in (*a.discontinuity_points, *b.discontinuity_points)
                  if lo < d < hi})
    return [lo, *pts, hi]


def _quad_panel(func, lo, hi, quad):
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(func, lo, hi, epsabs=quad.epsabs, epsrel=quad.epsrel,
                                      limit=quad.limit)
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(f"quadrature on [{lo}, {hi}] did not converge: {exc}") from exc
    if not math.isfinite(val) or err > max(quad.epsabs, 1e-6 * abs(val)):
        raise QuadratureError(f"quadrature on [{lo}, {hi}] gave {val!r} +- {err!r}")
    return val


def sup_grid(a, b, domain, quad=QuadratureSpec()):
    lo, hi = domain
    if not math.isfinite(lo):
        lo = quad.box[0]
    if not math.isfinite(hi):
        hi = quad.box[1]
    edges = _breakpoints(a, b, lo, hi)
    parts = [np.linspace(lo, hi, quad.sup_points)]
    for left, right in zip(edges[:-1], edges[1:]):
        parts.append(np.linspace(left, right, quad.points_per_panel))
    for d in edges[1:-1]:
        parts.append([np.nextafter(d, -math.inf), d, np.nextafter(d, math.inf)])
    return np.unique(np.concatenate(parts))


def coefficient_distance(a, b, mode=DistanceMode.L2_SQUARED,
                         domain=(-math.inf, math.inf), quad=QuadratureSpec()):
    """Distance between two coefficients.

    L1 and L2_SQUARED integrate ``|a-b|`` and ``(a-b)^2`` with panels split at
    declared discontinuities.  SUP takes the maximum of ``|a-b|`` over a
    refinement grid including one-sided limits at discontinuities.
    """
    mode = DistanceMode(mode)
    lo, hi = float(domain[0]), float(domain[1])
    if not lo < hi:
        raise InvalidInputError("domain must satisfy lo < hi")
    if mode is DistanceMode.SUP:
        x = sup_grid(a, b, (lo, hi), quad)
        return float(np.max(np.abs(a(x) - b(x))))
    power = 1 if mode is DistanceMode.L1 else 2

    def integrand(x):
        return float(abs(a(x) - b(x))) ** power

    edges = _breakpoints(a, b, lo, hi)
    return math.fsum(_quad_panel(integrand, l, r, quad) for l, r in zip(edges[:-1], edges[1:]))


def family_distances(family, n_list, quad=QuadratureSpec()):
    return [coefficient_distance(family.member(n), family.limit_sigma, family.distance_mode,
                                 family.domain, quad) for n in n_list]


def fit_family_rate(family, n_list, quad=QuadratureSpec()):
    """Fit ``distance(member(n), limit) ~ C n^-q`` over ``n_list``."""
    n_list = list(n_list)
    if len(set(n_list)) < 3:
        raise InvalidInputError("fit_family_rate needs at least 3 distinct n")
    dist = family_distances(family, n_list, quad)
    if any(d == 0.0 for d in dist):
        raise DegenerateFitError(f"family {family.name!r} has zero distance; rate is infinite")
    return fit_rate(n_list, dist, RateModel.POWER, min_points=3)


def validate_family(family, n_list, grid=None, quad=QuadratureSpec()):
    """Check each member against the shared regularity data and the C0/n rate.

    Returns a list of ``(n, ConditionReport, distance, within_rate)``.
    """
    out = []
    eps = family.limit_sigma.epsilon
    for n in n_list:
        member = family.member(n)
        g = grid if grid is not None else default_grid(member)
        rep = check_nakao_legall(member, g)
        ok_eps = member.epsilon is not None and eps is not None and member.epsilon >= eps
        d = coefficient_distance(member, family.limit_sigma, family.distance_mode,
                                 family.domain, quad)
        within = d <= family.rate_constant_C0 / n * (1 + 1e-9) + 1e-15
        out.append((n, replace(rep, passed=rep.passed and ok_eps), d, within))
    return out
