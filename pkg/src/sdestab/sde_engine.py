"""Coupled Euler-Maruyama simulation, strong-error estimation and local-time diagnostics.

Two systems are *coupled* when they are driven by the same regenerated noise
path.  Strong errors are estimated by replica averaging with common random
numbers: replica ``r`` uses noise key ``(seed, r)`` for every ``n``.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import trapezoid

from .errors import InvalidInputError, SimulationError
from .noise import WIENER, Driver, NoiseBlock, NoiseKey, NoisePath, increments

Z95 = 1.959963984540054
DEFAULT_BATCH = 2500


@dataclass(frozen=True)
class SimSpec:
    diffusion: object
    drift: object = None
    x0: float = 0.0
    horizon_T: float = 1.0
    step_h: float = 2.0 ** -14
    driver: Driver = WIENER

    def __post_init__(self):
        if not self.horizon_T > 0 or not self.step_h > 0:
            raise InvalidInputError("horizon_T and step_h must be positive")
        if self.step_h > self.horizon_T:
            raise InvalidInputError("step_h must not exceed horizon_T")
        ratio = self.horizon_T / self.step_h
        if abs(ratio - round(ratio)) > 1e-9 * ratio:
            raise InvalidInputError("horizon_T must be an integer multiple of step_h")

    @property
    def steps(self):
        return int(round(self.horizon_T / self.step_h))

    def grid(self):
        return np.arange(self.steps + 1) * self.step_h


@dataclass(frozen=True, eq=False)
class CoupledPathPair:
    grid: np.ndarray
    x_path: np.ndarray
    xn_path: np.ndarray
    y_path: np.ndarray
    noise_key: NoiseKey


@dataclass(frozen=True)
class ErrorEstimate:
    n: int
    p: float
    terminal_error: float
    terminal_ci: float
    sup_error: float
    sup_ci: float
    replicas: int
    h: float
    seed: int

    def to_row(self):
        return {"n": self.n, "p": self.p, "terminal_error": self.terminal_error,
                "terminal_ci": self.terminal_ci, "sup_error": self.sup_error,
                "sup_ci": self.sup_ci, "replicas": self.replicas, "h": self.h,
                "seed": self.seed}

    def terminal(self):
        return (self.n, self.terminal_error, self.terminal_ci)

    def sup(self):
        return (self.n, self.sup_error, self.sup_ci)


def _stepper(spec):
    sig = spec.diffusion
    b = spec.drift
    h = spec.step_h
    if b is None:
        def step(x, dw):
            return x + sig(x) * dw
    else:
        def step(x, dw):
            return x + b(x) * h + sig(x) * dw
    return step


def _first_bad_step(path):
    bad = ~np.isfinite(path)
    if bad.ndim > 1:
        bad = bad.any(axis=tuple(range(bad.ndim - 1)))
    idx = np.flatnonzero(bad)
    return int(idx[0]) - 1 if idx.size else None


def euler_maruyama(spec, noise):
    """``X_{k+1} = X_k + b(X_k) h + sigma(X_k) dZ_k`` with left-point coefficients.

    ``noise`` is a :class:`NoisePath` or an increment array whose last axis is
    time; leading axes are independent replicas.  Returns the path including
    the initial value.
    """
    if isinstance(noise, NoisePath):
        if noise.driver != spec.driver:
            raise InvalidInputError(f"noise driver {noise.driver} does not match spec {spec.driver}")
        if not math.isclose(noise.step_h, spec.step_h, rel_tol=1e-12) or noise.steps != spec.steps:
            raise InvalidInputError("noise step/horizon do not match the simulation settings")
        dw = noise.increments
    else:
        dw = np.asarray(noise, dtype=float)
        if dw.shape[-1] != spec.steps:
            raise InvalidInputError(f"expected {spec.steps} increments, got {dw.shape[-1]}")
    step = _stepper(spec)
    cols = np.moveaxis(dw, -1, 0)
    path = np.empty((spec.steps + 1,) + dw.shape[:-1])
    x = np.full(dw.shape[:-1], float(spec.x0)) if dw.ndim > 1 else float(spec.x0)
    path[0] = x
    with np.errstate(all="ignore"):
        for k in range(spec.steps):
            x = step(x, cols[k])
            path[k + 1] = x
    bad = _first_bad_step(np.moveaxis(path, 0, -1))
    if bad is not None:
        raise SimulationError(f"non-finite state after step {bad}", step=bad)
    return np.moveaxis(path, 0, -1)


def _check_compatible(a, b):
    for attr in ("x0", "horizon_T", "step_h", "driver"):
        if getattr(a, attr) != getattr(b, attr):
            raise InvalidInputError(f"coupled specs differ in {attr}")


def noise_for(spec, key, factor=1):
    """Regenerate the noise of ``key`` at step ``spec.step_h``.

    With ``factor > 1`` the path is generated at ``step_h / factor`` and summed,
    which keeps one underlying path across resolutions.
    """
    fine = increments(spec.driver, spec.step_h / factor, spec.steps * factor, key.seed,
                      key.replica_id, key.stream_id)
    if factor == 1:
        return fine
    inc = fine.increments.reshape(-1, factor).sum(axis=1)
    return NoisePath(spec.driver, spec.step_h, inc, key.seed, key.replica_id, key.stream_id)


def coupled_simulate(spec_limit, spec_n, noise_key, factor=1):
    """Simulate both systems on the identical regenerated noise path."""
    _check_compatible(spec_limit, spec_n)
    noise = noise_for(spec_limit, noise_key, factor)
    x = euler_maruyama(spec_limit, noise)
    xn = x if spec_n == spec_limit else euler_maruyama(spec_n, noise)
    return CoupledPathPair(spec_limit.grid(), x, xn, x - xn, noise_key)


def simulate_coupled_batch(spec_limit, spec_n, seed, replica_ids, factor=1):
    """Stored paths ``(X, X_n)`` for several replicas, shape ``(R, steps + 1)``."""
    _check_compatible(spec_limit, spec_n)
    block = NoiseBlock(spec_limit.driver, spec_limit.step_h, spec_limit.steps, seed,
                       replica_ids, factor=factor, chunk=spec_limit.steps)
    dw = next(iter(block))
    return euler_maruyama(spec_limit, dw), euler_maruyama(spec_n, dw)


def _specs_for(family, n_list, template):
    limit = replace(template, diffusion=family.limit_sigma, drift=family.drift())
    members = [replace(template, diffusion=family.member(n), drift=family.drift(n)) for n in n_list]
    return limit, members


def _batch_errors(limit, members, seed, replica_ids, factor):
    """Terminal and running-sup ``|X - X_n|`` per member and replica."""
    block = NoiseBlock(limit.driver, limit.step_h, limit.steps, seed, replica_ids, factor=factor)
    B = len(replica_ids)
    steppers = [_stepper(s) for s in members]
    lim_step = _stepper(limit)
    x_lim = np.full(B, float(limit.x0))
    xs = [np.full(B, float(s.x0)) for s in members]
    sups = [np.zeros(B) for _ in members]
    diff = np.empty(B)
    with np.errstate(all="ignore"):
        for chunk in block:
            cols = np.ascontiguousarray(chunk.T)
            for dw in cols:
                x_new = lim_step(x_lim, dw)
                for j, st in enumerate(steppers):
                    xs[j] = st(xs[j], dw)
                    np.subtract(x_new, xs[j], out=diff)
                    np.abs(diff, out=diff)
                    np.maximum(sups[j], diff, out=sups[j])
                x_lim = x_new
            if not (np.all(np.isfinite(x_lim)) and all(np.all(np.isfinite(x)) for x in xs)):
                _locate_failure(limit, members, seed, replica_ids, factor, x_lim, xs)
    terminal = np.stack([np.abs(x_lim - x) for x in xs]) if xs else np.zeros((0, B))
    sup = np.stack(sups) if sups else np.zeros((0, B))
    return terminal, sup


def _locate_failure(limit, members, seed, replica_ids, factor, x_lim, xs):
    for spec, x in [(limit, x_lim), *zip(members, xs)]:
        bad = np.flatnonzero(~np.isfinite(x))
        if bad.size:
            key = NoiseKey(seed, int(replica_ids[bad[0]]))
            euler_maruyama(spec, noise_for(spec, key, factor))  # raises with the step index
    raise SimulationError("non-finite state encountered")


def _mean_ci(values):
    m = float(np.mean(values))
    if values.size < 2:
        return m, 0.0
    return m, float(Z95 * np.std(values, ddof=1) / math.sqrt(values.size))


def replica_errors(family, n_list, replicas, template, seed, factor=1,
                   batch_size=DEFAULT_BATCH, threads=1):
    """Per-replica terminal and sup errors, arrays of shape ``(len(n_list), replicas)``."""
    if replicas < 1:
        raise InvalidInputError("replicas must be positive")
    limit, members = _specs_for(family, n_list, template)
    ids = np.arange(replicas)
    batches = [ids[i:i + batch_size] for i in range(0, replicas, batch_size)]

    def run(batch):
        return _batch_errors(limit, members, seed, batch, factor)

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, batches))
    else:
        results = [run(b) for b in batches]
    terminal = np.concatenate([r[0] for r in results], axis=1)
    sup = np.concatenate([r[1] for r in results], axis=1)
    return terminal, sup


def summarize_errors(n_list, p_list, terminal, sup, h, seed):
    out = []
    for i, n in enumerate(n_list):
        for p in p_list:
            tm, tci = _mean_ci(terminal[i] ** p)
            sm, sci = _mean_ci(sup[i] ** p)
            out.append(ErrorEstimate(int(n), float(p), tm, tci, sm, sci,
                                     int(terminal.shape[1]), float(h), int(seed)))
    return out


def estimate_strong_error(family, n_list, p, replicas, template, seed=0, factor=1,
                          batch_size=DEFAULT_BATCH, threads=1):
    """Strong errors ``E|Y_n(T)|^p`` and ``E sup_t |Y_n(t)|^p`` with 95% normal CIs.

    ``p`` may be a single order or a sequence; all orders share the same
    paths.  The same replica noise keys are used for every ``n``.  Results are
    ordered by ``n`` then ``p``.
    """
    p_list = [float(v) for v in np.atleast_1d(p)]
    if any(v <= 0 for v in p_list):
        raise InvalidInputError("moment orders must be positive")
    n_list = [int(n) for n in n_list]
    terminal, sup = replica_errors(family, n_list, replicas, template, seed, factor,
                                   batch_size, threads)
    return summarize_errors(n_list, p_list, terminal, sup, template.step_h, seed)


# local time ---------------------------------------------------------------

def _weights(path, sigma, h):
    left = path[..., :-1]
    if sigma is None:
        return left, np.full(left.shape, h)
    s = sigma(left) if callable(sigma) else np.asarray(sigma)[..., :-1]
    return left, s * s * h


def local_time(path, level_a, bandwidth, h, sigma=None):
    """Kernel estimate ``(1/2bw) sum_k 1[|X_k - a| <= bw] sigma(X_k)^2 h``.

    ``sigma`` is a coefficient evaluated on the path, an array of
    quadratic-variation densities aligned with ``path``, or ``None`` for unit
    density.  Leading axes of ``path`` are replicas.
    """
    if not bandwidth > 0:
        raise InvalidInputError("bandwidth must be positive")
    path = np.asarray(path, dtype=float)
    left, w = _weights(path, sigma, h)
    hit = np.abs(left - level_a) <= bandwidth
    return (hit * w).sum(axis=-1) / (2.0 * bandwidth)


def local_time_profile(path, levels, bandwidth, h, sigma=None):
    """:func:`local_time` of one path at many levels, via a sorted cumulative sum."""
    path = np.asarray(path, dtype=float)
    if path.ndim != 1:
        raise InvalidInputError("local_time_profile takes a single path")
    left, w = _weights(path, sigma, h)
    order = np.argsort(left, kind="stable")
    xs = left[order]
    cw = np.concatenate([[0.0], np.cumsum(w[order])])
    levels = np.asarray(levels, dtype=float)
    hi = np.searchsorted(xs, levels + bandwidth, side="right")
    lo = np.searchsorted(xs, levels - bandwidth, side="left")
    return (cw[hi] - cw[lo]) / (2.0 * bandwidth)


def tanaka_local_time(path, level_a):
    """Discrete Tanaka estimate ``|X_T-a| - |X_0-a| - sum sign(X_k-a) dX_k``."""
    path = np.asarray(path, dtype=float)
    dx = np.diff(path, axis=-1)
    mart = (np.sign(path[..., :-1] - level_a) * dx).sum(axis=-1)
    return np.abs(path[..., -1] - level_a) - np.abs(path[..., 0] - level_a) - mart


def default_bandwidth(h):
    return 2.0 * math.sqrt(h)


def occupation(path, g, h, sigma=None):
    """``sum_k g(X_k) sigma(X_k)^2 h``: time-discretised occupation integral."""
    path = np.asarray(path, dtype=float)
    left, w = _weights(path, sigma, h)
    return (g(left) * w).sum(axis=-1)


def occupation_residual(path, g, sigma, h, support, bandwidth=None, nodes_per_bw=8):
    """Occupation integral minus ``int g(a) L^a da`` (trapezoid over ``support``).

    Returns one residual per path.
    """
    bw = default_bandwidth(h) if bandwidth is None else bandwidth
    lo, hi = support
    k = max(2, int(math.ceil((hi - lo) / bw * nodes_per_bw)) + 1)
    levels = np.linspace(lo, hi, k)
    ga = g(levels)
    path = np.asarray(path, dtype=float)
    rows = path.reshape(-1, path.shape[-1])
    res = np.empty(rows.shape[0])
    occ = occupation(rows, g, h, sigma)
    for i, row in enumerate(rows):
        lt = local_time_profile(row, levels, bw, h, sigma)
        res[i] = occ[i] - trapezoid(ga * lt, levels)
    return res.reshape(path.shape[:-1]) if path.ndim > 1 else float(res[0])


def moment_diagnostic_cL(family, n, p, a_grid, replicas, template, seed=0,
                         thetas=(0.0, 0.5, 1.0), bandwidth=None, batch_size=500):
    """Max over ``a`` and ``theta`` of the empirical ``E[L_T^a(Z^theta)^p]``.

    ``Z^theta = X + theta (X_n - X)`` has quadratic-variation density
    ``((1-theta) sigma(X) + theta sigma_n(X_n))^2``.
    """
    limit, (member,) = _specs_for(family, [n], template)
    bw = default_bandwidth(template.step_h) if bandwidth is None else bandwidth
    a_grid = np.atleast_1d(np.asarray(a_grid, dtype=float))
    sums = np.zeros((len(thetas), a_grid.size))
    for start in range(0, replicas, batch_size):
        ids = np.arange(start, min(replicas, start + batch_size))
        x, xn = simulate_coupled_batch(limit, member, seed, ids)
        s_x = limit.diffusion(x)
        s_n = member.diffusion(xn)
        for i, th in enumerate(thetas):
            z = x + th * (xn - x)
            dens = (1.0 - th) * s_x + th * s_n
            for j, a_lev in enumerate(a_grid):
                lt = local_time(z, a_lev, bw, template.step_h, sigma=dens)
                sums[i, j] += float(np.sum(lt ** p))
    return float((sums / replicas).max())
