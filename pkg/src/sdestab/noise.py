"""Reproducible Wiener and symmetric alpha-stable increments.

Every replica owns its own Philox stream keyed by ``(seed, replica_id,
stream_id)``, so a path can be regenerated in isolation and replicas can be
produced in any order.  The i-th increment always comes from the i-th raw
draw of its stream.

Uniforms map to Gaussians through the inverse normal CDF, and to symmetric
stable variables (characteristic function ``exp(-|u|^alpha)``) through the
Chambers-Mallows-Stuck transform.
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .errors import InvalidInputError

_TWO_M53 = 2.0 ** -53
DUMP_MAGIC = b"SDESTAB1"
_DUMP_HEADER = struct.Struct("<8sHHIdQ")  # magic, tag, alpha*1e4, steps, h, seed
DUMP_HEADER_SIZE = _DUMP_HEADER.size


@dataclass(frozen=True)
class Driver:
    kind: str  # "WIENER" or "STABLE"
    alpha: float = 2.0

    def __post_init__(self):
        if self.kind not in ("WIENER", "STABLE"):
            raise InvalidInputError(f"unknown driver {self.kind!r}")
        if self.kind == "STABLE" and not 1.0 < self.alpha < 2.0:
            raise InvalidInputError(f"stable index must lie in (1, 2), got {self.alpha!r}")

    @property
    def is_stable(self):
        return self.kind == "STABLE"

    def label(self):
        return f"STABLE({self.alpha!r})" if self.is_stable else "WIENER"


WIENER = Driver("WIENER")


def stable(alpha):
    return Driver("STABLE", float(alpha))


@dataclass(frozen=True)
class NoiseKey:
    seed: int
    replica_id: int
    stream_id: int = 0


@dataclass(frozen=True, eq=False)
class NoisePath:
    driver: Driver
    step_h: float
    increments: np.ndarray
    seed: int
    replica_id: int
    stream_id: int = 0

    @property
    def steps(self):
        return len(self.increments)

    @property
    def horizon(self):
        return self.steps * self.step_h

    @property
    def key(self):
        return NoiseKey(self.seed, self.replica_id, self.stream_id)


def _bit_generator(seed, replica_id, sub_stream):
    if not 0 <= replica_id < 2 ** 32:
        raise InvalidInputError("replica_id must fit in 32 bits")
    key = np.array([seed % 2 ** 64, (sub_stream << 32) | replica_id], dtype=np.uint64)
    return np.random.Philox(key=key)


def _to_uniform(raw):
    # top 53 bits, shifted half a unit: strictly inside (0, 1)
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * _TWO_M53


def uniforms(seed, replica_id, sub_stream, count):
    return _to_uniform(_bit_generator(seed, replica_id, sub_stream).random_raw(count))


def _gaussian(u, h):
    return ndtri(u) * math.sqrt(h)


def _cms(u_angle, u_exp, alpha, h):
    v = math.pi * (u_angle - 0.5)
    w = -np.log(u_exp)
    s = (np.sin(alpha * v) / np.cos(v) ** (1.0 / alpha)
         * (np.cos((1.0 - alpha) * v) / w) ** ((1.0 - alpha) / alpha))
    return h ** (1.0 / alpha) * s


def _check(h, steps):
    if not h > 0:
        raise InvalidInputError(f"step h must be positive, got {h!r}")
    if int(steps) != steps or steps < 1:
        raise InvalidInputError(f"steps must be a positive integer, got {steps!r}")


def brownian_increments(h, steps, seed, replica_id, stream_id=0):
    _check(h, steps)
    u = uniforms(seed, replica_id, 2 * stream_id, int(steps))
    return NoisePath(WIENER, float(h), _gaussian(u, h), seed, replica_id, stream_id)


def stable_increments(alpha, h, steps, seed, replica_id, stream_id=0):
    drv = stable(alpha)
    _check(h, steps)
    u1 = uniforms(seed, replica_id, 2 * stream_id, int(steps))
    u2 = uniforms(seed, replica_id, 2 * stream_id + 1, int(steps))
    return NoisePath(drv, float(h), _cms(u1, u2, drv.alpha, h), seed, replica_id, stream_id)


def increments(driver, h, steps, seed, replica_id, stream_id=0):
    if driver.is_stable:
        return stable_increments(driver.alpha, h, steps, seed, replica_id, stream_id)
    return brownian_increments(h, steps, seed, replica_id, stream_id)


def coarsen(path, factor):
    """Sum consecutive groups of ``factor`` increments (the same path at step ``factor*h``)."""
    if path.steps % factor:
        raise InvalidInputError("number of steps must be divisible by the coarsening factor")
    inc = path.increments.reshape(-1, factor).sum(axis=1)
    return NoisePath(path.driver, path.step_h * factor, inc, path.seed, path.replica_id,
                     path.stream_id)


class NoiseBlock:
    """Chunked increments for a batch of replicas, rows in replica order.

    Produces the same numbers as :func:`increments` for each replica, coarsened
    by ``factor`` (the fine step is ``h / factor``).
    """

    def __init__(self, driver, h, steps, seed, replica_ids, factor=1, stream_id=0, chunk=2048):
        _check(h, steps)
        self.driver = driver
        self.h = float(h)
        self.steps = int(steps)
        self.factor = int(factor)
        self.fine_h = self.h / self.factor
        self.chunk = max(1, int(chunk))
        ids = [int(r) for r in replica_ids]
        self._gens = [[_bit_generator(seed, r, 2 * stream_id + j) for r in ids]
                      for j in range(2 if driver.is_stable else 1)]

    def _draw(self, gens, count):
        return _to_uniform(np.stack([g.random_raw(count) for g in gens]))

    def __iter__(self):
        done = 0
        while done < self.steps:
            n_coarse = min(self.chunk, self.steps - done)
            count = n_coarse * self.factor
            if self.driver.is_stable:
                fine = _cms(self._draw(self._gens[0], count), self._draw(self._gens[1], count),
                            self.driver.alpha, self.fine_h)
            else:
                fine = _gaussian(self._draw(self._gens[0], count), self.fine_h)
            if self.factor > 1:
                fine = fine.reshape(fine.shape[0], n_coarse, self.factor).sum(axis=2)
            done += n_coarse
            yield fine


def empirical_cf(samples, u):
    """Sample mean of ``exp(i u X)``; ``u`` may be an array."""
    samples = np.asarray(samples, dtype=float).ravel()
    if samples.size == 0:
        raise InvalidInputError("empirical_cf needs at least one sample")
    uu = np.atleast_1d(np.asarray(u, dtype=float))
    out = np.array([complex(np.mean(np.cos(v * samples)), np.mean(np.sin(v * samples)))
                    for v in uu])
    return complex(out[0]) if np.ndim(u) == 0 else out


def write_noise_dump(path, noise):
    """Little-endian dump: 32-byte header then float64 increments."""
    tag = 1 if noise.driver.is_stable else 0
    alpha_q = int(round(noise.driver.alpha * 10000)) if noise.driver.is_stable else 0
    header = _DUMP_HEADER.pack(DUMP_MAGIC, tag, alpha_q, noise.steps, noise.step_h,
                               noise.seed % 2 ** 64)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.asarray(noise.increments, dtype="<f8").tobytes())


def read_noise_dump(path):
    """Inverse of :func:`write_noise_dump`; replica id is not stored and comes back as 0."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < DUMP_HEADER_SIZE:
        raise InvalidInputError(f"{path}: truncated noise dump")
    magic, tag, alpha_q, steps, h, seed = _DUMP_HEADER.unpack_from(raw)
    if magic != DUMP_MAGIC:
        raise InvalidInputError(f"{path}: bad magic {magic!r}")
    inc = np.frombuffer(raw, dtype="<f8", offset=DUMP_HEADER_SIZE)
    if inc.size != steps:
        raise InvalidInputError(f"{path}: header says {steps} steps, found {inc.size}")
    driver = stable(alpha_q / 10000.0) if tag == 1 else WIENER
    return NoisePath(driver, h, inc.astype(np.float64), int(seed), 0)
