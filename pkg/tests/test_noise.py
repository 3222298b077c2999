import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from sdestab import noise as nz
from sdestab.errors import InvalidInputError


def test_reproducible_per_key():
    a = nz.brownian_increments(0.01, 100, seed=5, replica_id=3)
    b = nz.brownian_increments(0.01, 100, seed=5, replica_id=3)
    c = nz.brownian_increments(0.01, 100, seed=5, replica_id=4)
    assert np.array_equal(a.increments, b.increments)
    assert not np.array_equal(a.increments, c.increments)


def test_prefix_property():
    long = nz.stable_increments(1.5, 0.01, 200, 9, 1).increments
    short = nz.stable_increments(1.5, 0.01, 50, 9, 1).increments
    assert np.array_equal(long[:50], short)


def test_streams_are_distinct():
    a = nz.brownian_increments(0.01, 50, 1, 0, stream_id=0).increments
    b = nz.brownian_increments(0.01, 50, 1, 0, stream_id=1).increments
    assert not np.array_equal(a, b)


def test_uniforms_open_interval():
    u = nz.uniforms(0, 0, 0, 100000)
    assert u.min() > 0 and u.max() < 1


def test_brownian_distribution():
    h = 0.25
    x = nz.brownian_increments(h, 20000, 2, 0).increments
    assert stats.kstest(x / math.sqrt(h), "norm").pvalue > 1e-3


def test_stable_matches_scipy_distribution():
    # scipy's levy_stable with beta=0, scale 1 has characteristic function exp(-|u|^alpha)
    x = nz.stable_increments(1.5, 1.0, 20000, 4, 0).increments
    ref = stats.levy_stable(1.5, 0.0)
    qs = np.array([0.1, 0.25, 0.5, 0.75, 0.9])
    assert np.allclose(np.quantile(x, qs), ref.ppf(qs), atol=0.06)


def test_stable_scaling_in_h():
    h = 2.0 ** -6
    x = nz.stable_increments(1.5, h, 40000, 3, 0).increments
    u = 1.0 / h ** (1 / 1.5)
    cf = nz.empirical_cf(x, u)
    assert abs(cf - math.exp(-1.0)) < 4 / math.sqrt(x.size)


def test_coarsen_and_block_agree():
    fine = nz.stable_increments(1.7, 0.01, 64, 11, 2)
    coarse = nz.coarsen(fine, 4)
    block = np.concatenate(list(nz.NoiseBlock(nz.stable(1.7), 0.04, 16, 11, [1, 2], factor=4,
                                              chunk=5)), axis=1)
    assert np.array_equal(block[1], coarse.increments)
    assert coarse.step_h == pytest.approx(0.04)
    with pytest.raises(InvalidInputError):
        nz.coarsen(fine, 5)


def test_block_rows_independent_of_batch():
    a = np.concatenate(list(nz.NoiseBlock(nz.WIENER, 0.1, 30, 1, [0, 1, 2, 3])), axis=1)
    b = np.concatenate(list(nz.NoiseBlock(nz.WIENER, 0.1, 30, 1, [2])), axis=1)
    assert np.array_equal(a[2], b[0])


def test_driver_validation():
    with pytest.raises(InvalidInputError):
        nz.stable(2.0)
    with pytest.raises(InvalidInputError):
        nz.Driver("LEVY")
    assert nz.stable(1.5).label() == "STABLE(1.5)"
    with pytest.raises(InvalidInputError):
        nz.brownian_increments(0.0, 10, 0, 0)
    with pytest.raises(InvalidInputError):
        nz.brownian_increments(0.1, 0, 0, 0)


def test_dump_roundtrip(tmp_path):
    p = nz.stable_increments(1.25, 0.5, 33, 2 ** 63 + 5, 0)
    f = tmp_path / "noise.bin"
    nz.write_noise_dump(f, p)
    raw = f.read_bytes()
    assert len(raw) == nz.DUMP_HEADER_SIZE + 33 * 8 and raw[:8] == nz.DUMP_MAGIC
    back = nz.read_noise_dump(f)
    assert np.array_equal(back.increments, p.increments)
    assert back.driver == p.driver and back.seed == p.seed and back.step_h == p.step_h


def test_dump_rejects_corruption(tmp_path):
    f = tmp_path / "bad.bin"
    f.write_bytes(b"NOTMAGIC" + bytes(24))
    with pytest.raises(InvalidInputError):
        nz.read_noise_dump(f)
    f.write_bytes(b"abc")
    with pytest.raises(InvalidInputError):
        nz.read_noise_dump(f)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 64 - 1), st.integers(0, 2 ** 32 - 1), st.sampled_from([1, 2, 4]))
def test_coarsening_preserves_sums(seed, rid, factor):
    fine = nz.brownian_increments(0.01, 8 * factor, seed, rid)
    coarse = nz.coarsen(fine, factor)
    assert coarse.increments.sum() == pytest.approx(fine.increments.sum(), abs=1e-12)
    assert coarse.horizon == pytest.approx(fine.horizon)
