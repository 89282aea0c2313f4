"""Compiled and pure kernel backends must agree bit for bit."""

import numpy as np
import pytest

from rshock._kernels import _pure

_fast = pytest.importorskip("rshock._kernels._fast")


def test_conj_lines_bitwise():
    rng = np.random.default_rng(11)
    for n in (16, 64, 256):
        w = np.ascontiguousarray(rng.normal(size=(5, n)) * 0.3)
        vp = np.empty_like(w)
        ap = np.empty(w.shape, dtype=np.int64)
        vf = np.empty_like(w)
        af = np.empty(w.shape, dtype=np.int64)
        _pure.conj_lines(w, vp, ap)
        _fast.conj_lines(w, vf, af)
        np.testing.assert_array_equal(vp, vf)
        np.testing.assert_array_equal(ap, af)


def test_psor_sweeps_bitwise():
    rng = np.random.default_rng(12)
    n = 24
    u1 = np.ascontiguousarray(rng.normal(size=(n, n)) * 0.01)
    u2 = u1.copy()
    obst = np.ascontiguousarray(np.abs(rng.normal(size=(n, n))))
    src = np.ascontiguousarray(rng.normal(size=(n, n)))
    skip = np.zeros((n, n), dtype=np.uint8)
    skip[3, 7] = 1
    _pure.psor_sweeps(u1, obst, src, 0.37, 1.5, 25, skip)
    _fast.psor_sweeps(u2, obst, src, 0.37, 1.5, 25, skip)
    np.testing.assert_array_equal(u1, u2)
    assert u1[3, 7] == obst[3, 7]


def test_flow_polish_1d_bitwise():
    rng = np.random.default_rng(13)
    n = 64
    x = np.arange(n) / n
    u1 = np.ascontiguousarray(0.01 * np.cos(2 * np.pi * x))
    u2 = u1.copy()
    rhs = np.ascontiguousarray(u1 + 0.02 * np.cos(2 * np.pi * x))
    out1 = _pure.flow_polish_1d(u1, rhs, 1e-4, 1e-12, 1e-13, 500)
    out2 = _fast.flow_polish_1d(u2, rhs, 1e-4, 1e-12, 1e-13, 500)
    assert out1 == out2
    np.testing.assert_array_equal(u1, u2)


def test_flow_polish_2d_bitwise():
    n = 16
    x = np.arange(n) / n
    w = 0.005 * (np.cos(2 * np.pi * x)[:, None] + np.cos(2 * np.pi * x)[None, :])
    u1 = np.ascontiguousarray(w)
    u2 = u1.copy()
    rhs = np.ascontiguousarray(w + 0.01)
    out1 = _pure.flow_polish_2d(u1, rhs, 1e-4, 1e-12, 1e-13, 500)
    out2 = _fast.flow_polish_2d(u2, rhs, 1e-4, 1e-12, 1e-13, 500)
    assert out1 == out2
    np.testing.assert_array_equal(u1, u2)
