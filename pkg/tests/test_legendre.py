import numpy as np
import pytest

from conftest import random_convex
from rshock.legendre import (
    conjugate_values,
    conjugate_values_brute,
    convexify,
    isometry_defect,
    lft,
)
from rshock.torus import PeriodicGrid, QuasiPeriodicConvex, ScalarField

from _oracles import hull_oracle_1d


def test_quadratic_self_dual(grid256, quad256):
    res = lft(quad256)
    assert np.abs(res.dual.u).max() == 0.0
    np.testing.assert_array_equal(res.argmax_map[:, 0], np.arange(256))


def test_constant_shift(grid256):
    x = grid256.axis_coords()
    w = 0.002 * np.cos(2 * np.pi * x)
    v1, _ = conjugate_values(w)
    v2, _ = conjugate_values(w + 0.37)
    np.testing.assert_allclose(v2, v1 - 0.37, atol=1e-14)


def test_fast_equals_brute_on_random_fields():
    # acceptance-grade oracle equivalence, 1D and 2D
    rng = np.random.default_rng(7)
    for _ in range(50):
        n = 256
        g = PeriodicGrid(1, n)
        phi = random_convex(g, rng)
        v_fast, _ = conjugate_values(phi.u)
        v_brute = conjugate_values_brute(phi.u)
        assert np.abs(v_fast - v_brute).max() <= 1e-9
    g2 = PeriodicGrid(2, 16)
    for _ in range(5):
        w = rng.normal(size=(16, 16)) * 0.01
        v_fast, _ = conjugate_values(w)
        v_brute = conjugate_values_brute(w)
        assert np.abs(v_fast - v_brute).max() <= 1e-9


def test_involution_on_convex(grid256):
    x = grid256.axis_coords()
    w = 0.001 * np.cos(2 * np.pi * x)
    phi = QuasiPeriodicConvex(ScalarField(grid256, w))
    dual = lft(phi).dual
    back = lft(dual).dual
    scale = 5 * grid256.h * np.abs(np.gradient(phi.full_values())).max() / grid256.h
    assert np.abs(back.u - w).max() <= 5 * grid256.h * max(1.0, scale)


def test_involution_defect_first_order():
    defects = {}
    for n in (128, 256):
        g = PeriodicGrid(1, n)
        x = g.axis_coords()
        w = 0.003 * np.cos(2 * np.pi * x) + 0.001 * np.sin(4 * np.pi * x)
        phi = QuasiPeriodicConvex(ScalarField(g, w))
        back = lft(lft(phi).dual).dual
        defects[n] = np.abs(back.u - w).max()
    # doubling N halves the defect within a factor 4
    assert defects[256] <= defects[128]
    assert defects[128] <= 8.0 * defects[256] + 1e-15


def test_convexify_matches_hull_oracle():
    n = 256
    g = PeriodicGrid(1, n)
    x = g.axis_coords()
    for w in (np.cos(2 * np.pi * x), np.cos(4 * np.pi * x) + 0.3 * np.sin(2 * np.pi * x)):
        ours = convexify(ScalarField(g, w)).u
        oracle = hull_oracle_1d(w)
        assert np.abs(ours - oracle).max() <= 1e-9


def test_convexify_fixes_convex_input(grid256):
    x = grid256.axis_coords()
    w = 0.002 * np.cos(2 * np.pi * x)
    out = convexify(ScalarField(grid256, w))
    assert np.abs(out.u - w).max() <= 1e-12


def test_convexify_below_input_and_convex():
    rng = np.random.default_rng(3)
    g = PeriodicGrid(1, 128)
    x = g.axis_coords()
    for _ in range(10):
        w = rng.normal(size=4) @ np.cos(
            2 * np.pi * np.outer(np.arange(1, 5), x)
        )
        out = convexify(ScalarField(g, w))
        assert (out.u - w).max() <= 1e-10
        # constructor already enforces discrete convexity


def test_double_well_bridge():
    n = 256
    g = PeriodicGrid(1, n)
    x = g.axis_coords()
    w = np.cos(4 * np.pi * x)  # double well over the period
    out = convexify(ScalarField(g, w))
    oracle = hull_oracle_1d(w)
    assert np.abs(out.u - oracle).max() <= 1e-9
    bridge = out.u < w - 1e-9
    assert bridge.any()
    from rshock.torus import monge_ampere

    assert monge_ampere(out).masses[bridge].max() <= 1e-12


def test_order_reversal(grid256):
    rng = np.random.default_rng(5)
    p1 = random_convex(grid256, rng)
    p2 = QuasiPeriodicConvex(ScalarField(grid256, p1.u - 0.1 - 0.001 * np.cos(
        2 * np.pi * grid256.axis_coords())))
    v1, _ = conjugate_values(p1.u)
    v2, _ = conjugate_values(p2.u)
    assert np.all(p2.u <= p1.u)
    assert np.all(v1 <= v2 + 1e-15)


def test_contraction_in_sup_norm(grid256):
    rng = np.random.default_rng(6)
    p1 = random_convex(grid256, rng)
    p2 = random_convex(grid256, rng)
    v1, _ = conjugate_values(p1.u)
    v2, _ = conjugate_values(p2.u)
    assert np.abs(v1 - v2).max() <= np.abs(p1.u - p2.u).max() + 1e-15


def test_isometry_defect():
    g = PeriodicGrid(1, 256)
    rng = np.random.default_rng(8)
    p1 = random_convex(g, rng)
    assert isometry_defect(p1, p1) == 0.0
    shifted = QuasiPeriodicConvex(ScalarField(g, p1.u + 0.25))
    assert isometry_defect(p1, shifted) <= 1e-14
    p2 = random_convex(g, rng)
    assert isometry_defect(p1, p2) <= 2 * g.h


def test_argmax_in_extended_domain(grid256):
    rng = np.random.default_rng(9)
    phi = random_convex(grid256, rng)
    res = lft(phi)
    assert res.argmax_map.min() >= -256
    assert res.argmax_map.max() < 512
