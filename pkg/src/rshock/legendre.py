"""Discrete Legendre-Fenchel transform on the quasi-periodic convex class.

The conjugate of f(x) = |x|^2/2 + w(x) with w periodic is again of that
form, and any maximizer of x.y - f(x) for y in the fundamental domain can
be taken within half a period of y per axis (shifting x by a lattice vector
toward y leaves w unchanged and improves the quadratic), so a one-period
padding of the primal domain is always sufficient.  The per-line transform
runs in O(N) via the lower hull of the lifted samples and a merge of its
sorted slopes against the sorted dual nodes; the O(N^2) brute-force scan is
kept as a test oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .torus import PeriodicGrid, QuasiPeriodicConvex, ScalarField


@dataclass
class LegendreResult:
    dual: QuasiPeriodicConvex
    # extended-domain index of the maximizing primal node, per dual node;
    # shape grid.shape + (dim,), entries in [-N, 2N)
    argmax_map: np.ndarray


def conjugate_values(w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Periodic part of the conjugate of |x|^2/2 + w, plus argmax indices.

    Works for any periodic part (convexity not required); the result is the
    conjugate of the convex hull, which is all the conjugate ever sees.
    """
    w = np.ascontiguousarray(w, dtype=float)
    if w.ndim == 1:
        v = np.empty_like(w[None, :])
        arg = np.empty((1, w.shape[0]), dtype=np.int64)
        _kernels.conj_lines(w[None, :], v, arg)
        return v[0], arg[0][..., None]
    # dimension-by-dimension: the bilinear pairing factors the 2D sup into
    # nested 1D sups, each acting on a quasi-periodic line
    n0, n1 = w.shape
    # pass 1: conjugate along axis 1 for every primal row x0
    v1 = np.empty_like(w)
    a1 = np.empty((n0, n1), dtype=np.int64)
    _kernels.conj_lines(w, v1, a1)
    # pass 2: for each dual column y1, conjugate -V(., y1) along axis 0
    w2 = np.ascontiguousarray(-v1.T)
    v2 = np.empty_like(w2)
    a2 = np.empty((n1, n0), dtype=np.int64)
    _kernels.conj_lines(w2, v2, a2)
    vstar = v2.T.copy()
    arg = np.empty((n0, n1, 2), dtype=np.int64)
    arg[..., 0] = a2.T
    # compose: the axis-1 argmax comes from pass 1 at the chosen primal row
    m0 = np.mod(a2.T, n0)
    arg[..., 1] = a1[m0, np.arange(n1)[None, :]]
    return vstar, arg


def conjugate_values_brute(w: np.ndarray) -> np.ndarray:
    """O(N^2)-per-line brute-force conjugate over the padded domain (oracle)."""
    w = np.asarray(w, dtype=float)
    n = w.shape[0]
    h = 1.0 / n
    m = np.arange(-n, 2 * n)
    x = m * h
    y = np.arange(n) * h
    if w.ndim == 1:
        g = 0.5 * x * x + w[np.mod(m, n)]
        vals = np.outer(y, x) - g[None, :]
        return vals.max(axis=1) - 0.5 * y * y
    # direct 2D evaluation: sup over padded (x0, x1) per dual node
    out = np.empty_like(w)
    g = (
        0.5 * (x[:, None] ** 2 + x[None, :] ** 2)
        + w[np.ix_(np.mod(m, n), np.mod(m, n))]
    )
    for i in range(n):
        for j in range(n):
            vals = y[i] * x[:, None] + y[j] * x[None, :] - g
            out[i, j] = vals.max() - 0.5 * (y[i] ** 2 + y[j] ** 2)
    return out


def lft(phi: QuasiPeriodicConvex) -> LegendreResult:
    """Discrete Legendre transform; dual lives on the same grid."""
    vstar, arg = conjugate_values(phi.u)
    dual = QuasiPeriodicConvex(ScalarField(phi.grid, vstar))
    return LegendreResult(dual, arg)


def convexify(f: ScalarField) -> QuasiPeriodicConvex:
    """Double transform: the discrete convex hull of |x|^2/2 + f, at nodes.

    Output is node-wise below the input and discretely convex.
    """
    v, _ = conjugate_values(f.values)
    w, _ = conjugate_values(v)
    return QuasiPeriodicConvex(ScalarField(f.grid, w))


def convexify_values(grid: PeriodicGrid, values: np.ndarray) -> QuasiPeriodicConvex:
    return convexify(ScalarField(grid, values))


def isometry_defect(phi1: QuasiPeriodicConvex, phi2: QuasiPeriodicConvex) -> float:
    """| ||phi1* - phi2*||_inf - ||phi1 - phi2||_inf |, O(h) for convex input."""
    v1, _ = conjugate_values(phi1.u)
    v2, _ = conjugate_values(phi2.u)
    primal = float(np.abs(phi1.u - phi2.u).max())
    dual = float(np.abs(v1 - v2).max())
    return abs(dual - primal)
