"""Shock loci, the displacement map, tropical large-time limits and
Voronoi/Delaunay tessellations of the minimum set."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptySiteSet
from .legendre import conjugate_values
from .torus import PeriodicGrid, QuasiPeriodicConvex, ScalarField

# Gradient-jump threshold separating O(h) smooth noise from O(1) subgradient
# jumps (two orders apart at N=256).
TAU_SHOCK_CELLS = 10.0


@dataclass
class ShockSet:
    grid: PeriodicGrid
    shock_mask: np.ndarray
    gradient_gap: np.ndarray


@dataclass
class Tessellation:
    sites: np.ndarray  # (nsites, dim)
    voronoi_cell_id: np.ndarray  # integer per node
    delaunay_edges: list  # sorted unique (i, j) site-index pairs


def gradient_gap(values: np.ndarray, h: float) -> np.ndarray:
    """Sup over axes of forward-minus-backward gradient of a periodic part.

    The quadratic part of a quasi-periodic function cancels in the gap, so
    this applies to the periodic samples directly.
    """
    gap = None
    for ax in range(values.ndim):
        d2 = (np.roll(values, -1, ax) - 2.0 * values + np.roll(values, 1, ax)) / h
        gap = d2 if gap is None else np.maximum(gap, d2)
    return gap


def extract_shocks(psi: QuasiPeriodicConvex, tau: float | None = None) -> ShockSet:
    g = psi.grid
    gap = gradient_gap(psi.u, g.h) + g.h  # identity contributes h to each axis gap
    tau_eff = TAU_SHOCK_CELLS * g.h if tau is None else tau
    return ShockSet(g, gap > tau_eff, gap)


def zeldovich_map(phi_t: QuasiPeriodicConvex):
    """Centered-difference gradient of phi_t and an injectivity diagnostic.

    Returns (displacement, collisions) where displacement has shape
    grid.shape + (dim,) and collisions counts ordered axis-neighbor pairs
    whose images (nearly) coincide or cross, i.e. pairs any cell binning
    would merge; zero exactly when the discrete gradient map is injective.
    """
    g = phi_t.grid
    u = phi_t.u
    h = g.h
    coords = g.coords()
    disp = np.empty(g.shape + (g.dim,))
    for ax in range(g.dim):
        disp[..., ax] = coords[ax] + (np.roll(u, -1, ax) - np.roll(u, 1, ax)) / (2.0 * h)
    collisions = 0
    tol = 1e-8 * h
    for ax in range(g.dim):
        inc = np.roll(disp[..., ax], -1, ax) - disp[..., ax]
        # wrap pair sees the quasi-periodic shift of one full period
        sl = [slice(None)] * g.dim
        sl[ax] = g.n - 1
        inc[tuple(sl)] += 1.0
        collisions += int(np.sum(inc <= tol))
    return disp, collisions


def _site_conjugate(psi0: QuasiPeriodicConvex, sites: np.ndarray) -> np.ndarray:
    """Discrete conjugate psi0*(s) at off-grid site points (padded sup)."""
    g = psi0.grid
    n, h = g.n, g.h
    m = np.arange(-n, 2 * n)
    y = m * h
    out = np.empty(len(sites))
    if g.dim == 1:
        full = psi0.u[np.mod(m, n)] + 0.5 * y * y
        for i, s in enumerate(sites):
            out[i] = np.max(s[0] * y - full)
    else:
        mi = np.mod(m, n)
        full = psi0.u[np.ix_(mi, mi)] + 0.5 * (y[:, None] ** 2 + y[None, :] ** 2)
        for i, s in enumerate(sites):
            out[i] = np.max(s[0] * y[:, None] + s[1] * y[None, :] - full)
    return out


def tropical_limit(psi0: QuasiPeriodicConvex, sites) -> QuasiPeriodicConvex:
    """Large-time limit sup_{x in sites + Z^dim} x.y - psi0*(x).

    Piecewise affine; lattice translates are truncated to the 3^dim
    neighbors, which covers every maximizer for quasi-periodic data.  The
    conjugate at translated sites uses the exact quasi-periodic extension
    psi0*(s + k) = psi0*(s) + k.s + |k|^2/2.
    """
    sites = np.atleast_2d(np.asarray(sites, dtype=float))
    if sites.size == 0:
        raise EmptySiteSet("need at least one site")
    g = psi0.grid
    cstar = _site_conjugate(psi0, sites)
    y = g.coords()
    best = None
    shifts = [-1.0, 0.0, 1.0]
    if g.dim == 1:
        for (s,), c in zip(sites, cstar):
            for k in shifts:
                val = (s + k) * y[0] - (c + k * s + 0.5 * k * k)
                best = val if best is None else np.maximum(best, val)
        q = 0.5 * y[0] ** 2
    else:
        for (s0, s1), c in zip(sites, cstar):
            for k0 in shifts:
                for k1 in shifts:
                    cc = c + k0 * s0 + k1 * s1 + 0.5 * (k0 * k0 + k1 * k1)
                    val = (s0 + k0) * y[0] + (s1 + k1) * y[1] - cc
                    best = val if best is None else np.maximum(best, val)
        q = 0.5 * (y[0] ** 2 + y[1] ** 2)
    return QuasiPeriodicConvex(ScalarField(g, best - q))


def voronoi_delaunay(grid: PeriodicGrid, sites) -> Tessellation:
    """Brute-force nearest-site labeling under the torus metric.

    Ties go to the lowest site index; Delaunay edges connect sites whose
    cells share an axis-neighbor node pair.
    """
    sites = np.atleast_2d(np.asarray(sites, dtype=float))
    if sites.size == 0:
        raise EmptySiteSet("need at least one site")
    x = grid.axis_coords()
    d2 = np.empty((len(sites),) + grid.shape)
    for i, s in enumerate(sites):
        parts = []
        for ax in range(grid.dim):
            d = np.abs(x - s[ax])
            parts.append(np.minimum(d, 1.0 - d) ** 2)
        d2[i] = parts[0] if grid.dim == 1 else parts[0][:, None] + parts[1][None, :]
    cell_id = np.argmin(d2, axis=0)  # argmin takes the first (lowest) index on ties
    edges = set()
    for ax in range(grid.dim):
        rolled = np.roll(cell_id, -1, ax)
        diff = cell_id != rolled
        a = np.minimum(cell_id[diff], rolled[diff])
        b = np.maximum(cell_id[diff], rolled[diff])
        edges.update(zip(a.tolist(), b.tolist()))
    return Tessellation(sites, cell_id, sorted(edges))


def voronoi_boundary_mask(tess: Tessellation) -> np.ndarray:
    """Nodes with an axis neighbor in a different Voronoi cell."""
    cid = tess.voronoi_cell_id
    mask = np.zeros(cid.shape, dtype=bool)
    for ax in range(cid.ndim):
        mask |= cid != np.roll(cid, -1, ax)
        mask |= cid != np.roll(cid, 1, ax)
    return mask


def dilate(mask: np.ndarray, cells: int = 1) -> np.ndarray:
    out = mask.copy()
    for _ in range(cells):
        grown = out.copy()
        for ax in range(mask.ndim):
            grown |= np.roll(out, 1, ax)
            grown |= np.roll(out, -1, ax)
        out = grown
    return out


def shock_voronoi_agreement(psi_inf: QuasiPeriodicConvex, tess: Tessellation) -> int:
    """Cells of either set not within one cell of the other."""
    shocks = extract_shocks(psi_inf).shock_mask
    boundary = voronoi_boundary_mask(tess)
    only_shock = shocks & ~dilate(boundary, 1)
    only_bdry = boundary & ~dilate(shocks, 1)
    return int(np.sum(only_shock) + np.sum(only_bdry))
