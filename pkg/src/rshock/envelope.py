"""Projection onto envelopes: the convex oracle and the 2D psh obstacle solver.

Two realizations of the same operator.  On the torus-invariant convex side
P(f) is the double Legendre transform (largest convex minorant).  On the
2-real-dimensional side (one complex dimension) the envelope below an
obstacle solves the linear complementarity system

    min( obstacle - u,  L u + source ) = 0,     L = DDC_SCALE * Lap_h,

by projected SOR; DDC_SCALE = 1/(4 pi) matches the normalization in which
a unit-mass background density corresponds to the curvature of the flat
metric (pinned by a unit test on the lowest Fourier mode).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels
from .errors import MaxIterations, NonMonotoneT
from .legendre import convexify
from .torus import PeriodicGrid, QuasiPeriodicConvex, ScalarField, monge_ampere

DDC_SCALE = 1.0 / (4.0 * np.pi)

TOL_CONTACT = 1e-9
TOL_PDE = 1e-8
SOR_OMEGA = 1.5
SOR_MAX_SWEEPS = 10**6
SOR_CHECK_EVERY = 50


@dataclass
class EnvelopeResult:
    projected: object  # QuasiPeriodicConvex (convex oracle) or ScalarField (psh)
    coincidence_mask: np.ndarray
    residual: float
    iterations: int

    @property
    def noncoincidence_mask(self) -> np.ndarray:
        return ~self.coincidence_mask


@dataclass
class ObstacleProblem2D:
    """Data of the discrete complementarity problem on the 2-torus.

    ``rho0`` is the background density (nonnegative, unit mass).  An
    optional ``injection`` density is subtracted from the source, which is
    how point masses forced into the curvature (Hele-Shaw pole terms)
    enter; the effective source is rho0 - injection.  Singular obstacle
    nodes can be flagged; they are pinned to the obstacle and excluded from
    the residual.
    """

    grid: PeriodicGrid
    rho0: ScalarField
    obstacle: ScalarField
    injection: Optional[ScalarField] = None
    singular_mask: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.grid.dim != 2:
            raise ValueError("obstacle problems are 2D")
        if np.any(self.rho0.values < 0):
            raise ValueError("rho0 must be nonnegative")
        total = float(np.sum(self.rho0.values)) * self.grid.cell_volume
        if abs(total - 1.0) > 1e-8:
            raise ValueError(f"rho0 total mass {total} not within 1e-8 of 1")

    def source_values(self) -> np.ndarray:
        if self.injection is None:
            return self.rho0.values
        return self.rho0.values - self.injection.values


def laplacian(values: np.ndarray, h: float) -> np.ndarray:
    return (
        np.roll(values, 1, 0) + np.roll(values, -1, 0)
        + np.roll(values, 1, 1) + np.roll(values, -1, 1) - 4.0 * values
    ) / (h * h)


def complementarity_residual(u, problem: ObstacleProblem2D) -> float:
    lhs = DDC_SCALE * laplacian(u, problem.grid.h) + problem.source_values()
    res = np.abs(np.minimum(problem.obstacle.values - u, lhs))
    if problem.singular_mask is not None:
        res = np.where(problem.singular_mask, 0.0, res)
    return float(res.max())


def project_psh_2d(problem: ObstacleProblem2D, u0: Optional[np.ndarray] = None,
                   tol: float = TOL_PDE, max_sweeps: int = SOR_MAX_SWEEPS
                   ) -> EnvelopeResult:
    """Solve the obstacle problem by projected SOR (row-major, omega=1.5)."""
    g = problem.grid
    obst = np.ascontiguousarray(problem.obstacle.values)
    src = np.ascontiguousarray(problem.source_values())
    if u0 is None:
        u = np.minimum(obst, 0.0).copy()
    else:
        u = np.minimum(u0, obst).copy()
    u = np.ascontiguousarray(u)
    skip = (
        np.ascontiguousarray(problem.singular_mask.astype(np.uint8))
        if problem.singular_mask is not None
        else np.zeros(g.shape, dtype=np.uint8)
    )
    c = g.h * g.h / DDC_SCALE
    sweeps = 0
    res = complementarity_residual(u, problem)
    while res > tol:
        if sweeps >= max_sweeps:
            raise MaxIterations(
                f"PSOR residual {res:.2e} > {tol:g} after {sweeps} sweeps"
            )
        block = min(SOR_CHECK_EVERY, max_sweeps - sweeps)
        _kernels.psor_sweeps(u, obst, src, c, SOR_OMEGA, block, skip)
        sweeps += block
        res = complementarity_residual(u, problem)
    mask = u >= problem.obstacle.values - TOL_CONTACT
    return EnvelopeResult(
        projected=ScalarField(g, u),
        coincidence_mask=mask,
        residual=res,
        iterations=sweeps,
    )


# ---------------------------------------------------------------------------
# convex oracle


def project_convex(phi0: QuasiPeriodicConvex, H: ScalarField, t: float) -> EnvelopeResult:
    """P(phi0 + t*H): largest convex minorant of the linear curve at time t.

    The coincidence mask marks nodes where the projection meets the
    obstacle; the residual is the MA mass the projection leaves on the
    non-coincidence set (zero for the exact envelope).
    """
    obstacle = phi0.u + t * H.values
    projected = convexify(ScalarField(phi0.grid, obstacle))
    mask = projected.u >= obstacle - TOL_CONTACT
    ma = monge_ampere(projected)
    residual = float(np.sum(ma.masses[~mask]))
    return EnvelopeResult(projected, mask, residual, iterations=0)


def project_convex_mixture(phi0: QuasiPeriodicConvex, f: ScalarField, t: float) -> EnvelopeResult:
    """Normalized-flow envelope P(e^-t phi0 + (1-e^-t) f) on potentials."""
    et = np.exp(-t)
    obstacle = et * phi0.u + (1.0 - et) * f.values
    projected = convexify(ScalarField(phi0.grid, obstacle))
    mask = projected.u >= obstacle - TOL_CONTACT
    ma = monge_ampere(projected)
    residual = float(np.sum(ma.masses[~mask]))
    return EnvelopeResult(projected, mask, residual, iterations=0)


def envelope_curve(phi0: QuasiPeriodicConvex, H: ScalarField, t_list) -> list:
    """project_convex along an increasing list of times."""
    t_arr = np.asarray(t_list, dtype=float)
    if t_arr.size > 1 and np.any(np.diff(t_arr) <= 0):
        raise NonMonotoneT("t_list must be strictly increasing")
    if np.any(t_arr < 0):
        raise NonMonotoneT("t_list must be nonnegative")
    return [project_convex(phi0, H, float(t)) for t in t_arr]


# ---------------------------------------------------------------------------
# Hele-Shaw obstacle data


def torus_distance_sq(grid: PeriodicGrid, p) -> np.ndarray:
    """Squared flat-torus distance to the point p (exact nearest image)."""
    x = grid.axis_coords()
    out = np.zeros(grid.shape)
    deltas = []
    for ax, pa in enumerate(p[: grid.dim]):
        d = np.abs(x - pa)
        d = np.minimum(d, 1.0 - d)
        deltas.append(d)
    if grid.dim == 1:
        return deltas[0] ** 2
    return deltas[0][:, None] ** 2 + deltas[1][None, :] ** 2


def smeared_point_mass(grid: PeriodicGrid, p, epsilon: float) -> ScalarField:
    """Unit-mass density of the curvature of log(d^2 + eps) at p.

    In the plane (1/4pi) Lap log(r^2 + eps) = eps / (pi (r^2 + eps)^2); on
    the torus the profile is normalized so its discrete total mass is
    exactly one.
    """
    d2 = torus_distance_sq(grid, p)
    eta = epsilon / (np.pi * (d2 + epsilon) ** 2)
    eta = eta / (float(np.sum(eta)) * grid.cell_volume)
    return ScalarField(grid, eta)


def log_barrier(grid: PeriodicGrid, p, lam: float, epsilon: float) -> ScalarField:
    """min(0, lam*log(d_T(., p)^2 + eps)): the regularized pole barrier."""
    d2 = torus_distance_sq(grid, p)
    return ScalarField(grid, np.minimum(0.0, lam * np.log(d2 + epsilon)))


def heleshaw_obstacle(grid: PeriodicGrid, rho0: ScalarField, p, lam: float,
                      epsilon: float) -> ObstacleProblem2D:
    """Obstacle problem whose solution is the Hele-Shaw state at strength lam.

    The pole constraint "psh with a log pole of order lam at p" is encoded
    as a forced point mass: the envelope of functions <= 0 whose curvature
    measure dominates lam * (smeared delta at p), i.e. the complementarity
    system with obstacle 0 and source rho0 - lam * eta_eps.  The barrier
    min(0, lam log(d^2+eps)) itself is kept as a diagnostic field
    (see :func:`log_barrier`), not as the obstacle: on a unit torus that
    barrier is nonpositive everywhere and nearly psh, so using it directly
    would put the whole torus in the non-coincidence set.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    eta = smeared_point_mass(grid, p, epsilon)
    injection = ScalarField(grid, lam * eta.values)
    obstacle = ScalarField(grid, np.zeros(grid.shape))
    return ObstacleProblem2D(grid, rho0, obstacle, injection=injection)
