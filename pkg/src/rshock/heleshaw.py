"""Weak Hele-Shaw flow on the 2-torus and its cross-checks.

States are computed from the complementarity system with obstacle 0 and a
forced pole mass (see :func:`rshock.envelope.heleshaw_obstacle`).  The
reparametrization cross-check recomputes the same sets through the standard
envelope P(t f) with obstacle t*f, f the potential of (background - point
mass), at t = lambda / (1 - lambda); the two routes are related by
phi_lambda = (1 - lambda) (P(t f) - t f).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .envelope import (
    DDC_SCALE,
    TOL_CONTACT,
    ObstacleProblem2D,
    heleshaw_obstacle,
    project_psh_2d,
    smeared_point_mass,
)
from .flow import step_log_diffusion_2d
from .torus import PeriodicGrid, ScalarField


@dataclass
class HSState:
    lam: float
    phi_lambda: ScalarField
    omega_mask: np.ndarray  # {phi_lambda < -tol}: the growing fluid domain
    area: float  # rho0-mass of omega_mask
    iterations: int
    residual: float


def solve_poisson(grid: PeriodicGrid, rhs: np.ndarray) -> np.ndarray:
    """Solve DDC_SCALE * Lap_h f = rhs with the discrete 5-point symbol.

    rhs must be mean-free; the solution is normalized to inf f = 0.
    """
    mean = float(rhs.mean())
    if abs(mean) > 1e-10 * max(1.0, float(np.abs(rhs).max())):
        raise ValueError(f"Poisson rhs not mean-free (mean={mean:g})")
    n = grid.n
    h = grid.h
    k = np.fft.fftfreq(n, d=1.0) * n  # integer wavenumbers
    lam1 = (2.0 * np.cos(2.0 * np.pi * k * h) - 2.0) / (h * h)
    sym = DDC_SCALE * (lam1[:, None] + lam1[None, :])
    rhs_hat = np.fft.fft2(rhs)
    sym[0, 0] = 1.0
    f_hat = rhs_hat / sym
    f_hat[0, 0] = 0.0
    f = np.real(np.fft.ifft2(f_hat))
    return f - f.min()


def pole_potential(grid: PeriodicGrid, rho0: ScalarField, p, epsilon: float) -> ScalarField:
    """Potential f of (rho0 - smeared point mass at p), normalized inf f = 0.

    f peaks like -log(d^2 + eps) at the pole.
    """
    eta = smeared_point_mass(grid, p, epsilon)
    f = solve_poisson(grid, rho0.values - eta.values)
    return ScalarField(grid, f)


def hs_state(grid: PeriodicGrid, rho0: ScalarField, p, lam: float,
             epsilon: float, u0=None) -> HSState:
    if lam == 0.0:
        u = np.zeros(grid.shape)
        return HSState(0.0, ScalarField(grid, u), np.zeros(grid.shape, bool), 0.0, 0, 0.0)
    problem = heleshaw_obstacle(grid, rho0, p, lam, epsilon)
    result = project_psh_2d(problem, u0=u0)
    u = result.projected.values
    mask = u < -TOL_CONTACT
    area = float(np.sum(rho0.values[mask])) * grid.cell_volume
    return HSState(lam, result.projected, mask, area, result.iterations, result.residual)


def hs_sweep(grid: PeriodicGrid, rho0: ScalarField, p, lambda_list,
             epsilon: float, warm_start: bool = True) -> list:
    """Hele-Shaw states along an increasing list of pole strengths."""
    lams = list(lambda_list)
    if any(b <= a for a, b in zip(lams, lams[1:])):
        raise ValueError("lambda_list must be increasing")
    states = []
    u_prev = None
    for lam in lams:
        st = hs_state(grid, rho0, p, lam, epsilon, u0=u_prev)
        states.append(st)
        if warm_start:
            u_prev = st.phi_lambda.values.copy()
    return states


def envelope_route_state(grid: PeriodicGrid, rho0: ScalarField, p, t: float,
                         epsilon: float) -> tuple:
    """Non-coincidence set of P(t f) with f the pole potential.

    Returns (mask, projected, obstacle).
    """
    f = pole_potential(grid, rho0, p, epsilon)
    obstacle = ScalarField(grid, t * f.values)
    problem = ObstacleProblem2D(grid, rho0, obstacle)
    result = project_psh_2d(problem)
    mask = result.projected.values < obstacle.values - TOL_CONTACT
    return mask, result.projected, obstacle


def hs_vs_envelope_curve(grid: PeriodicGrid, rho0: ScalarField, p, t_list,
                         epsilon: float) -> list:
    """Symmetric-difference node counts between the two Hele-Shaw routes.

    For each t the direct state at lambda = t/(t+1) is compared against the
    non-coincidence set of the envelope with obstacle t*f.
    """
    defects = []
    for t in t_list:
        lam = t / (t + 1.0)
        direct = hs_state(grid, rho0, p, lam, epsilon)
        env_mask, _, _ = envelope_route_state(grid, rho0, p, t, epsilon)
        defects.append(int(np.sum(direct.omega_mask ^ env_mask)))
    return defects


def run_density_flow(grid: PeriodicGrid, rho0: ScalarField, p, beta: float,
                     t_end: float, dt: float, epsilon: float) -> ScalarField:
    """Integrate the log-diffusion form of the singularly twisted flow.

    d(rho)/dt = (1/(4 pi beta)) Lap log rho + (rho0 - eta_eps), rho(0)=rho0.
    """
    eta = smeared_point_mass(grid, p, epsilon)
    source = ScalarField(grid, rho0.values - eta.values)
    rho = rho0.copy()
    nsteps = int(round(t_end / dt))
    for _ in range(nsteps):
        rho = step_log_diffusion_2d(rho, source, beta, dt)
    return rho


def hs_density_limit(rho_flow: ScalarField, grid: PeriodicGrid, rho0: ScalarField,
                     p, t: float, epsilon: float, band_cells: int = 3) -> float:
    """Sup distance of a flow density to the limit profile 1_X(lam) (t+1) rho0.

    The comparison excludes a band of ``band_cells`` around the free
    boundary of the Hele-Shaw domain at lambda = t/(t+1) and the same
    neighborhood of the pole (the limit density is discontinuous across
    the boundary).
    """
    from .shocks import dilate

    lam = t / (t + 1.0)
    st = hs_state(grid, rho0, p, lam, epsilon)
    target = np.where(st.omega_mask, 0.0, (t + 1.0) * rho0.values)
    boundary = st.omega_mask ^ dilate(st.omega_mask, 1)
    excluded = dilate(boundary, band_cells)
    d2 = _pole_distance_sq(grid, p)
    excluded |= d2 <= (band_cells * grid.h) ** 2
    diff = np.abs(rho_flow.values - target)
    return float(diff[~excluded].max())


def _pole_distance_sq(grid: PeriodicGrid, p) -> np.ndarray:
    from .envelope import torus_distance_sq

    return torus_distance_sq(grid, p)
