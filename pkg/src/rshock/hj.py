"""Closed-form Hopf machinery for periodic Hamilton-Jacobi problems.

second_hopf builds the convex viscosity solution (psi0* + t H)* by two
discrete Legendre transforms; hopf_lax is the inf-convolution solution for
a convex Hamiltonian; their algebraic equivalence when psi0 = |y|^2/2 and
H* = |x|^2/2 is used as a two-route consistency check.  Sign conventions
are pinned by the t -> 0 limit, in which the Hamiltonian is recovered as
minus the time derivative of the solution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .legendre import conjugate_values
from .torus import PeriodicGrid, QuasiPeriodicConvex, ScalarField


@dataclass
class HopfSolution:
    psi_t: object  # QuasiPeriodicConvex (second_hopf) or ScalarField (hopf_lax)
    t: float
    provenance: str  # "hopf_lax" | "second_hopf"


def second_hopf(psi0: QuasiPeriodicConvex, H: ScalarField, t: float) -> HopfSolution:
    """psi_t = (psi0* + t H)*, convex for all t >= 0."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    v, _ = conjugate_values(psi0.u)
    w, _ = conjugate_values(v + t * H.values)
    return HopfSolution(
        QuasiPeriodicConvex(ScalarField(psi0.grid, w)), t, "second_hopf"
    )


def hopf_lax(psi0_values: np.ndarray, grid: PeriodicGrid, hstar, t: float,
             quadratic: bool = False) -> HopfSolution:
    """Discrete inf-convolution psi_t(y) = inf_x psi0(x) + t H*((x-y)/t).

    ``psi0_values`` are periodic samples; with ``quadratic`` the initial
    function is |x|^2/2 + psi0_values.  ``hstar`` maps arrays of gradient
    vectors, shape (..., dim), to values.  The inf runs over the one-period
    padded primal domain, which suffices for quasi-periodic data.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    if grid.dim != 1:
        raise ValueError("inf-convolution solver is 1D")
    n, h = grid.n, grid.h
    m = np.arange(-n, 2 * n)
    x = m * h
    y = grid.axis_coords()
    g = psi0_values[np.mod(m, n)] + (0.5 * x * x if quadratic else 0.0)
    diff = (x[None, :] - y[:, None]) / t
    vals = g[None, :] + t * hstar(diff[..., None])
    out = vals.min(axis=1)
    if quadratic:
        out = out - 0.5 * y * y
    return HopfSolution(ScalarField(grid, out), t, "hopf_lax")


def quadratic_hamiltonian(p: np.ndarray) -> np.ndarray:
    """H(p) = |p|^2 / 2 on gradient vectors of shape (..., dim)."""
    return 0.5 * np.sum(p * p, axis=-1)


def hopf_duality_defect(Phi0: ScalarField, t: float) -> float:
    """Sup defect of psi_t(y) = |y|^2/2 - t * Phi_t(y).

    psi_t comes from the second Hopf formula with Hamiltonian Phi0 and
    quadratic initial data; Phi_t from Hopf-Lax with Hamiltonian |x|^2/2
    and initial data Phi0.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    grid = Phi0.grid
    psi0 = QuasiPeriodicConvex(ScalarField(grid, np.zeros(grid.shape)))
    psi_t = second_hopf(psi0, Phi0, t).psi_t
    phi_t = hopf_lax(Phi0.values, grid, quadratic_hamiltonian, t).psi_t
    # periodic parts: psi_t.u should equal -t * Phi_t
    return float(np.abs(psi_t.u + t * phi_t.values).max())


def burgers_velocity(psi: QuasiPeriodicConvex):
    """One-sided gradients of the full 1D field and their gap.

    Returns (v_minus, v_plus, gap); the gap marks shocks and is >= -tol for
    convex input.  The quadratic part contributes y -+ h/2 exactly.
    """
    grid = psi.grid
    if grid.dim != 1:
        raise ValueError("Burgers velocity is 1D")
    v = psi.u
    h = grid.h
    y = grid.axis_coords()
    dp = (np.roll(v, -1) - v) / h + y + 0.5 * h
    dm = (v - np.roll(v, 1)) / h + y - 0.5 * h
    return dm, dp, dp - dm
