"""Energy functionals and monotonicity diagnostics.

All functionals act on the periodic potential u of phi = |x|^2/2 + u; only
differences and monotonicity along curves carry meaning (the reference
measure for the entropy is fixed to the uniform one).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .torus import (
    MongeAmpereMeasure,
    QuasiPeriodicConvex,
    ScalarField,
    discrete_hessian,
    hessian_det,
    monge_ampere,
    uniform_measure,
)


@dataclass
class EnergyReport:
    t: float
    E: float
    E_theta: float
    entropy: float
    F_beta: float
    I_vs_prev: float


def _mixed_determinants(phi: QuasiPeriodicConvex) -> list[np.ndarray]:
    """M_j = mixed determinant of j copies of Hess(phi) and dim-j identities.

    dim=1: [1, phi'']; dim=2: [1, tr(Hess)/2, det(Hess)] by the exact 2x2
    polarization det(A,B) = (det(A+B) - det A - det B) / 2.
    """
    hess = discrete_hessian(phi)
    g = phi.grid
    ones = np.ones(g.shape)
    if g.dim == 1:
        return [ones, hess[..., 0, 0]]
    det = hessian_det(hess)
    tr = hess[..., 0, 0] + hess[..., 1, 1]
    return [ones, 0.5 * tr, det]


def aubin_mabuchi(phi: QuasiPeriodicConvex) -> float:
    """E(phi) = (1/(dim+1)) sum_j sum_nodes u * M_j * h^dim."""
    g = phi.grid
    mixed = _mixed_determinants(phi)
    u = phi.u
    total = sum(float(np.sum(u * m)) for m in mixed)
    return total * g.cell_volume / (g.dim + 1)


def e_theta(phi: QuasiPeriodicConvex, f: ScalarField) -> float:
    """E(phi) - int u MA(phi) + int f MA(phi)."""
    ma = monge_ampere(phi)
    return (
        aubin_mabuchi(phi)
        - float(np.sum(phi.u * ma.masses))
        + float(np.sum(f.values * ma.masses))
    )


def i_functional(u: QuasiPeriodicConvex, v: QuasiPeriodicConvex) -> float:
    """I(u, v) = sum (u - v) (MA(v) - MA(u)) >= 0; symmetric by construction."""
    ma_u = monge_ampere(u)
    ma_v = monge_ampere(v)
    return float(np.sum((u.u - v.u) * (ma_v.masses - ma_u.masses)))


def entropy(mu: MongeAmpereMeasure, mu0: MongeAmpereMeasure) -> float:
    """Relative entropy sum mu log(mu/mu0); +inf if mu charges a mu0-null cell."""
    m = mu.masses
    m0 = mu0.masses
    charged = m > 0.0
    if np.any(charged & (m0 <= 0.0)):
        return float("inf")
    out = np.zeros_like(m)
    np.divide(m, m0, out=out, where=charged)
    vals = np.zeros_like(m)
    np.log(out, out=vals, where=charged)
    return float(np.sum(m[charged] * vals[charged]))


def free_energy(phi: QuasiPeriodicConvex, f: ScalarField, beta: float,
                mu0: MongeAmpereMeasure | None = None) -> float:
    """F_beta = E_theta + (1/beta) * relative entropy of MA(phi)."""
    if mu0 is None:
        mu0 = uniform_measure(phi.grid)
    return e_theta(phi, f) + entropy(monge_ampere(phi), mu0) / beta


def report(t: float, phi: QuasiPeriodicConvex, f: ScalarField, beta: float,
           prev: QuasiPeriodicConvex | None = None) -> EnergyReport:
    mu0 = uniform_measure(phi.grid)
    ent = entropy(monge_ampere(phi), mu0)
    et = e_theta(phi, f)
    ivp = i_functional(phi, prev) if prev is not None else 0.0
    return EnergyReport(t, aubin_mabuchi(phi), et, ent, et + ent / beta, ivp)
