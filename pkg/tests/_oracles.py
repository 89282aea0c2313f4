"""Independent oracles used by the tests; no code shared with the paths they
check."""

import numpy as np


def hull_oracle_1d(values: np.ndarray) -> np.ndarray:
    """Convex hull of the lifted samples of |x|^2/2 + values on [-1, 2).

    Andrew monotone chain on the extended point set, evaluated back at the
    base nodes by linear interpolation along hull segments.
    """
    n = len(values)
    h = 1.0 / n
    m = np.arange(-n, 2 * n)
    x = m * h
    y = 0.5 * x * x + values[np.mod(m, n)]
    hull = []
    for xi, yi in zip(x, y):
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            if (x2 - x1) * (yi - y1) - (y2 - y1) * (xi - x1) <= 0.0:
                hull.pop()
            else:
                break
        hull.append((xi, yi))
    hx = np.array([p[0] for p in hull])
    hy = np.array([p[1] for p in hull])
    base = np.arange(n) * h
    vals = np.interp(base, hx, hy)
    return vals - 0.5 * base * base


def radial_hs_oracle(lam: float, rho0=lambda r: 1.0, r_max: float = 0.45,
                     n: int = 20000) -> float:
    """Free-boundary radius of the radial Hele-Shaw model (two-point solve).

    In the fluid annulus the radial balance rho0 + (1/4pi)(1/r)(r u')' = 0
    with inner flux fixed by the pole mass, (r u')(0+) = 2 lam, integrates
    to r u'(r) = 2 lam - 4 pi int_0^r s rho0(s) ds; the smooth-fit boundary
    conditions u(R) = u'(R) = 0 place the free boundary at the root of
    u'(R) = 0, found by bisection on a quadrature of the mass integral.
    """
    r = np.linspace(0.0, r_max, n + 1)
    integrand = r * np.array([rho0(ri) for ri in r])
    mass = 4.0 * np.pi * np.concatenate([[0.0], np.cumsum(
        0.5 * (integrand[1:] + integrand[:-1]) * np.diff(r))])
    flux = 2.0 * lam - mass  # r u'(r)
    sign_change = np.where(flux <= 0.0)[0]
    if len(sign_change) == 0:
        raise ValueError("free boundary beyond r_max")
    j = sign_change[0]
    # linear interpolation of the root between grid points
    f0, f1 = flux[j - 1], flux[j]
    return float(r[j - 1] + (r[j] - r[j - 1]) * f0 / (f0 - f1))
