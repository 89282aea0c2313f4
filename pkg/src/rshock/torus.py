"""Grids, periodic fields and discrete differential operators on the flat torus.

Scalar data lives on a uniform N^dim grid over the unit fundamental domain
[0,1)^dim with periodic wrap.  Convex objects are stored through their
periodic part u, the full function being phi(x) = |x|^2/2 + u(x); the
quadratic part is handled analytically everywhere so quasi-periodicity is
exact by construction.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .errors import NonConvexInput

# Absolute tolerance on discrete Hessian eigenvalues for membership in the
# quasi-periodic convex class.
TOL_CONV = 1e-9

# Format used for every floating point number that leaves the package
# (17 significant digits round-trips IEEE doubles exactly).
FLOAT_FMT = "%.17g"


@dataclass(frozen=True)
class PeriodicGrid:
    """Uniform grid on the torus R^dim / Z^dim."""

    dim: int
    n: int

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")
        if self.n < 8:
            raise ValueError(f"resolution must satisfy N >= 8, got {self.n}")

    @property
    def h(self) -> float:
        return 1.0 / self.n

    @property
    def shape(self) -> tuple:
        return (self.n,) * self.dim

    @property
    def cell_volume(self) -> float:
        return self.h**self.dim

    def axis_coords(self) -> np.ndarray:
        return np.arange(self.n) / self.n

    def coords(self):
        """Node coordinates, one array per axis (broadcastable)."""
        x = self.axis_coords()
        if self.dim == 1:
            return (x,)
        return (x[:, None], x[None, :])


@dataclass
class ScalarField:
    """Periodic scalar samples, one value per grid node."""

    grid: PeriodicGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise ValueError(
                f"field shape {self.values.shape} does not match grid {self.grid.shape}"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field contains non-finite values")

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.values.copy())


def _d2_axis(values: np.ndarray, axis: int, h: float) -> np.ndarray:
    """Centered second difference along one axis, periodic wrap."""
    return (np.roll(values, -1, axis) - 2.0 * values + np.roll(values, 1, axis)) / (h * h)


def _d2_cross(values: np.ndarray, h: float) -> np.ndarray:
    """Centered cross difference (mixed second derivative), periodic wrap."""
    vpp = np.roll(values, (-1, -1), (0, 1))
    vpm = np.roll(values, (-1, 1), (0, 1))
    vmp = np.roll(values, (1, -1), (0, 1))
    vmm = np.roll(values, (1, 1), (0, 1))
    return (vpp - vpm - vmp + vmm) / (4.0 * h * h)


@dataclass
class QuasiPeriodicConvex:
    """Element of the quasi-periodic convex class, phi = |x|^2/2 + u.

    Membership is checked through the axis second differences of phi, which
    are nonnegative exactly for samples of a convex function.  The full
    centered-stencil Hessian is also exposed, but its smallest eigenvalue
    is a property of smooth members only: at creases not aligned with the
    grid the corner stencil sees a slope jump the axis stencils miss, so
    piecewise affine members (hulls, tropical limits) carry O(1) negative
    eigenvalues there at any resolution.
    """

    periodic_part: ScalarField
    _skip_check: bool = field(default=False, repr=False)

    def __post_init__(self):
        if not self._skip_check:
            lam = min_axis_hessian(self)
            if lam < -TOL_CONV:
                raise NonConvexInput(
                    f"axis second difference {lam:.3e} below -{TOL_CONV:g}"
                )

    @property
    def grid(self) -> PeriodicGrid:
        return self.periodic_part.grid

    @property
    def u(self) -> np.ndarray:
        return self.periodic_part.values

    def full_values(self) -> np.ndarray:
        """Samples of phi = |x|^2/2 + u on the fundamental domain."""
        c = self.grid.coords()
        q = sum(ci**2 for ci in c) / 2.0
        return q + self.u

    def copy(self) -> "QuasiPeriodicConvex":
        return QuasiPeriodicConvex(self.periodic_part.copy(), _skip_check=True)


@dataclass
class MongeAmpereMeasure:
    """Nonnegative cell masses of the discrete Monge-Ampere measure."""

    grid: PeriodicGrid
    masses: np.ndarray

    @property
    def total(self) -> float:
        return float(np.sum(self.masses))


def discrete_hessian(phi: QuasiPeriodicConvex) -> np.ndarray:
    """Per-node symmetric Hessian of phi, shape grid.shape + (dim, dim).

    Identity from the quadratic part plus centered second differences of the
    periodic part; symmetric by construction.
    """
    g = phi.grid
    u = phi.u
    out = np.empty(g.shape + (g.dim, g.dim))
    if g.dim == 1:
        out[..., 0, 0] = 1.0 + _d2_axis(u, 0, g.h)
    else:
        out[..., 0, 0] = 1.0 + _d2_axis(u, 0, g.h)
        out[..., 1, 1] = 1.0 + _d2_axis(u, 1, g.h)
        c = _d2_cross(u, g.h)
        out[..., 0, 1] = c
        out[..., 1, 0] = c
    return out


def hessian_eigenvalues(hess: np.ndarray) -> np.ndarray:
    """Eigenvalues of a symmetric matrix field, shape (..., dim)."""
    dim = hess.shape[-1]
    if dim == 1:
        return hess[..., 0, 0][..., None]
    a = hess[..., 0, 0]
    b = hess[..., 1, 1]
    c = hess[..., 0, 1]
    mid = 0.5 * (a + b)
    rad = np.sqrt((0.5 * (a - b)) ** 2 + c * c)
    return np.stack([mid - rad, mid + rad], axis=-1)


def min_hessian_eig(phi: QuasiPeriodicConvex) -> float:
    return float(hessian_eigenvalues(discrete_hessian(phi)).min())


def min_axis_hessian(phi: QuasiPeriodicConvex) -> float:
    """Smallest diagonal entry of the discrete Hessian (axis convexity)."""
    g = phi.grid
    u = phi.u
    out = 1.0 + _d2_axis(u, 0, g.h)
    m = float(out.min())
    if g.dim == 2:
        m = min(m, float((1.0 + _d2_axis(u, 1, g.h)).min()))
    return m


def hessian_det(hess: np.ndarray) -> np.ndarray:
    dim = hess.shape[-1]
    if dim == 1:
        return hess[..., 0, 0]
    return hess[..., 0, 0] * hess[..., 1, 1] - hess[..., 0, 1] ** 2


def monge_ampere(phi: QuasiPeriodicConvex) -> MongeAmpereMeasure:
    """Discrete MA measure: cell mass max(det Hessian, 0) * h^dim per node.

    Negative determinants (crease artifacts of the centered cross stencil)
    are clamped to zero mass.
    """
    if min_axis_hessian(phi) < -1e-6:
        raise NonConvexInput(
            f"axis second difference {min_axis_hessian(phi):.3e} < -1e-6"
        )
    hess = discrete_hessian(phi)
    det = hessian_det(hess)
    masses = np.maximum(det, 0.0) * phi.grid.cell_volume
    return MongeAmpereMeasure(phi.grid, masses)


def trace_norm(matrix_field: np.ndarray) -> float:
    """Sup over nodes of the trace of a symmetric PSD matrix field."""
    tr = np.trace(matrix_field, axis1=-2, axis2=-1)
    return float(tr.max()) if tr.size else 0.0


def uniform_measure(grid: PeriodicGrid) -> MongeAmpereMeasure:
    return MongeAmpereMeasure(grid, np.full(grid.shape, grid.cell_volume))


# ---------------------------------------------------------------------------
# torus-field v1 dump format


def write_field(f, field: ScalarField) -> None:
    """Write in the torus-field v1 CSV layout (row-major, 17 sig. digits)."""
    g = field.grid
    f.write(f"# torus-field v1, dim={g.dim}, N={g.n}\n")
    x = g.axis_coords()
    v = field.values
    if g.dim == 1:
        for i in range(g.n):
            f.write("%d,%s,%s\n" % (i, FLOAT_FMT % x[i], FLOAT_FMT % v[i]))
    else:
        for i in range(g.n):
            for j in range(g.n):
                f.write(
                    "%d,%d,%s,%s,%s\n"
                    % (i, j, FLOAT_FMT % x[i], FLOAT_FMT % x[j], FLOAT_FMT % v[i, j])
                )


def field_to_string(field: ScalarField) -> str:
    buf = io.StringIO()
    write_field(buf, field)
    return buf.getvalue()


def read_field(f) -> ScalarField:
    """Read a torus-field v1 CSV; inverse of :func:`write_field`."""
    header = f.readline().strip()
    if not header.startswith("# torus-field v1"):
        raise ValueError(f"not a torus-field v1 file: {header!r}")
    parts = dict(p.strip().split("=") for p in header.split(",")[1:])
    dim = int(parts["dim"])
    n = int(parts["N"])
    grid = PeriodicGrid(dim, n)
    values = np.empty(grid.shape)
    for line in f:
        cols = line.strip().split(",")
        if not cols or cols == [""]:
            continue
        if dim == 1:
            values[int(cols[0])] = float(cols[2])
        else:
            values[int(cols[0]), int(cols[1])] = float(cols[4])
    return ScalarField(grid, values)
