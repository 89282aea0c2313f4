"""Random Gaussian periodic Hamiltonians and box-counting dimension of the
Monge-Ampere support under random forcing."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptySupport
from .torus import PeriodicGrid, ScalarField


@dataclass(frozen=True)
class RandomFieldSpec:
    """Spectrum c * k^(-3-2h) for the cosine/sine mode coefficients."""

    h_exponent: float
    k_max: int
    amplitude: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not -1.0 <= self.h_exponent <= 1.0:
            raise ValueError("h_exponent must lie in [-1, 1]")
        if self.k_max < 1:
            raise ValueError("k_max must be >= 1")

    def mode_std(self, k: np.ndarray) -> np.ndarray:
        return np.sqrt(self.amplitude * np.asarray(k, dtype=float) ** (-3.0 - 2.0 * self.h_exponent))


_MIX_MULT1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX_MULT2 = np.uint64(0x94D049BB133111EB)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)


def _splitmix64(x: np.ndarray) -> np.ndarray:
    """Fixed 64-bit mixing function (splitmix64 finalizer)."""
    x = (x + _GOLDEN).astype(np.uint64)
    x = (x ^ (x >> np.uint64(30))) * _MIX_MULT1
    x = (x ^ (x >> np.uint64(27))) * _MIX_MULT2
    return x ^ (x >> np.uint64(31))


def _counter_uniform(seed: int, stream: np.ndarray, slot: int) -> np.ndarray:
    """Deterministic uniform in (0, 1] keyed by (seed, stream, slot)."""
    key = np.uint64(seed) * np.uint64(0x100000001B3)
    word = _splitmix64(key + np.asarray(stream, dtype=np.uint64) * np.uint64(4) + np.uint64(slot))
    # 53-bit mantissa; shift into (0, 1]
    return (word >> np.uint64(11)).astype(np.float64) / 9007199254740992.0 + 2**-53


def gaussian_coefficients(spec: RandomFieldSpec) -> tuple[np.ndarray, np.ndarray]:
    """(A_k, B_k) for k = 1..k_max via counter-based Box-Muller.

    Each coefficient is keyed by (seed, k, cos/sin), so the draw is
    independent of evaluation order and thread count.
    """
    k = np.arange(1, spec.k_max + 1)
    std = spec.mode_std(k)
    u1a = _counter_uniform(spec.seed, k, 0)
    u2a = _counter_uniform(spec.seed, k, 1)
    u1b = _counter_uniform(spec.seed, k, 2)
    u2b = _counter_uniform(spec.seed, k, 3)
    a = np.sqrt(-2.0 * np.log(u1a)) * np.cos(2.0 * np.pi * u2a) * std
    b = np.sqrt(-2.0 * np.log(u1b)) * np.cos(2.0 * np.pi * u2b) * std
    return a, b


def sample_hamiltonian(spec: RandomFieldSpec, grid: PeriodicGrid) -> ScalarField:
    """f(x) = sum_k A_k cos(2 pi k x) + B_k sin(2 pi k x) on a 1D grid."""
    if grid.dim != 1:
        raise ValueError("random Hamiltonians are 1D")
    if spec.k_max > grid.n // 2:
        raise ValueError("k_max exceeds the Nyquist limit N/2")
    a, b = gaussian_coefficients(spec)
    x = grid.axis_coords()
    k = np.arange(1, spec.k_max + 1)
    phase = 2.0 * np.pi * np.outer(k, x)
    values = a @ np.cos(phase) + b @ np.sin(phase)
    return ScalarField(grid, values)


def ma_support_mask(masses: np.ndarray, n: int) -> np.ndarray:
    """Cells carrying genuine MA mass: above 1e-3 of the uniform cell mass."""
    total = float(np.sum(masses))
    return masses > (total / n) * 1e-3


def box_counts(mask: np.ndarray, scales) -> list[int]:
    n = mask.shape[0]
    counts = []
    for s in scales:
        nb = (n + s - 1) // s
        occ = 0
        for b in range(nb):
            if mask[b * s : min((b + 1) * s, n)].any():
                occ += 1
        counts.append(occ)
    return counts


def box_dimension(mask: np.ndarray, scales=None) -> float:
    """Least-squares slope of log N(eps) against log(1/eps), 1D dyadic boxes.

    Default scales are the dyadic sizes 4, 8, ..., N/8 cells (the smallest
    dyadic scale 2 sits at the discretization floor and is excluded).
    """
    if mask.ndim != 1:
        raise ValueError("box dimension estimator is 1D")
    if not mask.any():
        raise EmptySupport("support mask is empty")
    n = mask.shape[0]
    if scales is None:
        scales = []
        s = 4
        while s <= n // 8:
            scales.append(s)
            s *= 2
    scales = list(scales)
    if len(scales) < 2:
        raise ValueError("need at least two scales")
    counts = box_counts(mask, scales)
    eps = np.array(scales, dtype=float) / n
    x = np.log(1.0 / eps)
    y = np.log(np.maximum(counts, 1))
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)
