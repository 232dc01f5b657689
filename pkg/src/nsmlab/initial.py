"""Seeded random initial data.

The generator is xorshift64* (shifts 12, 25, 27; output multiplier
``0x2545F4914F6CDD1D``; uniform ``(x >> 11) * 2^-53``) seeded through one
round of splitmix64 (increment ``0x9E3779B97F4A7C15``, multipliers
``0xBF58476D1CE4E5B9`` and ``0x94D049BB133111EB``). Normal deviates come
from the Box-Muller cosine branch applied to consecutive uniform pairs
``(u1, u2)``: ``sqrt(-2 log(1 - u1)) cos(2 pi u2)``.

Random coefficients are drawn on the fixed lattice box ``|m_axis| <= DRAW_BAND``
(row-major, real parts then imaginary parts, one block per active
component), so a given seed produces the same low modes on every grid that
resolves the box.
"""
from __future__ import annotations

import numpy as np

from . import _kernels
from .spectral import Grid, SpectralField, l2_norm, leray_coeffs, sobolev_norm

_M64 = (1 << 64) - 1

# active components of (u, E, B) by dimension
ACTIVE = {2: ((0, 1), (0, 1), (2,)), 3: ((0, 1, 2),) * 3}
DRAW_BAND = 10


def splitmix64(seed: int) -> int:
    z = (int(seed) + 0x9E3779B97F4A7C15) & _M64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
    z ^= z >> 31
    return z or 0x9E3779B97F4A7C15


class XorShift64Star:
    """Sequential xorshift64* stream."""

    def __init__(self, seed: int):
        self.state = splitmix64(seed)

    def uniform(self, size: int) -> np.ndarray:
        out = np.empty(int(size), dtype=np.float64)
        self.state = int(_kernels.xorshift_uniform(self.state, out))
        return out

    def normal(self, size: int) -> np.ndarray:
        u = self.uniform(2 * int(size))
        return np.sqrt(-2.0 * np.log1p(-u[0::2])) * np.cos(2.0 * np.pi * u[1::2])


def spectral_filter(grid: Grid, slope: float, cutoff: float) -> np.ndarray:
    """Amplitude filter giving shell energy ``~ k^-slope exp(-(k/cutoff)^2)``."""
    k = grid.kmag / grid.k0
    with np.errstate(divide="ignore"):
        spec = np.where(k > 0, k ** (-slope) * np.exp(-(k / cutoff) ** 2)
                        / np.where(k > 0, k, 1.0) ** (grid.dim - 1), 0.0)
    return np.sqrt(spec) * grid.dealias


def random_solenoidal(grid: Grid, rng: XorShift64Star, comps, slope: float,
                      cutoff: float) -> np.ndarray:
    """Mean-free, divergence-free random coefficients on the active components."""
    coeffs = np.zeros((3,) + grid.shape, dtype=np.complex128)
    for c in comps:
        coeffs[c] = canonical_noise(grid, rng)
    coeffs *= spectral_filter(grid, slope, cutoff)
    return leray_coeffs(coeffs, grid)


def canonical_noise(grid: Grid, rng: XorShift64Star, band: int = DRAW_BAND) -> np.ndarray:
    """Hermitian complex Gaussian coefficients on ``|m_axis| <= band``, embedded in ``grid``.

    The draw does not depend on ``grid.n``; modes the grid cannot resolve
    (beyond the dealiasing band) are dropped after drawing.
    """
    side = 2 * band + 1
    box = (side,) * grid.dim
    z = rng.normal(2 * side ** grid.dim).reshape((2,) + box)
    c = (z[0] + 1j * z[1]) / np.sqrt(2.0)
    c = 0.5 * (c + np.conj(np.flip(c)))
    keep = min(band, grid.n // 3)
    c = c[(slice(band - keep, band + keep + 1),) * grid.dim]
    out = np.zeros(grid.shape, dtype=np.complex128)
    idx = np.arange(-keep, keep + 1) % grid.n
    out[np.ix_(*([idx] * grid.dim))] = c
    return out * grid.dealias


def _scale_to(coeffs, target, norm):
    cur = norm(coeffs)
    if target == 0 or cur == 0:
        return np.zeros_like(coeffs)
    return coeffs * (target / cur)


def initial_fields(grid: Grid, recipe: str, seed: int, energy_target: float,
                   ems_norm_target: float, s_exponent: float, slope: float = 3.0,
                   cutoff: float = 4.0, em_split: float = 0.5):
    """Build ``(u0, E0, B0)`` for a named recipe.

    ``random`` draws all three fields; ``velocity`` draws only ``u``;
    ``zero`` returns zeros. The electromagnetic pair is scaled so that
    ``||E0||_{H^s}^2 = em_split T^2`` and ``||B0||_{H^s}^2 = (1 - em_split) T^2``
    with ``T = ems_norm_target``; ``u0`` then takes the remaining energy so
    that the total energy equals ``energy_target``.
    """
    zero = np.zeros((3,) + grid.shape, dtype=np.complex128)
    if recipe == "zero":
        return tuple(SpectralField(grid, zero.copy()) for _ in range(3))
    if recipe not in ("random", "velocity"):
        raise ValueError(f"unknown recipe {recipe!r}")
    rng = XorShift64Star(seed)
    au, ae, ab = ACTIVE[grid.dim]
    u = random_solenoidal(grid, rng, au, slope, cutoff)
    e = random_solenoidal(grid, rng, ae, slope, cutoff)
    b = random_solenoidal(grid, rng, ab, slope, cutoff)
    if recipe == "velocity":
        e, b = zero.copy(), zero.copy()
    hs = lambda c: sobolev_norm(SpectralField(grid, c), s_exponent)
    e = _scale_to(e, np.sqrt(em_split) * ems_norm_target, hs)
    b = _scale_to(b, np.sqrt(1.0 - em_split) * ems_norm_target, hs)
    em = 0.5 * (l2_norm(SpectralField(grid, e)) ** 2 + l2_norm(SpectralField(grid, b)) ** 2)
    ku = energy_target - em
    if ku < -1e-14 * max(energy_target, 1.0):
        raise ValueError(f"electromagnetic energy {em:.3g} exceeds energy target {energy_target:.3g}")
    u = _scale_to(u, np.sqrt(2.0 * max(ku, 0.0)), lambda c: l2_norm(SpectralField(grid, c)))
    return SpectralField(grid, u), SpectralField(grid, e), SpectralField(grid, b)
