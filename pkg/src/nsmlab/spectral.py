"""Periodic grids, Fourier-space fields and exact spectral operators.

Fields are stored as full complex coefficient arrays of shape
``(n_comp, n, ..., n)`` with the convention ``f(x) = sum_k fhat_k e^{ik.x}``,
so a constant field ``a`` has ``fhat_0 = a``. Physical wavenumbers are
``k = 2*pi*m/length`` for the signed integer lattice ``m``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.fft as sfft

from . import _kernels

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on ``[0, length)^dim``.

    Parameters
    ----------
    dim : int
        Spatial dimension, 2 or 3.
    n : int
        Points per axis, a power of two no smaller than 8.
    length : float
        Edge of the periodic box.
    """

    dim: int
    n: int
    length: float = TWO_PI

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim}")
        n = self.n
        if not isinstance(n, (int, np.integer)) or n < 8 or n & (n - 1):
            raise ValueError(f"n must be a power of two >= 8, got {n}")
        if not self.length > 0:
            raise ValueError(f"length must be positive, got {self.length}")
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "length", float(self.length))

    @property
    def shape(self) -> tuple:
        return (self.n,) * self.dim

    @property
    def axes(self) -> tuple:
        """Spatial axes of a coefficient array with a leading component axis."""
        return tuple(range(1, self.dim + 1))

    @property
    def spacing(self) -> float:
        return self.length / self.n

    @property
    def volume(self) -> float:
        return self.length ** self.dim

    @property
    def k0(self) -> float:
        """Fundamental wavenumber ``2 pi / length``."""
        return TWO_PI / self.length

    @cached_property
    def axis_index(self) -> np.ndarray:
        """Signed integer wavenumbers along one axis (Nyquist as ``-n/2``)."""
        return np.fft.fftfreq(self.n, 1.0 / self.n).astype(np.int64)

    @cached_property
    def index(self) -> np.ndarray:
        """Integer lattice ``m``, shape ``(dim, *shape)``."""
        return np.stack(np.meshgrid(*([self.axis_index] * self.dim), indexing="ij"))

    @cached_property
    def k(self) -> np.ndarray:
        """Physical wavevectors, shape ``(3, *shape)``; third entry zero in 2D."""
        k = np.zeros((3,) + self.shape)
        k[: self.dim] = self.k0 * self.index
        return k

    @cached_property
    def k2(self) -> np.ndarray:
        return np.sum(self.k ** 2, axis=0)

    @cached_property
    def kmag(self) -> np.ndarray:
        return np.sqrt(self.k2)

    @cached_property
    def nyquist(self) -> np.ndarray:
        """True on lattice points touching the Nyquist plane of any axis."""
        return np.any(self.index == -(self.n // 2), axis=0)

    @cached_property
    def dealias(self) -> np.ndarray:
        """2/3-rule mask: ``|m_axis| <= n/3`` on every axis."""
        return np.all(np.abs(self.index) <= self.n / 3.0, axis=0) & ~self.nyquist

    @cached_property
    def khat(self) -> np.ndarray:
        """Unit wavevectors (zero at the mean mode)."""
        with np.errstate(invalid="ignore", divide="ignore"):
            kh = np.where(self.kmag > 0, self.k / self.kmag, 0.0)
        return kh

    @cached_property
    def inv_k2(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.where(self.k2 > 0, 1.0 / np.where(self.k2 > 0, self.k2, 1.0), 0.0)

    def coordinates(self) -> np.ndarray:
        """Physical sample points, shape ``(dim, *shape)``."""
        x = np.arange(self.n) * self.spacing
        return np.stack(np.meshgrid(*([x] * self.dim), indexing="ij"))

    def sharp_ball(self, radius: float) -> np.ndarray:
        """Mask of modes with ``|k| <= radius`` inside the dealiased band."""
        return (self.k2 <= radius * radius * (1 + 1e-14)) & self.dealias


def make_grid(dim: int, n: int, length: float = TWO_PI) -> Grid:
    return Grid(dim, n, length)


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Real multi-component periodic field held by its Fourier coefficients."""

    grid: Grid
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.complex128)
        if c.ndim == self.grid.dim:
            c = c[None]
        if c.shape[1:] != self.grid.shape:
            raise ValueError(f"coefficient shape {c.shape} does not match grid {self.grid.shape}")
        object.__setattr__(self, "coeffs", c)

    @property
    def n_comp(self) -> int:
        return self.coeffs.shape[0]

    @classmethod
    def zeros(cls, grid: Grid, n_comp: int = 3) -> "SpectralField":
        return cls(grid, np.zeros((n_comp,) + grid.shape, dtype=np.complex128))

    @classmethod
    def from_physical(cls, samples, grid: Grid) -> "SpectralField":
        return transform(samples, grid)

    def to_physical(self) -> np.ndarray:
        return inverse_transform(self)

    def copy(self) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs.copy())

    def mean(self) -> np.ndarray:
        return self.coeffs[(slice(None),) + (0,) * self.grid.dim].copy()

    def _other(self, other):
        if isinstance(other, SpectralField):
            if other.grid != self.grid:
                raise ValueError("grid mismatch")
            return other.coeffs
        return other

    def __add__(self, other):
        return SpectralField(self.grid, self.coeffs + self._other(other))

    def __sub__(self, other):
        return SpectralField(self.grid, self.coeffs - self._other(other))

    def __mul__(self, scalar):
        if isinstance(scalar, SpectralField):
            raise TypeError("use product() for field products")
        return SpectralField(self.grid, self.coeffs * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return SpectralField(self.grid, -self.coeffs)


# ---------------------------------------------------------------- transforms

def _fwd(x: np.ndarray, grid: Grid) -> np.ndarray:
    return sfft.fftn(x, axes=grid.axes, norm="forward")


def _inv(c: np.ndarray, grid: Grid) -> np.ndarray:
    return sfft.ifftn(c, axes=grid.axes, norm="forward").real


def transform(samples, grid: Grid) -> SpectralField:
    """Physical samples to a field projected onto the resolved (dealiased) band.

    ``samples`` has shape ``grid.shape`` (scalar) or ``(n_comp, *grid.shape)``.
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.shape == grid.shape:
        x = x[None]
    if x.shape[1:] != grid.shape:
        raise ValueError(f"sample shape {np.shape(samples)} does not match grid {grid.shape}")
    return SpectralField(grid, _fwd(x, grid) * grid.dealias)


def inverse_transform(f: SpectralField) -> np.ndarray:
    """Real physical samples of shape ``(n_comp, *grid.shape)``."""
    return _inv(f.coeffs, f.grid)


# ---------------------------------------------------------------- norms

def l2_norm(f: SpectralField) -> float:
    return float(np.sqrt(f.grid.volume * np.sum(np.abs(f.coeffs) ** 2)))


def physical_l2_norm(f: SpectralField) -> float:
    """L2 norm by midpoint quadrature of the physical samples."""
    x = inverse_transform(f)
    return float(np.sqrt(np.sum(x ** 2) * f.grid.spacing ** f.grid.dim))


def hermitian_defect(f: SpectralField) -> float:
    """Max ``|fhat(-k) - conj(fhat(k))|`` over the lattice."""
    c = f.coeffs
    flipped = c
    for ax in f.grid.axes:
        flipped = np.roll(np.flip(flipped, axis=ax), 1, axis=ax)
    return float(np.max(np.abs(flipped - np.conj(c)), initial=0.0))


def linf_norm(f: SpectralField) -> float:
    """Max over the grid of the pointwise Euclidean norm."""
    x = inverse_transform(f)
    return float(np.sqrt(np.max(np.sum(x ** 2, axis=0))))


# ---------------------------------------------------------------- operators

def _require_vector(f: SpectralField):
    if f.n_comp != 3:
        raise ValueError("operation needs a 3-component field")


def curl(f: SpectralField) -> SpectralField:
    _require_vector(f)
    k, c = f.grid.k, f.coeffs
    out = np.empty_like(c)
    out[0] = 1j * (k[1] * c[2] - k[2] * c[1])
    out[1] = 1j * (k[2] * c[0] - k[0] * c[2])
    out[2] = 1j * (k[0] * c[1] - k[1] * c[0])
    return SpectralField(f.grid, out)


def divergence(f: SpectralField) -> SpectralField:
    _require_vector(f)
    return SpectralField(f.grid, 1j * np.sum(f.grid.k * f.coeffs, axis=0)[None])


def gradient(f: SpectralField) -> SpectralField:
    if f.n_comp != 1:
        raise ValueError("gradient needs a scalar field")
    return SpectralField(f.grid, 1j * f.grid.k * f.coeffs[0])


def laplacian(f: SpectralField) -> SpectralField:
    return SpectralField(f.grid, -f.grid.k2 * f.coeffs)


def leray_coeffs(c: np.ndarray, grid: Grid) -> np.ndarray:
    kdot = np.sum(grid.k * c, axis=0)
    return c - grid.k * (kdot * grid.inv_k2)


def leray_project(f: SpectralField) -> SpectralField:
    """Remove the gradient part mode by mode; the mean mode is untouched."""
    _require_vector(f)
    return SpectralField(f.grid, leray_coeffs(f.coeffs, f.grid))


def max_divergence(f: SpectralField) -> float:
    """Largest divergence coefficient magnitude, scaled by ``|k| |fhat|``-free units."""
    return float(np.max(np.abs(np.sum(f.grid.k * f.coeffs, axis=0)), initial=0.0))


def truncation_mask(grid: Grid, n_trunc: int | None) -> np.ndarray:
    """Sharp mask of ``|k| <= 2^n_trunc`` (all true when ``n_trunc`` is None)."""
    if n_trunc is None:
        return np.ones(grid.shape, dtype=bool)
    if n_trunc < 0:
        raise ValueError("n_trunc must be nonnegative")
    return grid.k2 <= 4.0 ** n_trunc * (1 + 1e-14)


def truncate(f: SpectralField, n_trunc: int) -> SpectralField:
    return SpectralField(f.grid, f.coeffs * truncation_mask(f.grid, n_trunc))


def dealias(f: SpectralField) -> SpectralField:
    return SpectralField(f.grid, f.coeffs * f.grid.dealias)


def _flat(x: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(x.reshape(x.shape[0], -1))


def cross_physical(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pointwise cross product of physical arrays of shape ``(3, *shape)``."""
    out = _kernels.cross3(_flat(a), _flat(b))
    return out.reshape(a.shape)


def cross_product(a: SpectralField, b: SpectralField) -> SpectralField:
    if a.grid != b.grid:
        raise ValueError("grid mismatch")
    _require_vector(a)
    _require_vector(b)
    g = a.grid
    prod = cross_physical(inverse_transform(a), inverse_transform(b))
    return SpectralField(g, _fwd(prod, g) * g.dealias)


def product(f: SpectralField, g: SpectralField) -> SpectralField:
    """Dealiased pointwise product; a scalar factor broadcasts over components."""
    if f.grid != g.grid:
        raise ValueError("grid mismatch")
    if f.n_comp not in (1, g.n_comp) and g.n_comp != 1:
        raise ValueError("component mismatch")
    grid = f.grid
    prod = inverse_transform(f) * inverse_transform(g)
    return SpectralField(grid, _fwd(prod, grid) * grid.dealias)


def convective_coeffs(u_adv: np.ndarray, u_phys: np.ndarray, grid: Grid) -> np.ndarray:
    """Dealiased ``(v . grad) u`` from physical ``v``, ``u`` via ``div(v (x) u)``.

    Valid for divergence-free ``v``.
    """
    k = grid.k
    out = np.zeros((3,) + grid.shape, dtype=np.complex128)
    for l in range(grid.dim):
        flux = _fwd(u_adv[l] * u_phys, grid)
        out += 1j * k[l] * flux
    return out * grid.dealias


def convective_term(u: SpectralField, advecting: SpectralField | None = None) -> SpectralField:
    """Dealiased ``(v . grad) u`` with ``v = advecting`` (default ``u``)."""
    _require_vector(u)
    g = u.grid
    v = inverse_transform(u if advecting is None else advecting)
    acc = np.zeros((3,) + g.shape)
    for l in range(g.dim):
        acc += v[l] * _inv(1j * g.k[l] * u.coeffs, g)
    return SpectralField(g, _fwd(acc, g) * g.dealias)


def sobolev_norm(f: SpectralField, s: float) -> float:
    """Homogeneous Sobolev norm; the mean mode is excluded."""
    g = f.grid
    power = np.sum(np.abs(f.coeffs) ** 2, axis=0)
    nz = g.k2 > 0
    return float(np.sqrt(g.volume * np.sum(g.k2[nz] ** s * power[nz])))
