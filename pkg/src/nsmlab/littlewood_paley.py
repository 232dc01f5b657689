"""Dyadic frequency cutoffs, Besov and Chemin-Lerner norms, product laws.

The smooth ramp is ``theta(r) = h(2 - r) / (h(2 - r) + h(r - 1))`` with
``h(t) = exp(-1/t)`` for ``t > 0`` and 0 otherwise, so ``theta = 1`` on
``[0, 1]`` and ``theta = 0`` on ``[2, inf)``. The low-pass symbol is
``psi_k(xi) = theta(2^-k |xi|)`` and the block symbol is
``phi_k = psi_k - psi_{k-1}``. In sharp mode ``theta`` is the indicator of
``r < sqrt(2)``, which makes the blocks disjoint.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .reports import EstimateReport, make_report
from .series import TrajectorySeries, sequence_norm, time_norm
from .spectral import Grid, SpectralField, _inv, product, sobolev_norm

__all__ = [
    "BesovSpec", "BracketResult", "DyadicCutoffs", "besov_norm", "block_norms",
    "bracket_functional", "bracket_pointwise", "build_cutoffs", "chemin_lerner_norm",
    "dyadic_block", "lebesgue_besov_norm", "low_pass", "product_law_probe",
    "smooth_ramp", "sobolev_norm",
]


def _h(t):
    t = np.asarray(t, dtype=np.float64)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def smooth_ramp(r):
    """Smooth nonincreasing ramp: 1 on ``[0, 1]``, 0 on ``[2, inf)``."""
    r = np.asarray(r, dtype=np.float64)
    a = _h(2.0 - r)
    return a / (a + _h(r - 1.0))


def _ramp_from_sq(r2, mode):
    if mode == "sharp":
        return (r2 < 2.0).astype(np.float64)
    return smooth_ramp(np.sqrt(r2))


@dataclass(frozen=True)
class DyadicCutoffs:
    """Littlewood-Paley multipliers on a grid.

    ``k_min`` is the shell of the box frequency and ``k_max`` the last shell
    fully inside the dealiased band; ``k_top`` is the last shell that can be
    nonzero anywhere on the lattice (corners of the band). Blocks are taken
    over ``k_min..k_top`` so that the mean plus all blocks reconstructs any
    field exactly.
    """

    grid: Grid
    mode: str
    k_min: int
    k_max: int
    k_top: int

    @property
    def shells(self) -> np.ndarray:
        return np.arange(self.k_min, self.k_top + 1)

    def psi(self, k: int) -> np.ndarray:
        """Low-pass symbol ``theta(2^-k |xi|)``."""
        return _ramp_from_sq(self.grid.k2 * 4.0 ** (-k), self.mode)

    def phi(self, k: int) -> np.ndarray:
        return self.psi(k) - self.psi(k - 1)

    @cached_property
    def block_symbols(self) -> np.ndarray:
        """Stacked ``phi_k`` for every shell, shape ``(n_shells, *grid.shape)``."""
        return np.stack([self.phi(int(k)) for k in self.shells])

    @cached_property
    def _flat_sq(self) -> np.ndarray:
        return (self.block_symbols ** 2).reshape(len(self.shells), -1)

    def partition_residual(self) -> float:
        total = self.psi(self.k_min - 1) + self.block_symbols.sum(axis=0)
        return float(np.max(np.abs(1.0 - total)))


def build_cutoffs(grid: Grid, mode: str = "smooth") -> DyadicCutoffs:
    if mode not in ("smooth", "sharp"):
        raise ValueError(f"mode must be 'smooth' or 'sharp', got {mode!r}")
    k_min = math.floor(math.log2(grid.k0) + 1e-12)
    k_max = math.floor(math.log2(grid.k0 * grid.n / 3.0) + 1e-12)
    if k_max - k_min < 1:
        raise ValueError("grid too small to hold two dyadic shells")
    k_top = math.ceil(math.log2(float(grid.kmag.max())) - 1e-12)
    return DyadicCutoffs(grid, mode, k_min, k_max, max(k_top, k_max))


def dyadic_block(f: SpectralField, k: int, cut: DyadicCutoffs) -> SpectralField:
    """``Delta_k f``; shells that do not meet the lattice give the zero field."""
    return SpectralField(f.grid, f.coeffs * cut.phi(k))


def low_pass(f: SpectralField, k: int, cut: DyadicCutoffs) -> SpectralField:
    """``S_k f``."""
    return SpectralField(f.grid, f.coeffs * cut.psi(k))


@dataclass(frozen=True)
class BesovSpec:
    s: float
    p: float = 2
    q: float = 2

    def __post_init__(self):
        if self.p not in (2, math.inf):
            raise ValueError("p must be 2 or inf")
        if not self.q >= 1:
            raise ValueError("q must be >= 1")


def _power(f: SpectralField) -> np.ndarray:
    return np.sum(np.abs(f.coeffs) ** 2, axis=0).ravel()


def block_norms(f: SpectralField, cut: DyadicCutoffs, p: float = 2) -> np.ndarray:
    """``||Delta_k f||_{L^p}`` for every shell in ``cut.shells``."""
    if p == 2:
        return np.sqrt(f.grid.volume * (cut._flat_sq @ _power(f)))
    out = np.empty(len(cut.shells))
    for i, sym in enumerate(cut.block_symbols):
        x = _inv(f.coeffs * sym, f.grid)
        out[i] = np.sqrt(np.max(np.sum(x ** 2, axis=0)))
    return out


def weighted_sum(norms: np.ndarray, spec: BesovSpec, cut: DyadicCutoffs) -> float:
    w = 2.0 ** (cut.shells * spec.s)
    return float(sequence_norm(w * norms, spec.q, axis=-1))


def besov_norm(f: SpectralField, spec: BesovSpec, cut: DyadicCutoffs) -> float:
    """Homogeneous Besov norm ``|| (2^{ks} ||Delta_k f||_{L^p})_k ||_{l^q}``."""
    return weighted_sum(block_norms(f, cut, spec.p), spec, cut)


def _block_matrix(traj: TrajectorySeries, cut: DyadicCutoffs, p) -> np.ndarray:
    return np.stack([block_norms(f, cut, p) for f in traj.values])


def chemin_lerner_norm(traj: TrajectorySeries, r: float, spec: BesovSpec,
                       cut: DyadicCutoffs) -> float:
    """Time norm taken per block, then the weighted ``l^q`` sum."""
    per_block = time_norm(_block_matrix(traj, cut, spec.p), traj.dt, r, axis=0)
    return weighted_sum(per_block, spec, cut)


def lebesgue_besov_norm(traj: TrajectorySeries, r: float, spec: BesovSpec,
                        cut: DyadicCutoffs) -> float:
    """``L^r`` in time of the Besov norm."""
    m = _block_matrix(traj, cut, spec.p)
    w = 2.0 ** (cut.shells * spec.s)
    per_time = sequence_norm(w * m, spec.q, axis=-1)
    return float(time_norm(per_time, traj.dt, r))


# ------------------------------------------------------------ bracket functional

@dataclass(frozen=True)
class BracketResult:
    """Value of the split functional and the realizing split.

    ``bar`` is the part paid linearly (weight ``c``), ``tilde`` the part
    paid quadratically.
    """

    value: float
    bar: TrajectorySeries
    tilde: TrajectorySeries

    def __float__(self):
        return self.value


def bracket_pointwise(v, c: float) -> np.ndarray:
    """Pointwise minimum of ``c a + b^2`` over ``a + b = v``, ``a, b >= 0``."""
    v = np.asarray(v, dtype=np.float64)
    return np.where(v <= 0.5 * c, v * v, c * v - 0.25 * c * c)


def bracket_functional(v: TrajectorySeries, c: float) -> BracketResult:
    """Infimum over splits ``v = bar + tilde`` of ``c int bar + int tilde^2``."""
    if not c > 0:
        raise ValueError("c must be positive")
    vals = np.asarray(v.values, dtype=np.float64)
    if np.any(vals < 0):
        raise ValueError("bracket functional needs nonnegative samples")
    tilde = np.minimum(vals, 0.5 * c)
    bar = vals - tilde
    pointwise = c * bar + tilde * tilde
    value = float(time_norm(pointwise, v.dt, 1)) if len(v) > 1 else 0.0
    return BracketResult(value, TrajectorySeries(v.times, bar), TrajectorySeries(v.times, tilde))


# ------------------------------------------------------------ product laws

_LAW_DIM = {"para1": None, "para2": 3, "para3": 2}


def _check_law(law, s, t, d):
    if law not in _LAW_DIM:
        raise ValueError(f"unknown product law {law!r}")
    need = _LAW_DIM[law]
    if need is not None and d != need:
        raise ValueError(f"{law} is a {need}D law, grid is {d}D")
    half = d / 2.0
    if law == "para1":
        if not -half < s < half:
            raise ValueError(f"para1 needs s in (-{half}, {half}), got {s}")
    else:
        if not (-half < s < half and -half < t < half and s + t > 0):
            raise ValueError(f"{law} needs s, t in (-{half}, {half}) and s + t > 0")


def product_law_probe(f: SpectralField, g: SpectralField, law: str, s: float,
                      t: float | None, cut: DyadicCutoffs) -> EstimateReport:
    """Empirical ratio for a paraproduct law; no constant is asserted.

    ``para1``: ``||fg||_{H^s}`` against
    ``(||f||_{L^inf} + ||f||_{B^{d/2}_{2,inf}}) ||g||_{H^s}``.
    ``para2`` (3D) and ``para3`` (2D): ``||fg||_{B^{s+t-d/2}_{2,1}}`` against
    ``||f||_{H^s} ||g||_{H^t}``.
    """
    d = f.grid.dim
    _check_law(law, s, 0.0 if t is None else t, d)
    fg = product(f, g)
    if law == "para1":
        x = f.to_physical()
        f_inf = float(np.sqrt(np.max(np.sum(x ** 2, axis=0))))
        left = sobolev_norm(fg, s)
        right = (f_inf + besov_norm(f, BesovSpec(d / 2.0, 2, math.inf), cut)) * sobolev_norm(g, s)
    else:
        left = besov_norm(fg, BesovSpec(s + t - d / 2.0, 2, 1), cut)
        right = sobolev_norm(f, s) * sobolev_norm(g, t)
    ctx = {"law": law, "s": s, "t": t, "dim": d, "n": f.grid.n,
           "k_min": cut.k_min, "k_top": cut.k_top}
    return make_report(f"product_{law}", left, right, math.inf, ctx)

