"""Heat semigroup, Duhamel solver, maximal operator and parabolic probes.

Also holds the three-way Stokes split of a velocity trajectory into a
free heat flow, a part driven by the convective term and a part driven by
the Lorentz force.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .littlewood_paley import (BesovSpec, DyadicCutoffs, block_norms, bracket_functional,
                               build_cutoffs, lebesgue_besov_norm, low_pass, besov_norm)
from .propagators import scalar_etd
from .reports import EstimateReport, make_report
from .series import TrajectorySeries, time_norm
from .spectral import (SpectralField, _inv, convective_coeffs, leray_coeffs, l2_norm,
                       linf_norm, sobolev_norm, truncation_mask)

RHO_GRID = 2.0 ** np.arange(-10, 31)


def heat_propagate(f: SpectralField, t: float, nu: float) -> SpectralField:
    """``e^{t nu Laplacian} f`` by exact per-mode multiplication."""
    if t < 0:
        raise ValueError("heat flow needs t >= 0")
    return SpectralField(f.grid, f.coeffs * np.exp(-nu * t * f.grid.k2))


@dataclass(frozen=True)
class HeatProblem:
    """``w' = diffusivity * Laplacian w + f``, ``w(0) = w0``.

    ``forcing`` holds fields sampled uniformly from time 0; ``None`` means
    the unforced flow.
    """

    diffusivity: float
    w0: SpectralField
    forcing: TrajectorySeries | None = None

    def __post_init__(self):
        if not self.diffusivity > 0:
            raise ValueError("diffusivity must be positive")
        if self.forcing is not None:
            f0 = self.forcing.values[0]
            if f0.grid != self.w0.grid or f0.n_comp != self.w0.n_comp:
                raise ValueError("forcing does not match w0")


def _substeps(spacing: float, dt: float) -> int:
    m = spacing / dt
    mi = int(round(m))
    if mi < 1 or abs(m - mi) > 1e-9 * max(m, 1.0):
        raise ValueError(f"dt={dt} does not divide the forcing spacing {spacing}")
    return mi


def duhamel_solve(prob: HeatProblem, dt: float, t_end: float | None = None) -> TrajectorySeries:
    """Exponential integration of the Duhamel formula.

    The linear part is exact; the forcing is reconstructed piecewise
    linearly between samples, so the scheme is exact for piecewise-linear
    forcing and second order otherwise. The result is sampled at the
    forcing instants (or every ``dt`` up to ``t_end`` without forcing).
    """
    g = prob.w0.grid
    e, p1, p2 = scalar_etd(prob.diffusivity * g.k2, dt)
    w = prob.w0.coeffs.copy()
    if prob.forcing is None:
        if t_end is None:
            raise ValueError("t_end required without forcing")
        n = int(round(t_end / dt))
        out = [SpectralField(g, w.copy())]
        for _ in range(n):
            w = e * w
            out.append(SpectralField(g, w.copy()))
        return TrajectorySeries(dt * np.arange(n + 1), out)

    fs = prob.forcing
    out = [SpectralField(g, w.copy())]
    if len(fs) == 1:
        return TrajectorySeries(fs.times, out)
    m = _substeps(fs.dt, dt)
    for i in range(len(fs) - 1):
        fa, fb = fs.values[i].coeffs, fs.values[i + 1].coeffs
        for j in range(m):
            n0 = fa + (fb - fa) * (j / m)
            n1 = fa + (fb - fa) * ((j + 1) / m)
            w = e * w + p1 * n0 + p2 * (n1 - n0)
        out.append(SpectralField(g, w.copy()))
    return TrajectorySeries(fs.times, out)


# ------------------------------------------------------------ maximal operator

def maximal_op(g: TrajectorySeries, rhos=RHO_GRID) -> TrajectorySeries:
    """``Mg(tau) = sup_rho int_tau^T rho e^{-(t - tau) rho} |g(t)| dt``.

    The kernel is integrated exactly against the piecewise-linear
    interpolant of ``|g|``; the sup runs over a dyadic grid of rates.
    """
    vals = np.abs(np.asarray(g.values, dtype=np.float64))
    if len(g) == 1:
        return TrajectorySeries(g.times, np.zeros(1))
    out = _kernels.maximal_scan(np.ascontiguousarray(vals), g.dt,
                                np.ascontiguousarray(rhos, dtype=np.float64))
    return TrajectorySeries(g.times, out)


# ------------------------------------------------------------ parabolic probes

def _zero_forcing(forcing: TrajectorySeries) -> bool:
    return all(not np.any(f.coeffs) for f in forcing.values)


def _forcing_shells(forcing: TrajectorySeries, cut: DyadicCutoffs) -> list:
    m = np.stack([block_norms(f, cut) for f in forcing.values])
    return [float(x) for x in time_norm(m, forcing.dt, 2, axis=0)]


def parabolic_ratio_probe(forcing: TrajectorySeries, sigma_exp: float, r: float, m: float,
                          q: float, nu: float, cut: DyadicCutoffs | None = None,
                          dt: float | None = None) -> EstimateReport:
    """Empirical constant of the maximal-regularity estimate with zero data.

    Compares ``||w||_{L^m B^{sigma+2+2/m}_{2,q}}`` with
    ``||f||_{L^r B^{sigma+2/r}_{2,q}}``.
    """
    if not (1 < r <= m < math.inf):
        raise ValueError(f"need 1 < r <= m < inf, got r={r}, m={m}")
    if not (1 <= q <= m):
        raise ValueError(f"need 1 <= q <= m, got q={q}")
    g = forcing.values[0].grid
    cut = cut or build_cutoffs(g)
    ctx = {"sigma": sigma_exp, "r": r, "m": m, "q": q, "nu": nu, "n": g.n, "dim": g.dim,
           "classical_route_applicable": bool(r <= q <= m),
           "k_min": cut.k_min, "k_top": cut.k_top}
    if _zero_forcing(forcing):
        return make_report("parabolic_ratio", 0.0, 0.0, math.inf, ctx, flags=("trivial",))
    w0 = SpectralField.zeros(g, forcing.values[0].n_comp)
    w = duhamel_solve(HeatProblem(nu, w0, forcing), dt or forcing.dt)
    left = lebesgue_besov_norm(w, m, BesovSpec(sigma_exp + 2 + 2 / m, 2, q), cut)
    right = lebesgue_besov_norm(forcing, r, BesovSpec(sigma_exp + 2 / r, 2, q), cut)
    ctx["forcing_shells"] = _forcing_shells(forcing, cut)
    flags = ("unresolved",) if left == 0 and right == 0 else ()
    return make_report("parabolic_ratio", left, right, math.inf, ctx, flags=flags)


def bracket_parabolic_probe(forcing: TrajectorySeries, sigma_exp: float, c: float, nu: float,
                            cut: DyadicCutoffs | None = None,
                            dt: float | None = None) -> EstimateReport:
    """Compare the split functionals of ``w`` in ``B^{sigma+2}_{2,1}`` and ``f`` in ``B^sigma_{2,1}``."""
    g = forcing.values[0].grid
    cut = cut or build_cutoffs(g)
    ctx = {"sigma": sigma_exp, "c": c, "nu": nu, "n": g.n, "dim": g.dim}
    if _zero_forcing(forcing):
        return make_report("bracket_parabolic", 0.0, 0.0, math.inf, ctx, flags=("trivial",))
    w0 = SpectralField.zeros(g, forcing.values[0].n_comp)
    w = duhamel_solve(HeatProblem(nu, w0, forcing), dt or forcing.dt)
    vf = forcing.scalars(lambda f: besov_norm(f, BesovSpec(sigma_exp, 2, 1), cut))
    vw = w.scalars(lambda f: besov_norm(f, BesovSpec(sigma_exp + 2, 2, 1), cut))
    bf, bw = bracket_functional(vf, c), bracket_functional(vw, c)
    ctx.update({
        "forcing_linear_part": float(time_norm(bf.bar.values, vf.dt, 1)),
        "forcing_square_part": float(time_norm(bf.tilde.values, vf.dt, 2)),
        "solution_linear_part": float(time_norm(bw.bar.values, vw.dt, 1)),
        "solution_square_part": float(time_norm(bw.tilde.values, vw.dt, 2)),
    })
    return make_report("bracket_parabolic", bw.value, bf.value, math.inf, ctx)


# ------------------------------------------------------------ Stokes split

@dataclass(frozen=True)
class StokesDecomposition:
    """``u = u_flat + u_sharp + u_e``.

    ``u_flat`` is the free heat flow of the low part of the data,
    ``u_sharp`` the Stokes flow driven by the convective term and ``u_e``
    the Stokes flow driven by the Lorentz force from zero data.
    """

    u_flat: TrajectorySeries
    u_sharp: TrajectorySeries
    u_e: TrajectorySeries

    @property
    def times(self) -> np.ndarray:
        return self.u_flat.times

    def total(self, i: int) -> SpectralField:
        return self.u_flat.values[i] + self.u_sharp.values[i] + self.u_e.values[i]

    def reconstruction_error(self, u_traj: TrajectorySeries) -> float:
        """Max over samples of the relative L2 mismatch with ``u_traj``."""
        if len(u_traj) != len(self.u_flat) or np.any(np.abs(u_traj.times - self.times) > 1e-12):
            raise ValueError("misaligned trajectories")
        worst = 0.0
        for i, u in enumerate(u_traj.values):
            ref = l2_norm(u)
            err = l2_norm(u - self.total(i))
            worst = max(worst, err / ref if ref > 0 else err)
        return worst


def initial_split(u0: SpectralField, split_mode: str, cut: DyadicCutoffs | None = None):
    """Return ``(flat, sharp)`` initial parts."""
    if split_mode == "twoD":
        return u0.copy(), SpectralField.zeros(u0.grid, u0.n_comp)
    if split_mode == "threeD":
        cut = cut or build_cutoffs(u0.grid)
        low = low_pass(u0, 0, cut)
        return low, u0 - low
    raise ValueError(f"split_mode must be 'threeD' or 'twoD', got {split_mode!r}")


def _mean_free(c: np.ndarray, grid) -> np.ndarray:
    c = c.copy()
    c[(slice(None),) + (0,) * grid.dim] = 0
    return c


def convective_forcing(u: SpectralField, n_trunc: int | None = None) -> SpectralField:
    """``-P((S_n u) . grad u)`` with the mean removed."""
    g = u.grid
    adv = _inv(u.coeffs * truncation_mask(g, n_trunc), g)
    conv = convective_coeffs(adv, _inv(u.coeffs, g), g)
    return SpectralField(g, -_mean_free(leray_coeffs(conv, g), g))


def lorentz_forcing(lorentz: SpectralField) -> SpectralField:
    """``P(j x B)`` with the mean removed."""
    g = lorentz.grid
    return SpectralField(g, _mean_free(leray_coeffs(lorentz.coeffs * g.dealias, g), g))


def stokes_decompose(u_traj: TrajectorySeries, lorentz_traj: TrajectorySeries,
                     u0: SpectralField, split_mode: str, mu: float,
                     n_trunc: int | None = None,
                     cut: DyadicCutoffs | None = None) -> StokesDecomposition:
    """Split a sampled velocity into its three Duhamel parts.

    ``lorentz_traj`` holds the unprojected force ``j x S_n B`` at the same
    instants as ``u_traj``. Each part is integrated with one exponential
    step per sample interval.
    """
    if len(u_traj) != len(lorentz_traj) or np.any(np.abs(u_traj.times - lorentz_traj.times) > 1e-12):
        raise ValueError("misaligned trajectories")
    flat0, sharp0 = initial_split(u0, split_mode, cut)
    conv = u_traj.map(lambda u: convective_forcing(u, n_trunc))
    lor = lorentz_traj.map(lorentz_forcing)
    zero = SpectralField.zeros(u0.grid, u0.n_comp)
    dt = u_traj.dt if len(u_traj) > 1 else 1.0
    none = TrajectorySeries(u_traj.times, [zero] * len(u_traj))
    return StokesDecomposition(
        duhamel_solve(HeatProblem(mu, flat0, none), dt),
        duhamel_solve(HeatProblem(mu, sharp0, conv), dt),
        duhamel_solve(HeatProblem(mu, zero, lor), dt),
    )


def _part_norms(traj: TrajectorySeries, cut: DyadicCutoffs):
    d = traj.values[0].grid.dim
    b = traj.scalars(lambda f: besov_norm(f, BesovSpec(d / 2.0, 2, 1), cut)).values
    l2 = traj.scalars(l2_norm).values
    h1 = traj.scalars(lambda f: sobolev_norm(f, 1.0)).values
    linf = traj.scalars(linf_norm).values if d == 2 else None
    return b, l2, h1, linf


def lemma_bounds_report(dec: StokesDecomposition, E0: float, ledger=None,
                        cut: DyadicCutoffs | None = None) -> list:
    """Left and right sides of the three velocity-part bounds.

    In 3D the parts are measured in ``B^{3/2}_{2,1}``; in 2D in ``L^inf L^2``,
    ``L^2 (L^inf cap H^1)`` and ``L^2 B^1_{2,1}``. Empirical constants only.
    The 3D Lorentz bound needs the ledger channels ``j_L2`` and ``B_H1``.
    """
    g = dec.u_flat.values[0].grid
    cut = cut or build_cutoffs(g)
    dt = dec.u_flat.dt
    ctx = {"dim": g.dim, "n": g.n, "E0": E0, "dt": dt}
    e12 = math.sqrt(max(E0, 0.0))
    fb, fl2, fh1, finf = _part_norms(dec.u_flat, cut)
    sb, sl2, sh1, sinf = _part_norms(dec.u_sharp, cut)
    eb, el2, eh1, einf = _part_norms(dec.u_e, cut)
    inf = math.inf
    reports = []
    if g.dim == 3:
        reports.append(make_report("lemma_flat_L2B", time_norm(fb, dt, 2), e12, inf, ctx))
        reports.append(make_report("lemma_sharp_L1B", time_norm(sb, dt, 1), e12 + E0, inf, ctx))
        if ledger is not None and "B_H1" in ledger.channels:
            bh1 = float(np.max(ledger.channels["B_H1"]))
            reports.append(make_report("lemma_e_L2B", time_norm(eb, dt, 2), e12 * bh1, inf, ctx))
    else:
        reports.append(make_report("lemma_flat_LinfL2", np.max(fl2), e12, inf, ctx))
        reports.append(make_report("lemma_flat_L2LinfH1",
                                   time_norm(finf, dt, 2) + time_norm(fh1, dt, 2), e12, inf, ctx))
        reports.append(make_report("lemma_sharp_LinfL2", np.max(sl2), E0, inf, ctx))
        reports.append(make_report("lemma_sharp_L2B1", time_norm(sb, dt, 2), E0, inf, ctx))
        reports.append(make_report("lemma_e_LinfL2_L2H1",
                                   max(np.max(el2), time_norm(eh1, dt, 2)), e12 + E0, inf, ctx))
    return reports
