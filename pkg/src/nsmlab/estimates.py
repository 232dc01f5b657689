"""Energy budgets, wave functionals, Gronwall bounds and theorem-level checks.

Every check returns an :class:`EstimateReport`. Implicit constants are
never asserted: where an estimate only holds up to an unknown constant the
report carries the empirical constant and ``tolerance_factor = inf``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq

from .dynamics import (PhysParams, PlasmaState, RunConfig, SimulationError, mhd_simulate,
                       simulate)
from .ledger import EnergyLedger
from .littlewood_paley import (BesovSpec, DyadicCutoffs, build_cutoffs, lebesgue_besov_norm,
                               low_pass)
from .reports import EstimateReport, make_report
from .series import TrajectorySeries, cumulative_trapezoid, time_norm
from .spectral import SpectralField, l2_norm, linf_norm, sobolev_norm

__all__ = [
    "GronwallResult", "SweepError", "SweepRow", "c_sweep", "calibrate_smallness",
    "dyadic_energy_identity_check", "energy", "energy_budget_check", "gronwall_bound",
    "log_interp_check", "partition_times", "propagation_constant", "run_checks",
    "running_sup", "smallness_check", "smallest_c_star", "theorem_bound_check",
    "wave_functional",
]


def energy(state: PlasmaState) -> float:
    """``(|u|^2 + |E|^2 + |B|^2) / 2`` in L2."""
    return 0.5 * (l2_norm(state.u) ** 2 + l2_norm(state.E) ** 2 + l2_norm(state.B) ** 2)


def _dt(ledger: EnergyLedger) -> float:
    return float(ledger.meta.get("dt", ledger.dt))


def _E0(ledger: EnergyLedger) -> float:
    return float(ledger.meta.get("E0", ledger.channel("energy")[0]))


def _ctx(ledger: EnergyLedger, **extra) -> dict:
    keys = ("dim", "n", "dt", "seed", "c", "sigma", "mu", "n_trunc", "s")
    ctx = {k: ledger.meta[k] for k in keys if k in ledger.meta}
    ctx.update(extra)
    return ctx


def energy_budget_check(ledger: EnergyLedger, params: PhysParams | None = None,
                        C: float = 10.0, tolerance_factor: float = 1.0) -> EstimateReport:
    """Relative residual of the energy identity at the final sample.

    Uses the in-step ``dissipation`` channel when present, otherwise the
    trapezoid of ``mu |grad u|^2 + |j|^2 / sigma`` over the samples.
    Passes when the residual is at most ``max(1e-6, C dt^2)``.
    """
    if len(ledger) == 0:
        raise ValueError("empty ledger")
    en = ledger.channel("energy")
    if "dissipation" in ledger.channels:
        diss = ledger.channels["dissipation"]
        method = "gauss"
    else:
        mu = params.mu if params else ledger.meta["mu"]
        sigma = params.sigma if params else ledger.meta["sigma"]
        rate = mu * ledger.channel("grad_u_sq") + ledger.channel("j_sq") / sigma
        diss = cumulative_trapezoid(rate, ledger.dt)
        method = "trapezoid"
    e0 = en[0]
    raw = en[-1] - e0 + diss[-1]
    resid = abs(raw) / e0 if e0 > 0 else abs(raw)
    dt = _dt(ledger)
    thresh = max(1e-6, C * dt * dt)
    return make_report("energy_budget", resid, thresh, tolerance_factor,
                       _ctx(ledger, quadrature=method, signed_residual=raw))


def energy_monotone_check(ledger: EnergyLedger, C: float = 10.0,
                          tolerance_factor: float = 1.0) -> EstimateReport:
    """Largest relative energy increase between samples against ``C dt^2``."""
    en = ledger.channel("energy")
    e0 = en[0] if en[0] > 0 else 1.0
    rise = float(np.max(np.diff(en), initial=0.0)) / e0
    dt = _dt(ledger)
    return make_report("energy_monotone", max(rise, 0.0), C * dt * dt, tolerance_factor, _ctx(ledger))


def divergence_check(ledger: EnergyLedger, tol: float = 1e-10,
                     tolerance_factor: float = 1.0) -> EstimateReport:
    worst = max(float(np.max(ledger.channel(k))) for k in ("div_u", "div_B") if k in ledger.channels)
    return make_report("divergence", worst, tol, tolerance_factor, _ctx(ledger))


def running_sup(values) -> np.ndarray:
    return np.maximum.accumulate(np.asarray(values, dtype=np.float64))


def wave_functional(ledger: EnergyLedger, s: float | None = None, kind: str = "F",
                    sigma: float | None = None) -> TrajectorySeries:
    """``F(t) = (|E|_{H^s}^2 + |B|_{H^s}^2 + sigma int |cE|_{H^s}^2) / 2``.

    ``kind="G"`` returns the running supremum of ``F``; ``kind="G2d"`` the
    running supremum of ``|E|_{H^s}^2 + |B|_{H^s}^2``.
    """
    ledger.require("E_Hs", "B_Hs")
    if s is not None and "s" in ledger.meta and abs(ledger.meta["s"] - s) > 1e-12:
        raise KeyError(f"missing channel: ledger carries H^{ledger.meta['s']} norms, not H^{s}")
    sig = sigma if sigma is not None else ledger.meta.get("sigma", 1.0)
    eb = ledger.channel("E_Hs") ** 2 + ledger.channel("B_Hs") ** 2
    if kind == "G2d":
        return TrajectorySeries(ledger.times, running_sup(eb))
    if "cE_Hs_sq_int" in ledger.channels:
        integral = ledger.channels["cE_Hs_sq_int"]
    else:
        integral = cumulative_trapezoid(ledger.channel("cE_Hs") ** 2, ledger.dt)
    F = 0.5 * (eb + sig * integral)
    if kind == "F":
        return TrajectorySeries(ledger.times, F)
    if kind == "G":
        return TrajectorySeries(ledger.times, running_sup(F))
    raise ValueError(f"unknown functional kind {kind!r}")


def propagation_constant(ledger: EnergyLedger, c: float | None = None,
                         sigma: float | None = None) -> EstimateReport:
    """Smallest constant in ``F(t) <= F0 exp(C sigma int (c |u1|_X + |u2|_X^2))``.

    ``X`` is ``L^inf cap B^{d/2}_{2,inf}`` (norms summed). The split is
    ``u1 = u_sharp + e1`` and ``u2 = u_flat + e2`` where ``|u_e|_X`` is split
    pointwise in time by the minimizer of ``c |e1| + |e2|^2``. Needs the
    decomposition channels of a tracked run.
    """
    ledger.require("flat_X", "sharp_X", "e_X")
    c = c if c is not None else ledger.meta["c"]
    sig = sigma if sigma is not None else ledger.meta["sigma"]
    F = wave_functional(ledger, sigma=sig).values
    F0 = F[0]
    v = ledger.channel("e_X")
    e2 = np.minimum(v, 0.5 * c)
    e1 = v - e2
    u1 = ledger.channel("sharp_X") + e1
    u2 = ledger.channel("flat_X") + e2
    I = sig * cumulative_trapezoid(c * u1 + u2 ** 2, ledger.dt)
    ctx = _ctx(ledger)
    if F0 <= 0:
        return make_report("hs_propagation", 0.0, 0.0, math.inf, ctx, flags=("degenerate",))
    with np.errstate(divide="ignore", invalid="ignore"):
        growth = np.log(F / F0)
        cand = np.where(I > 0, growth / np.where(I > 0, I, 1.0), 0.0)
    C_hat = max(float(np.max(cand[1:], initial=0.0)), 0.0)
    bound = F0 * np.exp(C_hat * I)
    i = int(np.argmax(F / bound))
    ctx.update({"C_hat": C_hat, "max_growth": float(np.max(growth)), "I_final": float(I[-1])})
    ok = bool(np.all(F <= bound * (1 + 1e-12)))
    return EstimateReport("hs_propagation", float(F[i]), float(bound[i]), C_hat, ok, 1.0, ctx)


def dyadic_energy_identity_check(maxwell_run, k: int, C: float = 10.0,
                                 tolerance_factor: float = 1.0) -> EstimateReport:
    """Per-shell energy identity of the frozen-velocity Maxwell system.

    The residual ``|e_k(t) + damp_k(t) - e_k(0) - src_k(t)|`` is maximized
    over samples and normalized by the initial electromagnetic energy.
    """
    cut: DyadicCutoffs = maxwell_run.cut
    shells = list(cut.shells)
    if k not in shells:
        raise ValueError(f"shell {k} outside resolved shells {shells[0]}..{shells[-1]}")
    i = shells.index(k)
    L = maxwell_run.ledger
    eb, bd, bs = (L.blocks[n][:, i] for n in ("block_energy", "block_damping", "block_source"))
    total0 = L.channel("energy")[0]
    resid = float(np.max(np.abs(eb + bd - eb[0] - bs)))
    norm = resid / total0 if total0 > 0 else resid
    dt = float(L.meta["dt"])
    return make_report(f"block_identity_k{k}", norm, max(1e-6, C * dt * dt), tolerance_factor,
                       _ctx(L, k=k, block_energy0=float(eb[0])))


# ---------------------------------------------------------------- Gronwall

@dataclass(frozen=True)
class GronwallResult:
    """Bound curve ``y0 / (1 - y0 int_0^t a)``; infinite where void."""

    bound: TrajectorySeries
    void: bool
    report: EstimateReport


def gronwall_bound(y0: float, a: TrajectorySeries) -> GronwallResult:
    vals = np.asarray(a.values, dtype=np.float64)
    if np.any(vals < 0):
        raise ValueError("gronwall_bound needs a >= 0")
    A = cumulative_trapezoid(vals, a.dt)
    denom = 1.0 - y0 * A
    void = bool(np.any(denom <= 0))
    with np.errstate(divide="ignore"):
        bound = np.where(denom > 0, y0 / np.where(denom > 0, denom, 1.0), np.inf)
    rep = make_report("gronwall", y0 * float(A[-1]), 1.0, 1.0,
                      {"y0": y0, "int_a": float(A[-1])},
                      flags=("void",) if void else (), passed=not void)
    return GronwallResult(TrajectorySeries(a.times, bound), void, rep)


# ---------------------------------------------------------------- log interpolation

def log_interp_check(u_traj: TrajectorySeries, side: str, s: float | None, t0: float,
                     t: float, cut: DyadicCutoffs | None = None) -> EstimateReport:
    """Logarithmic interpolation bound for the high or low part of ``h``.

    ``high``: ``|(Id - S0) h|_{L^2 L^inf}`` against
    ``|h|_{L^2 H^{d/2}} log^{1/2}(e + |h|_{L^2 B^s_{2,1}} / |h|_{L^2 H^{d/2}})``, ``s > d/2``.
    ``low``: ``|S0 h|_{L^2 L^inf}`` against the same with ``|h|_{L^2 L^2}`` in the log.
    The shell count ``N`` that balances the two halves of the proof is reported.
    """
    if side not in ("high", "low"):
        raise ValueError("side must be 'high' or 'low'")
    w = u_traj.window(t0, t)
    g = w.values[0].grid
    d = g.dim
    cut = cut or build_cutoffs(g)
    if side == "high" and (s is None or s <= d / 2):
        raise ValueError("high-frequency bound needs s > d/2")
    dt = w.dt
    A = float(time_norm(w.scalars(lambda f: sobolev_norm(f, d / 2)).values, dt, 2))
    ctx = {"side": side, "s": s, "t0": t0, "t": t, "n": g.n, "dim": d}
    if A <= 1e-14:
        return make_report(f"log_interp_{side}", 0.0, 0.0, math.inf, ctx, flags=("degenerate",))
    if side == "high":
        part = w.scalars(lambda f: linf_norm(f - low_pass(f, 0, cut)))
        num = lebesgue_besov_norm(w, 2, BesovSpec(s, 2, 1), cut)
        N = math.log(2 ** (s - d / 2) + num / A) / ((s - d / 2) * math.log(2))
    else:
        part = w.scalars(lambda f: linf_norm(low_pass(f, 0, cut)))
        num = float(time_norm(w.scalars(l2_norm).values, dt, 2))
        N = math.log(2 ** (d / 2) + num / A) / ((d / 2) * math.log(2))
    left = float(time_norm(part.values, dt, 2))
    right = A * math.sqrt(math.log(math.e + num / A))
    ctx.update({"N_opt": N, "log_argument": num / A})
    return make_report(f"log_interp_{side}", left, right, math.inf, ctx)


# ---------------------------------------------------------------- smallness

def _exp(x: float) -> float:
    return math.exp(x) if x < 700.0 else math.inf


def _ems_norm(E0: SpectralField, B0: SpectralField, s: float) -> float:
    return math.hypot(sobolev_norm(E0, s), sobolev_norm(B0, s))


def smallness_check(u0: SpectralField, E0: SpectralField, B0: SpectralField, s: float,
                    params: PhysParams, C_star: float = 1.0) -> EstimateReport:
    """Smallness condition on ``(E0, B0)`` in ``H^s`` relative to the energy.

    Plain form ``|(E0,B0)|_{H^s} C ep^{s-1/2} e^{C ep} <= 1`` with
    ``ep`` the initial energy; the light-speed-uniform variant replaces the
    exponent by ``C (c (ep^{1/2} + ep) + ep)``. Both are stored; the pass
    flag follows the plain form.
    """
    ep = 0.5 * (l2_norm(u0) ** 2 + l2_norm(E0) ** 2 + l2_norm(B0) ** 2)
    norm = _ems_norm(E0, B0, s)
    c = params.c
    if norm == 0:
        plain = uniform = 0.0
    else:
        pw = ep ** (s - 0.5) if ep > 0 else (0.0 if s > 0.5 else (1.0 if s == 0.5 else math.inf))
        plain = norm * C_star * pw * _exp(C_star * ep)
        uniform = norm * C_star * pw * _exp(C_star * (c * (math.sqrt(ep) + ep) + ep))
    ctx = {"E0": ep, "ems_norm": norm, "s": s, "C_star": C_star, "c": c,
           "plain": plain, "uniform_in_c": uniform, "uniform_passed": uniform <= 1.0}
    return make_report("smallness", plain, 1.0, 1.0, ctx)


def calibrate_smallness(u0: SpectralField, E0: SpectralField, B0: SpectralField, s: float,
                        params: PhysParams, C_star: float = 1.0, rel_tol: float = 1e-3,
                        hi: float = 1e6) -> float:
    """Smallest factor ``lam`` for which ``(lam E0, lam B0)`` fails the plain condition."""
    def fails(lam):
        return not smallness_check(u0, E0 * lam, B0 * lam, s, params, C_star).passed
    lo = 0.0
    if not fails(hi):
        return math.inf
    top = hi
    while top - lo > rel_tol * top:
        mid = 0.5 * (lo + top)
        if fails(mid):
            top = mid
        else:
            lo = mid
    return top


# ---------------------------------------------------------------- theorem checks

def smallest_c_star(target: float, a: float) -> float:
    """Smallest ``C >= 0`` with ``C 2^{C a} >= target``."""
    if target <= 0:
        return 0.0
    f = lambda C: C * 2.0 ** (C * a) - target
    hi = max(target, 1.0)
    while f(hi) < 0:
        hi *= 2
    return brentq(f, 0.0, hi, xtol=1e-14, rtol=1e-12)


def theorem_bound_check(ledger: EnergyLedger, which: str, C_star: float = 1.0,
                        tolerance_factor: float | None = None, sigma: float | None = None,
                        c: float | None = None) -> EstimateReport:
    """Theorem-level bounds assembled from ledger channels.

    ``thm1_G``: running sup ``G`` of ``F`` against
    ``C G0 exp(C (c (ep^{1/2} + ep) + ep))``.
    ``thm2d_global``: ``ep (|E|^2 + |B|^2)_{H^s}(t)`` against
    ``(e + ep (|E0|^2 + |B0|^2)_{H^s} + t/(1 + ep + ep^2))^{C 2^{C (ep + ep^2)}}``;
    the smallest working ``C`` is reported in the context.
    ``thm2d_velocity``: ``|u|_{L^2(0,t; L^inf)}^2`` against
    ``(ep + ep^2) log(e + t + sup |B|_{H^s}^2 / (1 + ep))``; the constant is
    implicit, so the default tolerance factor there is infinite.
    """
    if tolerance_factor is None:
        tolerance_factor = math.inf if which == "thm2d_velocity" else 1.0
    ep = _E0(ledger)
    t = ledger.times
    ctx = _ctx(ledger, which=which, C_star=C_star, E0=ep)
    if which == "thm1_G":
        c = c if c is not None else ledger.meta["c"]
        G = wave_functional(ledger, kind="G", sigma=sigma).values
        G0 = 0.5 * (ledger.channel("E_Hs")[0] ** 2 + ledger.channel("B_Hs")[0] ** 2)
        env = C_star * G0 * math.exp(C_star * (c * (math.sqrt(ep) + ep) + ep))
        ctx.update({"G0": G0, "envelope": env, "envelope_le_1": env <= 1.0})
        return make_report("thm1_G", float(np.max(G)), env, tolerance_factor, ctx)
    if which == "thm2d_global":
        eb = ledger.channel("E_Hs") ** 2 + ledger.channel("B_Hs") ** 2
        left = ep * eb
        a = ep + ep * ep
        base = math.e + ep * eb[0] + t / (1.0 + a)
        with np.errstate(over="ignore"):
            right = np.exp(C_star * 2.0 ** (C_star * a) * np.log(base))
        need = max(smallest_c_star(math.log(L) / math.log(b) if L > 1 else 0.0, a)
                   for L, b in zip(left, base))
        i = int(np.argmax(left / right))
        ctx.update({"c_star_min": need, "t_worst": float(t[i])})
        return make_report("thm2d_global", float(left[i]), float(right[i]), tolerance_factor, ctx)
    if which == "thm2d_velocity":
        left = cumulative_trapezoid(ledger.channel("u_Linf") ** 2, ledger.dt)
        bsup = running_sup(ledger.channel("B_Hs") ** 2)
        right = (ep + ep * ep) * np.log(math.e + t + bsup / (1.0 + ep))
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(right > 0, left / np.where(right > 0, right, 1.0), 0.0)
        i = int(np.argmax(r))
        rep = make_report("thm2d_velocity", float(left[i]), float(right[i]), tolerance_factor, ctx)
        return rep
    raise ValueError(f"unknown theorem check {which!r}")


def partition_times(ledger: EnergyLedger, C2: float) -> np.ndarray:
    """Sample instants splitting ``[0, T]`` so that ``C2 int |u_e|_{H^1}^2 <= 1/2`` per piece."""
    ledger.require("e_H1")
    cum = C2 * cumulative_trapezoid(ledger.channel("e_H1") ** 2, ledger.dt)
    cuts = [0]
    base = 0.0
    for i in range(1, len(cum)):
        if cum[i] - base > 0.5:
            cuts.append(i - 1 if i - 1 > cuts[-1] else i)
            base = cum[cuts[-1]]
    if cuts[-1] != len(cum) - 1:
        cuts.append(len(cum) - 1)
    return ledger.times[cuts]


# ---------------------------------------------------------------- MHD limit

@dataclass(frozen=True)
class SweepRow:
    c: float
    dist_B: float
    dist_u: float
    reduction_B: float
    tolerance: float


class SweepError(RuntimeError):
    def __init__(self, message, rows):
        super().__init__(message)
        self.rows = rows


def _sup_distance(a: TrajectorySeries, b: TrajectorySeries, attr: str) -> float:
    return max(l2_norm(getattr(x, attr) - getattr(y, attr)) for x, y in zip(a.values, b.values))


def c_sweep(base_config: RunConfig, c_values) -> list:
    """Distance of NSM runs to the MHD reference for increasing light speed.

    Every run shares ``(u0, E0, B0)``, grid, ``dt`` and sampling. Returns
    one row per ``c`` with ``sup_t |B^c - B^MHD|`` and ``sup_t |u^c - u^MHD|``.
    """
    ref = mhd_simulate(base_config).states
    rows = []
    prev = None
    for c in c_values:
        try:
            cfg = replace(base_config, c=float(c), track_decomposition=False)
            states = simulate(cfg).states
        except (ValueError, SimulationError) as exc:
            raise SweepError(f"run at c={c} failed: {exc}", rows) from exc
        dB = _sup_distance(states, ref, "B")
        du = _sup_distance(states, ref, "u")
        red = prev / dB if prev is not None and dB > 0 else math.nan
        rows.append(SweepRow(float(c), dB, du, red, base_config.dt ** 2))
        prev = dB
    return rows


# ---------------------------------------------------------------- registry

CHECKS = ("energy_budget", "energy_monotone", "divergence", "thm1_G", "thm2d_global",
          "thm2d_velocity", "hs_propagation")


def run_checks(ledger: EnergyLedger, checks: dict, C_star: float = 1.0) -> list:
    """Evaluate named checks with their tolerance factors."""
    out = []
    for name, factor in checks.items():
        if name == "energy_budget":
            out.append(energy_budget_check(ledger, tolerance_factor=factor))
        elif name == "energy_monotone":
            out.append(energy_monotone_check(ledger, tolerance_factor=factor))
        elif name == "divergence":
            out.append(divergence_check(ledger, tolerance_factor=factor))
        elif name in ("thm1_G", "thm2d_global", "thm2d_velocity"):
            out.append(theorem_bound_check(ledger, name, C_star, tolerance_factor=factor))
        elif name == "hs_propagation":
            out.append(propagation_constant(ledger))
        else:
            raise ValueError(f"unknown check {name!r}")
    return out
