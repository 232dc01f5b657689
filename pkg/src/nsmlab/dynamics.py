"""Time integration of the truncated Navier-Stokes-Maxwell system.

The unknowns ``(u, E, B)`` are advanced with the second-order exponential
time-differencing scheme (Cox-Matthews ETD2RK). The linear part is
propagated exactly mode by mode:

* viscosity ``mu Laplacian`` on ``u``;
* the Maxwell block ``E' = c curl B - sigma c^2 E``, ``B' = -c curl E``.
  With ``K v = i khat x v`` and ``F = K E`` the transverse pair obeys
  ``(F, B)' = [[-gamma, omega], [-omega, 0]] (F, B)``, ``gamma = sigma c^2``,
  ``omega = c |k|``; the longitudinal part of ``E`` (and its mean) is
  damped at rate ``gamma``.

Nonlinear terms, with ``S_n`` the sharp projector on ``|k| <= 2^n``::

    N_u = P(-(S_n u) . grad u + j x S_n B),   j = sigma (c E + u x S_n B)
    N_E = -sigma c (u x S_n B)

All products are dealiased, so the discrete energy identity
``d/dt energy = -mu |grad u|^2 - |j|^2 / sigma`` holds exactly in time-continuous form.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .littlewood_paley import DyadicCutoffs, block_norms, build_cutoffs
from .ledger import EnergyLedger, LedgerRecorder
from .propagators import block_etd, dense_coefficients_block, dense_coefficients_scalar, scalar_etd
from .series import TrajectorySeries
from .spectral import (TWO_PI, Grid, SpectralField, _fwd, _inv, convective_coeffs, cross_physical,
                       leray_coeffs, make_grid, truncation_mask)

GAUSS_NODES = (0.5 - 0.5 / math.sqrt(3.0), 0.5 + 0.5 / math.sqrt(3.0))


class SimulationError(RuntimeError):
    """A step produced non-finite or runaway values."""

    def __init__(self, t: float, message: str):
        super().__init__(f"t={t:.6g}: {message}")
        self.t = t


@dataclass(frozen=True)
class PhysParams:
    mu: float
    sigma: float
    c: float

    def __post_init__(self):
        for name in ("mu", "sigma", "c"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive and finite, got {v}")


@dataclass(frozen=True, eq=False)
class PlasmaState:
    t: float
    u: SpectralField
    E: SpectralField
    B: SpectralField
    params: PhysParams

    @property
    def grid(self) -> Grid:
        return self.u.grid


@dataclass(frozen=True, eq=False)
class MhdState:
    t: float
    u: SpectralField
    B: SpectralField


@dataclass
class RunConfig:
    """Everything needed to reproduce one run.

    ``checks`` maps report names to tolerance factors. ``n_trunc = None``
    disables the Galerkin projector (only dealiasing remains).
    """

    dim: int = 2
    n: int = 64
    length: float = TWO_PI
    mu: float = 0.05
    sigma: float = 1.0
    c: float = 1.0
    dt: float = 1e-3
    t_end: float = 1.0
    n_trunc: int | None = None
    sample_stride: int = 10
    seed: int = 0
    recipe: str = "random"
    energy_target: float = 1.0
    ems_norm_target: float = 0.1
    s_exponent: float = 0.5
    spectrum_slope: float = 3.0
    spectrum_cutoff: float = 4.0
    em_split: float = 0.5
    c_star: float = 1.0
    track_decomposition: bool = False
    allow_large: bool = False
    checks: dict = field(default_factory=dict)

    def __post_init__(self):
        make_grid(self.dim, self.n, self.length)
        PhysParams(self.mu, self.sigma, self.c)
        if self.dim == 3 and self.n > 32 and not self.allow_large:
            raise ValueError("3D grids above 32^3 need allow_large = true")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.t_end < 0:
            raise ValueError("t_end must be nonnegative")
        if self.sample_stride < 1:
            raise ValueError("sample_stride must be >= 1")
        if self.n_trunc is not None and self.n_trunc < 0:
            raise ValueError("n_trunc must be nonnegative")
        for name in ("energy_target", "ems_norm_target", "spectrum_cutoff", "c_star"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if not 0 <= self.em_split <= 1:
            raise ValueError("em_split must lie in [0, 1]")
        limit = 0.5 * (self.length / self.n) / max(1.0, self.c)
        if self.dt > limit * (1 + 1e-12):
            raise ValueError(f"dt={self.dt} violates the CFL guard dt <= {limit:.6g}")
        steps = self.t_end / self.dt
        if abs(steps - round(steps)) > 1e-6 * max(1.0, steps):
            raise ValueError("t_end must be an integer multiple of dt")
        if round(steps) % self.sample_stride:
            raise ValueError("number of steps must be a multiple of sample_stride")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    @property
    def grid(self) -> Grid:
        return make_grid(self.dim, self.n, self.length)

    @property
    def params(self) -> PhysParams:
        return PhysParams(self.mu, self.sigma, self.c)

    def context(self) -> dict:
        return {"dim": self.dim, "n": self.n, "dt": self.dt, "t_end": self.t_end, "seed": self.seed,
                "mu": self.mu, "sigma": self.sigma, "c": self.c, "n_trunc": self.n_trunc,
                "s": self.s_exponent}


# ---------------------------------------------------------------- linear parts

def _rot(kh: np.ndarray, v: np.ndarray) -> np.ndarray:
    """``i khat x v`` per mode."""
    out = np.empty_like(v)
    out[0] = 1j * (kh[1] * v[2] - kh[2] * v[1])
    out[1] = 1j * (kh[2] * v[0] - kh[0] * v[2])
    out[2] = 1j * (kh[0] * v[1] - kh[1] * v[0])
    return out


def _flat(x):
    return np.ascontiguousarray(x).reshape(x.shape[0], -1)


class ScalarPropagator:
    """Exact propagator of ``w' = -rate w + f`` over one (sub)step."""

    def __init__(self, rate: np.ndarray, h: float, s: float | None = None):
        if s is None:
            e, p1, p2 = scalar_etd(rate, h)
        else:
            e, p1, p2 = dense_coefficients_scalar(rate, h, s)
        self.shape = rate.shape
        self.e, self.p1, self.p2 = (np.ascontiguousarray(a.ravel()) for a in (e, p1, p2))

    def stage(self, z, n0, n1=None):
        out = _kernels.etd_combine(self.e, self.p1, self.p2, _flat(z), _flat(n0),
                                   None if n1 is None else _flat(n1))
        return out.reshape(z.shape)


class MaxwellPropagator:
    """Exact propagator of the linear damped Maxwell block with forcing on ``E``."""

    def __init__(self, grid: Grid, params: PhysParams, h: float, s: float | None = None):
        gamma = params.sigma * params.c ** 2
        vals, inv = np.unique(grid.k2.ravel(), return_inverse=True)
        om = params.c * np.sqrt(vals)
        mats = np.zeros((vals.size, 2, 2))
        mats[:, 0, 0] = -gamma
        mats[:, 0, 1] = om
        mats[:, 1, 0] = -om
        if s is None:
            coefs = block_etd(mats, h)
            par = scalar_etd(np.array(gamma), h)
        else:
            coefs = dense_coefficients_block(mats, h, s)
            par = dense_coefficients_scalar(np.array(gamma), h, s)
        shape = grid.shape
        self.m = [[[c[inv, i, j].reshape(shape) for j in range(2)] for i in range(2)] for c in coefs]
        self.par = [float(p) for p in par]
        self.kh = grid.khat

    def _split(self, v):
        f = _rot(self.kh, v)
        return f, v - _rot(self.kh, f)

    def stage(self, E, B, g0, g1=None):
        (e, p1, p2), (ep, pp1, pp2) = self.m, self.par
        F, Ep = self._split(E)
        gf0, gp0 = self._split(g0)
        Fn = e[0][0] * F + e[0][1] * B + p1[0][0] * gf0
        Bn = e[1][0] * F + e[1][1] * B + p1[1][0] * gf0
        Epn = ep * Ep + pp1 * gp0
        if g1 is not None:
            gf1, gp1 = self._split(g1)
            Fn += p2[0][0] * (gf1 - gf0)
            Bn += p2[1][0] * (gf1 - gf0)
            Epn += pp2 * (gp1 - gp0)
        return Epn + _rot(self.kh, Fn), Bn


# ---------------------------------------------------------------- nonlinear terms

def _mean_free(c: np.ndarray, dim: int) -> np.ndarray:
    c[(slice(None),) + (0,) * dim] = 0
    return c


@dataclass
class Forces:
    conv: np.ndarray      # -P((S_n u) . grad u)
    lor: np.ndarray       # P(j x S_n B)
    NE: np.ndarray        # -sigma c (u x S_n B)
    j: np.ndarray
    u_x: np.ndarray
    lorentz_raw: np.ndarray | None = None

    @property
    def Nu(self):
        return self.conv + self.lor


class NSMSystem:
    """Right-hand side and ETD2RK stepper for one grid, parameter set and step size."""

    def __init__(self, grid: Grid, params: PhysParams, dt: float, n_trunc: int | None = None,
                 nonlinear: bool = True, quadrature: bool = False):
        self.grid, self.params, self.dt, self.n_trunc = grid, params, dt, n_trunc
        self.nonlinear = nonlinear
        self.trunc = (truncation_mask(grid, n_trunc) & grid.dealias).astype(np.float64)
        self.truncated = n_trunc is not None
        self.visc = ScalarPropagator(params.mu * grid.k2, dt)
        self.maxwell = MaxwellPropagator(grid, params, dt)
        self.nodes = []
        if quadrature:
            for x in GAUSS_NODES:
                s = x * dt
                self.nodes.append((ScalarPropagator(params.mu * grid.k2, dt, s),
                                   MaxwellPropagator(grid, params, dt, s)))

    # -- right-hand side
    def motional(self, u_x, B):
        """Dealiased ``u x S_n B`` from physical ``u``."""
        g = self.grid
        bs_x = _inv(B * self.trunc, g)
        return _fwd(cross_physical(u_x, bs_x), g) * g.dealias, bs_x

    def forces(self, u, E, B, keep_lorentz=False) -> Forces:
        g, p = self.grid, self.params
        u_x = _inv(u, g)
        if not self.nonlinear:
            z = np.zeros_like(u)
            return Forces(z, z, z, p.sigma * p.c * E, u_x, z if keep_lorentz else None)
        X, bs_x = self.motional(u_x, B)
        j = p.sigma * (p.c * E + X)
        raw = _fwd(cross_physical(_inv(j, g), bs_x), g) * g.dealias
        us_x = _inv(u * self.trunc, g) if self.truncated else u_x
        conv = convective_coeffs(us_x, u_x, g)
        return Forces(-_mean_free(leray_coeffs(conv, g), g.dim),
                      _mean_free(leray_coeffs(raw, g), g.dim),
                      -p.sigma * p.c * X, j, u_x, raw if keep_lorentz else None)

    def rhs(self, u, E, B):
        """Full tendencies ``(du, dE, dB)`` including the linear terms."""
        g, p = self.grid, self.params
        f = self.forces(u, E, B)
        curl_B = 1j * np.cross(g.k, B, axis=0)
        curl_E = 1j * np.cross(g.k, E, axis=0)
        du = -p.mu * g.k2 * u + f.Nu
        dE = p.c * curl_B - p.sigma * p.c ** 2 * E + f.NE
        dB = -p.c * curl_E
        return du, dE, dB

    # -- stepping
    def step(self, u, E, B, f0: Forces | None = None, keep_lorentz=False):
        """One ETD2RK step; returns the new fields and both stage forces."""
        f0 = f0 or self.forces(u, E, B, keep_lorentz)
        nu0 = f0.Nu
        ua = self.visc.stage(u, nu0)
        Ea, Ba = self.maxwell.stage(E, B, f0.NE)
        fa = self.forces(ua, Ea, Ba, keep_lorentz)
        u1 = self.visc.stage(u, nu0, fa.Nu)
        E1, B1 = self.maxwell.stage(E, B, f0.NE, fa.NE)
        return u1, E1, B1, f0, fa

    def node_states(self, u, E, B, f0: Forces, fa: Forces):
        """States at the in-step Gauss nodes from the dense output of the step."""
        out = []
        for visc, mx in self.nodes:
            us = visc.stage(u, f0.Nu, fa.Nu)
            Es, Bs = mx.stage(E, B, f0.NE, fa.NE)
            out.append((us, Es, Bs))
        return out


def nsm_rhs(state: PlasmaState, n_trunc: int | None = None):
    """Tendencies ``(du, dE, dB)`` of the truncated system as fields."""
    sys_ = NSMSystem(state.grid, state.params, 1.0, n_trunc)
    du, dE, dB = sys_.rhs(state.u.coeffs, state.E.coeffs, state.B.coeffs)
    g = state.grid
    return SpectralField(g, du), SpectralField(g, dE), SpectralField(g, dB)


def ohm_current(state: PlasmaState, n_trunc: int | None = None) -> SpectralField:
    """``j = sigma (c E + u x S_n B)`` (dealiased)."""
    sys_ = NSMSystem(state.grid, state.params, 1.0, n_trunc)
    X, _ = sys_.motional(_inv(state.u.coeffs, state.grid), state.B.coeffs)
    p = state.params
    return SpectralField(state.grid, p.sigma * (p.c * state.E.coeffs + X))


_SYSTEM_CACHE: dict = {}


def _system(grid, params, dt, n_trunc, nonlinear=True, quadrature=False):
    key = (grid, params, float(dt), n_trunc, nonlinear, quadrature)
    if key not in _SYSTEM_CACHE:
        if len(_SYSTEM_CACHE) > 16:
            _SYSTEM_CACHE.clear()
        _SYSTEM_CACHE[key] = NSMSystem(grid, params, dt, n_trunc, nonlinear, quadrature)
    return _SYSTEM_CACHE[key]


def step(state: PlasmaState, dt: float, n_trunc: int | None = None,
         nonlinear: bool = True) -> PlasmaState:
    """Advance a state by one ETD2RK step."""
    g, p = state.grid, state.params
    limit = 0.5 * g.spacing / max(1.0, p.c)
    if dt > limit * (1 + 1e-12):
        raise ValueError(f"dt={dt} violates the CFL guard dt <= {limit:.6g}")
    sys_ = _system(g, p, dt, n_trunc, nonlinear)
    u1, E1, B1, _, _ = sys_.step(state.u.coeffs, state.E.coeffs, state.B.coeffs)
    _check_finite(state.t + dt, u1, E1, B1)
    return PlasmaState(state.t + dt, SpectralField(g, u1), SpectralField(g, E1),
                       SpectralField(g, B1), p)


def _check_finite(t, *arrays, limit=None):
    total = sum(float(np.vdot(a, a).real) for a in arrays)
    if not np.isfinite(total):
        raise SimulationError(t, "non-finite field values")
    if limit is not None and total > limit:
        raise SimulationError(t, f"runaway growth (sum |coeff|^2 = {total:.3g})")


# ---------------------------------------------------------------- diagnostics

def _sq(grid, c):
    return grid.volume * float(np.sum(c.real ** 2 + c.imag ** 2))


def _hs_sq(grid, c, s):
    w = np.where(grid.k2 > 0, grid.k2, 1.0) ** s * (grid.k2 > 0)
    return grid.volume * float(np.sum(w * (c.real ** 2 + c.imag ** 2)))


def _linf(x):
    return float(np.sqrt(np.max(np.sum(x ** 2, axis=0))))


def _maxdiv(grid, c):
    return float(np.max(np.abs(np.sum(grid.k * c, axis=0)), initial=0.0))


def velocity_norms(grid, cut, c, x=None, prefix="u") -> dict:
    """L2, H1, L^inf and critical Besov norms of a velocity-like field."""
    x = _inv(c, grid) if x is None else x
    bn = block_norms(SpectralField(grid, c), cut)
    w = 2.0 ** (cut.shells * grid.dim / 2.0)
    linf = _linf(x)
    b2inf = float(np.max(w * bn, initial=0.0))
    return {f"{prefix}_L2": math.sqrt(_sq(grid, c)), f"{prefix}_H1": math.sqrt(_hs_sq(grid, c, 1.0)),
            f"{prefix}_Linf": linf, f"{prefix}_B21": float(np.sum(w * bn)),
            f"{prefix}_B2inf": b2inf, f"{prefix}_X": linf + b2inf}


def sample_channels(grid, params, cut, s, u, E, B, j, u_x, cum) -> dict:
    ke, ee, me = 0.5 * _sq(grid, u), 0.5 * _sq(grid, E), 0.5 * _sq(grid, B)
    gu, jj = _hs_sq(grid, u, 1.0), _sq(grid, j)
    vn = velocity_norms(grid, cut, u, u_x)
    e_hs, b_hs = math.sqrt(_hs_sq(grid, E, s)), math.sqrt(_hs_sq(grid, B, s))
    mean = E[(slice(None),) + (0,) * grid.dim]
    return {
        "energy": ke + ee + me, "kinetic": ke, "electric": ee, "magnetic": me,
        "grad_u_sq": gu, "j_sq": jj, "dissipation": cum["dissipation"],
        "u_L2": vn["u_L2"], "u_H1": math.sqrt(gu), "u_Linf": vn["u_Linf"],
        "u_B21": vn["u_B21"], "u_B2inf": vn["u_B2inf"],
        "E_Hs": e_hs, "B_Hs": b_hs, "cE_Hs": params.c * e_hs,
        "cE_Hs_sq_int": cum["cE_Hs_sq_int"],
        "B_H1": math.sqrt(_hs_sq(grid, B, 1.0)), "j_L2": math.sqrt(jj),
        "div_u": _maxdiv(grid, u), "div_B": _maxdiv(grid, B),
        "E_mean": float(np.sqrt(np.sum(np.abs(mean) ** 2))),
    }


# ---------------------------------------------------------------- driver

@dataclass
class RunResult:
    """Output of :func:`simulate`; unpacks as ``(states, ledger)``."""

    states: TrajectorySeries | None
    ledger: EnergyLedger
    decomposition: object = None
    lorentz: TrajectorySeries | None = None
    velocity: TrajectorySeries | None = None

    def __iter__(self):
        return iter((self.states, self.ledger))


def initial_state(config: RunConfig) -> PlasmaState:
    """Initial data from the recipe, projected by ``S_n`` and dealiased."""
    from .initial import initial_fields
    g = config.grid
    u, E, B = initial_fields(g, config.recipe, config.seed, config.energy_target,
                             config.ems_norm_target, config.s_exponent, config.spectrum_slope,
                             config.spectrum_cutoff, config.em_split)
    mask = truncation_mask(g, config.n_trunc) & g.dealias
    return PlasmaState(0.0, SpectralField(g, u.coeffs * mask), SpectralField(g, E.coeffs * mask),
                       SpectralField(g, B.coeffs * mask), config.params)


def _run_meta(config: RunConfig, E0: float) -> dict:
    meta = config.context()
    meta.update({"stride": config.sample_stride, "recipe": config.recipe, "E0": E0,
                 "backend": _kernels.BACKEND, "length": config.length})
    return meta


def simulate(config: RunConfig, *, initial: PlasmaState | None = None, store_states: bool = True,
             record_lorentz: bool = False, record_velocity: bool = False,
             nonlinear: bool = True) -> RunResult:
    """Run the truncated system and record a ledger every ``sample_stride`` steps.

    Dissipation integrals are accumulated inside each step with two-point
    Gauss-Legendre quadrature on the step's dense output. When
    ``config.track_decomposition`` is set, the velocity is split on the fly
    into free, convective and Lorentz-driven parts using the same stage
    forces as the main update.
    """
    from .heat import StokesDecomposition, initial_split
    g, p = config.grid, config.params
    st = initial or initial_state(config)
    u, E, B = st.u.coeffs.copy(), st.E.coeffs.copy(), st.B.coeffs.copy()
    cut = build_cutoffs(g)
    sys_ = _system(g, p, config.dt, config.n_trunc, nonlinear, quadrature=True)
    s = config.s_exponent
    E0 = 0.5 * (_sq(g, u) + _sq(g, E) + _sq(g, B))
    rec = LedgerRecorder(_run_meta(config, E0))
    limit = 1e8 * (E0 + 1.0) / g.volume
    cum = {"dissipation": 0.0, "cE_Hs_sq_int": 0.0}
    track = config.track_decomposition
    if track:
        fl0, sh0 = initial_split(SpectralField(g, u), "threeD" if g.dim == 3 else "twoD", cut)
        parts = {"flat": fl0.coeffs, "sharp": sh0.coeffs, "e": np.zeros_like(u)}
    states, lorentz, vel, part_hist = [], [], [], {"flat": [], "sharp": [], "e": []}
    times = []
    wts = [0.5 * config.dt] * len(GAUSS_NODES)
    f0 = sys_.forces(u, E, B, record_lorentz)

    def record(n):
        t = n * config.dt
        times.append(t)
        row = sample_channels(g, p, cut, s, u, E, B, f0.j, f0.u_x, cum)
        if track:
            for name, c in parts.items():
                row.update(velocity_norms(g, cut, c, prefix=name))
                part_hist[name].append(SpectralField(g, c.copy()))
        rec.add(t, row)
        if store_states:
            states.append(PlasmaState(t, SpectralField(g, u.copy()), SpectralField(g, E.copy()),
                                      SpectralField(g, B.copy()), p))
        if record_lorentz:
            lorentz.append(SpectralField(g, f0.lorentz_raw.copy()))
        if record_velocity:
            vel.append(SpectralField(g, u.copy()))

    record(0)
    for n in range(1, config.n_steps + 1):
        u1, E1, B1, f0, fa = sys_.step(u, E, B, f0, record_lorentz)
        for w, (us, Es, Bs) in zip(wts, sys_.node_states(u, E, B, f0, fa)):
            X, _ = sys_.motional(_inv(us, g), Bs)
            js = p.sigma * (p.c * Es + X)
            cum["dissipation"] += w * (p.mu * _hs_sq(g, us, 1.0) + _sq(g, js) / p.sigma)
            cum["cE_Hs_sq_int"] += w * p.c ** 2 * _hs_sq(g, Es, s)
        if track:
            v = sys_.visc
            parts["flat"] = v.stage(parts["flat"], np.zeros_like(u))
            parts["sharp"] = v.stage(parts["sharp"], f0.conv, fa.conv)
            parts["e"] = v.stage(parts["e"], f0.lor, fa.lor)
        u, E, B = u1, E1, B1
        _check_finite(n * config.dt, u, E, B, limit=limit)
        f0 = sys_.forces(u, E, B, record_lorentz)
        if n % config.sample_stride == 0:
            record(n)

    tarr = np.array(times)
    ledger = rec.build()
    dec = None
    if track:
        dec = StokesDecomposition(*(TrajectorySeries(tarr, part_hist[k]) for k in ("flat", "sharp", "e")))
    return RunResult(TrajectorySeries(tarr, states) if store_states else None, ledger, dec,
                     TrajectorySeries(tarr, lorentz) if record_lorentz else None,
                     TrajectorySeries(tarr, vel) if record_velocity else None)


# ---------------------------------------------------------------- Maxwell subsystem

@dataclass
class MaxwellRun:
    """Frozen-velocity Maxwell run: sampled ``(E, B)`` plus ledger with block channels."""

    states: TrajectorySeries
    ledger: EnergyLedger
    cut: DyadicCutoffs


def maxwell_subsystem_simulate(u_traj: TrajectorySeries | None, E0: SpectralField,
                               B0: SpectralField, params: PhysParams, dt: float,
                               t_end: float | None = None, n_trunc: int | None = None,
                               s: float = 0.5, cut: DyadicCutoffs | None = None) -> MaxwellRun:
    """Integrate the damped Maxwell system driven by a prescribed velocity.

    The velocity is interpolated linearly between the samples of
    ``u_traj`` (``None`` means ``u = 0`` up to ``t_end``). States and
    ledger are recorded at the velocity sample instants. Besides the
    electromagnetic energy the ledger carries, per dyadic shell, the block
    energy, the accumulated damping ``sigma int |c Delta_k E|^2`` and the
    accumulated source ``-sigma c int <Delta_k (u x B), Delta_k E>``.
    """
    g = E0.grid
    cut = cut or build_cutoffs(g)
    if u_traj is None:
        if t_end is None:
            raise ValueError("t_end required without a velocity trajectory")
        n_total = int(round(t_end / dt))
        times = dt * np.arange(n_total + 1)
        m = 1
    else:
        from .heat import _substeps
        times = u_traj.times
        m = _substeps(u_traj.dt, dt) if len(u_traj) > 1 else 1
        n_total = (len(u_traj) - 1) * m
    sys_ = NSMSystem(g, params, dt, n_trunc, quadrature=True)
    sym2 = cut._flat_sq
    V = g.volume
    sig, c = params.sigma, params.c

    def u_at(n_sub):
        if u_traj is None:
            return np.zeros((3,) + g.shape)
        i, r = divmod(n_sub, m)
        if r == 0:
            return _inv(u_traj.values[i].coeffs, g)
        a, b = u_traj.values[i].coeffs, u_traj.values[i + 1].coeffs
        return _inv(a + (b - a) * (r / m), g)

    def u_mid(n_sub, frac):
        if u_traj is None:
            return np.zeros((3,) + g.shape)
        i, r = divmod(n_sub, m)
        a = u_traj.values[i].coeffs
        b = u_traj.values[min(i + 1, len(u_traj) - 1)].coeffs
        return _inv(a + (b - a) * ((r + frac) / m), g)

    def NE(ux, B):
        X, _ = sys_.motional(ux, B)
        return -sig * c * X, X

    def blocks_energy(E, B):
        pw = np.sum(np.abs(E) ** 2 + np.abs(B) ** 2, axis=0).ravel()
        return 0.5 * V * (sym2 @ pw)

    E, B = E0.coeffs.copy(), B0.coeffs.copy()
    cum = {"dissipation": 0.0, "em_damping": 0.0, "em_source": 0.0, "cE_Hs_sq_int": 0.0}
    bd = np.zeros(len(cut.shells))
    bs = np.zeros(len(cut.shells))
    rec = LedgerRecorder({"dt": dt, "sigma": sig, "c": c, "mu": params.mu, "n": g.n,
                          "dim": g.dim, "s": s, "shells": [int(k) for k in cut.shells]})
    states = []

    def record(t, E, B, ux):
        X, _ = sys_.motional(ux, B)
        j = sig * (c * E + X)
        ee, me = 0.5 * _sq(g, E), 0.5 * _sq(g, B)
        e_hs, b_hs = math.sqrt(_hs_sq(g, E, s)), math.sqrt(_hs_sq(g, B, s))
        rec.add(t, {"energy": ee + me, "electric": ee, "magnetic": me, "j_sq": _sq(g, j),
                    "grad_u_sq": 0.0, "dissipation": cum["dissipation"],
                    "em_damping": cum["em_damping"], "em_source": cum["em_source"],
                    "E_Hs": e_hs, "B_Hs": b_hs, "cE_Hs": c * e_hs,
                    "cE_Hs_sq_int": cum["cE_Hs_sq_int"], "div_B": _maxdiv(g, B)},
                {"block_energy": blocks_energy(E, B), "block_damping": bd.copy(),
                 "block_source": bs.copy()})
        states.append((SpectralField(g, E.copy()), SpectralField(g, B.copy())))

    ux = u_at(0)
    record(times[0], E, B, ux)
    for n in range(n_total):
        n0, _ = NE(ux, B)
        Ea, Ba = sys_.maxwell.stage(E, B, n0)
        ux1 = u_at(n + 1)
        na, _ = NE(ux1, Ba)
        E1, B1 = sys_.maxwell.stage(E, B, n0, na)
        for x, (_, mx) in zip(GAUSS_NODES, sys_.nodes):
            Es, Bs = mx.stage(E, B, n0, na)
            Xs = NE(u_mid(n, x), Bs)[1]
            w = 0.5 * dt
            js = sig * (c * Es + Xs)
            cum["dissipation"] += w * _sq(g, js) / sig
            cum["em_damping"] += w * sig * c * c * _sq(g, Es)
            src = -sig * c * V * np.sum((Xs * np.conj(Es)).real, axis=0).ravel()
            cum["em_source"] += w * float(np.sum(src))
            cum["cE_Hs_sq_int"] += w * c * c * _hs_sq(g, Es, s)
            bd += w * sig * c * c * V * (sym2 @ np.sum(np.abs(Es) ** 2, axis=0).ravel())
            bs += w * (sym2 @ src)
        E, B, ux = E1, B1, ux1
        _check_finite((n + 1) * dt, E, B)
        if (n + 1) % m == 0:
            record(times[(n + 1) // m] if u_traj is not None else (n + 1) * dt, E, B, ux)
    ledger = rec.build()
    tarr = ledger.times
    return MaxwellRun(TrajectorySeries(tarr, states), ledger, cut)


# ---------------------------------------------------------------- MHD reference

class MHDSystem:
    """``u' = P(mu Lap u - u.grad u + curl B x B)``, ``B' = Lap B / sigma + curl(u x B)``."""

    def __init__(self, grid: Grid, params: PhysParams, dt: float, quadrature: bool = False):
        self.grid, self.params, self.dt = grid, params, dt
        self.visc = ScalarPropagator(params.mu * grid.k2, dt)
        self.diff = ScalarPropagator(grid.k2 / params.sigma, dt)
        self.nodes = []
        if quadrature:
            for x in GAUSS_NODES:
                self.nodes.append((ScalarPropagator(params.mu * grid.k2, dt, x * dt),
                                   ScalarPropagator(grid.k2 / params.sigma, dt, x * dt)))

    def forces(self, u, B):
        g = self.grid
        u_x = _inv(u, g)
        b_x = _inv(B, g)
        cb_x = _inv(1j * np.cross(g.k, B, axis=0), g)
        lor = _fwd(cross_physical(cb_x, b_x), g) * g.dealias
        conv = convective_coeffs(u_x, u_x, g)
        emf = _fwd(cross_physical(u_x, b_x), g) * g.dealias
        Nu = (-_mean_free(leray_coeffs(conv, g), g.dim)) + _mean_free(leray_coeffs(lor, g), g.dim)
        NB = 1j * np.cross(g.k, emf, axis=0)
        return Nu, NB, u_x

    def step(self, u, B, f0=None):
        f0 = f0 or self.forces(u, B)
        ua = self.visc.stage(u, f0[0])
        Ba = self.diff.stage(B, f0[1])
        fa = self.forces(ua, Ba)
        return self.visc.stage(u, f0[0], fa[0]), self.diff.stage(B, f0[1], fa[1]), f0, fa


def mhd_rhs(state: MhdState, params: PhysParams):
    sys_ = MHDSystem(state.u.grid, params, 1.0)
    g = state.u.grid
    Nu, NB, _ = sys_.forces(state.u.coeffs, state.B.coeffs)
    return (SpectralField(g, -params.mu * g.k2 * state.u.coeffs + Nu),
            SpectralField(g, -g.k2 * state.B.coeffs / params.sigma + NB))


def mhd_simulate(config: RunConfig, *, initial: MhdState | None = None,
                 store_states: bool = True) -> RunResult:
    """Reference magnetohydrodynamic run from the same ``(u0, B0)`` recipe."""
    g, p = config.grid, config.params
    if initial is None:
        st = initial_state(config)
        initial = MhdState(0.0, st.u, st.B)
    u, B = initial.u.coeffs.copy(), initial.B.coeffs.copy()
    sys_ = MHDSystem(g, p, config.dt, quadrature=True)
    E0 = 0.5 * (_sq(g, u) + _sq(g, B))
    rec = LedgerRecorder(_run_meta(config, E0))
    cut = build_cutoffs(g)
    limit = 1e8 * (E0 + 1.0) / g.volume
    cum = 0.0
    states, times = [], []
    f0 = sys_.forces(u, B)

    def record(n):
        t = n * config.dt
        times.append(t)
        ke, me = 0.5 * _sq(g, u), 0.5 * _sq(g, B)
        row = {"energy": ke + me, "kinetic": ke, "magnetic": me, "grad_u_sq": _hs_sq(g, u, 1.0),
               "grad_B_sq": _hs_sq(g, B, 1.0), "dissipation": cum,
               "div_u": _maxdiv(g, u), "div_B": _maxdiv(g, B)}
        row.update({k: v for k, v in velocity_norms(g, cut, u, f0[2]).items()})
        rec.add(t, row)
        if store_states:
            states.append(MhdState(t, SpectralField(g, u.copy()), SpectralField(g, B.copy())))

    record(0)
    for n in range(1, config.n_steps + 1):
        u1, B1, f0, fa = sys_.step(u, B, f0)
        for x, (vs, ds) in zip(GAUSS_NODES, sys_.nodes):
            us = vs.stage(u, f0[0], fa[0])
            bs = ds.stage(B, f0[1], fa[1])
            cum += 0.5 * config.dt * (p.mu * _hs_sq(g, us, 1.0) + _hs_sq(g, bs, 1.0) / p.sigma)
        u, B = u1, B1
        _check_finite(n * config.dt, u, B, limit=limit)
        f0 = sys_.forces(u, B)
        if n % config.sample_stride == 0:
            record(n)
    tarr = np.array(times)
    return RunResult(TrajectorySeries(tarr, states) if store_states else None, rec.build())
