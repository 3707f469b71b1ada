"""Decaying incompressible Navier-Stokes in spectral form, plus the
evolution-equation residual checks.

The state is the divergence-free spectral velocity.  The right-hand side is
nu lap(u) - P[(u . grad) u] with P the Leray projection; the advective term
is assembled in rotational form (u x omega), whose gradient part P removes
mode by mode, so the two forms agree exactly after projection and masking.
Time stepping is classical RK4 on the nonlinear term with the viscous
factor exp(-nu |k|^2 dt) applied exactly.

Residual checks differentiate ns_rhs by the chain rule instead of finite
differencing, so every evolution equation becomes an algebraic identity at
a single state.  On states band-limited to half the dealias band the masked
right-hand side coincides with the exact one and the residuals sit at
roundoff.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .identities import ResidualReport
from .kinematics import relative_divergence
from .spectral import (
    Grid,
    ScalarField,
    VectorField,
    spec_curl,
    spec_derivative,
    spec_divergence,
    spec_poisson,
    spec_project,
    spectral_mean_square,
    to_physical,
    to_spectral,
)

__all__ = [
    "CFLViolation",
    "FlowState",
    "SolverConfig",
    "DimensionlessScaling",
    "leray_project",
    "pressure_from_velocity",
    "ns_rhs",
    "step",
    "initial_condition",
    "nondimensionalize",
    "redimensionalize",
    "evolution_residual",
    "EVOLUTION_CHECKS",
]

_SOLENOID_TOL = 1e-10


class CFLViolation(RuntimeError):
    """Raised when dt exceeds the advective stability bound."""

    def __init__(self, dt: float, bound: float, max_speed: float, t: float):
        self.dt = dt
        self.bound = bound
        self.max_speed = max_speed
        self.t = t
        super().__init__(
            f"CFL violation at t={t:.6g}: dt={dt:.6g} exceeds bound "
            f"{bound:.6g} (max |u| = {max_speed:.6g})"
        )


@dataclass(frozen=True)
class FlowState:
    """Divergence-free spectral velocity with time and viscosity parameters.

    Exactly one of nu (dimensional) or re (dimensionless) must be given;
    the advancing equations always use effective_viscosity, which is nu or
    1/re respectively.
    """

    u: VectorField
    t: float = 0.0
    nu: Optional[float] = None
    re: Optional[float] = None

    def __post_init__(self):
        if not isinstance(self.u, VectorField) or self.u.rep != "spectral":
            raise ValueError("FlowState stores a spectral VectorField")
        if (self.nu is None) == (self.re is None):
            raise ValueError("give exactly one of nu (dimensional) or re "
                             "(dimensionless)")
        param = self.nu if self.nu is not None else self.re
        if not (np.isfinite(param) and param > 0):
            raise ValueError(f"viscosity parameter must be positive, got {param}")
        rel = relative_divergence(self.u)
        if rel >= _SOLENOID_TOL:
            raise ValueError(
                f"state velocity is not solenoidal: max |k.u_hat| / max |u_hat| "
                f"= {rel:.3e}")

    @property
    def mode(self) -> str:
        return "dimensional" if self.nu is not None else "dimensionless"

    @property
    def effective_viscosity(self) -> float:
        return self.nu if self.nu is not None else 1.0 / self.re

    @property
    def grid(self) -> Grid:
        return self.u.grid

    def velocity_physical(self) -> VectorField:
        return self.u.to_physical()

    def mean_square_velocity(self) -> float:
        return spectral_mean_square(self.grid, self.u.data)


@dataclass(frozen=True)
class SolverConfig:
    """Step size and run extent; dealiasing and the RK4 scheme are fixed."""

    dt: float
    t_end: float
    output_interval: float = 0.05
    cfl_constant: float = 0.5

    def __post_init__(self):
        if not (self.dt > 0):
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not (self.t_end > 0):
            raise ValueError(f"t_end must be positive, got {self.t_end}")
        if not (self.output_interval > 0):
            raise ValueError(
                f"output_interval must be positive, got {self.output_interval}")
        if not (0 < self.cfl_constant <= 1):
            raise ValueError(
                f"cfl_constant must lie in (0, 1], got {self.cfl_constant}")


@dataclass(frozen=True)
class DimensionlessScaling:
    """Reference scales L (length), U (max velocity), kappa = L/U, Re = UL/nu."""

    L: float
    U: float
    kappa: float = None
    Re: float = None
    nu: float = None

    def __post_init__(self):
        if not (self.L > 0 and self.U > 0):
            raise ValueError("scales L and U must be positive")
        if self.kappa is None:
            object.__setattr__(self, "kappa", self.L / self.U)
        if self.Re is None:
            if self.nu is None:
                raise ValueError("give Re directly or nu to derive it")
            object.__setattr__(self, "Re", self.U * self.L / self.nu)
        if self.nu is None:
            object.__setattr__(self, "nu", self.U * self.L / self.Re)
        if not (self.Re > 0):
            raise ValueError(f"Re must be positive, got {self.Re}")
        if abs(self.kappa * self.U - self.L) > 1e-12 * self.L:
            raise ValueError("kappa inconsistent with L/U beyond 1e-12")
        if abs(self.Re * self.nu - self.U * self.L) > 1e-12 * self.U * self.L:
            raise ValueError("Re inconsistent with U L / nu beyond 1e-12")


def leray_project(v: VectorField) -> VectorField:
    """Remove the gradient part of v; output divergence vanishes spectrally."""
    if v.rep == "spectral":
        return VectorField(v.grid, spec_project(v.grid, v.data), "spectral")
    vh = spec_project(v.grid, to_spectral(v.grid, v.data))
    return VectorField(v.grid, to_physical(v.grid, vh), "physical")


def _advection(grid: Grid, uh: np.ndarray, up: np.ndarray) -> np.ndarray:
    """(u . grad) u in physical space from the spectral gradient tensor."""
    a = to_physical(grid, np.stack(
        [np.stack([spec_derivative(grid, uh[i], j) for j in range(3)])
         for i in range(3)]))
    return np.einsum("j...,ij...->i...", up, a)


def pressure_from_velocity(u: VectorField) -> ScalarField:
    """Zero-mean pressure with lap(p) = -div((u . grad) u)."""
    rel = relative_divergence(u)
    if rel >= _SOLENOID_TOL:
        raise ValueError(f"pressure solve needs a solenoidal velocity; "
                         f"relative divergence {rel:.3e}")
    grid = u.grid
    uh = u.data if u.rep == "spectral" else to_spectral(grid, u.data)
    up = u.data if u.rep == "physical" else to_physical(grid, uh)
    wh = to_spectral(grid, _advection(grid, uh, up))
    ph = spec_poisson(grid, -spec_divergence(grid, wh))
    if u.rep == "physical":
        return ScalarField(grid, to_physical(grid, ph), "physical")
    return ScalarField(grid, ph, "spectral")


def _nonlinear(grid: Grid, uh: np.ndarray, dealias: bool = True):
    """Projected (and masked) spectral u x omega; also the max point speed."""
    u = to_physical(grid, uh)
    w = to_physical(grid, spec_curl(grid, uh))
    c = np.empty_like(u)
    c[0] = u[1] * w[2] - u[2] * w[1]
    c[1] = u[2] * w[0] - u[0] * w[2]
    c[2] = u[0] * w[1] - u[1] * w[0]
    ch = to_spectral(grid, c)
    if dealias:
        ch = ch * grid.dealias_mask
    speed = math.sqrt(float((u * u).sum(axis=0).max()))
    return spec_project(grid, ch), speed


def ns_rhs(state: FlowState, dealias: bool = True) -> VectorField:
    """du/dt = nu lap(u) - P[(u . grad) u], spectral and solenoidal."""
    grid = state.grid
    uh = state.u.data
    nl, _ = _nonlinear(grid, uh, dealias)
    rhs = nl - (state.effective_viscosity * grid.k2) * uh
    return VectorField(grid, rhs, "spectral")


# Integrating factors depend only on (n, L, nu, h); k2 is a pure function of
# the first two, so caching on those keys is safe across Grid instances.
_FACTOR_CACHE: dict = {}


def _viscous_factors(grid: Grid, nu: float, h: float):
    key = (grid.n, grid.box_length, float(nu), float(h))
    hit = _FACTOR_CACHE.get(key)
    if hit is None:
        if len(_FACTOR_CACHE) >= 16:
            _FACTOR_CACHE.clear()
        hit = (np.exp((-nu * h) * grid.k2), np.exp((-0.5 * nu * h) * grid.k2))
        _FACTOR_CACHE[key] = hit
    return hit


def step(state: FlowState, config: SolverConfig) -> FlowState:
    """One RK4 step with the viscous factor exp(-nu |k|^2 dt) applied exactly."""
    grid = state.grid
    h = config.dt
    nu = state.effective_viscosity
    e_full, e_half = _viscous_factors(grid, nu, h)

    uh = state.u.data
    n1, speed = _nonlinear(grid, uh)
    if speed > 0.0:
        bound = config.cfl_constant * grid.spacing / speed
        if h > bound:
            raise CFLViolation(h, bound, speed, state.t)
    n2, _ = _nonlinear(grid, e_half * (uh + (0.5 * h) * n1))
    n3, _ = _nonlinear(grid, e_half * uh + (0.5 * h) * n2)
    n4, _ = _nonlinear(grid, e_full * uh + h * (e_half * n3))
    new = e_full * uh + (h / 6.0) * (e_full * n1 + 2.0 * e_half * (n2 + n3) + n4)
    return FlowState(VectorField(grid, new, "spectral"),
                     t=state.t + h, nu=state.nu, re=state.re)


# ---------------------------------------------------------------------------
# initial conditions

def _taylor_green(grid: Grid) -> np.ndarray:
    x, y, z = grid.coordinates()
    u = np.zeros((3,) + grid.shape)
    u[0] = np.sin(x) * np.cos(y) * np.cos(z)
    u[1] = -np.cos(x) * np.sin(y) * np.cos(z)
    return u


def _abc(grid: Grid, A: float, B: float, C: float) -> np.ndarray:
    x, y, z = grid.coordinates()
    u = np.empty((3,) + grid.shape)
    u[0] = A * np.sin(z) + C * np.cos(y)
    u[1] = B * np.sin(x) + A * np.cos(z)
    u[2] = C * np.sin(y) + B * np.cos(x)
    return u


def _random_isotropic(grid: Grid, k0: float, energy: float, seed) -> np.ndarray:
    if not (k0 > 0):
        raise ValueError(f"k0 must be positive, got {k0}")
    if not (energy > 0):
        raise ValueError(f"energy must be positive, got {energy}")
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal((3,) + grid.shape)
    ch = to_spectral(grid, noise)
    kmag = grid.k_magnitude()
    # amplitude k exp(-(k/k0)^2) puts the shell spectrum at k^4 exp(-2(k/k0)^2)
    ch *= kmag * np.exp(-((kmag / k0) ** 2))
    ch = spec_project(grid, ch) * grid.dealias_mask
    ch[:, 0, 0, 0] = 0.0
    ms = spectral_mean_square(grid, ch)
    if ms <= 0.0:
        raise ValueError("random field degenerated to zero; check k0 and n")
    ch *= math.sqrt(2.0 * energy / ms)
    return ch


def initial_condition(kind: str, grid: Grid, params: Optional[dict] = None,
                      seed=None, *, nu: Optional[float] = None,
                      re: Optional[float] = None, t: float = 0.0) -> FlowState:
    """Build a FlowState; kind in {taylor_green, abc, random_isotropic}.

    params: abc takes A, B, C (default 1 each); random_isotropic takes k0
    (default 4) and energy, the kinetic energy <|u|^2>/2 (default 0.5).
    """
    params = dict(params or {})
    if kind == "taylor_green":
        _reject_extra(params, ())
        uh = to_spectral(grid, _taylor_green(grid))
    elif kind == "abc":
        a = float(params.pop("A", 1.0))
        b = float(params.pop("B", 1.0))
        c = float(params.pop("C", 1.0))
        _reject_extra(params, ("A", "B", "C"))
        uh = to_spectral(grid, _abc(grid, a, b, c))
    elif kind == "random_isotropic":
        k0 = float(params.pop("k0", 4.0))
        energy = float(params.pop("energy", 0.5))
        _reject_extra(params, ("k0", "energy"))
        uh = _random_isotropic(grid, k0, energy, seed)
    else:
        raise ValueError(
            f"unknown initial condition {kind!r}; expected taylor_green, "
            f"abc or random_isotropic")
    return FlowState(VectorField(grid, uh, "spectral"), t=t, nu=nu, re=re)


def _reject_extra(params: dict, allowed) -> None:
    if params:
        raise ValueError(f"unexpected initial-condition parameters "
                         f"{sorted(params)}; allowed: {sorted(allowed)}")


# ---------------------------------------------------------------------------
# dimensionless scaling

def nondimensionalize(state: FlowState, scaling: DimensionlessScaling) -> FlowState:
    """u(L x, kappa t) / U on the rescaled box; carries Re = U L / nu."""
    if state.mode != "dimensional":
        raise ValueError("state is already dimensionless")
    if abs(scaling.nu - state.nu) > 1e-12 * state.nu:
        raise ValueError("scaling viscosity disagrees with the state")
    grid = state.grid
    new_grid = Grid(grid.n, grid.box_length / scaling.L)
    uh = state.u.data / scaling.U
    return FlowState(VectorField(new_grid, uh, "spectral"),
                     t=state.t / scaling.kappa, re=scaling.Re)


def redimensionalize(state: FlowState, scaling: DimensionlessScaling) -> FlowState:
    if state.mode != "dimensionless":
        raise ValueError("state is already dimensional")
    if abs(scaling.Re - state.re) > 1e-12 * state.re:
        raise ValueError("scaling Reynolds number disagrees with the state")
    grid = state.grid
    new_grid = Grid(grid.n, grid.box_length * scaling.L)
    uh = state.u.data * scaling.U
    return FlowState(VectorField(new_grid, uh, "spectral"),
                     t=state.t * scaling.kappa, nu=scaling.nu)


# ---------------------------------------------------------------------------
# evolution-equation residuals

EVOLUTION_CHECKS = ("vorticity", "energy", "enstrophy", "strain", "trS2", "trS3")


def evolution_residual(state: FlowState, which: str) -> tuple[ResidualReport, ...]:
    """Residuals of (d/dt - Lstar) applied to one evolved quantity.

    Lstar = nu lap - u . grad; time derivatives come from the chain rule on
    ns_rhs.  Checks with more than one candidate form return one report per
    variant: energy in advective-flux (closing) and curl-flux (non-closing)
    form; trS2 in its direct form and divergence form with second-bracket
    coefficients 3 (closing) and 1 (non-closing), plus the cross-form
    agreement; trS3 under both readings of its -3|S|^4 term.
    """
    if which not in EVOLUTION_CHECKS:
        raise ValueError(f"unknown evolution check {which!r}; "
                         f"expected one of {EVOLUTION_CHECKS}")
    ws = _EvolutionWorkspace(state)
    return getattr(ws, "check_" + which)()


def _norms(name: str, residual: np.ndarray, lhs: np.ndarray) -> ResidualReport:
    sup = float(np.abs(residual).max())
    l2 = float(np.sqrt(np.mean(residual * residual)))
    ref = float(np.abs(lhs).max())
    return ResidualReport(name, sup, l2, ref, sup / max(ref, 1e-300))


class _EvolutionWorkspace:
    """Arrays shared by the residual checks at one state."""

    def __init__(self, state: FlowState):
        g = self.grid = state.grid
        self.nu = state.effective_viscosity
        self.uh = state.u.data
        self.udoth = ns_rhs(state).data
        self.up = to_physical(g, self.uh)
        self.udotp = to_physical(g, self.udoth)
        self.a = self._grad_tensor(self.uh)
        self.adot = self._grad_tensor(self.udoth)
        self.s = 0.5 * (self.a + np.swapaxes(self.a, 0, 1))
        self.sdot = 0.5 * (self.adot + np.swapaxes(self.adot, 0, 1))
        self.wh = spec_curl(g, self.uh)
        self.w = to_physical(g, self.wh)
        self.wdot = to_physical(g, spec_curl(g, self.udoth))
        self.enstrophy = np.einsum("i...,i...->...", self.w, self.w)
        self.advection = np.einsum("j...,ij...->i...", self.up, self.a)
        self.advection_h = to_spectral(g, self.advection)
        self.ph = spec_poisson(g, -spec_divergence(g, self.advection_h))
        self.p = to_physical(g, self.ph)
        self.divu = to_physical(g, spec_divergence(g, self.uh))

    # -- small spectral helpers -------------------------------------------
    def _grad_tensor(self, vh: np.ndarray) -> np.ndarray:
        g = self.grid
        return to_physical(g, np.stack(
            [np.stack([spec_derivative(g, vh[i], j) for j in range(3)])
             for i in range(3)]))

    def _grad_scalar_h(self, fh: np.ndarray) -> np.ndarray:
        g = self.grid
        return to_physical(g, np.stack(
            [spec_derivative(g, fh, k) for k in range(3)]))

    def _lstar_scalar(self, f: np.ndarray) -> np.ndarray:
        """nu lap f - u . grad f with spectral derivatives of the samples."""
        g = self.grid
        fh = to_spectral(g, f)
        lap = to_physical(g, fh * (-g.k2))
        grad = self._grad_scalar_h(fh)
        return self.nu * lap - np.einsum("i...,i...->...", self.up, grad)

    # -- checks ------------------------------------------------------------
    def check_vorticity(self) -> tuple[ResidualReport, ...]:
        g = self.grid
        lap_w = to_physical(g, self.wh * (-g.k2))
        dw = to_physical(g, np.stack(
            [np.stack([spec_derivative(g, self.wh[i], j) for j in range(3)])
             for i in range(3)]))
        advect_w = np.einsum("j...,ij...->i...", self.up, dw)
        lhs = self.wdot - self.nu * lap_w + advect_w
        rhs = np.einsum("ij...,j...->i...", self.s, self.w)
        return (_norms("vorticity", lhs - rhs, lhs),)

    def check_energy(self) -> tuple[ResidualReport, ...]:
        g = self.grid
        q = np.einsum("i...,i...->...", self.up, self.up)
        lhs = 2.0 * np.einsum("i...,i...->...", self.up, self.udotp) \
            - self._lstar_scalar(q)

        grad_p = self._grad_scalar_h(self.ph)
        div_pu = np.einsum("i...,i...->...", self.up, grad_p) + self.p * self.divu
        div_adv = to_physical(g, spec_divergence(g, self.advection_h))
        cross = np.empty_like(self.up)
        cross[0] = self.up[1] * self.w[2] - self.up[2] * self.w[1]
        cross[1] = self.up[2] * self.w[0] - self.up[0] * self.w[2]
        cross[2] = self.up[0] * self.w[1] - self.up[1] * self.w[0]
        div_cross = to_physical(g, spec_divergence(g, to_spectral(g, cross)))

        rhs_closing = -2.0 * self.nu * self.enstrophy \
            - 2.0 * self.nu * div_adv - 2.0 * div_pu
        rhs_displayed = -self.nu * self.enstrophy \
            + self.nu * div_cross - 2.0 * div_pu
        return (
            _norms("energy[advective-flux]", lhs - rhs_closing, lhs),
            _norms("energy[curl-flux]", lhs - rhs_displayed, lhs),
        )

    def check_enstrophy(self) -> tuple[ResidualReport, ...]:
        g = self.grid
        q = 0.5 * self.enstrophy
        lhs = np.einsum("i...,i...->...", self.w, self.wdot) \
            - self._lstar_scalar(q)
        dw = to_physical(g, np.stack(
            [spec_derivative(g, self.wh, k) for k in range(3)]))
        grad_w2 = np.einsum("ki...,ki...->...", dw, dw)
        wsw = np.einsum("i...,ij...,j...->...", self.w, self.s, self.w)
        rhs = wsw - self.nu * grad_w2
        return (_norms("enstrophy", lhs - rhs, lhs),)

    def check_strain(self) -> tuple[ResidualReport, ...]:
        g = self.grid
        sh = to_spectral(g, self.s)
        lap_s = to_physical(g, sh * (-g.k2))
        ds = to_physical(g, np.stack(
            [spec_derivative(g, sh, k) for k in range(3)]))
        advect_s = np.einsum("k...,kij...->ij...", self.up, ds)
        lhs = self.sdot - self.nu * lap_s + advect_s

        s2 = np.einsum("ik...,kj...->ij...", self.s, self.s)
        eye = np.eye(3).reshape(3, 3, 1, 1, 1)
        hess_p = to_physical(g, np.stack(
            [np.stack([spec_derivative(g, spec_derivative(g, self.ph, i), j)
                       for j in range(3)]) for i in range(3)]))
        rhs = -s2 + 0.25 * (eye * self.enstrophy
                            - np.einsum("i...,j...->ij...", self.w, self.w)) \
            - hess_p
        return (_norms("strain", lhs - rhs, lhs),)

    def _trs2_pieces(self):
        g = self.grid
        sh = to_spectral(g, self.s)
        ds = to_physical(g, np.stack(
            [spec_derivative(g, sh, k) for k in range(3)]))
        dw = to_physical(g, np.stack(
            [spec_derivative(g, self.wh, k) for k in range(3)]))
        hess_p = to_physical(g, np.stack(
            [np.stack([spec_derivative(g, spec_derivative(g, self.ph, i), j)
                       for j in range(3)]) for i in range(3)]))
        return sh, ds, dw, hess_p

    def check_trS2(self) -> tuple[ResidualReport, ...]:
        g = self.grid
        sh, ds, dw, hess_p = self._trs2_pieces()
        q = np.einsum("ij...,ij...->...", self.s, self.s)
        lhs = 2.0 * np.einsum("ij...,ij...->...", self.s, self.sdot) \
            - self._lstar_scalar(q)

        tr_s3 = np.einsum("ij...,jk...,ki...->...", self.s, self.s, self.s)
        wsw = np.einsum("i...,ij...,j...->...", self.w, self.s, self.w)
        grad_s2 = np.einsum("kij...,kij...->...", ds, ds)
        grad_w2 = np.einsum("ki...,ki...->...", dw, dw)
        s_hess = np.einsum("ij...,ij...->...", self.s, hess_p)
        rhs_direct = (-2.0 * tr_s3 - 0.5 * wsw
                      - 2.0 * self.nu * grad_s2 - 2.0 * s_hess)

        # divergence form, assembled term by term with product-rule
        # expansions so no sampled product is differentiated spectrally
        lap_p = to_physical(g, self.ph * (-g.k2))
        u_grad_lap_p = np.einsum(
            "i...,i...->...", self.up,
            self._grad_scalar_h(to_spectral(g, lap_p)))
        pressure_flux = (np.einsum("ji...,ij...->...", self.a, hess_p)
                         + u_grad_lap_p) - (u_grad_lap_p + lap_p * self.divu)

        dadv = to_physical(g, np.stack(
            [np.stack([spec_derivative(g, self.advection_h[i], j)
                       for j in range(3)]) for i in range(3)]))
        div_u_grad_w = np.einsum("ji...,ij...->...", self.a, dadv) \
            + np.einsum("i...,i...->...", self.up, self._grad_scalar_h(
                spec_divergence(g, self.advection_h)))
        q_adv = to_physical(g, spec_divergence(g, self.advection_h))
        u_grad_q = np.einsum("i...,i...->...", self.up,
                             self._grad_scalar_h(to_spectral(g, q_adv)))

        dd = to_physical(g, np.stack(
            [np.stack([np.stack([
                spec_derivative(g, spec_derivative(g, self.uh[i], k), j)
                for j in range(3)]) for k in range(3)]) for i in range(3)]))
        gki = np.einsum("j...,ikj...->ki...", self.up, dd)
        gh = to_spectral(g, gki)
        trace_term = to_physical(g, sum(
            spec_derivative(g, spec_derivative(g, gh[k, i], k), i)
            for k in range(3) for i in range(3)))
        lap_uh = self.uh * (-g.k2)
        dlap = to_physical(g, np.stack(
            [np.stack([spec_derivative(g, lap_uh[i], j) for j in range(3)])
             for i in range(3)]))
        adv_lap = np.einsum("j...,ij...->i...", self.up, dlap)
        div_adv_lap = to_physical(g, spec_divergence(g, to_spectral(g, adv_lap)))
        viscous_flux = trace_term - div_adv_lap

        def rhs_divform(c: float) -> np.ndarray:
            bracket2 = 2.0 * div_u_grad_w - c * (u_grad_q + q_adv * self.divu)
            return (wsw - self.nu * grad_w2 - 2.0 * pressure_flux
                    - bracket2 - 2.0 * self.nu * viscous_flux)

        rhs_c3 = rhs_divform(3.0)
        rhs_c1 = rhs_divform(1.0)
        return (
            _norms("trS2[direct]", lhs - rhs_direct, lhs),
            _norms("trS2[divergence c=3]", lhs - rhs_c3, lhs),
            _norms("trS2[divergence c=1]", lhs - rhs_c1, lhs),
            _norms("trS2[agreement c=3]", rhs_direct - rhs_c3, rhs_direct),
            _norms("trS2[agreement c=1]", rhs_direct - rhs_c1, rhs_direct),
        )

    def check_trS3(self) -> tuple[ResidualReport, ...]:
        g = self.grid
        sh = to_spectral(g, self.s)
        ds = to_physical(g, np.stack(
            [spec_derivative(g, sh, k) for k in range(3)]))
        lap_s = to_physical(g, sh * (-g.k2))
        s2 = np.einsum("ik...,kj...->ij...", self.s, self.s)

        # lap and advection of trS^3 via pointwise contractions: the cubic
        # itself is never transformed
        s_ds_ds = np.einsum("ij...,ljk...,lki...->...", self.s, ds, ds)
        lap_q = 3.0 * np.einsum("ij...,ij...->...", s2, lap_s) + 6.0 * s_ds_ds
        advect_q = 3.0 * np.einsum("l...,ij...,lij...->...", self.up, s2, ds)
        lhs = 3.0 * np.einsum("ij...,ij...->...", s2, self.sdot) \
            - self.nu * lap_q + advect_q

        tr_s2 = np.einsum("ij...,ij...->...", self.s, self.s)
        sw = np.einsum("ij...,j...->i...", self.s, self.w)
        sw2 = np.einsum("i...,i...->...", sw, sw)
        hess_p = to_physical(g, np.stack(
            [np.stack([spec_derivative(g, spec_derivative(g, self.ph, i), j)
                       for j in range(3)]) for i in range(3)]))
        common = (0.75 * (tr_s2 * self.enstrophy - sw2)
                  - 6.0 * self.nu * s_ds_ds
                  - 3.0 * np.einsum("ij...,ij...->...", s2, hess_p))
        tr_s4 = np.einsum("ij...,ij...->...", s2, s2)
        rhs_s4 = -3.0 * tr_s4 + common
        rhs_sq = -3.0 * tr_s2 * tr_s2 + common
        return (
            _norms("trS3[tr(S^4)]", lhs - rhs_s4, lhs),
            _norms("trS3[(tr S^2)^2]", lhs - rhs_sq, lhs),
        )
