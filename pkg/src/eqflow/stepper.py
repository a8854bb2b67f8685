"""Baseline quadratized time steppers (Crank-Nicolson and BDF2).

Both schemes freeze the coupling coefficients g(phi) and G(grad phi) at an
extrapolated state, which makes each step a linear solve. The auxiliary
field update is affine in the new phi, so q is eliminated analytically and
only a scalar system for phi remains; the full (phi, q) system is kept
around as the monolithic residual for the dense test oracle.

Writing B u = g(phi_bar) u + G(grad phi_bar) . grad u and B* for its
discrete adjoint, the eliminated operator is

    A u = u + alpha * Gs (L0 + B* B) u,   alpha = dt/2 (CN) or 2 dt/3 (BDF2)

with Gs the mobility symbol. Each step also reports the quadratic
dissipation rate D = (mu, Gs mu) >= 0 evaluated at the scheme's stage,
which drives the per-step energy identity and the relaxation budget.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .linsolve import LinearOperator, krylov_solve
from .models import ModelSpec, h_field
from .spectral import Grid, RealField, quadratic_symbol

__all__ = [
    "State",
    "StepResult",
    "init_state",
    "extrapolate",
    "apply_n0",
    "apply_n0_adjoint",
    "step_cn",
    "step_bdf2",
    "make_step_system",
]


@dataclass(frozen=True)
class State:
    """Current fields plus one history level for extrapolation and BDF2."""

    phi_n: RealField
    q_n: RealField
    phi_nm1: RealField
    q_nm1: RealField
    step_index: int
    time: float

    def __post_init__(self):
        g = self.phi_n.grid
        for f in (self.q_n, self.phi_nm1, self.q_nm1):
            if f.grid is not g:
                raise ValueError("state fields must share one grid")
        if self.step_index == 0 and not (
            np.array_equal(self.phi_nm1.values, self.phi_n.values)
            and np.array_equal(self.q_nm1.values, self.q_n.values)
        ):
            raise ValueError("at step 0 the history must equal the current fields")

    @property
    def grid(self) -> Grid:
        return self.phi_n.grid

    def advance(self, phi_new: RealField, q_new: RealField, dt: float) -> "State":
        """Commit a step: current fields become history."""
        return State(
            phi_n=phi_new,
            q_n=q_new,
            phi_nm1=self.phi_n,
            q_nm1=self.q_n,
            step_index=self.step_index + 1,
            time=self.time + dt,
        )


@dataclass(frozen=True)
class StepResult:
    phi_hat: RealField
    q_hat: RealField
    dissipation: float
    solver_iters: int
    residual: float


def init_state(spec: ModelSpec, phi0: RealField) -> State:
    """Consistent initial state: q0 = h(phi0) exactly, history = current."""
    q0 = h_field(spec, phi0)
    return State(
        phi_n=phi0, q_n=q0, phi_nm1=phi0, q_nm1=q0, step_index=0, time=0.0
    )


def extrapolate(state: State, kind: str) -> tuple[RealField, RealField]:
    """Explicit guess for the coupling coefficients.

    CN uses (3 phi_n - phi_nm1)/2 (the half-step value), BDF2 uses
    2 phi_n - phi_nm1. With history equal to current (the bootstrap
    convention at step 0) both reduce to phi_n.
    """
    grid = state.grid
    if kind == "cn":
        cn, cm = 1.5, -0.5
    elif kind == "bdf2":
        cn, cm = 2.0, -1.0
    else:
        raise ValueError(f"unknown scheme kind {kind!r}")
    phibar = RealField(cn * state.phi_n.values + cm * state.phi_nm1.values, grid)
    qbar = RealField(cn * state.q_n.values + cm * state.q_nm1.values, grid)
    return phibar, qbar


class _Coupling:
    """Coefficients g(phi_bar), G(grad phi_bar) frozen for one step.

    With dealiasing on, the 2/3 projection P is applied after the products
    in B and before them in B*, which keeps B* the exact discrete adjoint
    of B (P is self-adjoint), so the energy identities survive truncation.
    """

    def __init__(self, spec: ModelSpec, phibar: RealField):
        grid = phibar.grid
        self.grid = grid
        self.dealias = grid.dealias
        self.gbar: Optional[np.ndarray] = None
        self.gx = self.gy = None
        if not _g_is_zero(spec):
            self.gbar = spec.g(phibar.values)
        if spec.gvec is not None:
            ph = grid.forward(phibar.values)
            dx = grid.inverse(grid.dx_symbol * ph)
            dy = grid.inverse(grid.dy_symbol * ph)
            self.gx, self.gy = spec.gvec(dx, dy)

    def b_apply(self, u: np.ndarray) -> np.ndarray:
        grid = self.grid
        out = np.zeros(u.shape)
        if self.gbar is not None:
            out += self.gbar * u
        if self.gx is not None:
            uh = grid.forward(u)
            out += self.gx * grid.inverse(grid.dx_symbol * uh)
            out += self.gy * grid.inverse(grid.dy_symbol * uh)
        if self.dealias:
            out = grid.truncate(out)
        return out

    def b_adjoint(self, w: np.ndarray) -> np.ndarray:
        grid = self.grid
        if self.dealias:
            w = grid.truncate(w)
        out = np.zeros(w.shape)
        if self.gbar is not None:
            out += self.gbar * w
        if self.gx is not None:
            out -= grid.inverse(
                grid.dx_symbol * grid.forward(self.gx * w)
                + grid.dy_symbol * grid.forward(self.gy * w)
            )
        return out

    def bstarb(self, u: np.ndarray) -> np.ndarray:
        return self.b_adjoint(self.b_apply(u))

    def mean_symbol(self) -> np.ndarray:
        """Constant-coefficient surrogate symbol for B* B (preconditioning)."""
        grid = self.grid
        sym = np.zeros(grid.spectral_shape)
        if self.gbar is not None:
            sym += float(np.mean(self.gbar**2))
        if self.gx is not None:
            kx = grid.dx_symbol.imag
            ky = grid.dy_symbol.imag
            mxx = float(np.mean(self.gx**2))
            myy = float(np.mean(self.gy**2))
            mxy = float(np.mean(self.gx * self.gy))
            sym += mxx * kx**2 + 2.0 * mxy * kx * ky + myy * ky**2
        return sym


def _g_is_zero(spec: ModelSpec) -> bool:
    # q depends on grad(phi) only, so dq/dphi vanishes identically
    return spec.name == "mbe"


def apply_n0(
    spec: ModelSpec, phibar: RealField, f: RealField
) -> tuple[RealField, RealField]:
    """Map a scalar test function into the (phi, q) tangent pair (f, B f)."""
    if phibar.grid is not f.grid:
        raise ValueError("fields live on different grids")
    coup = _Coupling(spec, phibar)
    return f, RealField(coup.b_apply(f.values), f.grid)


def apply_n0_adjoint(
    spec: ModelSpec, phibar: RealField, u: RealField, v: RealField
) -> RealField:
    """Adjoint pairing: (u, v) -> u + g v - div(G v)."""
    if phibar.grid is not u.grid or u.grid is not v.grid:
        raise ValueError("fields live on different grids")
    coup = _Coupling(spec, phibar)
    return RealField(u.values + coup.b_adjoint(v.values), u.grid)


@dataclass
class StepSystem:
    """One step's linear system in both eliminated and monolithic form.

    kind is "cn", "bdf2", or "be"; the backward-Euler variant bootstraps
    the first BDF2 step at full dt (a local O(dt^2) start that keeps the
    global order at 2, unlike running the BDF2 weights on duplicated
    history, which is only O(dt) consistent). It dissipates the shifted
    BDF2 energy with margin, so the stability accounting is unchanged.
    """

    grid: Grid
    kind: str
    dt: float
    alpha: float
    l0: np.ndarray
    mob: np.ndarray
    coupling: _Coupling
    phibar: RealField
    qbar: RealField
    state: State

    def _gs(self, values: np.ndarray) -> np.ndarray:
        return self.grid.inverse(self.mob * self.grid.forward(values))

    def apply_eliminated(self, u: np.ndarray) -> np.ndarray:
        grid = self.grid
        spectral = self.l0 * grid.forward(u) + grid.forward(self.coupling.bstarb(u))
        return u + self.alpha * grid.inverse(self.mob * spectral)

    @property
    def precond_symbol(self) -> np.ndarray:
        return 1.0 + self.alpha * self.mob * (self.l0 + self.coupling.mean_symbol())

    def rhs(self) -> np.ndarray:
        grid, st, coup = self.grid, self.state, self.coupling
        if self.kind == "cn":
            phi_n, q_n = st.phi_n.values, st.q_n.values
            spectral = self.l0 * grid.forward(phi_n) + grid.forward(
                coup.b_adjoint(2.0 * q_n - coup.b_apply(phi_n))
            )
            return phi_n - self.alpha * grid.inverse(self.mob * spectral)
        phi_s, q_s = self._bdf2_history()
        spectral = grid.forward(coup.b_adjoint(q_s - coup.b_apply(phi_s)))
        return phi_s - self.alpha * grid.inverse(self.mob * spectral)

    def _bdf2_history(self) -> tuple[np.ndarray, np.ndarray]:
        st = self.state
        if self.kind == "be":
            return st.phi_n.values, st.q_n.values
        phi_s = (4.0 * st.phi_n.values - st.phi_nm1.values) / 3.0
        q_s = (4.0 * st.q_n.values - st.q_nm1.values) / 3.0
        return phi_s, q_s

    def recover_q(self, phi_new: np.ndarray) -> np.ndarray:
        st, coup = self.state, self.coupling
        if self.kind == "cn":
            return st.q_n.values + coup.b_apply(phi_new - st.phi_n.values)
        phi_s, q_s = self._bdf2_history()
        return q_s + coup.b_apply(phi_new - phi_s)

    def dissipation(self, phi_new: np.ndarray, q_hat: np.ndarray) -> float:
        """D = (mu, Gs mu) at the scheme stage; non-negative by construction."""
        grid, coup = self.grid, self.coupling
        if self.kind == "cn":
            phi_stage = 0.5 * (phi_new + self.state.phi_n.values)
            q_stage = 0.5 * (q_hat + self.state.q_n.values)
        else:
            phi_stage, q_stage = phi_new, q_hat
        mu = grid.inverse(self.l0 * grid.forward(phi_stage)) + coup.b_adjoint(q_stage)
        return quadratic_symbol(RealField(mu, grid), self.mob)

    def monolithic_residual(
        self, p: np.ndarray, s: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray]:
        """Residual of the unreduced (phi, q) system; zero at the step solution."""
        grid, st, coup = self.grid, self.state, self.coupling
        if self.kind == "cn":
            phi_stage = 0.5 * (p + st.phi_n.values)
            q_stage = 0.5 * (s + st.q_n.values)
            mu = grid.inverse(self.l0 * grid.forward(phi_stage)) + coup.b_adjoint(q_stage)
            r1 = (p - st.phi_n.values) + self.dt * self._gs(mu)
            r2 = (s - st.q_n.values) - coup.b_apply(p - st.phi_n.values)
            return r1, r2
        phi_s, q_s = self._bdf2_history()
        mu = grid.inverse(self.l0 * grid.forward(p)) + coup.b_adjoint(s)
        r1 = (p - phi_s) + self.alpha * self._gs(mu)
        r2 = (s - q_s) - coup.b_apply(p - phi_s)
        return r1, r2


def make_step_system(spec: ModelSpec, state: State, dt: float, kind: str) -> StepSystem:
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if kind == "bdf2" and state.step_index == 0:
        kind = "be"  # full-step implicit-Euler bootstrap, see StepSystem docstring
    grid = state.grid
    phibar, qbar = extrapolate(state, "cn" if kind == "cn" else "bdf2")
    alpha = {"cn": 0.5 * dt, "bdf2": 2.0 * dt / 3.0, "be": dt}[kind]
    return StepSystem(
        grid=grid,
        kind=kind,
        dt=dt,
        alpha=alpha,
        l0=spec.l0_symbol(grid.k2),
        mob=spec.mobility_symbol(grid.k2),
        coupling=_Coupling(spec, phibar),
        phibar=phibar,
        qbar=qbar,
        state=state,
    )


def _run_step(
    spec: ModelSpec,
    state: State,
    dt: float,
    kind: str,
    tol: float,
    max_iter: int,
) -> StepResult:
    system = make_step_system(spec, state, dt, kind)
    op = LinearOperator(
        grid=system.grid,
        apply=system.apply_eliminated,
        precond_symbol=system.precond_symbol,
    )
    rhs = RealField(system.rhs(), system.grid)
    phi_new, iters, rel = krylov_solve(op, rhs, tol=tol, max_iter=max_iter, x0=system.phibar)
    q_hat = RealField(system.recover_q(phi_new.values), system.grid)
    d = system.dissipation(phi_new.values, q_hat.values)
    return StepResult(
        phi_hat=phi_new, q_hat=q_hat, dissipation=d, solver_iters=iters, residual=rel
    )


def step_cn(
    spec: ModelSpec, state: State, dt: float, tol: float = 1e-12, max_iter: int = 500
) -> StepResult:
    """One Crank-Nicolson step of the quadratized system.

    Satisfies the discrete identity
    E_quad(phi_new, q_hat) - E_quad(phi_n, q_n) = -dt * dissipation
    to solver tolerance, with E_quad = 1/2 (phi, L0 phi) + 1/2 ||q||^2.
    """
    return _run_step(spec, state, dt, "cn", tol, max_iter)


def step_bdf2(
    spec: ModelSpec, state: State, dt: float, tol: float = 1e-12, max_iter: int = 500
) -> StepResult:
    """One BDF2 step; dissipates the shifted quadratic energy
    1/4 [ (phi, L0 phi) + (2 phi - phi_old, L0 (2 phi - phi_old)) + ||q||^2 + ||2q - q_old||^2 ].
    """
    return _run_step(spec, state, dt, "bdf2", tol, max_iter)
