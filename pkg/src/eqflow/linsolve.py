"""Matrix-free linear solves for the implicit step systems.

The eliminated step operator is nonsymmetric whenever the mobility symbol
does not commute with the variable-coefficient coupling (ch, pfc), so the
workhorse is BiCGStab preconditioned per wavenumber by a constant-coefficient
surrogate of the operator. A probe-assembled dense direct solve of the
monolithic (phi, q) system serves as the test oracle on small grids.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.sparse.linalg as spla

from .spectral import Grid, RealField

__all__ = ["LinearOperator", "ConvergenceError", "krylov_solve", "dense_oracle_solve"]

DENSE_ORACLE_MAX_POINTS = 4096


@dataclass
class LinearOperator:
    """Matrix-free operator on scalar fields plus its spectral preconditioner."""

    grid: Grid
    apply: Callable[[np.ndarray], np.ndarray]
    precond_symbol: Optional[np.ndarray] = None  # rfft-shaped, strictly positive


class ConvergenceError(RuntimeError):
    """Krylov iteration failed; carries the best iterate and its residual."""

    def __init__(self, message: str, iterate: RealField, iters: int, residual: float):
        super().__init__(message)
        self.iterate = iterate
        self.iters = iters
        self.residual = residual


def krylov_solve(
    op: LinearOperator,
    rhs: RealField,
    tol: float = 1e-12,
    max_iter: int = 500,
    x0: Optional[RealField] = None,
) -> tuple[RealField, int, float]:
    """Solve op.apply(x) = rhs to relative residual tol.

    Returns (solution, iterations, relative residual). Raises
    ConvergenceError if the residual check fails after max_iter.
    """
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    grid = op.grid
    n = grid.nx * grid.ny
    shape2d = grid.shape

    a = spla.LinearOperator(
        (n, n),
        matvec=lambda v: op.apply(v.reshape(shape2d)).ravel(),
        dtype=np.float64,
    )
    m = None
    if op.precond_symbol is not None:
        sym = op.precond_symbol
        m = spla.LinearOperator(
            (n, n),
            matvec=lambda v: grid.inverse(
                grid.forward(v.reshape(shape2d)) / sym
            ).ravel(),
            dtype=np.float64,
        )

    iters = 0

    def count(_xk):
        nonlocal iters
        iters += 1

    b = rhs.values.ravel()
    x_init = None if x0 is None else x0.values.ravel()
    x, info = spla.bicgstab(
        a, b, x0=x_init, rtol=tol, atol=0.0, maxiter=max_iter, M=m, callback=count
    )

    bnorm = float(np.linalg.norm(b))
    resid = float(np.linalg.norm(a.matvec(x) - b))
    rel = resid / bnorm if bnorm > 0 else resid
    if not np.isfinite(x).all() or (info != 0 and rel > tol):
        raise ConvergenceError(
            f"linear solve did not converge: info={info}, rel residual {rel:.3e} "
            f"after {iters} iterations (target {tol:.1e})",
            iterate=RealField(np.nan_to_num(x).reshape(shape2d), grid),
            iters=iters,
            residual=rel,
        )
    return RealField(x.reshape(shape2d), grid), iters, rel


def dense_oracle_solve(spec, state, dt: float, scheme_kind: str):
    """Direct solve of the monolithic (phi, q) step system on small grids.

    Assembles the full matrix by probing the same operator code the
    iterative path uses, then factorizes it. Intended for tests only.
    """
    from .stepper import StepResult, make_step_system

    grid = state.phi_n.grid
    n = grid.nx * grid.ny
    if n > DENSE_ORACLE_MAX_POINTS:
        raise ValueError(
            f"dense oracle limited to {DENSE_ORACLE_MAX_POINTS} points, grid has {n}"
        )

    system = make_step_system(spec, state, dt, scheme_kind)

    def residual_flat(z: np.ndarray) -> np.ndarray:
        p = z[:n].reshape(grid.shape)
        s = z[n:].reshape(grid.shape)
        r1, r2 = system.monolithic_residual(p, s)
        return np.concatenate([r1.ravel(), r2.ravel()])

    r0 = residual_flat(np.zeros(2 * n))
    mat = np.empty((2 * n, 2 * n))
    probe = np.zeros(2 * n)
    for i in range(2 * n):
        probe[i] = 1.0
        mat[:, i] = residual_flat(probe) - r0
        probe[i] = 0.0

    z = np.linalg.solve(mat, -r0)
    resid = float(np.linalg.norm(mat @ z + r0))

    phi_new = RealField(z[:n].reshape(grid.shape), grid)
    q_hat = RealField(z[n:].reshape(grid.shape), grid)
    dissipation = system.dissipation(phi_new.values, q_hat.values)
    return StepResult(
        phi_hat=phi_new,
        q_hat=q_hat,
        dissipation=dissipation,
        solver_iters=0,
        residual=resid,
    )
