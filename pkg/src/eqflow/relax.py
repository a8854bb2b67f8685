"""Relaxation of the auxiliary field toward its pointwise definition.

After a baseline step the auxiliary field q_hat drifts away from h(phi_new)
by the temporal truncation error. The relaxation step replaces it with

    q_new = xi0 * q_hat + (1 - xi0) * h(phi_new)

where xi0 is the smallest value in [0, 1] for which the step's quadratic
energy budget still decreases, i.e. the smallest root selection of a scalar
quadratic constraint a xi^2 + b xi + c <= 0. Feasibility of xi = 1 is an
algebraic consequence of the baseline step's energy identity
(a + b + c = -dt * eta * D <= 0), so an infeasible triple signals a broken
solve upstream rather than an input to be absorbed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .models import ModelSpec, h_field
from .spectral import RealField, inner

__all__ = ["RelaxCoeffs", "FeasibilityError", "solve_xi", "relax_cn", "relax_bdf2"]

# relative feasibility slack and the degenerate-quadratic threshold
TOL_FEAS = 1e-12
EPS_A = 1e-14


class FeasibilityError(RuntimeError):
    """xi = 1 violates the constraint; the step-1 energy identity is broken."""


@dataclass(frozen=True)
class RelaxCoeffs:
    """Quadratic constraint coefficients and the chosen blend weight.

    tol_feas is the absolute feasibility slack used for this step. It is
    scaled by the magnitudes of the inner products the coefficients came
    from, not by |a|+|b|+|c|: near equilibrium the three coefficients cancel
    to zero while their individual roundoff stays at machine epsilon times
    the field norms.
    """

    a: float
    b: float
    c: float
    eta: float
    xi0: float
    tol_feas: float

    @property
    def feasibility_residual(self) -> float:
        """Constraint value at xi0; <= tol_feas by construction."""
        return self.a * self.xi0**2 + self.b * self.xi0 + self.c


def solve_xi(
    a: float, b: float, c: float, eps_a: float = 0.0, tol_feas: Optional[float] = None
) -> float:
    """Smallest xi in [0, 1] with a xi^2 + b xi + c <= 0.

    Requires a >= 0 and feasibility at xi = 1. For a above the degeneracy
    threshold this is max(0, smaller root); a negative discriminant can only
    arise from roundoff and is clamped to a double root.
    """
    if a < 0:
        raise ValueError(f"coefficient a is a squared norm and must be >= 0, got {a}")
    tol = TOL_FEAS * (abs(a) + abs(b) + abs(c)) if tol_feas is None else tol_feas
    if a + b + c > tol:
        raise FeasibilityError(
            f"xi=1 infeasible: a+b+c = {a + b + c:.3e} > {tol:.3e}; "
            "the baseline step's energy identity did not hold to solver tolerance"
        )
    if a <= eps_a:
        # constraint is (at most) linear: b xi + c <= 0
        if c <= tol:
            return 0.0
        if b < 0:
            return min(1.0, max(0.0, -c / b))
        return 1.0
    disc = b * b - 4.0 * a * c
    if disc < 0.0:
        disc = 0.0
    root = (-b - math.sqrt(disc)) / (2.0 * a)
    return min(1.0, max(0.0, root))


def _blend(q_hat: RealField, h_new: RealField, xi0: float) -> RealField:
    # exact endpoints so that xi0 = 1 reproduces the baseline bit-for-bit
    if xi0 == 1.0:
        return q_hat.copy()
    if xi0 == 0.0:
        return h_new.copy()
    return RealField(
        xi0 * q_hat.values + (1.0 - xi0) * h_new.values, q_hat.grid
    )


def _field_scale2(q_hat: RealField, h_new: RealField) -> float:
    return max(inner(q_hat, q_hat), inner(h_new, h_new), 1e-300)


def relax_cn(
    spec: ModelSpec,
    q_hat: RealField,
    phi_new: RealField,
    dissipation: float,
    dt: float,
    eta: float = 1.0,
) -> tuple[RealField, RelaxCoeffs]:
    """Relaxation after a CN step.

    The constraint bounds the q-energy change by the dissipation budget:
    1/2 ||q_new||^2 - 1/2 ||q_hat||^2 <= dt * eta * D.
    """
    _check_eta_dt(eta, dt)
    d = max(float(dissipation), 0.0)
    h_new = h_field(spec, phi_new)
    diff = RealField(q_hat.values - h_new.values, q_hat.grid)

    qq = inner(q_hat, q_hat)
    hh = inner(h_new, h_new)
    a = 0.5 * inner(diff, diff)
    b = inner(q_hat, h_new) - hh
    c = 0.5 * hh - 0.5 * qq - dt * eta * d

    tol_feas = TOL_FEAS * (qq + hh + dt * eta * d)
    xi0 = solve_xi(a, b, c, eps_a=EPS_A * _field_scale2(q_hat, h_new), tol_feas=tol_feas)
    return _blend(q_hat, h_new, xi0), RelaxCoeffs(
        a=a, b=b, c=c, eta=eta, xi0=xi0, tol_feas=tol_feas
    )


def relax_bdf2(
    spec: ModelSpec,
    q_hat: RealField,
    phi_new: RealField,
    q_n: RealField,
    dissipation: float,
    dt: float,
    eta: float = 1.0,
) -> tuple[RealField, RelaxCoeffs]:
    """Relaxation after a BDF2 step, against the shifted quadratic energy:

    1/4 (||q_new||^2 + ||2 q_new - q_n||^2)
      - 1/4 (||q_hat||^2 + ||2 q_hat - q_n||^2) <= dt * eta * D.
    """
    _check_eta_dt(eta, dt)
    d = max(float(dissipation), 0.0)
    grid = q_hat.grid
    h_new = h_field(spec, phi_new)
    diff = RealField(q_hat.values - h_new.values, grid)
    shifted_h = RealField(2.0 * h_new.values - q_n.values, grid)
    shifted_q = RealField(2.0 * q_hat.values - q_n.values, grid)

    qq = inner(q_hat, q_hat)
    hh = inner(h_new, h_new)
    ss_h = inner(shifted_h, shifted_h)
    ss_q = inner(shifted_q, shifted_q)
    a = 1.25 * inner(diff, diff)
    b = 0.5 * inner(diff, h_new) + inner(diff, shifted_h)
    c = 0.25 * (hh + ss_h - qq - ss_q) - dt * eta * d

    tol_feas = TOL_FEAS * (qq + hh + ss_h + ss_q + dt * eta * d)
    xi0 = solve_xi(a, b, c, eps_a=EPS_A * _field_scale2(q_hat, h_new), tol_feas=tol_feas)
    return _blend(q_hat, h_new, xi0), RelaxCoeffs(
        a=a, b=b, c=c, eta=eta, xi0=xi0, tol_feas=tol_feas
    )


def _check_eta_dt(eta: float, dt: float) -> None:
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta must lie in [0, 1], got {eta}")
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
