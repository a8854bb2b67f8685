"""Quadratized gradient-flow models.

A model couples a phase field phi to an auxiliary field q = h(phi, grad phi)
chosen so that the free energy becomes the quadratic form

    E(phi, q) = 1/2 (phi, L0 phi) + 1/2 ||q||^2   (+ a bookkeeping constant),

with L0 a constant-coefficient self-adjoint operator (a wavenumber symbol
here) and a positive semi-definite mobility, also a symbol. Four concrete
models ship:

  ac   Allen-Cahn:        h = (phi^2 - 1 - g0)/sqrt(2),  L0 = -eps^2 Lap + g0, mobility 1
  ch   Cahn-Hilliard:     same h,                        L0 = -eps^2 Lap + g0, mobility M |k|^2
  mbe  thin-film growth   h = (|grad phi|^2 - 1 - g0)/sqrt(2),
       with slope selection: L0 = eps^2 Lap^2 - g0 Lap,  mobility M
  pfc  phase field crystal: h = sqrt(2) sqrt(phi^4/4 - (b0+g0)/2 phi^2 + C0),
                            L0 = (a0 + Lap)^2 + g0,      mobility |k|^2

The gamma0 shift moves bulk-potential weight into L0; its default is 0,
which makes the quadratic energy match the original energy up to a constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional

import numpy as np

from .spectral import (
    Grid,
    RealField,
    VectorField,
    apply_symbol,
    divergence,
    gradient,
    inner,
    laplacian,
    quadratic_symbol,
)

__all__ = [
    "ModelSpec",
    "build_ac",
    "build_ch",
    "build_mbe",
    "build_pfc",
    "build_model",
    "h_field",
    "g_field",
    "gvec_field",
    "original_energy",
    "modified_energy",
    "chemical_potential",
]

SQRT2 = math.sqrt(2.0)

# smallest admissible radicand for square-root auxiliary variables (pfc)
RADICAND_FLOOR = 1e-8


@dataclass(frozen=True)
class ModelSpec:
    """Immutable description of one quadratized model.

    The array-level callbacks work on raw numpy values; use h_field /
    g_field / gvec_field for the grid-aware wrappers.
    """

    name: str
    params: Mapping[str, float]
    conserved: bool
    needs_gradient: bool  # h depends on grad(phi), not just phi
    l0_symbol: Callable[[np.ndarray], np.ndarray]
    mobility_symbol: Callable[[np.ndarray], np.ndarray]
    h: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]
    g: Callable[[np.ndarray], np.ndarray]
    gvec: Optional[Callable[[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]]
    energy_density: Callable[[np.ndarray, np.ndarray, np.ndarray, np.ndarray], np.ndarray]


def build_ac(eps: float, gamma0: float = 0.0) -> ModelSpec:
    """Allen-Cahn: d/dt phi = eps^2 Lap phi - phi^3 + phi, non-conserved."""
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    if gamma0 < 0:
        raise ValueError(f"gamma0 must be non-negative, got {gamma0}")
    e2 = eps * eps

    return ModelSpec(
        name="ac",
        params={"eps": eps, "gamma0": gamma0},
        conserved=False,
        needs_gradient=False,
        l0_symbol=lambda k2: e2 * k2 + gamma0,
        mobility_symbol=lambda k2: np.ones_like(k2),
        h=lambda phi, gx, gy: (phi * phi - 1.0 - gamma0) / SQRT2,
        g=lambda phi: SQRT2 * phi,
        gvec=None,
        energy_density=lambda phi, gx, gy, lap: 0.5 * e2 * (gx * gx + gy * gy)
        + 0.25 * (phi * phi - 1.0) ** 2,
    )


def build_ch(eps: float, mobility: float, gamma0: float = 0.0) -> ModelSpec:
    """Cahn-Hilliard with the double-well potential; conserves the mean."""
    if eps <= 0 or mobility <= 0:
        raise ValueError(f"eps and mobility must be positive, got {eps}, {mobility}")
    if gamma0 < 0:
        raise ValueError(f"gamma0 must be non-negative, got {gamma0}")
    e2 = eps * eps

    return ModelSpec(
        name="ch",
        params={"eps": eps, "M": mobility, "gamma0": gamma0},
        conserved=True,
        needs_gradient=False,
        l0_symbol=lambda k2: e2 * k2 + gamma0,
        mobility_symbol=lambda k2: mobility * k2,
        h=lambda phi, gx, gy: (phi * phi - 1.0 - gamma0) / SQRT2,
        g=lambda phi: SQRT2 * phi,
        gvec=None,
        energy_density=lambda phi, gx, gy, lap: 0.5 * e2 * (gx * gx + gy * gy)
        + 0.25 * (phi * phi - 1.0) ** 2,
    )


def build_mbe(eps: float, mobility: float, gamma0: float = 0.0) -> ModelSpec:
    """Height-field growth model with slope selection.

    q depends on grad(phi) only, so dq/dphi vanishes and the vector
    partial sqrt(2) grad(phi) carries all the coupling.
    """
    if eps <= 0 or mobility <= 0:
        raise ValueError(f"eps and mobility must be positive, got {eps}, {mobility}")
    if gamma0 < 0:
        raise ValueError(f"gamma0 must be non-negative, got {gamma0}")
    e2 = eps * eps

    return ModelSpec(
        name="mbe",
        params={"eps": eps, "M": mobility, "gamma0": gamma0},
        conserved=False,
        needs_gradient=True,
        l0_symbol=lambda k2: e2 * k2 * k2 + gamma0 * k2,
        mobility_symbol=lambda k2: np.full_like(k2, mobility),
        h=lambda phi, gx, gy: (gx * gx + gy * gy - 1.0 - gamma0) * (SQRT2 / 2.0),
        g=lambda phi: np.zeros_like(phi),
        gvec=lambda gx, gy: (SQRT2 * gx, SQRT2 * gy),
        energy_density=lambda phi, gx, gy, lap: 0.5 * e2 * lap * lap
        + 0.25 * (gx * gx + gy * gy - 1.0) ** 2,
    )


def build_pfc(
    a0: float = 1.0,
    b0: float = 0.025,
    gamma0: float = 0.0,
    c0: Optional[float] = None,
) -> ModelSpec:
    """Phase field crystal model, conserved flow.

    The quartic radicand phi^4/4 - (b0+gamma0)/2 phi^2 + c0 has global
    minimum c0 - (b0+gamma0)^2/4, so c0 must exceed (b0+gamma0)^2/4 for q
    to stay real. The auto rule adds a unit margin.
    """
    if gamma0 < 0:
        raise ValueError(f"gamma0 must be non-negative, got {gamma0}")
    bg = b0 + gamma0
    c0_min = bg * bg / 4.0
    if c0 is None:
        c0 = c0_min + 1.0
    elif c0 <= c0_min:
        raise ValueError(
            f"c0={c0} too small: the radicand reaches {c0 - c0_min:g} at phi^2={bg:g}; "
            f"need c0 > {c0_min:g}"
        )

    def radicand(phi):
        return 0.25 * phi**4 - 0.5 * bg * phi * phi + c0

    def h(phi, gx, gy):
        rad = radicand(phi)
        _check_radicand(rad, phi)
        return SQRT2 * np.sqrt(rad)

    def g(phi):
        rad = radicand(phi)
        _check_radicand(rad, phi)
        return (phi**3 - bg * phi) / (SQRT2 * np.sqrt(rad))

    return ModelSpec(
        name="pfc",
        params={"a0": a0, "b0": b0, "gamma0": gamma0, "C0": c0},
        conserved=True,
        needs_gradient=False,
        l0_symbol=lambda k2: (a0 - k2) ** 2 + gamma0,
        mobility_symbol=lambda k2: k2.copy(),
        h=h,
        g=g,
        gvec=None,
        energy_density=lambda phi, gx, gy, lap: 0.5 * (a0 * phi + lap) ** 2
        - 0.5 * b0 * phi * phi
        + 0.25 * phi**4,
    )


def _check_radicand(rad: np.ndarray, phi: np.ndarray) -> None:
    rmin = float(rad.min())
    if rmin < RADICAND_FLOOR:
        i = np.unravel_index(int(np.argmin(rad)), rad.shape)
        raise ValueError(
            f"auxiliary-variable radicand dropped to {rmin:g} (< {RADICAND_FLOOR:g}) "
            f"at grid index {tuple(int(v) for v in i)} where phi={float(phi[i]):g}; "
            "increase c0"
        )


_BUILDERS = {"ac": build_ac, "ch": build_ch, "mbe": build_mbe, "pfc": build_pfc}


def build_model(name: str, **params: float) -> ModelSpec:
    """Dispatch to a builder by model name."""
    try:
        builder = _BUILDERS[name]
    except KeyError:
        raise ValueError(f"unknown model {name!r}; expected one of {sorted(_BUILDERS)}")
    return builder(**params)


def _grad_values(phi: RealField) -> tuple[np.ndarray, np.ndarray]:
    v = gradient(phi)
    return v.x_comp.values, v.y_comp.values


def h_field(spec: ModelSpec, phi: RealField) -> RealField:
    """Evaluate q = h(phi) pointwise; gradients are spectral where needed."""
    if spec.needs_gradient:
        gx, gy = _grad_values(phi)
    else:
        gx = gy = None
    return RealField(spec.h(phi.values, gx, gy), phi.grid)


def g_field(spec: ModelSpec, phi: RealField) -> RealField:
    return RealField(spec.g(phi.values), phi.grid)


def gvec_field(spec: ModelSpec, phi: RealField) -> VectorField:
    grid = phi.grid
    if spec.gvec is None:
        z = np.zeros(grid.shape)
        return VectorField(RealField(z, grid), RealField(z.copy(), grid))
    gx, gy = _grad_values(phi)
    qx, qy = spec.gvec(gx, gy)
    return VectorField(RealField(qx, grid), RealField(qy, grid))


def original_energy(spec: ModelSpec, phi: RealField) -> float:
    """Quadrature of the non-quadratized energy density."""
    gx, gy = _grad_values(phi)
    lap = laplacian(phi).values
    density = spec.energy_density(phi.values, gx, gy, lap)
    return phi.grid.cell_weight * float(np.sum(density))


def modified_energy(spec: ModelSpec, phi: RealField, q: RealField) -> float:
    """Quadratic energy 1/2 (phi, L0 phi) + 1/2 ||q||^2.

    Reported without subtracting the bookkeeping constant, so at q = h(phi)
    this differs from original_energy only by a phi-independent constant
    (zero for ac/ch/mbe at gamma0 = 0).
    """
    if phi.grid is not q.grid:
        raise ValueError("phi and q live on different grids")
    l0 = spec.l0_symbol(phi.grid.k2)
    return 0.5 * quadratic_symbol(phi, l0) + 0.5 * inner(q, q)


def chemical_potential(spec: ModelSpec, phi: RealField, q: RealField) -> RealField:
    """mu = L0 phi + q g(phi) - div(q G(grad phi)), derivatives spectral."""
    if phi.grid is not q.grid:
        raise ValueError("phi and q live on different grids")
    grid = phi.grid
    mu = apply_symbol(phi, spec.l0_symbol(grid.k2)).values + q.values * spec.g(phi.values)
    if spec.gvec is not None:
        gx, gy = _grad_values(phi)
        qx, qy = spec.gvec(gx, gy)
        flux = VectorField(
            RealField(q.values * qx, grid), RealField(q.values * qy, grid)
        )
        mu = mu - divergence(flux).values
    return RealField(mu, grid)
