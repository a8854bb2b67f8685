import math

import numpy as np
import pytest

import eqflow as eq
from eqflow import (
    RealField,
    build_ac,
    build_ch,
    build_mbe,
    build_pfc,
    chemical_potential,
    g_field,
    gradient,
    gvec_field,
    h_field,
    inner,
    inner_vec,
    make_grid,
    modified_energy,
    norm2,
    original_energy,
)
from eqflow.models import build_model
from eqflow.spectral import divergence

from conftest import random_field

SQRT2 = math.sqrt(2.0)


def all_models():
    return [
        build_ac(eps=0.1),
        build_ch(eps=0.1, mobility=1.0),
        build_mbe(eps=0.3, mobility=1.0),
        build_pfc(a0=1.0, b0=0.025),
    ]


class TestBuilders:
    def test_ac_h_at_zero(self, grid16):
        spec = build_ac(eps=0.1, gamma0=0.0)
        h = h_field(spec, RealField.full(grid16, 0.0))
        assert np.allclose(h.values, -0.7071067811865476, atol=1e-15)

    def test_ac_well_minimum_is_stationary(self, grid16):
        spec = build_ac(eps=0.1, gamma0=0.0)
        phi = RealField.full(grid16, 1.0)
        q = h_field(spec, phi)
        assert np.max(np.abs(q.values)) < 1e-14
        mu = chemical_potential(spec, phi, q)
        assert np.max(np.abs(mu.values)) < 1e-12

    def test_ac_g_is_linear(self, grid16):
        spec = build_ac(eps=0.1)
        g = g_field(spec, RealField.full(grid16, 2.0))
        assert np.allclose(g.values, 2 * SQRT2)

    def test_ac_rejects_bad_eps(self):
        with pytest.raises(ValueError):
            build_ac(eps=0.0)

    def test_ch_mobility_vanishes_at_zero_mode(self, grid16):
        spec = build_ch(eps=0.1, mobility=2.0)
        mob = spec.mobility_symbol(grid16.k2)
        assert mob[0, 0] == 0.0
        assert mob.min() >= 0.0

    def test_ch_flat_state_has_zero_potential(self, grid16):
        spec = build_ch(eps=0.1, mobility=1.0, gamma0=0.0)
        phi = RealField.full(grid16, 1.0)
        mu = chemical_potential(spec, phi, h_field(spec, phi))
        assert np.max(np.abs(mu.values)) < 1e-12

    def test_ch_rejects_bad_params(self):
        with pytest.raises(ValueError):
            build_ch(eps=-1.0, mobility=1.0)
        with pytest.raises(ValueError):
            build_ch(eps=0.1, mobility=0.0)

    def test_ch_energy_against_quadrature_oracle(self, rng):
        # oracle: assemble the density from scratch with its own transform calls
        grid = make_grid(32, 32, 1.0, 1.0)
        spec = build_ch(eps=0.1, mobility=1.0)
        phi = random_field(grid, rng, smooth=True)
        fh = np.fft.rfft2(phi.values)
        kx = 2 * np.pi * np.fft.fftfreq(32, d=1 / 32)[:, None]
        ky = 2 * np.pi * np.fft.rfftfreq(32, d=1 / 32)[None, :]
        px = np.fft.irfft2(1j * kx * fh, s=(32, 32))
        py = np.fft.irfft2(1j * ky * fh, s=(32, 32))
        density = 0.5 * 0.01 * (px**2 + py**2) + 0.25 * (phi.values**2 - 1) ** 2
        oracle = float(np.sum(density)) / 32**2
        assert original_energy(spec, phi) == pytest.approx(oracle, rel=1e-12)

    def test_mbe_h_of_flat_field(self, grid8_2pi):
        spec = build_mbe(eps=0.1, mobility=1.0, gamma0=0.0)
        h = h_field(spec, RealField.full(grid8_2pi, 4.2))
        assert np.allclose(h.values, -SQRT2 / 2.0, atol=1e-14)

    def test_mbe_h_of_sine(self):
        # phi = sin x: |grad phi|^2 = cos^2 x, so h = -sqrt(2)/2 at x = pi/2
        grid = make_grid(64, 64, 2 * np.pi, 2 * np.pi)
        spec = build_mbe(eps=0.1, mobility=1.0)
        phi = RealField.from_function(grid, lambda x, y: np.sin(x))
        h = h_field(spec, phi)
        i = 16  # x = pi/2 on a 64-point grid
        assert np.allclose(h.values[i, :], -SQRT2 / 2.0, atol=1e-12)

    def test_mbe_g_vanishes_and_gvec_does_not(self, grid8_2pi, rng):
        spec = build_mbe(eps=0.1, mobility=1.0)
        phi = random_field(grid8_2pi, rng)
        assert np.all(g_field(spec, phi).values == 0.0)
        v = gvec_field(spec, phi)
        assert norm2(v.x_comp) > 0

    def test_mbe_gvec_of_flat_field_is_zero(self, grid8_2pi):
        spec = build_mbe(eps=0.1, mobility=1.0)
        v = gvec_field(spec, RealField.full(grid8_2pi, 0.0))
        assert np.max(np.abs(v.x_comp.values)) < 1e-13
        assert np.max(np.abs(v.y_comp.values)) < 1e-13

    def test_mbe_flux_adjointness(self, rng):
        # oracle: (G(grad phi), grad psi) = -(div G(grad phi), psi)
        grid = make_grid(16, 16, 2 * np.pi, 2 * np.pi)
        spec = build_mbe(eps=0.2, mobility=1.0)
        phi = random_field(grid, rng, smooth=True)
        psi = random_field(grid, rng, smooth=True)
        v = gvec_field(spec, phi)
        lhs = inner_vec(v, gradient(psi))
        rhs = -inner(divergence(v), psi)
        assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))

    def test_pfc_h_at_zero(self, grid16):
        spec = build_pfc(a0=1.0, b0=0.5, c0=2.0)
        h = h_field(spec, RealField.full(grid16, 0.0))
        assert np.allclose(h.values, math.sqrt(2 * 2.0), atol=1e-14)

    def test_pfc_radicand_minimum_with_auto_c0(self, grid16):
        # at phi^2 = b0 + gamma0 the radicand bottoms out at exactly 1
        b0 = 0.4
        spec = build_pfc(a0=1.0, b0=b0)
        phi = RealField.full(grid16, math.sqrt(b0))
        h = h_field(spec, phi)
        assert np.allclose(h.values, SQRT2, atol=1e-12)

    def test_pfc_rejects_small_c0(self):
        with pytest.raises(ValueError, match="need c0 >"):
            build_pfc(a0=1.0, b0=1.0, c0=0.25)

    def test_pfc_radicand_guard_reports_location(self, grid16):
        spec = build_pfc(a0=1.0, b0=1.0, c0=0.25 + 1e-9)
        phi = RealField.full(grid16, 1.0)  # radicand bottoms out at 1e-9 < floor
        with pytest.raises(ValueError, match="radicand"):
            h_field(spec, phi)

    def test_pfc_g_matches_h_derivative(self, grid16, rng):
        # oracle: central finite difference of h in phi
        spec = build_pfc(a0=1.0, b0=0.025)
        phi = RealField(rng.uniform(-1.5, 1.5, grid16.shape), grid16)
        step = 1e-6
        up = spec.h(phi.values + step, None, None)
        dn = spec.h(phi.values - step, None, None)
        fd = (up - dn) / (2 * step)
        g = g_field(spec, phi).values
        assert np.max(np.abs(fd - g)) <= 1e-6 * max(1.0, np.max(np.abs(g)))

    def test_unknown_model_name(self):
        with pytest.raises(ValueError):
            build_model("kdv")


class TestFieldEvaluation:
    def test_ac_h_at_minus_one(self, grid16):
        spec = build_ac(eps=0.1, gamma0=0.0)
        h = h_field(spec, RealField.full(grid16, -1.0))
        assert np.max(np.abs(h.values)) < 1e-15

    def test_ch_h_pointwise_oracle(self, grid16, rng):
        spec = build_ch(eps=0.1, mobility=1.0, gamma0=0.3)
        phi = random_field(grid16, rng)
        h = h_field(spec, phi)
        oracle = np.empty(grid16.shape)
        for i in range(grid16.nx):
            for j in range(grid16.ny):
                oracle[i, j] = (phi.values[i, j] ** 2 - 1.0 - 0.3) / SQRT2
        assert np.array_equal(h.values, oracle)


class TestEnergies:
    def test_ac_original_energy_at_zero(self):
        grid = make_grid(16, 16, 1.0, 1.0)
        spec = build_ac(eps=0.1)
        assert original_energy(spec, RealField.full(grid, 0.0)) == pytest.approx(0.25, abs=1e-14)

    def test_ac_original_energy_at_minimum(self, grid16):
        spec = build_ac(eps=0.1)
        assert abs(original_energy(spec, RealField.full(grid16, 1.0))) < 1e-14

    def test_pfc_original_energy_at_zero(self, grid16):
        spec = build_pfc()
        assert abs(original_energy(spec, RealField.full(grid16, 0.0))) < 1e-14

    def test_modified_energy_matches_original_at_consistent_q(self):
        grid = make_grid(16, 16, 1.0, 1.0)
        spec = build_ac(eps=0.1, gamma0=0.0)
        phi = RealField.full(grid, 0.0)
        q = h_field(spec, phi)
        assert modified_energy(spec, phi, q) == pytest.approx(0.25, abs=1e-14)

    def test_modified_energy_of_zero_fields(self, grid16):
        spec = build_ac(eps=0.1)
        zero = RealField.full(grid16, 0.0)
        assert modified_energy(spec, zero, zero) == 0.0

    def test_modified_energy_against_dense_symbol_oracle(self, grid16, rng):
        # oracle: materialize L0 as a dense matrix by probing unit vectors
        spec = build_ch(eps=0.2, mobility=1.0, gamma0=0.1)
        phi = random_field(grid16, rng)
        q = random_field(grid16, rng)
        n = grid16.nx * grid16.ny
        l0 = spec.l0_symbol(grid16.k2)
        mat = np.empty((n, n))
        basis = np.zeros(n)
        for i in range(n):
            basis[i] = 1.0
            mat[:, i] = grid16.inverse(l0 * grid16.forward(basis.reshape(grid16.shape))).ravel()
            basis[i] = 0.0
        quad = 0.5 * grid16.cell_weight * phi.values.ravel() @ mat @ phi.values.ravel()
        oracle = quad + 0.5 * inner(q, q)
        assert modified_energy(spec, phi, q) == pytest.approx(oracle, rel=1e-12)

    def test_modified_minus_original_is_constant(self, rng):
        grid = make_grid(16, 16, 2 * np.pi, 2 * np.pi)
        for spec in all_models():
            offsets = []
            for _ in range(6):
                phi = random_field(grid, rng, scale=0.4, smooth=True)
                q = h_field(spec, phi)
                offsets.append(modified_energy(spec, phi, q) - original_energy(spec, phi))
            assert np.var(offsets) <= 1e-10, spec.name


class TestChemicalPotential:
    def test_ac_reduces_to_nonlinear_form(self, rng):
        # oracle: direct evaluation of -eps^2 Lap phi + phi^3 - phi
        grid = make_grid(32, 32, 1.0, 1.0)
        spec = build_ac(eps=0.1, gamma0=0.0)
        phi = random_field(grid, rng, scale=0.5, smooth=True)
        mu = chemical_potential(spec, phi, h_field(spec, phi))
        oracle = -0.01 * eq.laplacian(phi).values + phi.values**3 - phi.values
        assert np.max(np.abs(mu.values - oracle)) <= 1e-12 * max(1.0, np.max(np.abs(oracle)))

    def test_mbe_flat_state_is_stationary(self, grid8_2pi):
        spec = build_mbe(eps=0.1, mobility=1.0, gamma0=0.0)
        phi = RealField.full(grid8_2pi, 0.7)
        mu = chemical_potential(spec, phi, h_field(spec, phi))
        assert np.max(np.abs(mu.values)) < 1e-12

    def test_gateaux_derivative_all_models(self, rng):
        # oracle: central difference of the original energy along a random direction
        grid = make_grid(24, 24, 2 * np.pi, 2 * np.pi)
        for spec in all_models():
            phi = random_field(grid, rng, scale=0.3, smooth=True)
            psi = random_field(grid, rng, scale=1.0, smooth=True)
            mu = chemical_potential(spec, phi, h_field(spec, phi))
            predicted = inner(mu, psi)
            s = 1e-5
            up = original_energy(spec, RealField(phi.values + s * psi.values, grid))
            dn = original_energy(spec, RealField(phi.values - s * psi.values, grid))
            fd = (up - dn) / (2 * s)
            assert abs(predicted - fd) <= 1e-6 * max(1.0, abs(fd)), spec.name

    def test_g_fields_are_h_partials(self, rng):
        # oracle: directional finite difference of h under phi perturbations
        grid = make_grid(16, 16, 2 * np.pi, 2 * np.pi)
        for spec in all_models():
            phi = random_field(grid, rng, scale=0.3, smooth=True)
            psi = random_field(grid, rng, scale=1.0, smooth=True)
            s = 1e-6
            hp = h_field(spec, RealField(phi.values + s * psi.values, grid)).values
            hm = h_field(spec, RealField(phi.values - s * psi.values, grid)).values
            fd = (hp - hm) / (2 * s)
            g = g_field(spec, phi).values * psi.values
            if spec.gvec is not None:
                gv = gvec_field(spec, phi)
                dpsi = gradient(psi)
                g = g + gv.x_comp.values * dpsi.x_comp.values + gv.y_comp.values * dpsi.y_comp.values
            scale = max(1.0, np.max(np.abs(fd)))
            assert np.max(np.abs(fd - g)) <= 1e-6 * scale, spec.name
