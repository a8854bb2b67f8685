import numpy as np
import pytest

from eqflow import (
    RealField,
    build_ac,
    build_ch,
    h_field,
    init_state,
    inner,
    make_grid,
    norm2,
    relax_bdf2,
    relax_cn,
    solve_xi,
    step_bdf2,
    step_cn,
)
from eqflow.driver import preset_config, preset_seven_disks, resolve, run
from eqflow.relax import FeasibilityError

from conftest import random_field


def scan_xi_cn(q_hat, h_new, q_n_unused, d, dt, eta, points=10001):
    """Brute-force oracle: smallest grid xi whose blended field satisfies the
    true CN constraint, evaluated directly on the fields."""
    budget = dt * eta * d
    half_qhat = 0.5 * inner(q_hat, q_hat)
    grid = np.linspace(0.0, 1.0, points)
    for xi in grid:
        blend = RealField(
            xi * q_hat.values + (1 - xi) * h_new.values, q_hat.grid
        )
        lhs = 0.5 * inner(blend, blend) - half_qhat
        if lhs <= budget + 1e-12 * max(1.0, abs(budget) + abs(lhs)):
            return xi
    return 1.0


def scan_xi_bdf2(q_hat, h_new, q_n, d, dt, eta, points=10001):
    budget = dt * eta * d
    grid_obj = q_hat.grid
    shifted_hat = RealField(2 * q_hat.values - q_n.values, grid_obj)
    base = 0.25 * (inner(q_hat, q_hat) + inner(shifted_hat, shifted_hat))
    for xi in np.linspace(0.0, 1.0, points):
        blend = RealField(xi * q_hat.values + (1 - xi) * h_new.values, grid_obj)
        shifted = RealField(2 * blend.values - q_n.values, grid_obj)
        lhs = 0.25 * (inner(blend, blend) + inner(shifted, shifted)) - base
        if lhs <= budget + 1e-12 * max(1.0, abs(budget) + abs(lhs)):
            return xi
    return 1.0


class TestSolveXi:
    def test_double_root_at_one(self):
        assert solve_xi(1.0, -2.0, 1.0) == 1.0

    def test_negative_root_clamps_to_zero(self):
        assert solve_xi(1.0, 0.0, -1.0) == 0.0

    def test_factored_quadratic(self):
        assert solve_xi(2.0, -3.0, 1.0) == pytest.approx(0.5, abs=1e-15)

    def test_degenerate_feasible_origin(self):
        assert solve_xi(0.0, -1.0, -0.5, eps_a=1e-14) == 0.0

    def test_degenerate_linear(self):
        # b xi + c <= 0 with c > 0 needs xi >= -c/b
        assert solve_xi(0.0, -2.0, 1.0, eps_a=1e-14) == pytest.approx(0.5)

    def test_negative_a_rejected(self):
        with pytest.raises(ValueError):
            solve_xi(-1.0, 0.0, 0.0)

    def test_infeasible_raises(self):
        with pytest.raises(FeasibilityError):
            solve_xi(1.0, 1.0, 1.0)

    def test_roundoff_discriminant_clamped(self):
        # double root at 1 with the discriminant pushed barely negative
        xi = solve_xi(1.0, -2.0, 1.0 + 1e-16)
        assert xi == 1.0

    def test_smallest_feasible_on_random_triples(self, rng):
        # feasible interval [r1, r2] must contain xi = 1 for valid inputs
        for _ in range(200):
            a = rng.uniform(0.1, 2.0)
            r1 = rng.uniform(-0.5, 1.0)
            r2 = rng.uniform(1.0, 2.0)
            b = -a * (r1 + r2)
            c = a * r1 * r2
            xi = solve_xi(a, b, c)
            scan = np.linspace(0, 1, 10001)
            vals = a * scan**2 + b * scan + c
            feas = scan[vals <= 1e-12 * (abs(a) + abs(b) + abs(c))]
            assert feas.size
            assert abs(xi - feas[0]) <= 2e-4


class TestRelaxStep:
    def test_consistent_q_hat_returns_h(self, grid16, rng):
        spec = build_ac(eps=0.1)
        phi_new = random_field(grid16, rng, scale=0.5)
        q_hat = h_field(spec, phi_new)
        for fn, args in (
            (relax_cn, (spec, q_hat, phi_new, 1.0, 0.1)),
            (relax_bdf2, (spec, q_hat, phi_new, q_hat, 1.0, 0.1)),
        ):
            q_new, coeffs = fn(*args)
            assert coeffs.xi0 == 0.0
            assert np.array_equal(q_new.values, q_hat.values)

    def test_eta_zero_caps_q_norm(self, grid16, rng):
        # with no dissipation budget the relaxed q cannot grow in norm
        spec = build_ac(eps=0.1)
        phi_new = random_field(grid16, rng, scale=0.5)
        q_hat = RealField(h_field(spec, phi_new).values + 0.1 * rng.standard_normal(grid16.shape), grid16)
        q_new, coeffs = relax_cn(spec, q_hat, phi_new, dissipation=3.0, dt=0.1, eta=0.0)
        assert norm2(q_new) <= norm2(q_hat) * (1 + 1e-12)
        boundary = abs(coeffs.feasibility_residual) <= 10 * max(coeffs.tol_feas, 1e-14)
        assert boundary or coeffs.xi0 in (0.0, 1.0)

    def test_eta_out_of_range(self, grid16, rng):
        spec = build_ac(eps=0.1)
        phi_new = random_field(grid16, rng)
        q_hat = h_field(spec, phi_new)
        with pytest.raises(ValueError):
            relax_cn(spec, q_hat, phi_new, 1.0, 0.1, eta=1.5)

    def test_cn_coefficients_future_proof_identity(self, grid16, rng):
        # direct-expansion oracle: a + b + c must equal the constraint at xi=1
        spec = build_ac(eps=0.1)
        for _ in range(10):
            q_hat = random_field(grid16, rng, scale=0.1)
            phi_new = random_field(grid16, rng, scale=0.1)
            d = float(rng.uniform(0, 0.5))
            dt, eta = 0.2, 0.7
            _q, coeffs = relax_cn(spec, q_hat, phi_new, d, dt, eta)
            direct = -dt * eta * d  # constraint value at xi = 1 collapses to the budget
            total = coeffs.a + coeffs.b + coeffs.c
            assert abs(total - direct) <= max(coeffs.tol_feas, 1e-14)

    def test_bdf2_coefficients_sum_against_direct_expansion(self, grid16, rng):
        spec = build_ac(eps=0.1)
        for _ in range(10):
            q_hat = random_field(grid16, rng, scale=0.1)
            q_n = random_field(grid16, rng, scale=0.1)
            phi_new = random_field(grid16, rng, scale=0.1)
            d = float(rng.uniform(0, 0.5))
            dt, eta = 0.05, 1.0
            _q, coeffs = relax_bdf2(spec, q_hat, phi_new, q_n, d, dt, eta)
            # oracle: evaluate the shifted constraint at xi=1 with raw field algebra
            h_new = h_field(spec, phi_new)
            blend = q_hat  # xi = 1
            shifted = RealField(2 * blend.values - q_n.values, grid16)
            shifted_hat = RealField(2 * q_hat.values - q_n.values, grid16)
            lhs = 0.25 * (
                inner(blend, blend) + inner(shifted, shifted)
                - inner(q_hat, q_hat) - inner(shifted_hat, shifted_hat)
            ) - dt * eta * d
            total = coeffs.a + coeffs.b + coeffs.c
            assert abs(total - lhs) <= max(coeffs.tol_feas, 1e-14)

    def test_cn_xi_against_grid_scan_from_disks(self):
        # one large CN step from the seven-disks state, maximum relaxation
        grid = make_grid(64, 64, 1.0, 1.0)
        spec = build_ac(eps=0.015)
        st = init_state(spec, preset_seven_disks(grid, eps=0.015))
        res = step_cn(spec, st, 0.75)
        q_new, coeffs = relax_cn(spec, res.q_hat, res.phi_hat, res.dissipation, 0.75, 1.0)
        h_new = h_field(spec, res.phi_hat)
        oracle = scan_xi_cn(res.q_hat, h_new, None, res.dissipation, 0.75, 1.0)
        assert abs(coeffs.xi0 - oracle) <= 2e-4

    def test_bdf2_xi_against_grid_scan_ch(self):
        grid = make_grid(64, 64, 1.0, 1.0)
        spec = build_ch(eps=0.015, mobility=1.0)
        st = init_state(spec, preset_seven_disks(grid, eps=0.015))
        # advance a couple of steps so the history is genuine
        for _ in range(2):
            res = step_bdf2(spec, st, 0.005)
            q_new, _ = relax_bdf2(spec, res.q_hat, res.phi_hat, st.q_n, res.dissipation, 0.005, 1.0)
            st = st.advance(res.phi_hat, q_new, 0.005)
        res = step_bdf2(spec, st, 0.005)
        q_new, coeffs = relax_bdf2(spec, res.q_hat, res.phi_hat, st.q_n, res.dissipation, 0.005, 1.0)
        h_new = h_field(spec, res.phi_hat)
        oracle = scan_xi_bdf2(res.q_hat, h_new, st.q_n, res.dissipation, 0.005, 1.0)
        assert abs(coeffs.xi0 - oracle) <= 2e-4

    def test_xi_in_unit_interval_and_feasible(self, grid16, rng):
        spec = build_ch(eps=0.1, mobility=1.0)
        st = init_state(spec, random_field(grid16, rng, scale=0.4, smooth=True))
        for _ in range(5):
            res = step_cn(spec, st, 0.05)
            q_new, coeffs = relax_cn(spec, res.q_hat, res.phi_hat, res.dissipation, 0.05, 1.0)
            assert 0.0 <= coeffs.xi0 <= 1.0
            assert coeffs.feasibility_residual <= max(coeffs.tol_feas, 1e-14)
            st = st.advance(res.phi_hat, q_new, 0.05)

    def test_forced_xi_one_reproduces_baseline_exactly(self):
        base = preset_config("seven_disks", model="ac", nx=32, ny=32,
                             dt=0.75, t_end=7.5, relaxed=False, log_every=1)
        forced = preset_config("seven_disks", model="ac", nx=32, ny=32,
                               dt=0.75, t_end=7.5, relaxed=True, force_xi=1.0, log_every=1)
        sb, sf = run(base), run(forced)
        assert np.array_equal(sb.final_state.phi_n.values, sf.final_state.phi_n.values)
        assert np.array_equal(sb.final_state.q_n.values, sf.final_state.q_n.values)

    def test_relaxed_tracks_h_closer_than_baseline(self):
        base = preset_config("seven_disks", model="ac", nx=32, ny=32,
                             dt=0.75, t_end=15.0, relaxed=False, log_every=1)
        rel = preset_config("seven_disks", model="ac", nx=32, ny=32,
                            dt=0.75, t_end=15.0, relaxed=True, log_every=1)
        sb, sr = run(base), run(rel)
        drift_b = np.mean([r.q_consistency for r in sb.rows])
        drift_r = np.mean([r.q_consistency for r in sr.rows])
        assert drift_r < drift_b
