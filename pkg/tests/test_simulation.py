"""Tests for the projection, right-hand sides and the time stepper."""

import math
from dataclasses import replace

import numpy as np
import pytest

from rotcouette.linear import ModeStateK, ZeroModeState, evolve_K_closed, zero_mode_evolve
from rotcouette.simulation import (
    BlowUpError,
    SimConfig,
    advective_rate_bound,
    divergence_defect,
    initial_condition,
    leray_project_L,
    linear_rhs,
    nonlinear_rhs,
    run,
    step,
    velocity_from_arrays,
    zero_velocity,
)
from rotcouette.spectral import (
    GridSpec,
    SpectralField,
    WaveVector,
    hermitian_defect,
    hermitian_symmetrize,
    sobolev_norm,
)


GRID = GridSpec(8, 16, 8, Ly=32.0)


def random_velocity(grid, rng, t=0.0, project=True):
    arrs = []
    for _ in range(3):
        c = (rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape))
        f = hermitian_symmetrize(SpectralField(grid, c * grid.dealias_mask, t))
        arrs.append(f.coeffs)
    U = velocity_from_arrays(grid, *arrs, time=t)
    if project:
        U = leray_project_L(U.components(), t)
        for c in U.coeff_arrays():
            c[0, 0, 0] = 0.0
    return U


def mode_index(grid, k, j, l):
    return (k % grid.Nx, j % grid.Ny, l % grid.Nz)


class TestLerayProjection:
    def test_divergence_free_unchanged(self):
        rng = np.random.default_rng(60)
        U = random_velocity(GRID, rng, t=0.4)
        again = leray_project_L(U.components(), 0.4)
        for a, b in zip(U.coeff_arrays(), again.coeff_arrays()):
            assert np.max(np.abs(a - b)) <= 1e-12 * max(1.0, np.max(np.abs(a)))

    def test_gradient_in_kernel(self):
        rng = np.random.default_rng(61)
        phi = hermitian_symmetrize(
            SpectralField(GRID, rng.standard_normal(GRID.shape) * GRID.dealias_mask + 0j, 0.7)
        ).coeffs
        t = 0.7
        kk, ee, ll = GRID.wave_arrays
        etal = ee - kk * t
        grad = (1j * kk * phi, 1j * etal * phi, 1j * ll * phi)
        out = leray_project_L(
            tuple(SpectralField(GRID, g, t) for g in grad), t
        )
        scale = max(np.max(np.abs(g)) for g in grad)
        for c in out.coeff_arrays():
            assert np.max(np.abs(c)) <= 1e-12 * scale

    def test_idempotent(self):
        rng = np.random.default_rng(62)
        arrs = [
            (rng.standard_normal(GRID.shape) + 1j * rng.standard_normal(GRID.shape))
            for _ in range(3)
        ]
        t = 1.3
        once = leray_project_L(tuple(SpectralField(GRID, a, t) for a in arrs), t)
        twice = leray_project_L(once.components(), t)
        for a, b in zip(once.coeff_arrays(), twice.coeff_arrays()):
            assert np.max(np.abs(a - b)) <= 1e-12 * max(1.0, np.max(np.abs(a)))

    def test_mean_mode_passthrough(self):
        arrs = [np.zeros(GRID.shape, dtype=complex) for _ in range(3)]
        arrs[0][0, 0, 0] = 0.0
        out = leray_project_L(tuple(SpectralField(GRID, a, 0.0) for a in arrs), 0.0)
        assert all(c[0, 0, 0] == 0.0 for c in out.coeff_arrays())


class TestLinearRhs:
    def test_zero_input(self):
        U = zero_velocity(GRID)
        out = linear_rhs(U, 0.0)
        assert all(np.all(c == 0.0) for c in out.coeff_arrays())

    def test_zero_mode_matrix_action(self):
        # pure u1 content on one k=0 mode reproduces the lift-up generator rows
        g = GRID
        j, l = 2, 1
        eta = g.eta_values[j]
        rho = eta * eta + l * l
        arrs = [np.zeros(g.shape, dtype=complex) for _ in range(3)]
        arrs[0][mode_index(g, 0, j, l)] = 1.0
        U = velocity_from_arrays(g, *arrs, time=0.0)
        out = linear_rhs(U, 0.0)
        i = mode_index(g, 0, j, l)
        assert out.u1.coeffs[i] == pytest.approx(0.0, abs=1e-15)
        assert out.u2.coeffs[i] == pytest.approx(-(l * l) / rho, rel=1e-12)
        assert out.u3.coeffs[i] == pytest.approx(eta * l / rho, rel=1e-12)

    def test_single_mode_matches_closed_form(self):
        # short linear integration of one k != 0 mode against the exact pair
        cfg = SimConfig(
            nu=2e-2, grid=GRID, dt=0.01, t_end=3.0, eps=1e-3,
            nonlinear_enabled=False, diag_every=100, snapshot_every=100,
            ic_mode=(1, 1, 1),
        )
        res = run(cfg)
        from rotcouette.diagnostics import compute_K_check

        kv = WaveVector(1, GRID.eta_values[1], 1)
        i = mode_index(GRID, 1, 1, 1)
        t0, U0 = res.snapshots[0]
        K1f, K2f = compute_K_check(U0)
        K0 = ModeStateK(K1f.coeffs[i], K2f.coeffs[i])
        for t, U in res.snapshots[1:]:
            K1f, K2f = compute_K_check(U, t)
            want = evolve_K_closed(K0, t, cfg.nu, kv)
            err = abs(K1f.coeffs[i] - want.K1) + abs(K2f.coeffs[i] - want.K2)
            assert err <= 1e-6 * want.magnitude


class TestNonlinearRhs:
    def test_zero_input(self):
        out = nonlinear_rhs(zero_velocity(GRID), 0.0)
        assert all(np.all(c == 0.0) for c in out.coeff_arrays())

    def test_single_mode_support(self):
        # one conjugate pair: quadratic output only on sums/differences
        g = GRID
        arrs = [np.zeros(g.shape, dtype=complex) for _ in range(3)]
        arrs[2][mode_index(g, 1, 1, 1)] = 0.5
        arrs[2][mode_index(g, -1, -1, -1)] = 0.5
        U = leray_project_L(tuple(SpectralField(g, a, 0.0) for a in arrs), 0.0)
        out = nonlinear_rhs(U, 0.0)
        allowed = {mode_index(g, *m) for m in [(0, 0, 0), (2, 2, 2), (-2, -2, -2)]}
        for c in out.coeff_arrays():
            bad = np.argwhere(np.abs(c) > 1e-14 * max(1.0, np.max(np.abs(c))))
            for idx in map(tuple, bad):
                assert idx in allowed

    def test_energy_flux_vanishes(self):
        rng = np.random.default_rng(63)
        for t in (0.0, 1.7):
            U = random_velocity(GRID, rng, t=t)
            N = nonlinear_rhs(U, t)
            flux = sum(
                float(np.sum(np.conj(a) * b).real)
                for a, b in zip(U.coeff_arrays(), N.coeff_arrays())
            )
            scale = math.sqrt(
                sum(float(np.sum(np.abs(a) ** 2)) for a in U.coeff_arrays())
            ) * math.sqrt(sum(float(np.sum(np.abs(b) ** 2)) for b in N.coeff_arrays()))
            assert abs(flux) <= 1e-8 * scale

    def test_blowup_detection(self):
        g = GRID
        arrs = [np.full(g.shape, np.nan, dtype=complex) for _ in range(3)]
        U = velocity_from_arrays(g, *arrs, time=0.0)
        with pytest.raises(BlowUpError):
            nonlinear_rhs(U, 0.0)


class TestStep:
    def test_zero_mode_exact(self):
        g = GRID
        cfg = SimConfig(
            nu=1e-2, grid=g, dt=0.05, t_end=4.0, eps=1e-4,
            nonlinear_enabled=False, diag_every=100, snapshot_every=20,
            ic_mode=(0, 2, 1),
        )
        res = run(cfg)
        i = mode_index(g, 0, 2, 1)
        eta = g.eta_values[2]
        t0, U0 = res.snapshots[0]
        s0 = ZeroModeState(U0.u1.coeffs[i], U0.u2.coeffs[i], U0.u3.coeffs[i])
        for t, U in res.snapshots[1:]:
            want = zero_mode_evolve(s0, t, cfg.nu, eta, 1)
            got = (U.u1.coeffs[i], U.u2.coeffs[i], U.u3.coeffs[i])
            scale = abs(want.u1) + abs(want.u2) + abs(want.u3)
            err = abs(got[0] - want.u1) + abs(got[1] - want.u2) + abs(got[2] - want.u3)
            assert err <= 1e-11 * scale

    def test_invariants_along_run(self):
        cfg = SimConfig(
            nu=1e-2, grid=GRID, dt=0.02, t_end=2.0, eps=1e-3,
            nonlinear_enabled=True, diag_every=10, snapshot_every=25,
        )
        res = run(cfg)
        assert res.status == "completed"
        for t, U in res.snapshots:
            assert divergence_defect(U) <= 1e-10
            norm = max(np.max(np.abs(c)) for c in U.coeff_arrays())
            assert max(hermitian_defect(f) for f in U.components()) <= 1e-12 * max(norm, 1e-30)
            assert all(c[0, 0, 0] == 0.0 for c in U.coeff_arrays())

    def test_convergence_order(self):
        # halving dt must cut the closed-form error by at least 3.5x
        from rotcouette.diagnostics import compute_K_check

        g = GRID
        kv = WaveVector(1, g.eta_values[1], 1)
        i = mode_index(g, 1, 1, 1)

        def final_error(dt):
            cfg = SimConfig(
                nu=2e-2, grid=g, dt=dt, t_end=2.0, eps=1e-3,
                nonlinear_enabled=False, diag_every=10**6,
                snapshot_every=10**6, ic_mode=(1, 1, 1), rk_stages=2,
            )
            res = run(cfg)
            t0, U0 = res.snapshots[0]
            K1f, K2f = compute_K_check(U0)
            K0 = ModeStateK(K1f.coeffs[i], K2f.coeffs[i])
            t, U = res.snapshots[-1]
            K1f, K2f = compute_K_check(U, t)
            want = evolve_K_closed(K0, t, 2e-2, kv)
            return abs(K1f.coeffs[i] - want.K1) + abs(K2f.coeffs[i] - want.K2)

        e1 = final_error(0.1)
        e2 = final_error(0.05)
        assert e1 / e2 >= 3.5

    def test_blowup_cap(self):
        cfg = SimConfig(
            nu=1e-2, grid=GRID, dt=0.01, t_end=5.0, eps=1e-3,
            nonlinear_enabled=False, diag_every=10, blowup_cap=1e-12,
        )
        res = run(cfg)
        assert res.status == "blown_up"
        assert res.t_fail is not None and res.t_fail <= 0.02


class TestInitialConditions:
    def test_single_mode_placement(self):
        cfg = SimConfig(nu=1e-2, grid=GRID, eps=1e-3, ic_mode=(1, 0, 1))
        U = initial_condition(cfg)
        assert divergence_defect(U) <= 1e-15
        assert max(hermitian_defect(f) for f in U.components()) == 0.0
        # projection of the symmetric seed leaves only the wall-normal part
        i = mode_index(GRID, 1, 0, 1)
        assert abs(U.u2.coeffs[i]) == pytest.approx(1e-3 / math.sqrt(3.0), rel=1e-12)

    def test_zero_k_seed(self):
        cfg = SimConfig(nu=1e-2, grid=GRID, eps=2e-4, ic_mode=(0, 2, 1))
        U = initial_condition(cfg)
        i = mode_index(GRID, 0, 2, 1)
        assert U.u1.coeffs[i] == pytest.approx(2e-4)
        assert divergence_defect(U) <= 1e-15

    def test_random_band_norm(self):
        cfg = SimConfig(
            nu=1e-2, grid=GridSpec(8, 32, 8, Ly=32.0), eps=3e-5,
            ic_kind="random_band", seed=5,
        )
        U = initial_condition(cfg)
        total = math.sqrt(sum(sobolev_norm(f, cfg.sigma) ** 2 for f in U.components()))
        assert total == pytest.approx(3e-5, rel=1e-10)
        assert divergence_defect(U) <= 1e-12 * 3e-5

    def test_random_band_determinism(self):
        cfg = SimConfig(nu=1e-2, grid=GRID, eps=1e-4, ic_kind="random_band", seed=9)
        a = initial_condition(cfg)
        b = initial_condition(cfg)
        for x, y in zip(a.coeff_arrays(), b.coeff_arrays()):
            assert np.array_equal(x, y)

    def test_rejects_mean_mode(self):
        cfg = SimConfig(nu=1e-2, grid=GRID, ic_mode=(0, 0, 0))
        with pytest.raises(ValueError):
            initial_condition(cfg)

    def test_rejects_outside_band(self):
        cfg = SimConfig(nu=1e-2, grid=GRID, ic_mode=(7, 0, 0))
        with pytest.raises(ValueError):
            initial_condition(cfg)


class TestRun:
    def test_zero_amplitude(self):
        cfg = SimConfig(nu=1e-2, grid=GRID, dt=0.05, t_end=1.0, eps=0.0, diag_every=5)
        res = run(cfg)
        for r in res.reports:
            assert all(v == 0.0 for k, v in r.norms.items())
            assert not any(r.flags.values())

    def test_determinism(self):
        cfg = SimConfig(
            nu=1e-2, grid=GRID, dt=0.02, t_end=1.0, eps=1e-4,
            ic_kind="random_band", seed=3, diag_every=5,
        )
        a = run(cfg)
        b = run(cfg)
        for ra, rb in zip(a.reports, b.reports):
            assert ra.norms == rb.norms

    def test_eps_linearity(self):
        # with the nonlinearity off the whole trajectory is linear in eps
        base = SimConfig(
            nu=1e-2, grid=GRID, dt=0.02, t_end=2.0, eps=1e-4,
            nonlinear_enabled=False, diag_every=20,
        )
        half = replace(base, eps=5e-5)
        ra, rb = run(base), run(half)
        for a, b in zip(ra.reports, rb.reports):
            for name in ("U_neq_HN_total", "MK1_neq_HN", "mMQ3_neq_HN"):
                if a.norms[name] > 1e-300:
                    assert b.norms[name] / a.norms[name] == pytest.approx(0.5, rel=1e-9)

    def test_resolution_warning(self):
        g = GridSpec(8, 16, 8, Ly=32.0)
        cfg = SimConfig(
            nu=1e-2, grid=g, dt=0.02, t_end=0.5, eps=1e-4,
            nonlinear_enabled=False, diag_every=5, ic_mode=(1, 5, 1),
        )
        res = run(cfg)  # j = 5 exactly at the dealias band edge (cutoff 5)
        assert any("eta band edge" in w for w in res.warnings)

    def test_beta_two_smoke(self):
        cfg = SimConfig(
            nu=1e-2, grid=GRID, dt=0.02, t_end=1.0, eps=1e-4, beta=2.0,
            nonlinear_enabled=True, diag_every=10, snapshot_every=25,
        )
        res = run(cfg)
        assert res.status == "completed"
        for t, U in res.snapshots:
            kk, ee, ll = GRID.wave_arrays
            etal = ee - kk * (2.0 * t)
            div = np.max(
                np.abs(
                    kk * U.u1.coeffs + etal * U.u2.coeffs + ll * U.u3.coeffs
                )
            )
            assert div <= 1e-10

    def test_cfl_warning(self):
        cfg = SimConfig(
            nu=1e-2, grid=GRID, dt=0.5, t_end=1.0, eps=10.0,
            nonlinear_enabled=True, diag_every=1, blowup_cap=1e12,
        )
        res = run(cfg)
        assert any("CFL" in w for w in res.warnings)

    def test_advective_rate_positive(self):
        rng = np.random.default_rng(64)
        U = random_velocity(GRID, rng)
        assert advective_rate_bound(U, 10.0) > 0.0
