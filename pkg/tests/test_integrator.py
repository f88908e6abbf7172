"""Crank-Nicolson/JFNK: residual contracts, linear limit, order, determinism."""

import numpy as np
import pytest

from conftest import hermitian_random, neutralized
from legvp.integrator import SolverConfig, cn_residual, jfnk_step, run
from legvp.operators import Plasma, apply_A
from legvp.state import DomainConfig, Species, SpectralState


def equilibrium_state(plasma, density=0.2):
    c = np.zeros((plasma.bases[0].n_modes, plasma.config.n_k), dtype=complex)
    c[0, plasma.config.n_fourier] = density
    return SpectralState([c])


def test_cn_residual_equilibrium(small_config, electron):
    plasma = Plasma(small_config, [electron], background_charge=0.0)
    st = equilibrium_state(plasma)
    plasma = neutralized(small_config, [electron], st)
    res = cn_residual(plasma, 0.05, st, st)
    assert np.max(np.abs(res[0])) == 0.0


def test_jfnk_equilibrium_converges_immediately(small_config, electron):
    plasma = Plasma(small_config, [electron], background_charge=0.0)
    st = equilibrium_state(plasma)
    plasma = neutralized(small_config, [electron], st)
    solver = SolverConfig(dt=0.05, t_final=0.05)
    result = jfnk_step(plasma, solver, st)
    assert result.converged and result.newton_iters == 0
    assert np.max(np.abs(result.state.coeffs[0] - st.coeffs[0])) < 1e-13


def free_streaming_plasma(n_l=8, n_f=2, nu=0.0):
    cfg = DomainConfig(L=2.0, v_a=-1.0, v_b=1.0, n_legendre=n_l, n_fourier=n_f)
    sp = Species("gas", q=0.0, m=1.0, nu=nu, gamma=0.0, penalty_mode="none")
    return Plasma(cfg, [sp], background_charge=0.0)


def test_linear_limit_newton_matches_direct_solve(rng):
    """With q=0 the CN system is linear and Newton lands on the exact solve.

    One-sided finite-difference probes carry ~sqrt(eps) noise, so the
    first Newton step is accurate to ~1e-8 and the second polishes to
    machine precision; more than two would indicate a nonlinearity.
    """
    plasma = free_streaming_plasma(n_l=8, n_f=2, nu=0.3)
    cfg = plasma.config
    st = SpectralState([hermitian_random(rng, 8, cfg.n_k)])
    dt = 0.1
    solver = SolverConfig(dt=dt, t_final=dt, gmres_rel_tol=1e-8, newton_abs_tol=1e-13,
                          newton_rel_tol=1e-14)
    result = jfnk_step(plasma, solver, st)
    assert result.converged and result.newton_iters <= 2
    assert result.final_residual_norm < 1e-13

    # Direct dense solve per Fourier column: (I/dt + i pi k/L A - D/2) C1 =
    # (I/dt - i pi k/L A + D/2) C0.
    b = plasma.bases[0]
    a_mat = np.zeros((8, 8))
    for j in range(8):
        e = np.zeros(8, dtype=complex)
        e[j] = 1.0
        a_mat[:, j] = apply_A(b, e).real
    d_diag = np.diag(plasma.collision[0])
    for col, k in enumerate(cfg.k_values):
        lhs = np.eye(8) / dt + 1j * np.pi * k / cfg.L * a_mat - 0.5 * d_diag
        rhs = (np.eye(8) / dt - 1j * np.pi * k / cfg.L * a_mat + 0.5 * d_diag) @ st.coeffs[0][:, col]
        direct = np.linalg.solve(lhs, rhs)
        assert np.allclose(result.state.coeffs[0][:, col], direct, atol=1e-12)


def test_second_order_convergence(rng):
    """Free streaming: error vs a dt/64 reference scales as dt^2."""
    plasma = free_streaming_plasma(n_l=16, n_f=2)
    cfg = plasma.config
    st0 = SpectralState([hermitian_random(rng, 16, cfg.n_k, scale=0.5)])
    t_end = 1.0

    def advance(dt):
        solver = SolverConfig(dt=dt, t_final=t_end, gmres_rel_tol=1e-8,
                              newton_abs_tol=1e-13, newton_rel_tol=1e-12)
        result = run(plasma, solver, st0, cadence=10**9)
        assert result.completed
        return result.state.coeffs[0]

    dts = [0.1, 0.05, 0.025]
    reference = advance(dts[-1] / 64.0)
    errors = [np.linalg.norm(advance(dt) - reference) for dt in dts]
    slope = np.polyfit(np.log(dts), np.log(errors), 1)[0]
    assert slope == pytest.approx(2.0, abs=0.15)
    for e_coarse, e_fine in zip(errors, errors[1:]):
        assert e_coarse / e_fine == pytest.approx(4.0, rel=0.5)


def test_run_zero_steps_emits_initial_record(small_config, electron):
    plasma = Plasma(small_config, [electron], background_charge=0.0)
    st = equilibrium_state(plasma)
    plasma = neutralized(small_config, [electron], st)
    result = run(plasma, SolverConfig(dt=0.1, t_final=0.0), st)
    assert result.completed and len(result.records) == 1
    assert result.records[0].t == 0.0


def test_run_is_deterministic(rng, small_config, electron):
    plasma = Plasma(small_config, [electron], background_charge=0.0)
    st = SpectralState([hermitian_random(rng, 12, small_config.n_k, scale=0.05)])
    plasma = neutralized(small_config, [electron], st)
    solver = SolverConfig(dt=0.05, t_final=0.5)
    rows1 = [r.row() for r in run(plasma, solver, st).records]
    rows2 = [r.row() for r in run(plasma, solver, st).records]
    assert rows1 == rows2  # bitwise


def test_step_rejection_aborts_cleanly(rng, small_config):
    """An unresolvable step (1 Newton iteration allowed, strong field) rejects."""
    sp = Species("e", q=-1.0, m=1e-4, nu=0.0, gamma=0.0, penalty_mode="none")
    st = SpectralState([hermitian_random(rng, 12, small_config.n_k, scale=1.0)])
    plasma = neutralized(small_config, [sp], st)
    solver = SolverConfig(dt=5.0, t_final=50.0, newton_max_iters=1,
                          newton_abs_tol=1e-14, newton_rel_tol=1e-14)
    result = run(plasma, solver, st)
    assert not result.completed
    assert "step" in result.failure
    assert result.records  # partial series flushed


def test_landau_step_at_paper_resolution():
    """One benchmark-resolution step converges in a handful of iterations."""
    from legvp.presets import build_plasma_and_state, preset

    cfg = preset("landau")
    plasma, st0 = build_plasma_and_state(cfg)
    result = jfnk_step(plasma, cfg.solver, st0)
    assert result.converged
    assert result.newton_iters <= 10  # observed: 2


def test_ion_acoustic_dt1_steps_over_plasma_frequency():
    """dt=1 strides the electron plasma period yet every step converges."""
    from legvp.presets import apply_overrides, build_plasma_and_state, preset

    cfg = apply_overrides(preset("ion_acoustic"),
                          ["n_fourier=2", "dt=1.0", "t_final=3.0"])
    plasma, st0 = build_plasma_and_state(cfg)
    result = run(plasma, cfg.solver, st0)
    assert result.completed
    assert result.stats["newton_max"] <= 10


def test_adaptive_penalty_run(rng):
    from legvp.presets import apply_overrides, build_plasma_and_state, preset

    cfg = apply_overrides(preset("landau"), [
        "n_legendre=32", "n_fourier=2", "t_final=0.5", "penalty_mode=adaptive"])
    plasma, st0 = build_plasma_and_state(cfg)
    result = run(plasma, cfg.solver, st0)
    assert result.completed
    assert result.stats["adaptive_gamma_last"] is not None


def test_jfnk_counts_and_tolerances(rng, small_config, electron):
    plasma = Plasma(small_config, [electron], background_charge=0.0)
    st = SpectralState([hermitian_random(rng, 12, small_config.n_k, scale=0.05)])
    plasma = neutralized(small_config, [electron], st)
    solver = SolverConfig(dt=0.05, t_final=0.05)
    result = jfnk_step(plasma, solver, st)
    assert result.converged
    assert result.final_residual_norm <= max(solver.newton_abs_tol,
                                             solver.newton_rel_tol * result.initial_residual_norm)
    assert 1 <= result.newton_iters <= 10
    assert result.gmres_iters_total >= result.newton_iters
