"""Crank-Nicolson time stepping solved by Jacobian-free Newton-Krylov.

The implicit step is the root of

    R(C1) = (C1 - C0) / dt - RHS((C1 + C0) / 2, E((C1 + C0) / 2))

with E the Poisson field of the midpoint state (linear in C, so the
midpoint field equals the average of the endpoint fields).  Newton runs
on the real-ified unknown vector -- species-major, then Legendre mode,
then Fourier mode, real/imag interleaved -- with one-sided finite
difference Jacobian-vector products and restarted GMRES inner solves.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres

from .diagnostics import DiagnosticsRecord, compute_record, discrete_balances, total_current_k0
from .errors import SolverError
from .operators import Plasma, adaptive_gamma, charge_imbalance, poisson_solve, semi_discrete_rhs
from .state import SpectralState

__all__ = ["SolverConfig", "StepResult", "RunResult", "cn_residual", "jfnk_step", "run"]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverConfig:
    dt: float
    t_final: float
    newton_abs_tol: float = 1e-12
    newton_rel_tol: float = 1e-10
    newton_max_iters: int = 25
    gmres_rel_tol: float = 1e-6
    gmres_restart: int = 30
    gmres_max_iters: int = 40
    fd_epsilon_scale: float = 1.0

    def __post_init__(self):
        if self.dt <= 0 or self.t_final < 0:
            raise ValueError("dt must be positive and t_final non-negative")
        if min(self.newton_abs_tol, self.newton_rel_tol, self.gmres_rel_tol) <= 0:
            raise ValueError("solver tolerances must be positive")
        if self.gmres_restart < 1:
            raise ValueError("gmres_restart must be >= 1")

    @property
    def n_steps(self) -> int:
        n = round(self.t_final / self.dt)
        if abs(n * self.dt - self.t_final) > 1e-9 * max(1.0, self.t_final):
            log.warning("t_final=%g is not a multiple of dt=%g; running %d steps to t=%g",
                        self.t_final, self.dt, n, n * self.dt)
        return n


@dataclass
class StepResult:
    state: SpectralState
    newton_iters: int
    gmres_iters_total: int
    final_residual_norm: float
    initial_residual_norm: float
    converged: bool


def cn_residual(plasma: Plasma, dt: float, state_old: SpectralState,
                state_guess: SpectralState,
                penalties: Sequence[np.ndarray] | None = None) -> list[np.ndarray]:
    """Crank-Nicolson defect per species, same shapes as the coefficients."""
    if penalties is None:
        penalties = plasma.penalties()
    mid = SpectralState([0.5 * (a + b) for a, b in
                         zip(state_old.coeffs, state_guess.coeffs)])
    e_mid = poisson_solve(plasma, mid, check=False)
    rhs = semi_discrete_rhs(plasma, mid, e_mid, penalties)
    return [(g - o) / dt - r for g, o, r in zip(state_guess.coeffs, state_old.coeffs, rhs)]


def _pack(arrays: Sequence[np.ndarray]) -> np.ndarray:
    return np.concatenate([np.ascontiguousarray(a).ravel().view(np.float64) for a in arrays])


def jfnk_step(plasma: Plasma, solver: SolverConfig, state_old: SpectralState,
              penalties: Sequence[np.ndarray] | None = None,
              preconditioner=None) -> StepResult:
    """Advance one Crank-Nicolson step from state_old.

    The initial Newton guess is the old state.  Raises SolverError on
    non-finite residuals; reports converged=False after newton_max_iters.
    GMRES runs unpreconditioned by default; `preconditioner` is a hook
    for a LinearOperator (e.g. block-diagonal per Fourier mode).
    """
    if penalties is None:
        penalties = plasma.penalties()
    shapes = state_old.shapes
    sqrt_eps = math.sqrt(np.finfo(float).eps)
    evals = 0

    def residual_vec(x: np.ndarray) -> np.ndarray:
        nonlocal evals
        evals += 1
        r = cn_residual(plasma, solver.dt, state_old, SpectralState.unpack(x, shapes),
                        penalties)
        vec = _pack(r)
        if not np.all(np.isfinite(vec)):
            raise SolverError("non-finite residual in Newton iteration")
        return vec

    x = state_old.pack()
    r = residual_vec(x)
    norm0 = float(np.linalg.norm(r))
    target = max(solver.newton_abs_tol, solver.newton_rel_tol * norm0)
    norm = norm0
    iters = 0
    while norm > target and iters < solver.newton_max_iters:
        x_norm = float(np.linalg.norm(x))
        base = r.copy()

        def jv(u: np.ndarray) -> np.ndarray:
            u_norm = float(np.linalg.norm(u))
            if u_norm == 0.0:
                return np.zeros_like(u)
            eps = solver.fd_epsilon_scale * sqrt_eps * (1.0 + x_norm) / u_norm
            return (residual_vec(x + eps * u) - base) / eps

        op = LinearOperator((x.size, x.size), matvec=jv, dtype=np.float64)
        delta, info = gmres(op, -base, rtol=solver.gmres_rel_tol, atol=0.0,
                            restart=solver.gmres_restart, maxiter=solver.gmres_max_iters,
                            M=preconditioner)
        if info > 0:
            log.debug("GMRES stalled at info=%d; continuing with partial step", info)
        x = x + delta
        r = residual_vec(x)
        norm = float(np.linalg.norm(r))
        iters += 1

    state = SpectralState.unpack(x, shapes)
    state.resymmetrize()
    return StepResult(
        state=state,
        newton_iters=iters,
        gmres_iters_total=evals - 1 - iters,  # residual evals spent on J.v probes
        final_residual_norm=norm,
        initial_residual_norm=norm0,
        converged=bool(norm <= target),
    )


@dataclass
class RunResult:
    state: SpectralState
    records: list[DiagnosticsRecord]
    stats: dict
    completed: bool
    failure: str | None = None
    newton_history: list[int] = field(default_factory=list)


def run(plasma: Plasma, solver: SolverConfig, state0: SpectralState, *,
        cadence: int = 1, e_k_list: Sequence[int] = (1,),
        sink: Callable[[DiagnosticsRecord], None] | None = None,
        snapshot_times: Sequence[float] = (),
        snapshot_hook: Callable[[float, SpectralState], None] | None = None,
        ) -> RunResult:
    """March the Crank-Nicolson system to t_final, emitting diagnostics.

    A record is produced at t=0, every `cadence` accepted steps, and at
    the final (or failing) step; balance entries hold the largest
    per-step residual observed since the previous record.  On step
    rejection the partial series is flushed and the result is marked
    incomplete.
    """
    n_steps = solver.n_steps
    state = state0.copy()
    state.resymmetrize()
    field_now = poisson_solve(plasma, state, strict=True)
    initial_l2 = state.l2_sums()

    snap_steps = {}
    for t_req in snapshot_times:
        snap_steps.setdefault(int(round(t_req / solver.dt)), float(t_req))

    records: list[DiagnosticsRecord] = []
    newton_history: list[int] = []
    stats = {"newton_total": 0, "gmres_total": 0, "newton_max": 0,
             "residual_max": 0.0, "steps_done": 0, "neutrality_max": 0.0,
             "adaptive_gamma_last": None}

    def emit(t, balances):
        rec = compute_record(plasma, state, field_now, t, initial_l2, e_k_list, balances)
        records.append(rec)
        if sink is not None:
            sink(rec)

    emit(0.0, (0.0, 0.0, 0.0))
    if 0 in snap_steps and snapshot_hook is not None:
        snapshot_hook(0.0, state)

    adaptive = any(s.penalty_mode == "adaptive" for s in plasma.species)
    bal_max = [0.0, 0.0, 0.0]
    failure = None
    last_emit_step = 0
    for step in range(1, n_steps + 1):
        if adaptive:
            gammas = adaptive_gamma(plasma, state, field_now)
            penalties = plasma.penalties(gammas)
            stats["adaptive_gamma_last"] = gammas
        else:
            penalties = plasma.penalties()
        try:
            result = jfnk_step(plasma, solver, state, penalties)
        except SolverError as exc:
            failure = f"step {step}: {exc}"
            break
        stats["newton_total"] += result.newton_iters
        stats["gmres_total"] += result.gmres_iters_total
        stats["newton_max"] = max(stats["newton_max"], result.newton_iters)
        stats["residual_max"] = max(stats["residual_max"], result.final_residual_norm)
        newton_history.append(result.newton_iters)
        if not result.converged:
            failure = (f"step {step}: Newton stagnated at residual "
                       f"{result.final_residual_norm:.3e} after {result.newton_iters} iterations")
            break

        field_new = poisson_solve(plasma, result.state, check=False)
        balances = discrete_balances(plasma, state, result.state, field_now, field_new,
                                     solver.dt, penalties)
        bal_max = [max(a, abs(b)) for a, b in zip(bal_max, balances)]
        state = result.state
        field_now = field_new
        stats["steps_done"] = step
        stats["neutrality_max"] = max(stats["neutrality_max"],
                                      abs(charge_imbalance(plasma, state)))

        t = step * solver.dt
        if step in snap_steps and snapshot_hook is not None:
            snapshot_hook(t, state)
        if step % cadence == 0 or step == n_steps:
            emit(t, tuple(bal_max))
            bal_max = [0.0, 0.0, 0.0]
            last_emit_step = step

    if failure is not None:
        log.warning("run aborted: %s", failure)
        if stats["steps_done"] != last_emit_step:
            emit(stats["steps_done"] * solver.dt, tuple(bal_max))

    # Ampere consistency constant C_A = J_0: reported, never enforced.
    stats["current_k0_final"] = total_current_k0(plasma, state)
    return RunResult(state=state, records=records, stats=stats,
                     completed=failure is None, failure=failure,
                     newton_history=newton_history)
