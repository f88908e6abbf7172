"""Conserved quantities, discrete balance residuals, and stability checks.

All balances are evaluated with the solver's own truncated-convolution
kernel, so for converged Crank-Nicolson steps they are algebraic
identities of the scheme and vanish to solver tolerance; they do not
measure discretization error.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .operators import Plasma, boundary_sq_term, boundary_term, semi_discrete_rhs
from .state import SpectralState, boundary_values, convolution_matrix, fourier_synthesis_matrix, x_grid

__all__ = [
    "DiagnosticsRecord",
    "DiagnosticsWriter",
    "mass",
    "momentum",
    "energy",
    "l2_norm_sq",
    "relative_l2",
    "boundary_max",
    "discrete_balances",
    "ampere_residual",
    "total_current_k0",
    "stability_identity_check",
    "compute_record",
]

log = logging.getLogger(__name__)

IMAG_TOL = 1e-12


def _real(z: complex, what: str) -> float:
    z = complex(z)
    if abs(z.imag) > IMAG_TOL * max(1.0, abs(z.real)):
        log.warning("%s has imaginary part %.3e (discarded)", what, z.imag)
    return z.real


def mass(plasma: Plasma, state: SpectralState, s_idx: int) -> float:
    """M^s = m (v_b - v_a) L Re C[0, 0]."""
    s, b = plasma.species[s_idx], plasma.bases[s_idx]
    c00 = state.coeffs[s_idx][0, plasma.config.n_fourier]
    return s.m * b.width * plasma.config.L * _real(c00, f"mass({s.name})")


def momentum(plasma: Plasma, state: SpectralState) -> tuple[np.ndarray, float]:
    """Per-species P^s = m (v_b - v_a) L sigma_1 C[1, 0] + sigma_bar M^s, and the total."""
    per = np.empty(len(plasma.species))
    for i, (s, b) in enumerate(zip(plasma.species, plasma.bases)):
        c10 = state.coeffs[i][1, plasma.config.n_fourier]
        per[i] = (s.m * b.width * plasma.config.L * b.sigma[1]
                  * _real(c10, f"momentum({s.name})")
                  + b.sigma_bar * mass(plasma, state, i))
    return per, float(per.sum())


def energy(plasma: Plasma, state: SpectralState,
           field: np.ndarray) -> tuple[np.ndarray, float, float]:
    """Kinetic energy per species, field energy, and their sum.

    E_kin^s = (m/2)(v_b - v_a) L (sigma_2 sigma_1 C[2,0] + 2 sigma_1 sigma_bar C[1,0]
              + (sigma_1^2 + sigma_0^2 + sigma_bar^2) C[0,0]);
    E_pot   = (eps0 L / 2) sum_k E_k E_{-k}.
    """
    cfg = plasma.config
    center = cfg.n_fourier
    kin = np.empty(len(plasma.species))
    for i, (s, b) in enumerate(zip(plasma.species, plasma.bases)):
        c = state.coeffs[i]
        sig, sb = b.sigma, b.sigma_bar
        combo = (sig[2] * sig[1] * c[2, center]
                 + 2.0 * sig[1] * sb * c[1, center]
                 + (sig[1] ** 2 + sig[0] ** 2 + sb**2) * c[0, center])
        kin[i] = 0.5 * s.m * b.width * cfg.L * _real(combo, f"kinetic energy({s.name})")
    e_pot = 0.5 * cfg.epsilon0 * cfg.L * _real(np.dot(field, field[::-1]), "potential energy")
    return kin, e_pot, float(kin.sum() + e_pot)


def l2_norm_sq(state: SpectralState) -> np.ndarray:
    """Per-species sum_{n,k} |C[n,k]|^2."""
    return state.l2_sums()


def relative_l2(state: SpectralState, initial_sums: np.ndarray) -> np.ndarray:
    """Ratio of the current L2 sums to the initial ones (guarding zero start)."""
    now = state.l2_sums()
    initial = np.asarray(initial_sums, dtype=float)
    out = np.ones_like(now)
    nz = initial > 0.0
    out[nz] = now[nz] / initial[nz]
    if np.any(~nz & (now > 0.0)):
        log.warning("relative L2 requested against a zero initial state")
    return out


def boundary_max(plasma: Plasma, state: SpectralState, s_idx: int,
                 n_x: int | None = None) -> float:
    """max over x of |f| at both velocity boundaries, on a 4*N_F + 2 grid."""
    cfg = plasma.config
    if n_x is None:
        n_x = 4 * cfg.n_fourier + 2
    f_a, f_b = boundary_values(plasma.bases[s_idx], state.coeffs[s_idx])
    w = fourier_synthesis_matrix(cfg, x_grid(cfg, n_x))
    vals_a = w @ f_a
    vals_b = w @ f_b
    for vals, side in ((vals_a, "v_a"), (vals_b, "v_b")):
        bad = float(np.max(np.abs(vals.imag)))
        if bad > 1e-10 * max(1.0, float(np.max(np.abs(vals.real)))):
            log.warning("boundary trace at %s has imaginary residue %.3e", side, bad)
    return float(max(np.max(np.abs(vals_a.real)), np.max(np.abs(vals_b.real))))


# ---------------------------------------------------------------------------
# Fully discrete conservation balances (one Crank-Nicolson step)
# ---------------------------------------------------------------------------

def _penalty_boundary_terms(plasma: Plasma, s_idx: int, dv_sum: np.ndarray,
                            e_sum: np.ndarray, penalties: Sequence[np.ndarray]) -> np.ndarray:
    """B^{s}_{n,0} for n = 0, 1, 2 of the step pair (tau, tau+1).

    B_{n,0} = -G[n] (q/4) (v_b - v_a) L [(E1+E0) * dv[(f1+f0) phi_n]]_0.
    """
    cfg = plasma.config
    s, b = plasma.species[s_idx], plasma.bases[s_idx]
    out = np.zeros(3)
    g = penalties[s_idx]
    for n in range(3):
        if g[n] == 0.0:
            continue
        conv0 = np.dot(e_sum, dv_sum[n][::-1])
        out[n] = (-g[n] * 0.25 * s.q * b.width * cfg.L
                  * _real(conv0, f"boundary balance term n={n} ({s.name})"))
    return out


def _ampere_boundary_pair(plasma: Plasma, state_sum_dv0: Sequence[np.ndarray],
                          e_sum: np.ndarray, penalties: Sequence[np.ndarray]) -> np.ndarray:
    """Boundary term of the step-consistent discrete Ampere relation, k != 0.

    eps0 (E1 - E0)_k = -(dt / 2L) sum_s (J1 + J0)_k + dt * B_amp_k  with

    B_amp_k = -(L / 2 pi i k) sum_s G_s[0] (q^2 / 4 m) (v_b - v_a)_s
              [(E1 + E0) * dv[(f1 + f0) phi_0]]_k.
    """
    cfg = plasma.config
    k = cfg.k_values
    out = np.zeros(cfg.n_k, dtype=np.complex128)
    t_e = convolution_matrix(e_sum)
    for i, (s, b) in enumerate(zip(plasma.species, plasma.bases)):
        g0 = penalties[i][0]
        if g0 == 0.0:
            continue
        conv = t_e @ state_sum_dv0[i]
        out += -g0 * 0.25 * (s.q**2 / s.m) * b.width * conv
    nz = k != 0
    res = np.zeros_like(out)
    res[nz] = out[nz] * cfg.L / (2j * np.pi * k[nz])
    return res


def discrete_balances(plasma: Plasma, state_old: SpectralState, state_new: SpectralState,
                      field_old: np.ndarray, field_new: np.ndarray, dt: float,
                      penalties: Sequence[np.ndarray] | None = None,
                      ) -> tuple[float, float, float]:
    """Residuals of the fully discrete mass/momentum/energy conservation laws.

    Mass residual is the worst species' |M(tau+1) - M(tau) - dt*B_00|;
    momentum and energy residuals are for the species-summed totals with
    every boundary term completed.  All three vanish to solver tolerance
    for converged steps.
    """
    cfg = plasma.config
    if penalties is None:
        penalties = plasma.penalties()
    e_sum = field_old + field_new

    dv0_list = []
    mass_res = 0.0
    mom_res = 0.0
    kin_terms = 0.0
    for i, (s, b) in enumerate(zip(plasma.species, plasma.bases)):
        c_sum = state_old.coeffs[i] + state_new.coeffs[i]
        dv_sum = boundary_term(b, c_sum)
        dv0_list.append(dv_sum[0])
        b_n0 = _penalty_boundary_terms(plasma, i, dv_sum[:3], e_sum, penalties)

        d_mass = mass(plasma, state_new, i) - mass(plasma, state_old, i)
        mass_res = max(mass_res, abs(d_mass - dt * b_n0[0]))

        sig, sb = b.sigma, b.sigma_bar
        center = cfg.n_fourier
        d_c10 = _real(state_new.coeffs[i][1, center] - state_old.coeffs[i][1, center],
                      f"momentum balance ({s.name})")
        d_p = s.m * b.width * cfg.L * sig[1] * d_c10 + sb * d_mass
        # The sigma_1,0 flux term cancels over species by Poisson antisymmetry.
        flux = 0.25 * s.q * b.width * cfg.L * sig[1] * b.sigma_deriv[1, 0] * _real(
            np.dot(e_sum, (state_old.coeffs[i][0] + state_new.coeffs[i][0])[::-1]),
            f"momentum flux ({s.name})")
        mom_res += d_p - dt * (flux + sig[1] * b_n0[1] + sb * b_n0[0])

        kin_terms += 0.5 * (sig[2] * sig[1] * b_n0[2]
                            + 2.0 * sig[1] * sb * b_n0[1]
                            + (sig[1] ** 2 + sig[0] ** 2 + sb**2) * b_n0[0])

    _, _, etot_old = energy(plasma, state_old, field_old)
    _, _, etot_new = energy(plasma, state_new, field_new)
    b_amp = _ampere_boundary_pair(plasma, dv0_list, e_sum, penalties)
    b_pot = 0.5 * cfg.L * _real(np.dot(e_sum[::-1], b_amp), "potential boundary term")
    energy_res = etot_new - etot_old - dt * (kin_terms + b_pot)
    return float(mass_res), float(mom_res), float(energy_res)


def total_current_k0(plasma: Plasma, state: SpectralState) -> float:
    """k=0 Fourier mode of the total current (the Ampere consistency constant)."""
    from .operators import current_density

    center = plasma.config.n_fourier
    total = 0.0 + 0.0j
    for i in range(len(plasma.species)):
        total += current_density(plasma, state, i)[center]
    return _real(total, "total current k=0")


def ampere_residual(plasma: Plasma, state_old: SpectralState, state_new: SpectralState,
                    field_old: np.ndarray, field_new: np.ndarray, dt: float,
                    penalties: Sequence[np.ndarray] | None = None) -> np.ndarray:
    """Per-mode defect of the discrete Ampere relation across one step (k != 0 rows)."""
    from .operators import current_density

    cfg = plasma.config
    if penalties is None:
        penalties = plasma.penalties()
    e_sum = field_old + field_new
    j_pair = np.zeros(cfg.n_k, dtype=np.complex128)
    dv0 = []
    for i, b in enumerate(plasma.bases):
        j_pair += current_density(plasma, state_old, i) + current_density(plasma, state_new, i)
        dv0.append(boundary_term(b, state_old.coeffs[i] + state_new.coeffs[i])[0])
    b_amp = _ampere_boundary_pair(plasma, dv0, e_sum, penalties)
    res = cfg.epsilon0 * (field_new - field_old) + 0.5 * dt * j_pair / cfg.L - dt * b_amp
    res[cfg.n_fourier] = 0.0
    return res


# ---------------------------------------------------------------------------
# L2 stability identities
# ---------------------------------------------------------------------------

def stability_identity_check(plasma: Plasma, state: SpectralState, field: np.ndarray,
                             penalties: Sequence[np.ndarray] | None = None,
                             ) -> list[tuple[float, float, float]]:
    """Per species: (lhs, rhs, lhs - rhs) of the L2 production identity.

    lhs is d/dt sum |C|^2 evaluated as 2 Re sum conj(C) . dC/dt with the
    species' actual penalty; rhs is the theorem prediction

        (q/m) (1 - 2 gamma_all) [E * dv[f^2]]_0
        + 2 (q/m) Re sum_{n unpenalized} conj(C_n) [E * dv[f phi]]_{n}
        - 2 sum_n |D_n| sum_k |C_{n,k}|^2

    which reduces to the plain collisional decay when the penalty is 1/2
    on every mode.
    """
    if penalties is None:
        penalties = plasma.penalties()
    rhs_all = semi_discrete_rhs(plasma, state, field, penalties)
    out = []
    t_field = convolution_matrix(field).T
    for i, (s, b) in enumerate(zip(plasma.species, plasma.bases)):
        c = state.coeffs[i]
        lhs = 2.0 * float(np.sum(np.conj(c) * rhs_all[i]).real)

        dv_f2_0 = _real(np.dot(field, boundary_sq_term(b, c)[::-1]),
                        f"dv[f^2] production ({s.name})")
        g = penalties[i]
        gamma_all = g[3] if b.n_modes > 3 else g[0]
        pred = (s.q / s.m) * (1.0 - 2.0 * gamma_all) * dv_f2_0
        low = g[:3]
        if np.any(low != gamma_all):
            # Rows where the penalty deviates from gamma_all contribute their
            # own boundary production (the skip-first-three correction).
            dv_conv = boundary_term(b, c)[:3] @ t_field
            corr = np.sum((gamma_all - low)[:, None] * np.conj(c[:3]) * dv_conv)
            pred += 2.0 * (s.q / s.m) * _real(corr, f"penalized-row production ({s.name})")
        pred -= 2.0 * float(np.sum(np.abs(plasma.collision[i]) * np.sum(np.abs(c) ** 2, axis=1)))
        out.append((lhs, pred, lhs - pred))
    return out


# ---------------------------------------------------------------------------
# Time-series records and CSV stream
# ---------------------------------------------------------------------------

@dataclass
class DiagnosticsRecord:
    t: float
    mass: np.ndarray
    momentum: np.ndarray
    kinetic: np.ndarray
    l2_rel: np.ndarray
    f_bc_max: np.ndarray
    e_pot: float
    e_tot: float
    p_total: float
    e_modes: np.ndarray
    mass_balance: float
    momentum_balance: float
    energy_balance: float

    def row(self) -> list[float]:
        vals: list[float] = [self.t]
        for i in range(len(self.mass)):
            vals += [self.mass[i], self.momentum[i], self.kinetic[i],
                     self.l2_rel[i], self.f_bc_max[i]]
        vals += [self.e_pot, self.e_tot, self.p_total]
        vals += list(self.e_modes)
        vals += [self.mass_balance, self.momentum_balance, self.energy_balance]
        return vals


def csv_header(species_names: Sequence[str], e_k_list: Sequence[int]) -> list[str]:
    cols = ["t"]
    for name in species_names:
        cols += [f"M_{name}", f"P_{name}", f"Ekin_{name}", f"l2rel_{name}", f"fbc_{name}"]
    cols += ["E_pot", "E_tot", "P_total"]
    cols += [f"absE_k{k}" for k in e_k_list]
    cols += ["mass_balance", "momentum_balance", "energy_balance"]
    return cols


def compute_record(plasma: Plasma, state: SpectralState, field: np.ndarray, t: float,
                   initial_l2: np.ndarray, e_k_list: Sequence[int],
                   balances: tuple[float, float, float] = (0.0, 0.0, 0.0),
                   ) -> DiagnosticsRecord:
    m = np.array([mass(plasma, state, i) for i in range(len(plasma.species))])
    p_per, p_tot = momentum(plasma, state)
    kin, e_pot, e_tot = energy(plasma, state, field)
    fbc = np.array([boundary_max(plasma, state, i) for i in range(len(plasma.species))])
    center = plasma.config.n_fourier
    e_modes = np.array([abs(field[center + k]) for k in e_k_list])
    return DiagnosticsRecord(
        t=t, mass=m, momentum=p_per, kinetic=kin,
        l2_rel=relative_l2(state, initial_l2), f_bc_max=fbc,
        e_pot=e_pot, e_tot=e_tot, p_total=p_tot, e_modes=e_modes,
        mass_balance=balances[0], momentum_balance=balances[1], energy_balance=balances[2],
    )


class DiagnosticsWriter:
    """Streaming CSV sink; rows reach disk as they are produced so an
    aborted run leaves a readable partial series."""

    def __init__(self, path, species_names: Sequence[str], e_k_list: Sequence[int]):
        self.path = str(path)
        self._fh = open(self.path, "w")
        self._fh.write(",".join(csv_header(species_names, e_k_list)) + "\n")
        self._fh.flush()

    def __call__(self, record: DiagnosticsRecord) -> None:
        self._fh.write(",".join(f"{v:.16e}" for v in record.row()) + "\n")
        self._fh.flush()

    def close(self) -> None:
        if not self._fh.closed:
            self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
