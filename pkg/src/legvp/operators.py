"""Semi-discrete operators of the Legendre-Fourier Vlasov-Poisson system.

Per species, the coefficients obey

    dC[n,k]/dt = -(2*pi*i*k/L) (A C)[n]
                 + (q/m) [E * (B C - G dv[f phi])]_{n,k}
                 + D[n] C[n,k]

with A the symmetric tridiagonal streaming matrix, B the strictly lower
triangular differentiation matrix, dv[.] the rank-2 velocity-boundary
term, G the diagonal penalty weights and D the diagonal collision
operator.  The electric field is never an independent unknown: it is
recomputed from the states through the Poisson solve.
"""

from __future__ import annotations

import logging
from typing import Sequence

import numpy as np

from .basis import VelocityBasis, build_basis
from .errors import ConfigurationError
from .state import (
    DomainConfig,
    Species,
    SpectralState,
    boundary_values,
    convolution_matrix,
)

__all__ = [
    "Plasma",
    "collision_diag",
    "penalty_diag",
    "apply_A",
    "apply_B",
    "boundary_term",
    "boundary_sq_term",
    "l2_production_terms",
    "poisson_solve",
    "charge_imbalance",
    "current_density",
    "ampere_boundary_Q",
    "semi_discrete_rhs",
    "adaptive_gamma",
]

log = logging.getLogger(__name__)


def collision_diag(nu: float, n_modes: int) -> np.ndarray:
    """D[n] = -nu * n(n-1)(n-2) / ((N_L-1)(N_L-2)(N_L-3)); zero on n = 0, 1, 2."""
    n = np.arange(n_modes, dtype=float)
    denom = float((n_modes - 1) * (n_modes - 2) * (n_modes - 3))
    return -nu * n * (n - 1.0) * (n - 2.0) / denom


def penalty_diag(species: Species, n_modes: int, gamma: float | None = None) -> np.ndarray:
    """Diagonal penalty weights G[n] for the boundary term.

    adaptive mode uses the supplied per-step gamma in the same matrix
    shape as skip_first_three (zero weight on the three conserved rows).
    """
    g = species.gamma if gamma is None else gamma
    out = np.zeros(n_modes)
    if species.penalty_mode == "none":
        return out
    if species.penalty_mode == "all_modes":
        out[:] = g
        return out
    out[3:] = g  # skip_first_three and adaptive
    return out


class Plasma:
    """Domain + species set with per-species basis and operator tables."""

    def __init__(self, config: DomainConfig, species: Sequence[Species],
                 background_charge: float = 0.0):
        self.config = config
        self.species = tuple(species)
        if not self.species:
            raise ConfigurationError("at least one species is required")
        self.background_charge = float(background_charge)
        self.bases: tuple[VelocityBasis, ...] = tuple(
            build_basis(
                s.v_a if s.v_a is not None else config.v_a,
                s.v_b if s.v_b is not None else config.v_b,
                s.n_legendre if s.n_legendre is not None else config.n_legendre,
            )
            for s in self.species
        )
        self.collision = tuple(collision_diag(s.nu, b.n_modes)
                               for s, b in zip(self.species, self.bases))
        self._ik = 2j * np.pi * config.k_values / config.L

    @property
    def shapes(self) -> list[tuple[int, int]]:
        return [(b.n_modes, self.config.n_k) for b in self.bases]

    def penalties(self, gammas: Sequence[float] | None = None) -> list[np.ndarray]:
        """Penalty diagonals, optionally with per-step adaptive values."""
        return [
            penalty_diag(s, b.n_modes, None if gammas is None else gammas[i])
            for i, (s, b) in enumerate(zip(self.species, self.bases))
        ]


def apply_A(basis: VelocityBasis, column: np.ndarray) -> np.ndarray:
    """Streaming matrix: out[n] = sigma_{n+1} C[n+1] + sigma_n C[n-1] + sigma_bar C[n].

    Works on a single column or on a full (N_L, N_K) matrix.
    """
    sigma = basis.sigma
    n_l = column.shape[0]
    out = basis.sigma_bar * column
    if n_l > 1:
        sub = sigma[1:n_l]
        out[:-1] += sub.reshape((-1,) + (1,) * (column.ndim - 1)) * column[1:]
        out[1:] += sub.reshape((-1,) + (1,) * (column.ndim - 1)) * column[:-1]
    return out


def apply_B(basis: VelocityBasis, column: np.ndarray) -> np.ndarray:
    """Differentiation matrix: out[n] = sum_{i<n} sigma_{n,i} C[i]."""
    return basis.sigma_deriv @ column


def boundary_term(basis: VelocityBasis, coeffs: np.ndarray) -> np.ndarray:
    """dv[f phi_n]_k = (F_b[k] phi_n(v_b) - F_a[k] phi_n(v_a)) / (v_b - v_a)."""
    f_a, f_b = boundary_values(basis, coeffs)
    return (np.outer(basis.phi_at_vb, f_b) - np.outer(basis.phi_at_va, f_a)) / basis.width


def boundary_sq_term(basis: VelocityBasis, coeffs: np.ndarray) -> np.ndarray:
    """Fourier modes of dv[(f)^2] = (f(v_b)^2 - f(v_a)^2) / (v_b - v_a).

    The boundary traces are trigonometric polynomials of degree N_F, so
    the truncated self-convolution reproduces their squares exactly on
    the retained mode range.
    """
    from .state import convolve

    f_a, f_b = boundary_values(basis, coeffs)
    return (convolve(f_b, f_b) - convolve(f_a, f_a)) / basis.width


def l2_production_terms(basis: VelocityBasis, coeffs: np.ndarray,
                        field: np.ndarray) -> tuple[complex, complex, complex]:
    """The three algebraically equal L2-production expressions.

    Returns (2 sum_k C^dag [E*BC]_k,  [E*dv[(f)^2]]_0,
             sum_k C^dag [E*dv[f phi]]_k); all real up to roundoff.
    """
    t_field = convolution_matrix(field).T
    t1 = 2.0 * np.sum(np.conj(coeffs) * (apply_B(basis, coeffs) @ t_field))
    t2 = np.dot(field, boundary_sq_term(basis, coeffs)[::-1])
    t3 = np.sum(np.conj(coeffs) * (boundary_term(basis, coeffs) @ t_field))
    return complex(t1), complex(t2), complex(t3)


def charge_imbalance(plasma: Plasma, state: SpectralState) -> complex:
    """Net k=0 charge: sum_s q_s (v_b - v_a)_s C^s[0, 0] + background."""
    center = plasma.config.n_fourier
    total = complex(plasma.background_charge)
    for s, b, c in zip(plasma.species, plasma.bases, state.coeffs):
        total += s.q * b.width * c[0, center]
    return total


def poisson_solve(plasma: Plasma, state: SpectralState, *, strict: bool = True,
                  neutrality_tol: float = 1e-12, check: bool = True) -> np.ndarray:
    """E_k = L * sum_s q_s (v_b - v_a)_s C^s[0, k] / (eps0 * 2*pi*i*k); E_0 = 0.

    With strict=True a k=0 charge imbalance above neutrality_tol raises;
    inside the time loop the check is advisory (check=False skips it --
    the all-modes penalty lets species mass drift at roundoff level and
    the run loop monitors the imbalance itself).
    """
    cfg = plasma.config
    if check:
        imbalance = charge_imbalance(plasma, state)
        if abs(imbalance) > neutrality_tol:
            if strict:
                raise ConfigurationError(
                    f"plasma is not neutral: net k=0 charge = {imbalance:.6e}"
                )
            log.warning("charge neutrality violated by %.3e", abs(imbalance))

    center = cfg.n_fourier
    rho = np.zeros(cfg.n_k, dtype=np.complex128)
    for s, b, c in zip(plasma.species, plasma.bases, state.coeffs):
        rho += s.q * b.width * c[0]
    e = np.zeros(cfg.n_k, dtype=np.complex128)
    k = cfg.k_values
    nz = k != 0
    e[nz] = cfg.L * rho[nz] / (cfg.epsilon0 * 2j * np.pi * k[nz])
    e[center] = 0.0
    return e


def current_density(plasma: Plasma, state: SpectralState, s_idx: int) -> np.ndarray:
    """J^s_k = q (v_b - v_a) L (sigma_1 C[1, k] + sigma_bar C[0, k])."""
    s = plasma.species[s_idx]
    b = plasma.bases[s_idx]
    c = state.coeffs[s_idx]
    return s.q * b.width * plasma.config.L * (b.sigma[1] * c[1] + b.sigma_bar * c[0])


def ampere_boundary_Q(plasma: Plasma, state: SpectralState, field: np.ndarray,
                      s_idx: int) -> np.ndarray:
    """Q^s_k = (2*pi*i*k/L)^{-1} (v_b-v_a) L (q^2/m) [E * dv[f phi_0]]_k, k != 0."""
    cfg = plasma.config
    s = plasma.species[s_idx]
    b = plasma.bases[s_idx]
    dv0 = boundary_term(b, state.coeffs[s_idx])[0]
    conv = convolution_matrix(field) @ dv0
    out = np.zeros(cfg.n_k, dtype=np.complex128)
    k = cfg.k_values
    nz = k != 0
    out[nz] = (cfg.L / (2j * np.pi * k[nz])) * b.width * cfg.L * (s.q**2 / s.m) * conv[nz]
    return out


def semi_discrete_rhs(plasma: Plasma, state: SpectralState, field: np.ndarray,
                      penalties: Sequence[np.ndarray] | None = None,
                      include_collisions: bool = True) -> list[np.ndarray]:
    """Time derivative of every species' coefficient matrix."""
    if penalties is None:
        penalties = plasma.penalties()
    t_field = convolution_matrix(field).T
    out = []
    for i, (s, b, c) in enumerate(zip(plasma.species, plasma.bases, state.coeffs)):
        forcing = apply_B(b, c) - penalties[i][:, None] * boundary_term(b, c)
        rhs = -plasma._ik[None, :] * apply_A(b, c)
        rhs += (s.q / s.m) * (forcing @ t_field)
        if include_collisions:
            rhs += plasma.collision[i][:, None] * c
        out.append(rhs)
    return out


def adaptive_gamma(plasma: Plasma, state: SpectralState, field: np.ndarray,
                   fallback: float = 0.5) -> list[float]:
    """Per-species penalty that zeroes the L2 production of the n >= 3 rows.

    gamma = sum_k C^dag [E * B C]_k / sum_{n>=3,k} conj(C) [E * dv[f phi]]_{n,k};
    a near-zero denominator (no boundary activity) falls back to 1/2.
    """
    t_field = convolution_matrix(field).T
    out = []
    for i, (b, c) in enumerate(zip(plasma.bases, state.coeffs)):
        num = np.sum(np.conj(c) * (apply_B(b, c) @ t_field))
        dv_conv = boundary_term(b, c) @ t_field
        den = np.sum(np.conj(c[3:]) * dv_conv[3:])
        for label, val in (("numerator", num), ("denominator", den)):
            if abs(val) > 1e-14 and abs(val.imag) > 1e-10 * abs(val):
                log.warning("adaptive gamma %s has imaginary part %.3e", label, val.imag)
        if abs(den) < 1e-14:
            log.info("adaptive gamma fallback (species %s): boundary sum %.3e",
                     plasma.species[i].name, abs(den))
            out.append(fallback)
        else:
            out.append(float(num.real / den.real))
    return out
