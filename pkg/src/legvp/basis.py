"""Rescaled Legendre basis on a finite velocity interval.

The basis phi_n(v) = sqrt(2n+1) * L_n(eta(v)), with eta mapping [v_a, v_b]
onto [-1, 1], satisfies

    integral phi_m phi_n dv = (v_b - v_a) delta_mn.

All coupling coefficients needed by the solver (multiplication by v,
differentiation in v, low-order moments) are exact rational/sqrt
expressions precomputed here.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError

__all__ = [
    "VelocityBasis",
    "eval_legendre",
    "eval_phi",
    "phi_table",
    "build_basis",
    "recursion_vphi",
    "recursion_v2phi",
    "moment_integrals",
    "gauss_legendre_rule",
]


def eval_legendre(n: int, eta):
    """Evaluate the Legendre polynomial L_n at eta by upward recursion."""
    eta = np.asarray(eta, dtype=float)
    p_prev = np.ones_like(eta)
    if n == 0:
        return p_prev if p_prev.ndim else float(p_prev)
    p = eta.copy()
    for m in range(1, n):
        p, p_prev = ((2 * m + 1) * eta * p - m * p_prev) / (m + 1), p
    return p if p.ndim else float(p)


def gauss_legendre_rule(v_a: float, v_b: float, n_nodes: int):
    """Gauss-Legendre nodes and weights mapped to [v_a, v_b]."""
    x, w = np.polynomial.legendre.leggauss(n_nodes)
    half = 0.5 * (v_b - v_a)
    return v_a + half * (x + 1.0), half * w


@dataclass(frozen=True)
class VelocityBasis:
    """Precomputed tables for the rescaled Legendre basis on [v_a, v_b].

    sigma[n] couples neighbouring modes under multiplication by v
    (sigma[0] = 0; the array extends to n = n_modes + 1 so the v and v^2
    recursions are available for every retained mode).  sigma_deriv[n, i]
    expands d(phi_n)/dv on lower modes and vanishes unless n - i is odd.
    """

    v_a: float
    v_b: float
    n_modes: int
    sigma_bar: float
    sigma: np.ndarray
    sigma_deriv: np.ndarray
    phi_at_va: np.ndarray
    phi_at_vb: np.ndarray
    quad_nodes: np.ndarray = field(repr=False)
    quad_weights: np.ndarray = field(repr=False)

    @property
    def width(self) -> float:
        return self.v_b - self.v_a

    def eta(self, v):
        return (2.0 * np.asarray(v, dtype=float) - (self.v_a + self.v_b)) / self.width


def build_basis(v_a: float, v_b: float, n_modes: int) -> VelocityBasis:
    """Build the basis tables; quadrature uses max(2*n_modes, 128) nodes."""
    if not v_a < v_b:
        raise ConfigurationError(f"velocity bounds must satisfy v_a < v_b, got [{v_a}, {v_b}]")
    if n_modes < 4:
        raise ConfigurationError(f"need at least 4 Legendre modes, got {n_modes}")

    width = v_b - v_a
    n = np.arange(n_modes + 2, dtype=float)
    sigma = np.zeros(n_modes + 2)
    sigma[1:] = 0.5 * width * n[1:] / np.sqrt((2 * n[1:] + 1) * (2 * n[1:] - 1))

    # Parity-masked, strictly lower-triangular derivative table.
    nn, ii = np.meshgrid(np.arange(n_modes), np.arange(n_modes), indexing="ij")
    odd = ((nn - ii) % 2 == 1) & (ii < nn)
    sigma_deriv = np.where(odd, 2.0 * np.sqrt((2 * nn + 1.0) * (2 * ii + 1.0)) / width, 0.0)

    # eta(v_a) = -1 and eta(v_b) = +1, where L_n takes (-1)^n and 1.
    scale = np.sqrt(2 * np.arange(n_modes) + 1.0)
    phi_at_vb = scale.copy()
    phi_at_va = scale * np.where(np.arange(n_modes) % 2 == 0, 1.0, -1.0)

    nodes, weights = gauss_legendre_rule(v_a, v_b, max(2 * n_modes, 128))
    return VelocityBasis(
        v_a=float(v_a),
        v_b=float(v_b),
        n_modes=int(n_modes),
        sigma_bar=0.5 * (v_a + v_b),
        sigma=sigma,
        sigma_deriv=sigma_deriv,
        phi_at_va=phi_at_va,
        phi_at_vb=phi_at_vb,
        quad_nodes=nodes,
        quad_weights=weights,
    )


def eval_phi(basis: VelocityBasis, n: int, v):
    """phi_n(v) = sqrt(2n+1) L_n(eta(v))."""
    if not 0 <= n < basis.n_modes:
        raise ConfigurationError(f"mode index {n} outside [0, {basis.n_modes})")
    return np.sqrt(2 * n + 1.0) * eval_legendre(n, basis.eta(v))


def phi_table(basis: VelocityBasis, v) -> np.ndarray:
    """All basis functions at once: table[n, j] = phi_n(v[j])."""
    eta = np.atleast_1d(basis.eta(v))
    table = np.empty((basis.n_modes, eta.size))
    table[0] = 1.0
    if basis.n_modes > 1:
        table[1] = eta
    for m in range(1, basis.n_modes - 1):
        table[m + 1] = ((2 * m + 1) * eta * table[m] - m * table[m - 1]) / (m + 1)
    return table * np.sqrt(2 * np.arange(basis.n_modes) + 1.0)[:, None]


def recursion_vphi(basis: VelocityBasis, n: int) -> tuple[float, float, float]:
    """Coefficients (c_plus, c_minus, c_zero) of v*phi_n on phi_{n+1}, phi_{n-1}, phi_n."""
    return float(basis.sigma[n + 1]), float(basis.sigma[n]), basis.sigma_bar


def recursion_v2phi(basis: VelocityBasis, n: int) -> tuple[float, float, float, float, float]:
    """Coefficients of v^2*phi_n on phi_{n+2}, phi_{n+1}, phi_n, phi_{n-1}, phi_{n-2}."""
    s, sb = basis.sigma, basis.sigma_bar
    return (
        float(s[n + 2] * s[n + 1]),
        float(2.0 * s[n + 1] * sb),
        float(s[n + 1] ** 2 + s[n] ** 2 + sb**2),
        float(2.0 * s[n] * sb),
        float(s[n] * s[n - 1]) if n >= 1 else 0.0,
    )


def moment_integrals(basis: VelocityBasis, n: int) -> tuple[float, float, float]:
    """Closed forms of integral phi_n dv, integral v phi_n dv, integral v^2 phi_n dv."""
    w, s, sb = basis.width, basis.sigma, basis.sigma_bar
    i0 = w if n == 0 else 0.0
    i1 = w * (s[1] * (n == 1) + sb * (n == 0))
    i2 = w * ((s[1] ** 2 + sb**2) * (n == 0) + 2.0 * s[1] * sb * (n == 1) + s[2] * s[1] * (n == 2))
    return float(i0), float(i1), float(i2)
