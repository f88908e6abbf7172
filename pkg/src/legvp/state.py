"""Legendre-Fourier coefficient representation of the plasma state.

Each species is a complex matrix C[n, j] with Legendre mode n in
[0, N_L) and Fourier column j = k + N_F for k in [-N_F, N_F].  The
distribution it encodes is real, so every matrix carries the Hermitian
symmetry C[n, -k] = conj(C[n, k]).
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .basis import VelocityBasis, phi_table
from .errors import ConfigurationError

__all__ = [
    "DomainConfig",
    "Species",
    "SpectralState",
    "InitialProfile",
    "maxwellian_profile",
    "two_stream_profile",
    "convolve",
    "convolution_matrix",
    "project_profile",
    "reconstruct_f",
    "boundary_values",
    "write_snapshot_csv",
    "write_snapshot_binary",
    "read_snapshot_binary",
]

log = logging.getLogger(__name__)

PENALTY_MODES = ("none", "all_modes", "skip_first_three", "adaptive")


@dataclass(frozen=True)
class DomainConfig:
    """Phase-space box [0, L] x [v_a, v_b] and spectral resolution."""

    L: float
    v_a: float
    v_b: float
    n_legendre: int
    n_fourier: int
    epsilon0: float = 1.0

    def __post_init__(self):
        if self.L <= 0:
            raise ConfigurationError(f"spatial period must be positive, got {self.L}")
        if self.n_fourier < 1:
            raise ConfigurationError(f"need n_fourier >= 1, got {self.n_fourier}")
        if self.n_legendre < 4:
            raise ConfigurationError(f"need n_legendre >= 4, got {self.n_legendre}")
        if self.epsilon0 <= 0:
            raise ConfigurationError(f"epsilon0 must be positive, got {self.epsilon0}")

    @property
    def n_k(self) -> int:
        return 2 * self.n_fourier + 1

    @property
    def k_values(self) -> np.ndarray:
        return np.arange(-self.n_fourier, self.n_fourier + 1)


@dataclass(frozen=True)
class Species:
    """One plasma species in normalized units.

    v_a/v_b/n_legendre override the domain defaults when set; the ion
    acoustic benchmark needs a velocity box scaled to each species'
    thermal speed.
    """

    name: str
    q: float
    m: float
    nu: float = 0.0
    gamma: float = 0.5
    penalty_mode: str = "skip_first_three"
    v_a: float | None = None
    v_b: float | None = None
    n_legendre: int | None = None

    def __post_init__(self):
        if self.m <= 0:
            raise ConfigurationError(f"species {self.name}: mass must be positive")
        if self.nu < 0:
            raise ConfigurationError(f"species {self.name}: nu must be >= 0")
        if not 0.0 <= self.gamma <= 1.0:
            raise ConfigurationError(f"species {self.name}: gamma must lie in [0, 1]")
        if self.penalty_mode not in PENALTY_MODES:
            raise ConfigurationError(
                f"species {self.name}: penalty_mode must be one of {PENALTY_MODES}"
            )


class SpectralState:
    """Per-species coefficient matrices, shape (N_L, 2*N_F + 1) each."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Sequence[np.ndarray]):
        self.coeffs = [np.ascontiguousarray(c, dtype=np.complex128) for c in coeffs]

    @classmethod
    def zeros(cls, shapes: Sequence[tuple[int, int]]) -> "SpectralState":
        return cls([np.zeros(s, dtype=np.complex128) for s in shapes])

    def copy(self) -> "SpectralState":
        return SpectralState([c.copy() for c in self.coeffs])

    @property
    def shapes(self) -> list[tuple[int, int]]:
        return [c.shape for c in self.coeffs]

    def pack(self) -> np.ndarray:
        """Flatten to a real vector: species-major, then n, then k, re/im interleaved."""
        return np.concatenate([c.ravel().view(np.float64) for c in self.coeffs])

    @classmethod
    def unpack(cls, vec: np.ndarray, shapes: Sequence[tuple[int, int]]) -> "SpectralState":
        out, pos = [], 0
        for n_l, n_k in shapes:
            size = 2 * n_l * n_k
            block = np.ascontiguousarray(vec[pos : pos + size])
            out.append(block.view(np.complex128).reshape(n_l, n_k))
            pos += size
        return cls(out)

    def hermitian_defect(self) -> float:
        """Largest deviation from C[n, -k] = conj(C[n, k])."""
        return max(float(np.max(np.abs(c - np.conj(c[:, ::-1])))) for c in self.coeffs)

    def resymmetrize(self) -> None:
        """Average out Hermitian-symmetry roundoff; makes the k=0 column real."""
        for c in self.coeffs:
            c += np.conj(c[:, ::-1])
            c *= 0.5

    def l2_sums(self) -> np.ndarray:
        """Per-species sum over (n, k) of |C|^2."""
        return np.array([float(np.sum(np.abs(c) ** 2)) for c in self.coeffs])


# ---------------------------------------------------------------------------
# Truncated Fourier convolution
# ---------------------------------------------------------------------------

def convolve(g: np.ndarray, h: np.ndarray) -> np.ndarray:
    """[g * h]_k = sum_{k'} g_{k'} h_{k-k'}, everything truncated to [-N_F, N_F].

    Both inputs and the output are indexed j = k + N_F; modes outside the
    range are treated as zero.
    """
    g = np.asarray(g)
    h = np.asarray(h)
    if g.shape != h.shape:
        raise ConfigurationError("convolution operands must share the mode range")
    n_f = (g.size - 1) // 2
    return np.convolve(g, h)[n_f : n_f + g.size]


def convolution_matrix(g: np.ndarray) -> np.ndarray:
    """Matrix T with (X @ T.T)[n, k] = [g * X_n]_k for row vectors X_n."""
    g = np.asarray(g)
    n_k = g.size
    n_f = (n_k - 1) // 2
    idx = np.arange(n_k)
    d = idx[:, None] - idx[None, :] + n_f
    valid = (d >= 0) & (d < n_k)
    return np.where(valid, g[np.clip(d, 0, n_k - 1)], 0.0)


# ---------------------------------------------------------------------------
# Initial conditions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class InitialProfile:
    """Separable initial state g(v) * (1 + eps*cos(2*pi*khat*x/L))."""

    g: Callable[[np.ndarray], np.ndarray]
    eps: float = 0.0
    khat: int = 1
    label: str = "custom"


def maxwellian_profile(alpha: float = 1.0, drift: float = 0.0, eps: float = 0.0,
                       khat: int = 1) -> InitialProfile:
    """Unit-density Maxwellian with thermal spread alpha and mean velocity drift."""

    def g(v):
        return np.exp(-((v - drift) / (np.sqrt(2.0) * alpha)) ** 2) / (np.sqrt(2.0 * np.pi) * alpha)

    return InitialProfile(g=g, eps=eps, khat=khat, label="maxwellian")


def two_stream_profile(alpha: float, drift: float, eps: float = 0.0,
                       khat: int = 1) -> InitialProfile:
    """Two counter-streaming Maxwellians of equal temperature, unit total density."""

    def g(v):
        norm = 2.0 * np.sqrt(2.0 * np.pi) * alpha
        return (np.exp(-((v - drift) / (np.sqrt(2.0) * alpha)) ** 2)
                + np.exp(-((v + drift) / (np.sqrt(2.0) * alpha)) ** 2)) / norm

    return InitialProfile(g=g, eps=eps, khat=khat, label="two_stream")


def project_profile(basis: VelocityBasis, config: DomainConfig, profile: InitialProfile,
                    tail_tol: float = 1e-5) -> np.ndarray:
    """Project g(v)*(1 + eps*cos(2*pi*khat*x/L)) onto the coefficient matrix.

    The velocity factor is integrated by Gauss-Legendre quadrature; the
    cosine splits exactly into the conjugate pair of columns +-khat, so
    only three Fourier columns are nonzero.
    """
    g_vals = profile.g(basis.quad_nodes)
    g_edge = max(float(profile.g(np.array([basis.v_a]))[0]),
                 float(profile.g(np.array([basis.v_b]))[0]))
    g_peak = float(np.max(np.abs(g_vals)))
    if g_peak > 0 and g_edge > tail_tol * g_peak:
        raise ConfigurationError(
            f"initial profile is not negligible at the velocity boundaries "
            f"(edge/peak = {g_edge / g_peak:.3e} > {tail_tol:.1e}); the weak "
            f"compact-support assumption is violated -- enlarge [v_a, v_b]"
        )

    table = phi_table(basis, basis.quad_nodes)
    column = table @ (basis.quad_weights * g_vals) / basis.width

    coeffs = np.zeros((basis.n_modes, config.n_k), dtype=np.complex128)
    center = config.n_fourier
    coeffs[:, center] = column
    if profile.eps != 0.0:
        if abs(profile.khat) > config.n_fourier:
            raise ConfigurationError(
                f"perturbation wavenumber {profile.khat} exceeds n_fourier={config.n_fourier}"
            )
        coeffs[:, center + profile.khat] = 0.5 * profile.eps * column
        coeffs[:, center - profile.khat] = 0.5 * profile.eps * column
    return coeffs


# ---------------------------------------------------------------------------
# Evaluation on grids
# ---------------------------------------------------------------------------

def fourier_synthesis_matrix(config: DomainConfig, x: np.ndarray) -> np.ndarray:
    """W[j, kidx] = exp(2*pi*i*k*x_j/L)."""
    return np.exp(2j * np.pi * np.outer(x, config.k_values) / config.L)


def x_grid(config: DomainConfig, n_x: int) -> np.ndarray:
    return np.arange(n_x) * (config.L / n_x)


def reconstruct_f(basis: VelocityBasis, config: DomainConfig, coeffs: np.ndarray,
                  n_x: int | None = None, n_v: int = 129,
                  v: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Evaluate f(x_j, v_l); returns (x, v, f) with f real of shape (n_x, n_v).

    Raises if the imaginary residue of the synthesis exceeds 1e-10 (a
    Hermitian-symmetry violation upstream); smaller residues are dropped.
    """
    if n_x is None:
        n_x = 4 * config.n_fourier + 2
    if n_x < config.n_k:
        raise ConfigurationError(f"need n_x >= {config.n_k} to resolve all Fourier modes")
    x = x_grid(config, n_x)
    if v is None:
        v = np.linspace(basis.v_a, basis.v_b, n_v)
    w = fourier_synthesis_matrix(config, x)
    table = phi_table(basis, v)
    f_complex = (w @ coeffs.T) @ table
    residue = float(np.max(np.abs(f_complex.imag))) if f_complex.size else 0.0
    if residue > 1e-10:
        raise ConfigurationError(
            f"phase-space synthesis has imaginary residue {residue:.3e} > 1e-10; "
            f"state lost Hermitian symmetry"
        )
    return x, np.asarray(v, dtype=float), np.ascontiguousarray(f_complex.real)


def boundary_values(basis: VelocityBasis, coeffs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Fourier modes of f at the two velocity boundaries: (F_a, F_b)."""
    return basis.phi_at_va @ coeffs, basis.phi_at_vb @ coeffs


# ---------------------------------------------------------------------------
# Snapshot output
# ---------------------------------------------------------------------------

def write_snapshot_csv(path, x: np.ndarray, v: np.ndarray, f: np.ndarray) -> None:
    """Phase-space grid as CSV rows (x, v, f)."""
    with open(path, "w") as fh:
        fh.write("x,v,f\n")
        for j, xv in enumerate(x):
            for l, vv in enumerate(v):
                fh.write(f"{xv:.16e},{vv:.16e},{f[j, l]:.16e}\n")


def write_snapshot_binary(path, x: np.ndarray, v: np.ndarray, f: np.ndarray,
                          config: DomainConfig, basis: VelocityBasis,
                          t: float | None = None) -> None:
    """Row-major float64 block plus a JSON text sidecar with the grid shape."""
    path = str(path)
    np.ascontiguousarray(f, dtype=np.float64).tofile(path)
    meta = {
        "n_x": int(f.shape[0]),
        "n_v": int(f.shape[1]),
        "L": config.L,
        "v_a": basis.v_a,
        "v_b": basis.v_b,
    }
    if t is not None:
        meta["t"] = float(t)
    with open(path + ".json", "w") as fh:
        json.dump(meta, fh, indent=1)


def read_snapshot_binary(path) -> tuple[np.ndarray, np.ndarray, np.ndarray, dict]:
    """Inverse of write_snapshot_binary; reconstructs the x/v axes from the sidecar."""
    path = str(path)
    with open(path + ".json") as fh:
        meta = json.load(fh)
    f = np.fromfile(path, dtype=np.float64).reshape(meta["n_x"], meta["n_v"])
    x = np.arange(meta["n_x"]) * (meta["L"] / meta["n_x"])
    v = np.linspace(meta["v_a"], meta["v_b"], meta["n_v"])
    return x, v, f, meta
