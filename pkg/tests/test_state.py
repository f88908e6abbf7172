"""Spectral state: convolution algebra, projection, reconstruction, snapshots."""

import numpy as np
import pytest

from conftest import hermitian_random
from legvp.basis import build_basis, phi_table
from legvp.errors import ConfigurationError
from legvp.state import (
    DomainConfig,
    SpectralState,
    boundary_values,
    convolution_matrix,
    convolve,
    maxwellian_profile,
    project_profile,
    read_snapshot_binary,
    reconstruct_f,
    two_stream_profile,
    write_snapshot_binary,
    write_snapshot_csv,
    x_grid,
)


def test_convolve_identity():
    rng = np.random.default_rng(1)
    h = rng.standard_normal(9) + 1j * rng.standard_normal(9)
    g = np.zeros(9, dtype=complex)
    g[4] = 1.0  # delta at k=0
    assert np.allclose(convolve(g, h), h)
    assert np.allclose(convolve(h, g), h)


def test_convolve_matches_real_space_product(rng):
    """Hermitian inputs: truncated convolution == grid product projected back."""
    n_f = 5
    n_k = 2 * n_f + 1
    g = hermitian_random(rng, 1, n_k)[0]
    h = hermitian_random(rng, 1, n_k)[0]
    out = convolve(g, h)
    assert np.max(np.abs(out - np.conj(out[::-1]))) < 1e-14  # Hermitian output

    # Dense oversampled grid: product of syntheses, re-projected by DFT.
    n_x = 4 * n_f + 1
    x = np.arange(n_x) / n_x
    k = np.arange(-n_f, n_f + 1)
    basis_x = np.exp(2j * np.pi * np.outer(x, k))
    prod = (basis_x @ g) * (basis_x @ h)
    for j, kk in enumerate(k):
        mode = np.mean(prod * np.exp(-2j * np.pi * kk * x))
        # Product modes beyond n_f are absent from the truncated result by
        # construction; inside the range they agree exactly.
        assert mode == pytest.approx(out[j], abs=1e-13)


def test_convolution_matrix_agrees_with_convolve(rng):
    g = rng.standard_normal(11) + 1j * rng.standard_normal(11)
    rows = rng.standard_normal((4, 11)) + 1j * rng.standard_normal((4, 11))
    t = convolution_matrix(g)
    fast = rows @ t.T
    for i in range(4):
        assert np.allclose(fast[i], convolve(g, rows[i]))


def test_field_energy_mode_sum(rng):
    e = hermitian_random(rng, 1, 11)[0]
    assert convolve(e, e)[5] == pytest.approx(np.sum(e * e[::-1]), rel=1e-13)


@pytest.fixture
def landau_config():
    return DomainConfig(L=2 * np.pi, v_a=-5.0, v_b=5.0, n_legendre=201, n_fourier=4)


def test_project_initial_excites_three_columns(landau_config):
    basis = build_basis(-5.0, 5.0, 201)
    prof = maxwellian_profile(alpha=1.0, eps=1e-3, khat=1)
    c = project_profile(basis, landau_config, prof)
    center = landau_config.n_fourier
    nonzero = np.where(np.abs(c).sum(axis=0) > 0)[0]
    assert set(nonzero) == {center - 1, center, center + 1}
    # unit-density Maxwellian: C[0][0] = (1/(v_b-v_a)) integral f dv ~ 0.1
    assert c[0, center].real == pytest.approx(0.1, abs=1e-6)
    assert np.allclose(c[:, center + 1], 0.5e-3 * c[:, center])


def test_two_stream_even_in_v(landau_config):
    basis = build_basis(-5.0, 5.0, 201)
    prof = two_stream_profile(alpha=1 / np.sqrt(8.0), drift=1.0, eps=1e-3)
    c = project_profile(basis, landau_config, prof)
    odd = c[1::2, landau_config.n_fourier]
    assert np.max(np.abs(odd)) < 1e-13


def test_projection_rejects_fat_tails(landau_config):
    basis = build_basis(-5.0, 5.0, 201)
    with pytest.raises(ConfigurationError):
        project_profile(basis, landau_config, maxwellian_profile(alpha=3.0))


def test_reconstruct_constant_mode(landau_config):
    basis = build_basis(-5.0, 5.0, 16)
    cfg = DomainConfig(L=2 * np.pi, v_a=-5.0, v_b=5.0, n_legendre=16, n_fourier=4)
    c = np.zeros((16, cfg.n_k), dtype=complex)
    c[0, cfg.n_fourier] = 0.7
    _, _, f = reconstruct_f(basis, cfg, c)
    assert np.allclose(f, 0.7)


def test_reconstruct_round_trip_matches_gaussian(landau_config):
    basis = build_basis(-5.0, 5.0, 201)
    prof = maxwellian_profile(alpha=1.0, eps=1e-3, khat=1)
    c = project_profile(basis, landau_config, prof)
    v = basis.quad_nodes[::4]
    x, v, f = reconstruct_f(basis, landau_config, c, n_x=12, v=v)
    expected = np.exp(-v**2 / 2) / np.sqrt(2 * np.pi)
    analytic = np.outer(1.0 + 1e-3 * np.cos(2 * np.pi * x / landau_config.L), expected)
    assert np.max(np.abs(f - analytic)) < 1e-8


def test_boundary_values_consistency(rng, landau_config):
    basis = build_basis(-5.0, 5.0, 24)
    cfg = DomainConfig(L=2 * np.pi, v_a=-5.0, v_b=5.0, n_legendre=24, n_fourier=4)
    c = hermitian_random(rng, 24, cfg.n_k)
    f_a, f_b = boundary_values(basis, c)
    x, _, f = reconstruct_f(basis, cfg, c, n_x=cfg.n_k, v=np.array([basis.v_a, basis.v_b]))
    w = np.exp(2j * np.pi * np.outer(x, cfg.k_values) / cfg.L)
    assert np.max(np.abs(f[:, 0] - (w @ f_a).real)) < 1e-13
    assert np.max(np.abs(f[:, 1] - (w @ f_b).real)) < 1e-13

    single = np.zeros_like(c)
    single[0, cfg.n_fourier] = 2.5
    fa1, fb1 = boundary_values(basis, single)
    assert fa1[cfg.n_fourier] == pytest.approx(2.5)
    assert fb1[cfg.n_fourier] == pytest.approx(2.5)


def test_maxwellian_boundary_trace_is_small(landau_config):
    basis = build_basis(-5.0, 5.0, 201)
    c = project_profile(basis, landau_config, maxwellian_profile(alpha=1.0, eps=1e-3))
    f_a, f_b = boundary_values(basis, c)
    assert np.max(np.abs(f_a)) < 1e-5
    assert np.max(np.abs(f_b)) < 1e-5


def test_phase_space_l2_identity(rng):
    """Quadrature of |f|^2 over the box equals (v_b-v_a) L sum |C|^2 (20 states)."""
    cfg = DomainConfig(L=3.0, v_a=-2.0, v_b=5.0, n_legendre=10, n_fourier=3)
    basis = build_basis(cfg.v_a, cfg.v_b, cfg.n_legendre)
    n_x = 4 * cfg.n_fourier + 2
    x = x_grid(cfg, n_x)
    table = phi_table(basis, basis.quad_nodes)
    w_x = np.exp(2j * np.pi * np.outer(x, cfg.k_values) / cfg.L)
    for _ in range(20):
        c = hermitian_random(rng, cfg.n_legendre, cfg.n_k)
        f = (w_x @ c.T) @ table  # (n_x, n_quad)
        assert np.max(np.abs(f.imag)) < 1e-12
        quad_sq = np.sum((f.real**2) @ basis.quad_weights) * (cfg.L / n_x)
        coeff_sq = basis.width * cfg.L * np.sum(np.abs(c) ** 2)
        assert quad_sq == pytest.approx(coeff_sq, rel=1e-10)


def test_pack_unpack_round_trip(rng):
    shapes = [(6, 7), (4, 7)]
    st = SpectralState([hermitian_random(rng, *s) for s in shapes])
    vec = st.pack()
    assert vec.dtype == np.float64 and vec.size == 2 * sum(a * b for a, b in shapes)
    back = SpectralState.unpack(vec, shapes)
    for a, b in zip(st.coeffs, back.coeffs):
        assert np.array_equal(a, b)
    # interleaving: first two reals are re/im of C[0, 0]
    assert vec[0] == st.coeffs[0][0, 0].real
    assert vec[1] == st.coeffs[0][0, 0].imag


def test_resymmetrize(rng):
    c = rng.standard_normal((5, 7)) + 1j * rng.standard_normal((5, 7))
    st = SpectralState([c])
    assert st.hermitian_defect() > 0.1
    st.resymmetrize()
    assert st.hermitian_defect() < 1e-15
    assert np.all(st.coeffs[0][:, 3].imag == 0.0)


def test_snapshot_io_round_trip(tmp_path, rng):
    cfg = DomainConfig(L=2.0, v_a=-1.0, v_b=1.0, n_legendre=6, n_fourier=2)
    basis = build_basis(-1.0, 1.0, 6)
    c = hermitian_random(rng, 6, 5)
    x, v, f = reconstruct_f(basis, cfg, c, n_x=10, n_v=9)
    bin_path = tmp_path / "snap.bin"
    write_snapshot_binary(bin_path, x, v, f, cfg, basis, t=1.5)
    x2, v2, f2, meta = read_snapshot_binary(bin_path)
    assert np.array_equal(f, f2)
    assert np.allclose(x, x2) and np.allclose(v, v2)
    assert meta["t"] == 1.5

    csv_path = tmp_path / "snap.csv"
    write_snapshot_csv(csv_path, x, v, f)
    rows = np.loadtxt(csv_path, delimiter=",", skiprows=1)
    assert rows.shape == (90, 3)
    assert rows[0, 2] == pytest.approx(f[0, 0])
