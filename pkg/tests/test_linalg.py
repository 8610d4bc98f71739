import numpy as np
import pytest

from ttmemory.linalg import (
    SIGMA_X,
    SIGMA_Z,
    DimensionLayout,
    frobenius_norm,
    hermitian_eigh,
    is_hermitian,
    kron,
    kron_all,
    matrix_exponential,
    matrix_norm,
    partial_trace,
    psd_sqrt,
    spectral_norm,
)
from conftest import random_hermitian, random_density_matrix


# ---------------------------------------------------------------------------
# kron
# ---------------------------------------------------------------------------


def test_kron_identities():
    assert np.allclose(kron(np.eye(2), np.eye(3)), np.eye(6))


def test_kron_sigma_z_projector():
    proj0 = np.diag([1.0, 0.0])
    assert np.allclose(kron(SIGMA_Z, proj0), np.diag([1, 0, -1, 0]))


def test_kron_trace_factorizes(rng):
    a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    b = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    product = kron(a, b)
    # independent oracle: sum the diagonal entrywise
    direct = sum(product[i, i] for i in range(6))
    assert abs(direct - np.trace(a) * np.trace(b)) < 1e-12


def test_kron_associative(rng):
    a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    b = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    c = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    assert np.abs(kron(kron(a, b), c) - kron(a, kron(b, c))).max() < 1e-12


def test_kron_all_matches_nested(rng):
    mats = [rng.normal(size=(2, 2)) for _ in range(3)]
    assert np.allclose(kron_all(mats), kron(kron(mats[0], mats[1]), mats[2]))


# ---------------------------------------------------------------------------
# partial trace
# ---------------------------------------------------------------------------


def _naive_partial_trace_keep_first(rho, d1, d2):
    out = np.zeros((d1, d1), dtype=complex)
    for i in range(d1):
        for j in range(d1):
            out[i, j] = sum(rho[i * d2 + e, j * d2 + e] for e in range(d2))
    return out


def test_partial_trace_product_state(rng):
    rho_s = random_density_matrix(rng, 2)
    rho_e = random_density_matrix(rng, 3)
    layout = DimensionLayout((2, 3))
    full = kron(rho_s, rho_e)
    assert np.abs(partial_trace(full, layout, keep=[0]) - rho_s).max() < 1e-12
    assert np.abs(partial_trace(full, layout, keep=[1]) - rho_e).max() < 1e-12


def test_partial_trace_bell_state():
    bell = np.zeros(4, dtype=complex)
    bell[0] = bell[3] = 1 / np.sqrt(2)
    rho = np.outer(bell, bell.conj())
    reduced = partial_trace(rho, DimensionLayout((2, 2)), keep=[0])
    assert np.abs(reduced - np.eye(2) / 2).max() < 1e-12


def test_partial_trace_matches_naive(rng):
    layout = DimensionLayout((3, 4))
    rho = random_density_matrix(rng, 12)
    fast = partial_trace(rho, layout, keep=[0])
    assert np.abs(fast - _naive_partial_trace_keep_first(rho, 3, 4)).max() < 1e-12


def test_partial_trace_preserves_trace_and_is_linear(rng):
    layout = DimensionLayout((2, 2, 3))
    a = random_density_matrix(rng, 12)
    b = random_density_matrix(rng, 12)
    for keep in ([0], [1], [2], [0, 2]):
        ra = partial_trace(a, layout, keep)
        assert abs(np.trace(ra) - np.trace(a)) < 1e-12
        combo = partial_trace(0.3 * a + 0.7j * b, layout, keep)
        assert np.abs(combo - (0.3 * ra + 0.7j * partial_trace(b, layout, keep))).max() < 1e-12


def test_partial_trace_dimension_mismatch():
    with pytest.raises(ValueError):
        partial_trace(np.eye(5), DimensionLayout((2, 3)), keep=[0])


# ---------------------------------------------------------------------------
# hermitian_eigh
# ---------------------------------------------------------------------------


def test_eigh_pauli_x_spectrum():
    w, _ = hermitian_eigh(SIGMA_X)
    assert np.allclose(w, [-1.0, 1.0])


def test_eigh_sorts_ascending():
    w, _ = hermitian_eigh(np.diag([3.0, 1.0, 2.0]))
    assert np.allclose(w, [1.0, 2.0, 3.0])


def test_eigh_reconstructs(rng):
    a = random_hermitian(rng, 8)
    w, v = hermitian_eigh(a)
    scale = max(1.0, np.linalg.norm(a))
    assert np.linalg.norm(a - (v * w) @ v.conj().T) < 1e-10 * scale
    assert np.linalg.norm(v.conj().T @ v - np.eye(8)) < 1e-10


def test_eigh_rejects_non_hermitian(rng):
    a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    with pytest.raises(ValueError):
        hermitian_eigh(a)


def test_eigh_psd_eigenvalues_nonnegative(rng):
    b = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    psd = b @ b.conj().T
    w, _ = hermitian_eigh(psd)
    assert w.min() > -1e-10 * np.linalg.norm(psd)


# ---------------------------------------------------------------------------
# matrix exponential
# ---------------------------------------------------------------------------


def _series_expm(a, terms=40):
    out = np.eye(a.shape[0], dtype=complex)
    power = np.eye(a.shape[0], dtype=complex)
    for n in range(1, terms):
        power = power @ a / n
        out = out + power
    return out


def test_expm_zero():
    assert np.allclose(matrix_exponential(np.zeros((3, 3))), np.eye(3))


def test_expm_pauli_rotation_vs_series():
    gen = -1j * np.pi / 2 * SIGMA_X
    expected = _series_expm(gen)
    got = matrix_exponential(gen)
    assert np.abs(got - expected).max() < 1e-12
    assert np.abs(got - (-1j) * SIGMA_X).max() < 1e-12


@pytest.mark.parametrize("t", [0.1, 1.0, 10.0])
def test_expm_unitary_for_hermitian_generators(rng, t):
    h = random_hermitian(rng, 5)
    u = matrix_exponential(-1j * t * h)
    assert np.linalg.norm(u.conj().T @ u - np.eye(5)) < 1e-10


def test_expm_inverse_pairs(rng):
    a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))  # generic matrix
    left = matrix_exponential(a) @ matrix_exponential(-a)
    assert np.linalg.norm(left - np.eye(4)) < 1e-8


def test_expm_generic_matches_series(rng):
    a = 0.3 * (rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)))
    assert np.abs(matrix_exponential(a) - _series_expm(a)).max() < 1e-12


# ---------------------------------------------------------------------------
# norms and roots
# ---------------------------------------------------------------------------


def test_frobenius_norm_values():
    assert abs(frobenius_norm(np.eye(2)) - np.sqrt(2)) < 1e-15
    assert frobenius_norm(np.zeros((3, 3))) == 0.0
    xx = kron(SIGMA_X, SIGMA_X)
    # entry summation oracle
    assert abs(frobenius_norm(xx) - np.sqrt(sum(abs(x) ** 2 for x in xx.reshape(-1)))) < 1e-15
    assert abs(frobenius_norm(xx) - 2.0) < 1e-15


def test_spectral_norm(rng):
    a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    assert abs(spectral_norm(a) - np.linalg.svd(a, compute_uv=False)[0]) < 1e-12
    assert matrix_norm(a, "spectral") == spectral_norm(a)
    with pytest.raises(ValueError):
        matrix_norm(a, "nuclear")


def test_psd_sqrt_squares_back(rng):
    b = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    f = b @ b.conj().T
    m = psd_sqrt(f)
    assert np.abs(m @ m - f).max() < 1e-10
    assert is_hermitian(m)


def test_layout_validation():
    with pytest.raises(ValueError):
        DimensionLayout((2, 0))
    layout = DimensionLayout((2, 3, 3))
    assert layout.total_dim == 18
    assert layout.num_subsystems == 3
