import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import series_expm
from ddsense.errors import DimensionTooLarge, InvalidDensityMatrix, NonHermitianInput, NotUnitary
from ddsense.qcore import (
    IDENTITY,
    PAULI_BASIS,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    apply_channel,
    expm_2x2,
    expm_dense,
    is_unitary,
    kraus_to_chi,
    pauli,
    random_density,
    random_unitary,
    unitary_to_chi,
)
from ddsense.tomo import INPUT_DENSITIES

finite = st.floats(-5, 5, allow_nan=False)


def test_pauli_algebra():
    assert np.allclose(pauli("z") @ pauli("z"), IDENTITY)
    assert abs(np.trace(pauli("x") @ pauli("y"))) < 1e-15
    assert np.allclose(pauli("x") @ pauli("y"), 1j * pauli("z"))
    assert np.array_equal(pauli(1), SIGMA_X)
    with pytest.raises(KeyError):
        pauli("w")


def test_expm_resonant_pi():
    u = expm_2x2(0.5 * SIGMA_X, np.pi)
    assert np.allclose(u, -1j * SIGMA_X, atol=1e-14)
    assert np.allclose(expm_2x2(np.zeros((2, 2)), 3.7), IDENTITY)


def test_expm_detuned_pi_matches_series():
    h = 0.5 * SIGMA_Z + 0.5 * SIGMA_X
    u = expm_2x2(h, np.pi)
    assert np.max(np.abs(u - series_expm(h, np.pi))) < 1e-10
    # rotation by pi*sqrt(2) about (1, 0, 1)/sqrt(2)
    half = np.pi * np.sqrt(2) / 2
    n_sigma = (SIGMA_X + SIGMA_Z) / np.sqrt(2)
    assert np.allclose(u, np.cos(half) * IDENTITY - 1j * np.sin(half) * n_sigma, atol=1e-12)


def test_expm_rejects_non_hermitian():
    with pytest.raises(NonHermitianInput):
        expm_2x2(np.array([[0, 1], [0, 0]]), 1.0)
    with pytest.raises(NonHermitianInput):
        expm_dense(np.array([[0, 1], [0, 0]]), 1.0)


def _random_hermitian(rng, n):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (a + a.conj().T) / 2


def test_expm_dense_random_8x8(rng):
    h = _random_hermitian(rng, 8)
    assert np.max(np.abs(expm_dense(h, 0.7) - series_expm(h, 0.7))) < 1e-9


def test_expm_dense_block_diagonal(rng):
    h0, h1 = _random_hermitian(rng, 2), _random_hermitian(rng, 2)
    p0, p1 = np.diag([1.0, 0.0]), np.diag([0.0, 1.0])
    u = expm_dense(np.kron(p0, h0) + np.kron(p1, h1), 1.3)
    assert np.allclose(u[:2, :2], expm_2x2(h0, 1.3), atol=1e-12)
    assert np.allclose(u[2:, 2:], expm_2x2(h1, 1.3), atol=1e-12)
    assert np.max(np.abs(u[:2, 2:])) < 1e-12


def test_expm_dense_size_guard():
    with pytest.raises(DimensionTooLarge):
        expm_dense(np.zeros((128, 128)), 1.0)


@given(st.integers(0, 2**32 - 1), finite, finite)
def test_expm_additivity(seed, t1, t2):
    h = _random_hermitian(np.random.default_rng(seed), 4)
    lhs = expm_dense(h, t1) @ expm_dense(h, t2)
    assert np.max(np.abs(lhs - expm_dense(h, t1 + t2))) < 1e-10
    h2 = h[:2, :2]
    assert np.max(np.abs(expm_2x2(h2, t1) @ expm_2x2(h2, t2) - expm_2x2(h2, t1 + t2))) < 1e-10


@given(st.integers(0, 2**32 - 1), finite)
def test_propagators_unitary(seed, t):
    h = _random_hermitian(np.random.default_rng(seed), 2)
    u = expm_2x2(h, t)
    assert np.max(np.abs(u.conj().T @ u - IDENTITY)) < 1e-10


def test_unitary_to_chi_basic():
    chi = unitary_to_chi(SIGMA_X)
    expected = np.zeros((4, 4))
    expected[1, 1] = 1
    assert np.allclose(chi, expected)
    assert np.isclose(unitary_to_chi(IDENTITY)[0, 0], 1)
    with pytest.raises(NotUnitary):
        unitary_to_chi(np.eye(2) * 2)


def test_unitary_to_chi_z_rotation():
    u = expm_2x2(0.5 * SIGMA_Z, np.pi / 2)  # exp(-i pi/4 sigma_z)
    chi = unitary_to_chi(u)
    assert np.isclose(chi[0, 0].real, np.cos(np.pi / 4) ** 2)
    assert np.linalg.matrix_rank(chi, tol=1e-10) == 1
    for rho in INPUT_DENSITIES.values():
        assert np.allclose(apply_channel(chi, rho), u @ rho @ u.conj().T, atol=1e-12)


def test_apply_channel_examples():
    rho0 = np.diag([1.0, 0.0]).astype(complex)
    assert np.allclose(apply_channel(unitary_to_chi(SIGMA_X), rho0), np.diag([0, 1]))
    rho = random_density(np.random.default_rng(3))
    assert np.allclose(apply_channel(unitary_to_chi(IDENTITY), rho), rho)


def test_depolarizing_against_kraus_sum():
    p = 0.2
    chi = np.diag([1 - 3 * p / 4, p / 4, p / 4, p / 4]).astype(complex)
    rho0 = np.diag([1.0, 0.0]).astype(complex)
    kraus = [np.sqrt(w) * a for w, a in zip([1 - 3 * p / 4] + [p / 4] * 3, PAULI_BASIS)]
    oracle = sum(k @ rho0 @ k.conj().T for k in kraus)
    out = apply_channel(chi, rho0)
    assert np.allclose(out, oracle)
    assert np.allclose(out, np.diag([1 - p / 2, p / 2]))
    assert np.allclose(kraus_to_chi(kraus), chi)


def test_apply_channel_rejects_bad_density():
    with pytest.raises(InvalidDensityMatrix):
        apply_channel(unitary_to_chi(IDENTITY), np.diag([2.0, -1.0]))


def test_chi_conjugation_consistency_100_states(rng):
    for _ in range(100):
        u = random_unitary(rng)
        rho = random_density(rng)
        out = apply_channel(unitary_to_chi(u), rho)
        assert np.max(np.abs(out - u @ rho @ u.conj().T)) < 1e-10


@given(st.integers(0, 2**32 - 1))
def test_chi_hermitian_trace_one(seed):
    u = random_unitary(np.random.default_rng(seed))
    assert is_unitary(u)
    chi = unitary_to_chi(u)
    assert np.max(np.abs(chi - chi.conj().T)) < 1e-10
    assert abs(np.trace(chi) - 1) < 1e-12
