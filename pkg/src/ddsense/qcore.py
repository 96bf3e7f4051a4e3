"""Small dense linear algebra for qubit channels.

Matrices are plain complex ``numpy`` arrays. Process matrices (chi) use the
unnormalized Pauli basis ``A = (I, X, Y, Z)`` with coefficients carrying the
1/2 factors, so a trace-preserving channel has ``trace(chi) == 1``.
"""

import numpy as np

from .errors import (
    DimensionTooLarge,
    InvalidDensityMatrix,
    NonHermitianInput,
    NotUnitary,
)

IDENTITY = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)

PAULI_BASIS = (IDENTITY, SIGMA_X, SIGMA_Y, SIGMA_Z)
_PAULI_INDEX = {"I": 0, "i": 0, "x": 1, "X": 1, "y": 2, "Y": 2, "z": 3, "Z": 3}

HERMITIAN_TOL = 1e-10
UNITARY_TOL = 1e-10
MAX_DENSE_DIM = 64


def pauli(index):
    """Return the 2x2 Pauli matrix for ``index`` in {'I', 'x', 'y', 'z'} or 0..3."""
    if isinstance(index, str):
        if index not in _PAULI_INDEX:
            raise KeyError(f"unknown Pauli label {index!r}")
        index = _PAULI_INDEX[index]
    return PAULI_BASIS[int(index)].copy()


def is_hermitian(m, tol=HERMITIAN_TOL):
    m = np.asarray(m)
    return np.max(np.abs(m - m.conj().T), initial=0.0) < tol


def is_unitary(u, tol=UNITARY_TOL):
    u = np.asarray(u)
    eye = np.eye(u.shape[0])
    return np.max(np.abs(u.conj().T @ u - eye)) < tol


def _check_hermitian(h):
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise NonHermitianInput(f"expected a square matrix, got shape {h.shape}")
    if not np.all(np.isfinite(h)):
        raise NonHermitianInput("matrix has non-finite entries")
    if not is_hermitian(h):
        raise NonHermitianInput("matrix is not Hermitian within 1e-10")
    return h


def pauli_components(m):
    """Coefficients ``c_k = Tr(A_k m) / 2`` so that ``m = sum_k c_k A_k``."""
    m = np.asarray(m, dtype=complex)
    return np.array([np.trace(a @ m) / 2 for a in PAULI_BASIS])


def expm_2x2(h, t=1.0):
    """Closed-form ``exp(-i h t)`` for a Hermitian 2x2 ``h``.

    Uses ``h = c0 I + c.sigma`` so that
    ``exp(-i h t) = exp(-i c0 t) (cos(|c| t) I - i sin(|c| t) c_hat.sigma)``.
    """
    h = _check_hermitian(h)
    if h.shape != (2, 2):
        raise NonHermitianInput(f"expm_2x2 needs a 2x2 matrix, got {h.shape}")
    c = pauli_components(h).real
    norm = np.sqrt(c[1] ** 2 + c[2] ** 2 + c[3] ** 2)
    angle = norm * t
    # sin(angle)/norm evaluated stably near norm == 0
    sinc = t * np.sinc(angle / np.pi) if norm > 0 else t
    u = np.cos(angle) * IDENTITY - 1j * sinc * (
        c[1] * SIGMA_X + c[2] * SIGMA_Y + c[3] * SIGMA_Z
    )
    return np.exp(-1j * c[0] * t) * u


def expm_dense(h, t=1.0):
    """``exp(-i h t)`` for a Hermitian matrix of dimension <= 64, via ``eigh``."""
    h = np.asarray(h, dtype=complex)
    if h.ndim == 2 and h.shape[0] > MAX_DENSE_DIM:
        raise DimensionTooLarge(f"dimension {h.shape[0]} exceeds {MAX_DENSE_DIM}")
    h = _check_hermitian(h)
    evals, evecs = np.linalg.eigh((h + h.conj().T) / 2)
    return (evecs * np.exp(-1j * evals * t)) @ evecs.conj().T


def unitary_to_chi(u):
    """Rank-one process matrix of a 2x2 unitary, ``chi_ij = c_i c_j^*``."""
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2) or not is_unitary(u):
        raise NotUnitary("unitary_to_chi needs a 2x2 unitary")
    c = pauli_components(u)
    return np.outer(c, c.conj())


def kraus_to_chi(kraus_ops):
    """Process matrix of the channel ``rho -> sum_k K rho K^dag``."""
    chi = np.zeros((4, 4), dtype=complex)
    for k in kraus_ops:
        c = pauli_components(k)
        chi += np.outer(c, c.conj())
    return chi


def check_density(rho, tol=1e-9):
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (2, 2):
        raise InvalidDensityMatrix(f"expected 2x2 density matrix, got {rho.shape}")
    if not is_hermitian(rho, tol):
        raise InvalidDensityMatrix("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1) > tol:
        raise InvalidDensityMatrix(f"trace {np.trace(rho).real:.3g} != 1")
    if np.linalg.eigvalsh(rho).min() < -tol:
        raise InvalidDensityMatrix("density matrix has a negative eigenvalue")
    return rho


def apply_channel(chi, rho):
    """Apply ``E(rho) = sum_ij chi_ij A_i rho A_j^dag``."""
    rho = check_density(rho)
    chi = np.asarray(chi, dtype=complex)
    out = np.zeros((2, 2), dtype=complex)
    for i, ai in enumerate(PAULI_BASIS):
        for j, aj in enumerate(PAULI_BASIS):
            if chi[i, j] != 0:
                out += chi[i, j] * ai @ rho @ aj.conj().T
    return out


def random_unitary(rng, dim=2):
    """Haar-random unitary (QR of a Ginibre matrix with phase fix)."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_channel_chi(rng, n_kraus=4):
    """Random CPTP qubit channel built from a Stinespring isometry."""
    v = random_unitary(rng, 2 * n_kraus)[:, :2]
    kraus = [v[2 * k : 2 * k + 2, :] for k in range(n_kraus)]
    return kraus_to_chi(kraus)


def random_density(rng):
    z = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    rho = z @ z.conj().T
    return rho / np.trace(rho)
