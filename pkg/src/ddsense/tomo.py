"""Simulated single-qubit process tomography and chi reconstruction.

Four inputs (|0>, |1>, |+>, (|0> - i|1>)/sqrt2) are each read out along x, y, z.
"""

import csv
import io
from dataclasses import dataclass

import numpy as np

from .errors import (
    DuplicateRecord,
    IncompleteRecordSet,
    UnphysicalChannel,
    ZeroTrace,
)
from .sweep import fmt_float
from .qcore import PAULI_BASIS, SIGMA_X, SIGMA_Y, SIGMA_Z, apply_channel, is_hermitian

INPUT_STATES = ("0", "1", "plus", "minus_i")
OBSERVABLES = ("x", "y", "z")
_OBS = {"x": SIGMA_X, "y": SIGMA_Y, "z": SIGMA_Z}
EXACT = 0


def _ket_density(psi):
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


INPUT_DENSITIES = {
    "0": _ket_density([1, 0]),
    "1": _ket_density([0, 1]),
    "plus": _ket_density(np.array([1, 1]) / np.sqrt(2)),
    "minus_i": _ket_density(np.array([1, -1j]) / np.sqrt(2)),
}


@dataclass(frozen=True)
class TomoRecord:
    input_state_id: str
    observable: str
    mean: float
    shots: int

    def __post_init__(self):
        if self.input_state_id not in INPUT_STATES:
            raise ValueError(f"unknown input state {self.input_state_id!r}")
        if self.observable not in OBSERVABLES:
            raise ValueError(f"unknown observable {self.observable!r}")
        if abs(self.mean) > 1 + 1e-12:
            raise ValueError(f"|mean| = {abs(self.mean)} > 1")
        if self.shots < 0:
            raise ValueError("shots must be >= 1, or 0 for exact expectation values")


def check_physical(chi, tol=1e-9):
    chi = np.asarray(chi, dtype=complex)
    if chi.shape != (4, 4) or not is_hermitian(chi, tol):
        raise UnphysicalChannel("chi must be a Hermitian 4x4 matrix")
    if np.linalg.eigvalsh(chi).min() < -tol:
        raise UnphysicalChannel("chi has a negative eigenvalue")
    tp = sum(
        chi[i, j] * PAULI_BASIS[j].conj().T @ PAULI_BASIS[i] for i in range(4) for j in range(4)
    )
    if np.max(np.abs(tp - np.eye(2))) > 1e-8:
        raise UnphysicalChannel("channel is not trace preserving")
    return chi


def simulate_tomography(chi, shots, seed=0):
    """Twelve readout records; ``shots=0`` returns exact expectation values.

    Each finite-shot mean is ``2 k / shots - 1`` with ``k`` binomial in the
    probability of the +1 outcome.
    """
    chi = check_physical(chi)
    if shots < 0:
        raise ValueError("shots must be non-negative")
    rng = np.random.default_rng(seed)
    records = []
    for state in INPUT_STATES:
        out = apply_channel(chi, INPUT_DENSITIES[state])
        for obs in OBSERVABLES:
            expect = float(np.clip(np.trace(_OBS[obs] @ out).real, -1.0, 1.0))
            if shots == EXACT:
                mean = expect
            else:
                k = rng.binomial(shots, (1 + expect) / 2)
                mean = 2 * k / shots - 1
            records.append(TomoRecord(state, obs, mean, shots))
    return records


def _index_records(records):
    table = {}
    for r in records:
        key = (r.input_state_id, r.observable)
        if key in table:
            raise DuplicateRecord(f"duplicate record for {key}")
        table[key] = r.mean
    missing = [(s, o) for s in INPUT_STATES for o in OBSERVABLES if (s, o) not in table]
    if missing:
        raise IncompleteRecordSet(f"missing records: {missing}")
    return table


def _chi_design_matrix():
    # column (i, j) holds vec(A_i E_ab A_j^dag) over all matrix units E_ab
    cols = []
    for i in range(4):
        for j in range(4):
            sup = np.kron(PAULI_BASIS[i], PAULI_BASIS[j].conj())
            cols.append(sup.reshape(-1))
    return np.array(cols).T


_DESIGN = _chi_design_matrix()


def linear_inversion(records):
    """Reconstruct chi by solving the linear map on the four input states."""
    table = _index_records(records)
    outs = {}
    for s in INPUT_STATES:
        bloch = [table[(s, o)] for o in OBSERVABLES]
        outs[s] = 0.5 * (np.eye(2) + bloch[0] * SIGMA_X + bloch[1] * SIGMA_Y + bloch[2] * SIGMA_Z)
    e00, e11 = outs["0"], outs["1"]
    re = 2 * outs["plus"] - e00 - e11  # E(|0><1| + |1><0|)
    im = 2 * outs["minus_i"] - e00 - e11  # E(i|0><1| - i|1><0|)
    e01 = (re - 1j * im) / 2
    e10 = (re + 1j * im) / 2
    units = [[e00, e01], [e10, e11]]
    # superoperator acting on row-major vec(rho)
    sup = np.zeros((4, 4), dtype=complex)
    for a in range(2):
        for b in range(2):
            sup[:, 2 * a + b] = units[a][b].reshape(-1)
    chi_vec = np.linalg.solve(_DESIGN, sup.reshape(-1))
    chi = chi_vec.reshape(4, 4)
    return (chi + chi.conj().T) / 2


def _simplex_projection(v):
    """Euclidean projection of ``v`` onto the probability simplex."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1
    k = np.nonzero(u - css / np.arange(1, len(v) + 1) > 0)[0][-1]
    return np.clip(v - css[k] / (k + 1), 0.0, None)


def mle_project(chi_raw):
    """Closest unit-trace positive semidefinite chi in Frobenius norm.

    The eigenvalues are shifted by a common offset and clipped at zero so
    that they sum to one; for a raw estimate with trace one this is the exact
    projection onto the set of physical process matrices.
    """
    chi_raw = np.asarray(chi_raw, dtype=complex)
    evals, evecs = np.linalg.eigh((chi_raw + chi_raw.conj().T) / 2)
    if evals.max() <= 0:
        raise ZeroTrace("all eigenvalues of chi are non-positive")
    w = _simplex_projection(evals)
    chi = (evecs * w) @ evecs.conj().T
    return (chi + chi.conj().T) / 2


def records_to_csv(records, header_lines=()):
    buf = io.StringIO()
    for line in header_lines:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["input", "observable", "mean", "shots"])
    for r in records:
        w.writerow([r.input_state_id, r.observable, fmt_float(r.mean), r.shots])
    return buf.getvalue()


def records_from_csv(text):
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    reader = csv.DictReader(lines)
    return [
        TomoRecord(row["input"], row["observable"], float(row["mean"]), int(row["shots"]))
        for row in reader
    ]
