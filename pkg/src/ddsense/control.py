"""Pulse sequences and their realized propagators under control errors.

All pulse-level quantities are in units of the nominal Rabi frequency, so a
segment is fully described by its nominal rotation angle and its phase; the
error context is the detuning ratio ``delta/Omega`` and the fractional
amplitude error ``eps``.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, EmptySequence
from .qcore import IDENTITY, SIGMA_X, SIGMA_Y, SIGMA_Z, expm_2x2, expm_dense
from .sweep import SweepResult


@dataclass(frozen=True)
class PulseSegment:
    """Constant-amplitude rotation by ``angle`` about ``cos(phase) x + sin(phase) y``."""

    angle: float
    phase: float = 0.0

    def __post_init__(self):
        if not (0 < self.angle <= 4 * np.pi + 1e-12):
            raise ValueError(f"segment angle {self.angle} outside (0, 4pi]")
        # wrap into [-pi, pi] so equal rotations compare equal
        wrapped = float(np.angle(np.exp(1j * self.phase)))
        object.__setattr__(self, "phase", wrapped)
        object.__setattr__(self, "angle", float(self.angle))

    def shifted(self, dphase):
        return PulseSegment(self.angle, self.phase + dphase)


@dataclass(frozen=True)
class ErrorPoint:
    delta_ratio: float = 0.0
    eps: float = 0.0

    def __post_init__(self):
        if abs(self.delta_ratio) > 2 + 1e-12:
            raise ValueError(f"|delta_ratio| = {abs(self.delta_ratio)} exceeds 2")
        if abs(self.eps) >= 1:
            raise ValueError(f"|eps| = {abs(self.eps)} must be < 1")


NO_ERROR = ErrorPoint(0.0, 0.0)


def rect_pi(phase=0.0):
    """Single rectangular pi pulse."""
    return [PulseSegment(np.pi, phase)]


def paper_composite():
    """Five-piece robust pi pulse (0.5pi)_x (1.12pi)_y (0.44pi)_-y (1.12pi)_y (0.5pi)_x."""
    half = np.pi / 2
    return [
        PulseSegment(0.5 * np.pi, 0.0),
        PulseSegment(1.12 * np.pi, half),
        PulseSegment(0.44 * np.pi, -half),
        PulseSegment(1.12 * np.pi, half),
        PulseSegment(0.5 * np.pi, 0.0),
    ]


BUILTIN_PULSES = {"rect": rect_pi, "paper-composite": paper_composite}


def segment_hamiltonian(seg, err):
    """Rotating-frame control Hamiltonian in units of the nominal Rabi frequency."""
    amp = 1 + err.eps
    return 0.5 * err.delta_ratio * SIGMA_Z + 0.5 * amp * (
        np.cos(seg.phase) * SIGMA_X + np.sin(seg.phase) * SIGMA_Y
    )


def segment_propagator(seg, err=NO_ERROR):
    return expm_2x2(segment_hamiltonian(seg, err), seg.angle)


def sequence_propagator(seq, err=NO_ERROR):
    """Ordered product; the first segment acts first (rightmost factor)."""
    if len(seq) == 0:
        raise EmptySequence("pulse sequence has no segments")
    u = IDENTITY
    for seg in seq:
        u = segment_propagator(seg, err) @ u
    return u


def total_angle(seq):
    return float(sum(s.angle for s in seq))


# Phase of each pi pulse within one repetition of the pattern.
_KNILL = (np.pi / 6, 0.0, np.pi / 2, 0.0, np.pi / 6)
DD_PATTERNS = {
    "CPMG": (0.0,),
    "XY4": (0.0, np.pi / 2, 0.0, np.pi / 2),
    "KDD": tuple(k + base for base in (0.0, np.pi / 2, 0.0, np.pi / 2) for k in _KNILL),
}


@dataclass(frozen=True)
class DDSequence:
    """``N`` pi pulses built as ``N/2`` repetitions of ``[tau - Pi - 2 tau - Pi - tau]``.

    ``tau`` is the free evolution at the edge of the decoupling unit; consecutive
    pulses are separated by ``2 tau``.
    """

    n_pulses: int
    tau: float
    pattern: str = "CPMG"
    pulse: tuple = field(default_factory=lambda: tuple(rect_pi()))

    def __post_init__(self):
        if self.n_pulses <= 0 or self.n_pulses % 2:
            raise ValueError(f"n_pulses must be even and positive, got {self.n_pulses}")
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if self.pattern not in DD_PATTERNS:
            raise ValueError(f"unknown DD pattern {self.pattern!r}")
        if self.n_pulses % len(DD_PATTERNS[self.pattern]):
            raise ValueError(
                f"{self.pattern} needs N to be a multiple of {len(DD_PATTERNS[self.pattern])}"
            )
        object.__setattr__(self, "pulse", tuple(self.pulse))

    def pulse_phases(self):
        phases = DD_PATTERNS[self.pattern]
        return [phases[k % len(phases)] for k in range(self.n_pulses)]


def pi_pulse_propagators(dd, err=NO_ERROR):
    """Realized propagator of every pi pulse in the train, in time order."""
    cache = {}
    out = []
    for ph in dd.pulse_phases():
        if ph not in cache:
            cache[ph] = sequence_propagator([s.shifted(ph) for s in dd.pulse], err)
        out.append(cache[ph])
    return out


def free_propagator_factory(free_h):
    """Return ``t -> exp(-i free_h t)`` backed by a single eigendecomposition."""
    free_h = np.asarray(free_h, dtype=complex)
    expm_dense(free_h, 0.0)  # validates Hermiticity and size
    evals, evecs = np.linalg.eigh((free_h + free_h.conj().T) / 2)

    def prop(t):
        return (evecs * np.exp(-1j * evals * t)) @ evecs.conj().T

    return prop


def dd_propagator(dd, err, free_h):
    """Propagator of the full DD train with instantaneous pulses.

    Pulses act on the first (electron) tensor factor of ``free_h``.
    """
    free_h = np.asarray(free_h, dtype=complex)
    dim = free_h.shape[0]
    if dim % 2:
        raise DimensionMismatch(f"free Hamiltonian dimension {dim} is not 2 x bath")
    bath_eye = np.eye(dim // 2)
    prop = free_propagator_factory(free_h)
    edge = prop(dd.tau)
    middle = prop(2 * dd.tau)
    pulses = [np.kron(p, bath_eye) for p in pi_pulse_propagators(dd, err)]

    u = edge
    for k, p in enumerate(pulses):
        u = p @ u
        u = (edge if k == len(pulses) - 1 else middle) @ u
    return u


def simulate_rabi(omega, t_max, t1rho, contrast, n_points=201):
    """Nutation curve ``P0(t) = 1 - C/2 (1 - cos(2 pi omega t)) exp(-t/T1rho)``.

    ``omega`` is the Rabi frequency in Hz.
    """
    if min(omega, t_max, t1rho, contrast) <= 0:
        raise ValueError("all Rabi parameters must be positive")
    t = np.linspace(0.0, t_max, n_points)
    p0 = 1 - 0.5 * contrast * (1 - np.cos(2 * np.pi * omega * t)) * np.exp(-t / t1rho)
    return SweepResult(
        {"t_s": t, "p0": p0},
        metadata={"omega_hz": omega, "t1rho_s": t1rho, "contrast": contrast},
    )


def batch_sequence_propagators(angles, phases, delta_ratios, eps):
    """Propagators of one sequence at many error points, shape ``(G, 2, 2)``.

    Unchecked vectorized form of :func:`sequence_propagator` for optimizer
    inner loops; ``angles``/``phases`` describe the segments in time order.
    """
    r = np.asarray(delta_ratios, dtype=float)[:, None, None]
    amp = 1 + np.asarray(eps, dtype=float)[:, None, None]
    u = np.broadcast_to(IDENTITY, (r.shape[0], 2, 2)).astype(complex)
    for theta, phi in zip(angles, phases):
        cx, cy, cz = 0.5 * amp * np.cos(phi), 0.5 * amp * np.sin(phi), 0.5 * r
        norm = np.sqrt(cx**2 + cy**2 + cz**2)
        s = theta * np.sinc(norm * theta / np.pi)
        gen = cx * SIGMA_X + cy * SIGMA_Y + cz * SIGMA_Z
        seg = np.cos(norm * theta) * IDENTITY - 1j * s * gen
        u = seg @ u
    return u
