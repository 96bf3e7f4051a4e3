"""Operation-quality metrics for sensing (F_QS) and computing (F_QC).

F_QS is the weight of the process matrix on the two equatorial Pauli
rotations, ``chi_xx + chi_yy``: the probability that the operation flips the
sensor about some axis in the x-y plane. For a unitary ``U`` it equals
``1/2 - Tr(Z U Z U^dag)/4``.
"""

import math
from dataclasses import dataclass

import numpy as np

from .control import ErrorPoint, NO_ERROR, sequence_propagator
from .errors import DegenerateOperation, NotUnitaryTarget, UnnormalizedChannel
from .qcore import SIGMA_Z, is_hermitian, is_unitary, unitary_to_chi
from .sweep import SweepResult

DEGENERATE_FQS = 1e-6


def _check_chi(chi):
    chi = np.asarray(chi, dtype=complex)
    if chi.shape != (4, 4):
        raise UnnormalizedChannel(f"chi must be 4x4, got {chi.shape}")
    if not is_hermitian(chi, 1e-9):
        raise UnnormalizedChannel("chi is not Hermitian")
    if abs(np.trace(chi) - 1) > 1e-9:
        raise UnnormalizedChannel(f"trace(chi) = {np.trace(chi).real:.6g}, expected 1")
    return chi


def f_qs(chi):
    """Flip probability ``chi_xx + chi_yy`` of a trace-preserving channel."""
    chi = _check_chi(chi)
    return float((chi[1, 1] + chi[2, 2]).real)


def f_qs_unitary(u):
    """Closed form ``1/2 - Tr(Z U Z U^dag)/4`` for a 2x2 unitary."""
    u = np.asarray(u, dtype=complex)
    return float(0.5 - np.trace(SIGMA_Z @ u @ SIGMA_Z @ u.conj().T).real / 4)


def f_qc(chi, target):
    """Phase-insensitive overlap with a target unitary.

    ``sqrt(Tr(chi chi_target))``; for a unitary channel ``V`` this is
    ``|Tr(V U^dag)| / 2``.
    """
    target = np.asarray(target, dtype=complex)
    if target.shape != (2, 2) or not is_unitary(target):
        raise NotUnitaryTarget("target must be a 2x2 unitary")
    chi = _check_chi(chi)
    overlap = np.trace(chi @ unitary_to_chi(target)).real
    return float(math.sqrt(max(overlap, 0.0)))


def f_qc_unitary(u, target):
    return float(abs(np.trace(np.asarray(u) @ np.asarray(target).conj().T)) / 2)


def sensitivity_link(eta_in, fqs):
    """Realistic sensitivity ``eta_in / F_QS``."""
    if fqs <= DEGENERATE_FQS:
        raise DegenerateOperation(
            f"F_QS = {fqs:.3g} <= {DEGENERATE_FQS:g}: the pulse no longer flips the sensor"
        )
    return eta_in / fqs


@dataclass(frozen=True)
class ErrorGrid:
    """Weighted set of error points; weights are normalized on construction."""

    points: tuple
    weights: tuple

    def __post_init__(self):
        pts = tuple(self.points)
        w = np.asarray(self.weights, dtype=float)
        if not pts:
            raise ValueError("error grid is empty")
        if len(w) != len(pts):
            raise ValueError("points and weights differ in length")
        if np.any(w < 0) or w.sum() <= 0:
            raise ValueError("weights must be non-negative with positive sum")
        w = w / math.fsum(w)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", tuple(float(x) for x in w))

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(zip(self.points, self.weights))

    @classmethod
    def single(cls, delta_ratio=0.0, eps=0.0):
        return cls((ErrorPoint(delta_ratio, eps),), (1.0,))

    @classmethod
    def from_points(cls, pairs, weights=None):
        pts = tuple(ErrorPoint(float(d), float(e)) for d, e in pairs)
        return cls(pts, weights if weights is not None else [1.0] * len(pts))

    @classmethod
    def uniform(cls, delta_max, eps_max, n_delta, n_eps):
        """Rectangular grid over ``|delta/Omega| <= delta_max``, ``|eps| <= eps_max``."""
        ds = np.linspace(-delta_max, delta_max, n_delta) if n_delta > 1 else [0.0]
        es = np.linspace(-eps_max, eps_max, n_eps) if n_eps > 1 else [0.0]
        return cls.from_points([(d, e) for d in ds for e in es])

    @classmethod
    def gaussian_detuning(cls, sigma, n=41, n_sigma=3.0, eps=0.0):
        """Detuning distribution modelling inhomogeneous broadening of width ``sigma``."""
        ds = np.linspace(-n_sigma * sigma, n_sigma * sigma, n)
        w = np.exp(-0.5 * (ds / sigma) ** 2)
        return cls.from_points([(d, eps) for d in ds], w)


def ensemble_average(metric, grid):
    """Weighted mean of ``metric(point)`` over the grid (exactly rounded sum)."""
    return math.fsum(w * metric(p) for p, w in grid)


def robustness_profile(seq, grid, target=None, executor=None):
    """F_QS and F_QC of ``seq`` at every grid point, plus weighted means.

    ``target`` defaults to the error-free propagator of ``seq`` itself.
    """
    from .parallel import ordered_map

    target = sequence_propagator(seq, NO_ERROR) if target is None else target

    def point(p):
        chi = unitary_to_chi(sequence_propagator(seq, p))
        return f_qs(chi), f_qc(chi, target)

    vals = ordered_map(point, [p for p, _ in grid], executor)
    fqs = np.array([v[0] for v in vals])
    fqc = np.array([v[1] for v in vals])
    w = np.array(grid.weights)
    return SweepResult(
        {
            "delta_ratio": np.array([p.delta_ratio for p in grid.points]),
            "eps": np.array([p.eps for p in grid.points]),
            "weight": w,
            "f_qs": fqs,
            "f_qc": fqc,
        },
        metadata={
            "mean_f_qs": math.fsum(w * fqs),
            "mean_f_qc": math.fsum(w * fqc),
        },
    )
