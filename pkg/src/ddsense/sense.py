"""Spin-echo AC magnetometry with photon shot-noise readout.

Sequence: ideal pi/2 - free precession - realized pi pulse - free precession -
ideal pi/2, with a square-wave field that flips sign at the pi pulse. The
coherence that the pi pulse fails to refocus carries the static free-precession
phase and is averaged away (the ensemble dephases on a T2* time scale much
shorter than the sensing time). Signals are fluorescence levels normalized to
the bright state, ``S = 1 - C * P1``.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .control import ErrorPoint, NO_ERROR, rect_pi, sequence_propagator
from .errors import SlopeTooSmall
from .qcore import SIGMA_Y, SIGMA_Z, expm_2x2
from .sweep import SweepResult

GAMMA_E = 2 * np.pi * 28.024e9  # rad s^-1 T^-1
N_PHASE_AVG = 8


@dataclass(frozen=True)
class SensorParams:
    gamma_e: float = GAMMA_E
    t2: float = 0.84e-3
    stretch_p: float = 2.0
    contrast: float = 0.24
    counts_rate: float = 4.8e4
    t_read: float = 270e-9
    t_overhead: float = 2e-6

    def __post_init__(self):
        for name in ("gamma_e", "t2", "stretch_p", "contrast", "counts_rate", "t_read"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.t_overhead < 0:
            raise ValueError("t_overhead must be non-negative")
        if not 0 < self.contrast < 1:
            raise ValueError("contrast must lie in (0, 1)")

    @property
    def photons_per_shot(self):
        return self.counts_rate * self.t_read


@dataclass(frozen=True)
class EchoConfig:
    b0: float = 0.0
    t_sense: float = 0.42e-3
    pi_pulse: tuple = field(default_factory=lambda: tuple(rect_pi()))
    err: ErrorPoint = NO_ERROR
    shots: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.b0 < 0:
            raise ValueError("b0 must be non-negative")
        if not self.t_sense > 0:
            raise ValueError("t_sense must be positive")
        object.__setattr__(self, "pi_pulse", tuple(self.pi_pulse))


def _rz(phi):
    return np.diag([np.exp(-0.5j * phi), np.exp(0.5j * phi)])


_HALF_PI_Y = expm_2x2(0.5 * SIGMA_Y, np.pi / 2)
_HALF_PI_MINUS_Y = expm_2x2(-0.5 * SIGMA_Y, np.pi / 2)


def echo_decay(t, params):
    return float(np.exp(-((t / params.t2) ** params.stretch_p)))


def echo_population(delta_phi, pi_unitary, decay):
    """Noiseless ``P0`` for accumulated phase ``delta_phi`` (phase-averaged)."""
    rho0 = np.diag([1.0, 0.0]).astype(complex)
    rho0 = _HALF_PI_Y @ rho0 @ _HALF_PI_Y.conj().T
    p0 = 0.0
    for theta in 2 * np.pi * np.arange(N_PHASE_AVG) / N_PHASE_AVG:
        u = _rz(theta - delta_phi / 2) @ pi_unitary @ _rz(theta + delta_phi / 2)
        rho = u @ rho0 @ u.conj().T
        rho[0, 1] *= decay
        rho[1, 0] *= decay
        rho = _HALF_PI_MINUS_Y @ rho @ _HALF_PI_MINUS_Y.conj().T
        p0 += rho[0, 0].real
    return p0 / N_PHASE_AVG


def accumulated_phase(b0, t_sense, params):
    return params.gamma_e * b0 * t_sense


def normalize_population(counts, counts_min, counts_max):
    """Population of the bright state from photon counts and the two reference levels."""
    return (counts - counts_min) / (counts_max - counts_min)


def echo_signal(cfg, params, rng=None):
    """Normalized fluorescence ``1 - C P1``; shot-noise sampled when ``cfg.shots > 0``."""
    u = sequence_propagator(list(cfg.pi_pulse), cfg.err)
    p0 = echo_population(
        accumulated_phase(cfg.b0, cfg.t_sense, params), u, echo_decay(cfg.t_sense, params)
    )
    level = 1 - params.contrast * (1 - p0)
    if cfg.shots <= 0:
        return level
    rng = np.random.default_rng(cfg.seed) if rng is None else rng
    expected = params.photons_per_shot * cfg.shots
    return rng.poisson(expected * level) / expected


def intrinsic_sensitivity(params):
    """``(1/sqrt(n t_r)) / (C gamma_e sqrt(T2/2))`` in T/sqrt(Hz)."""
    return (1 / np.sqrt(params.counts_rate * params.t_read)) / (
        params.contrast * params.gamma_e * np.sqrt(params.t2 / 2)
    )


def cycle_time(cfg, params):
    return cfg.t_sense + params.t_read + params.t_overhead


def max_slope_phase(cfg, params, n=64):
    """Accumulated phase in ``[1, 1 + 2 pi)`` with the steepest noiseless fringe."""
    u = sequence_propagator(list(cfg.pi_pulse), cfg.err)
    decay = echo_decay(cfg.t_sense, params)
    phis = 1 + 2 * np.pi * np.arange(n) / n
    p0 = np.array([echo_population(p, u, decay) for p in phis])
    # the fringe is a first-harmonic sinusoid; fit it exactly
    design = np.column_stack([np.ones(n), np.cos(phis), np.sin(phis)])
    _, a, b = np.linalg.lstsq(design, p0, rcond=None)[0]
    amp = np.hypot(a, b)
    if amp < 1e-12:
        return 1.0 + np.pi / 2, 0.0
    # derivative -a sin + b cos = amp cos(phi - phi0), maximal at phi0
    phi0 = np.arctan2(-a, b)
    phi0 = 1 + np.mod(phi0 - 1, 2 * np.pi)
    return float(phi0), float(amp)


def estimate_sensitivity(cfg, params, n_points=21, half_span=1.0, return_details=False):
    """Realistic sensitivity ``sigma / |dS/dB| * sqrt(cycle time)`` from a b0 sweep.

    The sweep is centred on the steepest point of the fringe and spans
    ``+-half_span`` rad of accumulated phase; the local slope is the linear
    coefficient of a cubic fit. ``sigma`` is the single-shot photon shot noise
    at the bias level.
    """
    if cfg.shots <= 0:
        raise ValueError("estimate_sensitivity needs shots > 0")
    if n_points < 5:
        raise ValueError("need at least 5 field values")
    phi_bias, _ = max_slope_phase(cfg, params)
    dphi = np.linspace(-half_span, half_span, n_points)
    scale = params.gamma_e * cfg.t_sense  # rad per tesla
    b0s = (phi_bias + dphi) / scale
    seeds = np.random.SeedSequence([cfg.seed, 0x5E75E]).spawn(n_points)
    sig = np.array(
        [
            echo_signal(replace(cfg, b0=float(b)), params, rng=np.random.default_rng(s))
            for b, s in zip(b0s, seeds)
        ]
    )
    coef = np.polynomial.polynomial.polyfit(dphi, sig, 3)
    slope = coef[1] * scale  # dS/dB
    level = echo_signal(replace(cfg, b0=float(phi_bias / scale), shots=0), params)
    sigma = np.sqrt(level / params.photons_per_shot)
    if abs(slope) * (b0s[-1] - b0s[0]) < 1e-3 * sigma:
        raise SlopeTooSmall(f"|dS/dB| = {abs(slope):.3g} /T is below the shot-noise floor")
    eta = sigma / abs(slope) * np.sqrt(cycle_time(cfg, params))
    if return_details:
        return eta, {"slope": slope, "sigma": sigma, "b0": b0s, "signal": sig, "bias_phase": phi_bias}
    return eta


def relative_enhancement(composite, rect, err, params, cfg):
    """``eta_r(rect) / eta_r(composite)`` at the same error point."""
    eta_rect = estimate_sensitivity(replace(cfg, pi_pulse=tuple(rect), err=err), params)
    eta_comp = estimate_sensitivity(replace(cfg, pi_pulse=tuple(composite), err=err), params)
    return eta_rect / eta_comp


def sensitivity_sweep(cfg, params, delta_ratios, executor=None):
    """eta_r, F_QS and their product over detuning ratios (``SlopeTooSmall`` rows flagged)."""
    from .evalfn import f_qs_unitary
    from .parallel import ordered_map

    def point(item):
        i, r = item
        err = ErrorPoint(float(r), cfg.err.eps)
        fqs = f_qs_unitary(sequence_propagator(list(cfg.pi_pulse), err))
        try:
            eta = estimate_sensitivity(replace(cfg, err=err, seed=cfg.seed + i), params)
            ok = True
        except SlopeTooSmall:
            eta, ok = np.nan, False
        return eta, fqs, ok

    rows = ordered_map(point, list(enumerate(delta_ratios)), executor)
    eta = np.array([r[0] for r in rows])
    fqs = np.array([r[1] for r in rows])
    return SweepResult(
        {
            "delta_ratio": np.asarray(delta_ratios, dtype=float),
            "eps": np.full(len(rows), cfg.err.eps),
            "eta_r_T_per_sqrtHz": eta,
            "f_qs": fqs,
            "eta_r_times_fqs": eta * fqs,
        },
        metadata={
            "eta_in_T_per_sqrtHz": intrinsic_sensitivity(params),
            "gamma_e_convention": "rad s^-1 T^-1",
            "degenerate_rows": int(sum(not r[2] for r in rows)),
        },
    )
