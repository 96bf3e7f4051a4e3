"""CPMG detection of a small nuclear spin bath coupled to the sensor electron."""

import warnings
from dataclasses import dataclass, replace

import numpy as np

from .control import (
    DDSequence,
    ErrorPoint,
    NO_ERROR,
    dd_propagator,
    free_propagator_factory,
    pi_pulse_propagators,
    sequence_propagator,
)
from .errors import DimensionTooLarge, FitDidNotConverge
from .qcore import IDENTITY, SIGMA_X, SIGMA_Y, SIGMA_Z, pauli_components
from .sweep import SweepResult

GAMMA_C13 = 2 * np.pi * 1.0705e3  # rad s^-1 G^-1
RABI_DEFAULT = 2 * np.pi * 9.7e6  # rad/s
MAX_BATH_SPINS = 5

_SPIN_OPS = (SIGMA_X / 2, SIGMA_Y / 2, SIGMA_Z / 2)


def c13_larmor(field_gauss):
    """Bare 13C Larmor angular frequency (rad/s) at ``field_gauss``."""
    return GAMMA_C13 * field_gauss


@dataclass
class BathSpec:
    """Nuclear Larmor vectors conditioned on the electron state (rad/s).

    ``larmor_1 - larmor_0`` is the hyperfine vector of each nucleus.
    ``couplings`` has shape ``(n, n, 3, 3)``; entry ``[n, m]`` couples nuclei n and m.
    """

    larmor_0: np.ndarray
    larmor_1: np.ndarray
    couplings: np.ndarray = None
    temperature: float = None

    def __post_init__(self):
        self.larmor_0 = np.atleast_2d(np.asarray(self.larmor_0, dtype=float))
        self.larmor_1 = np.atleast_2d(np.asarray(self.larmor_1, dtype=float))
        if self.larmor_0.shape != self.larmor_1.shape or self.larmor_0.shape[1] != 3:
            raise ValueError("larmor_0 and larmor_1 must both be (n_spins, 3)")
        if self.n_spins > MAX_BATH_SPINS:
            raise DimensionTooLarge(f"{self.n_spins} bath spins > {MAX_BATH_SPINS}")
        if self.couplings is not None:
            c = np.asarray(self.couplings, dtype=float)
            n = self.n_spins
            if c.shape != (n, n, 3, 3):
                raise ValueError(f"couplings must have shape {(n, n, 3, 3)}")
            if not np.allclose(c, np.transpose(c, (1, 0, 3, 2))):
                raise ValueError("coupling matrix must be symmetric")
            self.couplings = c

    @property
    def n_spins(self):
        return self.larmor_0.shape[0]

    @property
    def dim(self):
        return 2**self.n_spins

    @classmethod
    def single(cls, omega_l, a_par=0.0, a_perp=0.0):
        l0 = [0.0, 0.0, omega_l]
        l1 = [a_perp, 0.0, omega_l + a_par]
        return cls([l0], [l1])

    @classmethod
    def from_hyperfine(cls, omega_l, hyperfine):
        hyperfine = np.atleast_2d(hyperfine)
        l0 = np.tile([0.0, 0.0, omega_l], (len(hyperfine), 1))
        return cls(l0, l0 + hyperfine)


def _embed(op, site, n):
    out = np.array([[1.0 + 0j]])
    for k in range(n):
        out = np.kron(out, op if k == site else IDENTITY)
    return out


def bath_hamiltonian(larmor, couplings=None):
    """``sum_n Omega_n . I_n + sum_{n>m} I_n . C_nm . I_m`` on the bath space."""
    larmor = np.atleast_2d(larmor)
    n = larmor.shape[0]
    ops = [[_embed(s, site, n) for s in _SPIN_OPS] for site in range(n)]
    h = np.zeros((2**n, 2**n), dtype=complex)
    for site in range(n):
        for a in range(3):
            if larmor[site, a]:
                h += larmor[site, a] * ops[site][a]
    if couplings is not None:
        for i in range(n):
            for j in range(i):
                for a in range(3):
                    for b in range(3):
                        if couplings[i, j, a, b]:
                            h += couplings[i, j, a, b] * ops[i][a] @ ops[j][b]
    return h


def build_joint_hamiltonian(bath, electron_detuning=0.0):
    """Secular electron-bath Hamiltonian, electron factor first.

    ``H = delta |1><1| x I + |0><0| x H0 + |1><1| x H1``.
    """
    if bath.n_spins > MAX_BATH_SPINS:
        raise DimensionTooLarge(f"{bath.n_spins} bath spins > {MAX_BATH_SPINS}")
    p0 = np.diag([1.0, 0.0]).astype(complex)
    p1 = np.diag([0.0, 1.0]).astype(complex)
    h0 = bath_hamiltonian(bath.larmor_0, bath.couplings)
    h1 = bath_hamiltonian(bath.larmor_1, bath.couplings)
    eye = np.eye(bath.dim)
    return electron_detuning * np.kron(p1, eye) + np.kron(p0, h0) + np.kron(p1, h1)


PULSE_MODELS = ("coherent", "flip")


@dataclass
class NmrConfig:
    """One CPMG measurement.

    ``pulse_model='flip'`` splits each realized pi pulse ``R = A + B`` into its
    non-flip part ``A = a0 I + az Z`` and flip part ``B = ax X + ay Y`` and drops
    the cross terms, i.e. the pulse flips with probability F_QS and otherwise
    acts as a z rotation. ``dephased=True`` averages over a
    quasi-static electron detuning so that any coherence not refocused by the
    train averages away, as in an inhomogeneously broadened ensemble.
    """

    bath: BathSpec
    dd: DDSequence
    err: ErrorPoint = NO_ERROR
    electron_detuning: float = 0.0
    pulse_model: str = "coherent"
    dephased: bool = False

    def __post_init__(self):
        if self.pulse_model not in PULSE_MODELS:
            raise ValueError(f"pulse_model must be one of {PULSE_MODELS}")


def bath_state(bath):
    """Product thermal state of the bath; maximally mixed when no temperature is set."""
    if bath.temperature is None:
        return np.eye(bath.dim, dtype=complex) / bath.dim
    rho = np.array([[1.0 + 0j]])
    for n in range(bath.n_spins):
        w = bath.larmor_0[n, 2]
        pops = np.exp(-np.array([0.5, -0.5]) * w / bath.temperature)
        rho = np.kron(rho, np.diag(pops / pops.sum()))
    return rho


_PLUS_X = np.full((2, 2), 0.5, dtype=complex)


def _dephasing_grid(dd):
    # exact average of every trig polynomial in the refocusing imbalance,
    # which is an integer multiple of tau with |m| <= 2N
    m = 4 * dd.n_pulses + 3
    return 2 * np.pi * np.arange(m) / (m * dd.tau)


def flip_kraus(u):
    """Kraus pair ``(A, B)``: non-flip and flip parts of a 2x2 pulse unitary."""
    c = pauli_components(u)
    return c[0] * IDENTITY + c[3] * SIGMA_Z, c[1] * SIGMA_X + c[2] * SIGMA_Y


def _evolve(cfg, detuning):
    h = build_joint_hamiltonian(cfg.bath, detuning)
    dim = h.shape[0]
    bath_eye = np.eye(dim // 2)
    rho = np.kron(_PLUS_X, bath_state(cfg.bath))
    if cfg.pulse_model == "coherent":
        u = dd_propagator(cfg.dd, cfg.err, h)
        rho = u @ rho @ u.conj().T
    else:
        prop = free_propagator_factory(h)
        edge, middle = prop(cfg.dd.tau), prop(2 * cfg.dd.tau)
        channels = [
            [np.kron(op, bath_eye) for op in flip_kraus(pu)]
            for pu in pi_pulse_propagators(cfg.dd, cfg.err)
        ]
        rho = edge @ rho @ edge.conj().T
        for k, kraus in enumerate(channels):
            rho = sum(op @ rho @ op.conj().T for op in kraus)
            free = edge if k == len(channels) - 1 else middle
            rho = free @ rho @ free.conj().T
    return rho


def cpmg_signal(cfg):
    """Sensor coherence ``s = 2 P_x - 1`` after the DD train; 1 means no dip."""
    detunings = [cfg.electron_detuning]
    if cfg.dephased:
        detunings = cfg.electron_detuning + _dephasing_grid(cfg.dd)
    proj = np.kron(_PLUS_X, np.eye(cfg.bath.dim))
    vals = []
    for d in detunings:
        rho = _evolve(cfg, d)
        vals.append(np.trace(proj @ rho))
    p = np.mean(vals)
    return float(2 * p.real - 1)


def resonance_tau(omega, k=1):
    """Edge free-evolution time of the k-th coherence dip, ``(2k-1) pi / (2 omega)``."""
    return (2 * k - 1) * np.pi / (2 * omega)


def mean_larmor(bath, spin=0):
    """Mean of the two conditional Larmor-vector norms of one nucleus."""
    return 0.5 * (np.linalg.norm(bath.larmor_0[spin]) + np.linalg.norm(bath.larmor_1[spin]))


def gaussian_dip(tau, base, depth, center, width):
    return base - depth * np.exp(-((tau - center) ** 2) / (2 * width**2))


def fit_dips(tau, signal, min_depth=1e-3, noise=None):
    """Locate local minima below the baseline and fit a Gaussian dip to each.

    Returns a list of dicts with ``center``, ``depth``, ``width``, ``base`` and
    ``converged``. ``noise`` is the per-point noise level; when omitted it is
    estimated from the median absolute second difference. A dip whose fit fails or
    lands outside its window keeps its initial estimate with ``converged=False``.
    """
    from scipy.optimize import OptimizeWarning, curve_fit
    from scipy.signal import find_peaks

    tau = np.asarray(tau, dtype=float)
    signal = np.asarray(signal, dtype=float)
    base = float(np.median(signal))
    if noise is None:
        d2 = np.diff(signal, 2)
        noise = 1.4826 * np.median(np.abs(d2 - np.median(d2))) / np.sqrt(6) if len(d2) else 0.0
    threshold = max(3 * noise, min_depth)
    peaks, _ = find_peaks(-signal, prominence=threshold)
    peaks = [p for p in peaks if signal[p] < base - threshold]

    dips = []
    for p in peaks:
        depth0 = base - signal[p]
        # half-depth crossing sets the fit window
        half = base - depth0 / 2
        lo = p
        while lo > 0 and signal[lo] < half:
            lo -= 1
        hi = p
        while hi < len(signal) - 1 and signal[hi] < half:
            hi += 1
        width0 = max((tau[hi] - tau[lo]) / 2.355, tau[1] - tau[0])
        span = max(p - lo, hi - p, 2) * 3
        sl = slice(max(p - span, 0), min(p + span + 1, len(signal)))
        p0 = (base, depth0, tau[p], width0)
        try:
            with warnings.catch_warnings():
                # the covariance is unused; flat windows make it singular
                warnings.simplefilter("ignore", OptimizeWarning)
                popt, _ = curve_fit(gaussian_dip, tau[sl], signal[sl], p0=p0, method="lm", maxfev=4000)
            window = tau[sl][-1] - tau[sl][0]
            ok = (
                bool(np.all(np.isfinite(popt)))
                and tau[sl][0] <= popt[2] <= tau[sl][-1]
                and 0 < popt[1] <= 2.5
                and abs(popt[3]) <= window
            )
        except RuntimeError:
            ok = False
        if not ok:
            popt = np.array(p0)
        dips.append(
            {
                "center": float(popt[2]),
                "depth": float(popt[1]),
                "width": float(abs(popt[3])),
                "base": float(popt[0]),
                "converged": bool(ok),
            }
        )
    return dips


def _signal_at(cfg, tau=None, n_pulses=None, err=None, electron_detuning=None):
    dd = cfg.dd
    if tau is not None or n_pulses is not None:
        dd = replace(dd, tau=tau if tau is not None else dd.tau,
                     n_pulses=n_pulses if n_pulses is not None else dd.n_pulses)
    kw = {"dd": dd}
    if err is not None:
        kw["err"] = err
    if electron_detuning is not None:
        kw["electron_detuning"] = electron_detuning
    return cpmg_signal(replace(cfg, **kw))


def scan_tau(cfg, tau_range, n_points, executor=None):
    """Coherence versus edge spacing ``tau`` plus Gaussian fits of every dip found."""
    from .parallel import ordered_map

    lo, hi = tau_range
    if not 0 < lo < hi:
        raise ValueError("tau_range must be positive and increasing")
    taus = np.linspace(lo, hi, n_points)
    sig = np.array(ordered_map(lambda t: _signal_at(cfg, tau=t), taus, executor))
    dips = fit_dips(taus, sig)
    return SweepResult(
        {"tau_s": taus, "signal": sig},
        metadata={"n_pulses": cfg.dd.n_pulses, "pattern": cfg.dd.pattern},
        extras={"dips": dips},
    )


def decay_model(n, a, lam, b):
    return a * np.exp(-lam * n**2) + b


def fit_depth_vs_n(n_values, depth):
    """Least-squares fit of ``depth(N) = a exp(-lambda N^2) + b``."""
    from scipy.optimize import OptimizeWarning, curve_fit

    n_values = np.asarray(n_values, dtype=float)
    depth = np.asarray(depth, dtype=float)
    if np.ptp(depth) < 1e-12:
        params = np.array([0.0, 0.0, float(np.mean(depth))])
    else:
        b0 = depth[-1]
        a0 = depth[0] - b0
        # crude scale: N where depth is halfway to saturation
        mid = np.interp(0.5, np.abs((depth - b0) / a0)[::-1], n_values[::-1]) if a0 else n_values[-1]
        lam0 = np.log(2) / max(mid, 1.0) ** 2
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", OptimizeWarning)
                params, _ = curve_fit(decay_model, n_values, depth, p0=(a0, lam0, b0), maxfev=20000)
        except RuntimeError as exc:
            raise FitDidNotConverge(str(exc), data=(n_values, depth)) from exc
    resid = depth - decay_model(n_values, *params)
    return params, resid


def scan_n(cfg, n_values, tau_ref=None, executor=None):
    """Dip depth versus pulse number at the configured ``tau``.

    Depth is ``s(tau_ref) - s(tau)`` with ``tau_ref`` an off-resonant reference
    spacing (default ``2 tau``, where a weakly coupled nucleus refocuses).
    """
    from .parallel import ordered_map

    n_values = [int(n) for n in n_values]
    if any(n <= 0 or n % 2 for n in n_values):
        raise ValueError("all N must be even and positive")
    tau_ref = 2 * cfg.dd.tau if tau_ref is None else tau_ref

    def depth(n):
        return _signal_at(cfg, tau=tau_ref, n_pulses=n) - _signal_at(cfg, n_pulses=n)

    depths = np.array(ordered_map(depth, n_values, executor))
    (a, lam, b), resid = fit_depth_vs_n(n_values, depths)
    m = len(n_values)
    return SweepResult(
        {
            "N": np.array(n_values),
            "dip_depth": depths,
            "fit_a": np.full(m, a),
            "fit_lambda": np.full(m, lam),
            "fit_b": np.full(m, b),
        },
        metadata={"tau_s": cfg.dd.tau, "tau_ref_s": tau_ref},
        extras={"residuals": resid, "fit_rms": float(np.sqrt(np.mean(resid**2)))},
    )


def fqs_scaling_check(cfg, delta_ratios, rabi=RABI_DEFAULT, tau_ref=None, executor=None):
    """Compare the simulated signal with ``F_QS^N s_0`` at each detuning ratio.

    The electron free-evolution detuning follows the pulse detuning,
    ``delta = (delta/Omega) * rabi``. Also reports the dip depth relative to
    ``tau_ref`` (default ``2 tau``).
    """
    from .evalfn import f_qs
    from .parallel import ordered_map
    from .qcore import unitary_to_chi

    tau_ref = 2 * cfg.dd.tau if tau_ref is None else tau_ref
    n = cfg.dd.n_pulses

    def point(r):
        err = ErrorPoint(r, cfg.err.eps)
        det = r * rabi
        s_dip = _signal_at(cfg, err=err, electron_detuning=det)
        s_ref = _signal_at(cfg, tau=tau_ref, err=err, electron_detuning=det)
        fqs = f_qs(unitary_to_chi(sequence_propagator(list(cfg.dd.pulse), err)))
        return s_dip, s_ref, fqs

    rows = ordered_map(point, [0.0] + list(delta_ratios), executor)
    s0, ref0, _ = rows[0]
    rows = rows[1:]
    s = np.array([r[0] for r in rows])
    fqs = np.array([r[2] for r in rows])
    depth = np.array([r[1] - r[0] for r in rows])
    pred = fqs**n * s0
    return SweepResult(
        {
            "delta_ratio": np.asarray(delta_ratios, dtype=float),
            "f_qs": fqs,
            "s_delta": s,
            "predicted": pred,
            "difference": s - pred,
            "dip_depth": depth,
            "depth_ratio": depth / (ref0 - s0) if ref0 != s0 else np.full(len(rows), np.nan),
        },
        metadata={"s_0": s0, "n_pulses": n, "pulse_model": cfg.pulse_model, "dephased": cfg.dephased},
    )
