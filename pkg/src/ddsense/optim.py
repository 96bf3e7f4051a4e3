"""Gradient-ascent design of robust composite pi pulses.

The objective is the weighted mean F_QS over an error grid, minus an optional
penalty on total nominal rotation angle. Gradients are central finite
differences over every segment angle and phase.
"""

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .control import PulseSegment, batch_sequence_propagators, total_angle
from .errors import NoImprovement
from .evalfn import ErrorGrid
from .qcore import SIGMA_Z
from .sweep import config_hash

FD_STEP = 1e-6
MAX_ANGLE = 2 * np.pi
MIN_ANGLE = 1e-6
MAX_HALVINGS = 30
MAX_INITIAL_FAILURES = 10


@dataclass
class OptimConfig:
    n_segments: int = 5
    grid: ErrorGrid = field(default_factory=lambda: ErrorGrid.uniform(0.5, 0.1, 9, 5))
    max_iters: int = 300
    step_init: float = 0.5
    tol: float = 1e-10
    duration_penalty: float = 0.0
    seed: int = 7

    def __post_init__(self):
        if self.n_segments < 1:
            raise ValueError("n_segments must be >= 1")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.duration_penalty < 0:
            raise ValueError("duration_penalty must be >= 0")

    def to_dict(self):
        d = asdict(self)
        d["grid"] = {
            "points": [[p.delta_ratio, p.eps] for p in self.grid.points],
            "weights": list(self.grid.weights),
        }
        return d


def _grid_arrays(grid):
    d = np.array([p.delta_ratio for p in grid.points])
    e = np.array([p.eps for p in grid.points])
    return d, e, np.array(grid.weights)


def _batch_fqs(u):
    # 1/2 - Tr(Z U Z U^dag)/4, vectorized over the leading axis
    zuz = SIGMA_Z @ u @ SIGMA_Z
    tr = np.einsum("gij,gij->g", zuz, u.conj()).real
    return 0.5 - tr / 4


def _objective_params(x, n, arrays, penalty):
    d, e, w = arrays
    angles, phases = x[:n], x[n:]
    fqs = _batch_fqs(batch_sequence_propagators(angles, phases, d, e))
    return math.fsum(w * fqs) - penalty * float(np.sum(angles)) / np.pi


def objective(seq, grid, duration_penalty=0.0):
    """Weighted mean F_QS over ``grid`` minus ``penalty * total_angle / pi``."""
    x = _to_params(seq)
    return _objective_params(x, len(seq), _grid_arrays(grid), duration_penalty)


def _to_params(seq):
    return np.array([s.angle for s in seq] + [s.phase for s in seq], dtype=float)


def _to_seq(x, n):
    return [PulseSegment(float(a), float(p)) for a, p in zip(x[:n], x[n:])]


def _clamp(x, n):
    x = x.copy()
    x[:n] = np.clip(x[:n], MIN_ANGLE, MAX_ANGLE)
    x[n:] = np.angle(np.exp(1j * x[n:]))
    return x


def fd_gradient(f, x, h=FD_STEP):
    """Central-difference gradient."""
    g = np.empty_like(x)
    for i in range(len(x)):
        dx = np.zeros_like(x)
        dx[i] = h
        g[i] = (f(x + dx) - f(x - dx)) / (2 * h)
    return g


def richardson_gradient(f, x, h=FD_STEP):
    """Four-point (fourth-order) difference gradient, used to check :func:`fd_gradient`."""
    g = np.empty_like(x)
    for i in range(len(x)):
        dx = np.zeros_like(x)
        dx[i] = h
        g[i] = (8 * (f(x + dx) - f(x - dx)) - (f(x + 2 * dx) - f(x - 2 * dx))) / (12 * h)
    return g


def random_init(n_segments, rng):
    angles = rng.uniform(0.2 * np.pi, 1.5 * np.pi, n_segments)
    phases = rng.uniform(-np.pi, np.pi, n_segments)
    return [PulseSegment(a, p) for a, p in zip(angles, phases)]


def objective_function(config, n_segments=None):
    """``x -> objective`` over the flat (angles, phases) parameter vector."""
    n = n_segments or config.n_segments
    arrays = _grid_arrays(config.grid)
    return lambda x: _objective_params(x, n, arrays, config.duration_penalty)


def grad_ascent(config, init=None):
    """Maximize the objective from ``init`` (random when ``None``).

    Returns ``(seq, history)``; ``history`` holds the objective after every
    accepted step, starting with the initial value, and never decreases.
    """
    rng = np.random.default_rng(config.seed)
    if init is None:
        init = random_init(config.n_segments, rng)
    init = list(init)
    n = len(init)
    f = objective_function(config, n)

    x = _to_params(init)
    fx = f(x)
    history = [fx]
    step = config.step_init
    failures = 0
    accepted = 0
    for _ in range(config.max_iters):
        g = fd_gradient(f, x)
        if np.max(np.abs(g)) < 1e-10:
            break
        trial = step
        improved = False
        for _ in range(MAX_HALVINGS):
            x_new = _clamp(x + trial * g, n)
            f_new = f(x_new)
            if f_new > fx:
                improved = True
                break
            trial /= 2
        if not improved:
            if accepted:
                break
            failures += 1
            if failures >= MAX_INITIAL_FAILURES:
                raise NoImprovement(
                    "no improving step found from the initial sequence", seq=init, history=history
                )
            step = trial
            continue
        gain = f_new - fx
        x, fx = x_new, f_new
        history.append(fx)
        accepted += 1
        # let the step grow back after a successful move
        step = min(2 * trial, config.step_init * 4)
        if gain < config.tol:
            break
    return _to_seq(x, n), history


def sequence_to_json(seq, provenance=None):
    obj = {"segments": [{"angle_rad": s.angle, "phase_rad": s.phase} for s in seq]}
    if provenance is not None:
        obj["provenance"] = provenance
    return json.dumps(obj, indent=2, sort_keys=True)


def sequence_from_json(text):
    obj = json.loads(text)
    segs = obj["segments"]
    if not segs:
        raise ValueError("pulse file has no segments")
    return [PulseSegment(float(s["angle_rad"]), float(s["phase_rad"])) for s in segs]


def provenance(config, seq, history):
    return {
        "config_hash": config_hash(config.to_dict()),
        "seed": config.seed,
        "final_objective": history[-1],
        "iterations": len(history) - 1,
        "total_angle_over_pi": total_angle(seq) / np.pi,
    }
