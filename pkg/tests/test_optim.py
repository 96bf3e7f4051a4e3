import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ddsense.control import ErrorPoint, paper_composite, rect_pi, sequence_propagator, total_angle
from ddsense.errors import NoImprovement
from ddsense.evalfn import ErrorGrid, f_qs_unitary
from ddsense.optim import (
    OptimConfig,
    fd_gradient,
    grad_ascent,
    objective,
    objective_function,
    provenance,
    random_init,
    richardson_gradient,
    sequence_from_json,
    sequence_to_json,
)


def test_objective_examples():
    single = ErrorGrid.single()
    assert objective(rect_pi(), single) == pytest.approx(1.0, abs=1e-12)
    assert objective(paper_composite(), single) == pytest.approx(1.0, abs=1e-10)
    grid = ErrorGrid.uniform(0.5, 0.1, 5, 3)
    mean = objective(paper_composite(), grid)
    penalized = objective(paper_composite(), grid, duration_penalty=0.01)
    assert mean - penalized == pytest.approx(0.0368, abs=1e-12)


def test_objective_is_weighted_mean_fqs():
    grid = ErrorGrid.from_points([(0.3, 0.0), (0.6, 0.05)], [1.0, 3.0])
    seq = paper_composite()
    expected = sum(w * f_qs_unitary(sequence_propagator(seq, p)) for p, w in grid)
    assert objective(seq, grid) == pytest.approx(expected, abs=1e-12)


def test_rect_on_single_point_is_already_optimal():
    cfg = OptimConfig(grid=ErrorGrid.single(), max_iters=20)
    seq, hist = grad_ascent(cfg, init=rect_pi())
    assert hist[-1] == pytest.approx(1.0, abs=1e-9)
    assert len(hist) <= 2


def test_default_run_reaches_threshold():
    cfg = OptimConfig()
    seq, hist = grad_ascent(cfg)
    assert hist[-1] >= 0.95
    assert np.all(np.diff(hist) >= 0)
    rect = objective(rect_pi(), cfg.grid)
    assert hist[-1] > rect


@pytest.mark.xfail(
    strict=True,
    reason="maximizing the grid mean trades F_QS at (0, 0): 0.9975 vs rect's exact 1",
)
def test_optimized_pulse_dominates_rect_on_grid():
    cfg = OptimConfig()
    seq, _ = grad_ascent(cfg)
    worse = []
    for p, w in cfg.grid:
        if w <= 0:
            continue
        opt = f_qs_unitary(sequence_propagator(seq, p))
        rect = f_qs_unitary(sequence_propagator(rect_pi(), p))
        if opt < rect - 1e-12:
            worse.append((p.delta_ratio, p.eps, opt, rect))
    assert not worse, f"optimized pulse below rect at (delta_ratio, eps, opt, rect) = {worse}"


def test_optimized_pulse_dominates_rect_away_from_origin():
    cfg = OptimConfig()
    seq, _ = grad_ascent(cfg)
    for p, _ in cfg.grid:
        if abs(p.delta_ratio) < 0.1 and abs(p.eps) < 0.06:
            continue
        opt = f_qs_unitary(sequence_propagator(seq, p))
        rect = f_qs_unitary(sequence_propagator(rect_pi(), p))
        assert opt >= rect, f"optimized pulse below rect at {p}"


@given(st.integers(0, 10_000))
def test_history_monotone_short_runs(seed):
    cfg = OptimConfig(n_segments=3, grid=ErrorGrid.uniform(0.4, 0.05, 3, 3), max_iters=15, seed=seed)
    _, hist = grad_ascent(cfg)
    assert np.all(np.diff(hist) >= 0)


def test_fd_matches_richardson():
    rng = np.random.default_rng(11)
    f = objective_function(OptimConfig())
    for _ in range(10):
        seq = random_init(5, rng)
        x = np.array([s.angle for s in seq] + [s.phase for s in seq])
        g1, g2 = fd_gradient(f, x), richardson_gradient(f, x)
        assert np.linalg.norm(g1 - g2) <= 1e-5 * np.linalg.norm(g2)


def test_random_init_ranges():
    seq = random_init(200, np.random.default_rng(0))
    angles = np.array([s.angle for s in seq])
    assert angles.min() >= 0.2 * np.pi and angles.max() <= 1.5 * np.pi


def test_no_improvement_raises():
    # tiny step budget: every line search fails from a generic start
    cfg = OptimConfig(n_segments=2, step_init=1e-30, max_iters=50)
    with pytest.raises(NoImprovement) as info:
        grad_ascent(cfg)
    assert len(info.value.history) == 1
    assert info.value.seq is not None


def test_pulse_json_round_trip():
    cfg = OptimConfig(max_iters=5)
    seq, hist = grad_ascent(cfg)
    text = sequence_to_json(seq, provenance(cfg, seq, hist))
    obj = json.loads(text)
    assert set(obj["segments"][0]) == {"angle_rad", "phase_rad"}
    assert obj["provenance"]["seed"] == 7
    assert obj["provenance"]["total_angle_over_pi"] == pytest.approx(total_angle(seq) / np.pi)
    back = sequence_from_json(text)
    assert back == seq
    u1 = sequence_propagator(back, ErrorPoint(0.3, 0.02))
    assert np.allclose(u1, sequence_propagator(seq, ErrorPoint(0.3, 0.02)))
    with pytest.raises(ValueError):
        sequence_from_json('{"segments": []}')


def test_config_validation():
    with pytest.raises(ValueError):
        OptimConfig(n_segments=0)
    with pytest.raises(ValueError):
        OptimConfig(duration_penalty=-1)
    assert OptimConfig().to_dict()["grid"]["points"][0] == [-0.5, -0.1]
