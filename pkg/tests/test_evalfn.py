import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import expm

from ddsense.control import ErrorPoint, PulseSegment, paper_composite, rect_pi, sequence_propagator
from ddsense.errors import DegenerateOperation, NotUnitaryTarget, UnnormalizedChannel
from ddsense.evalfn import (
    ErrorGrid,
    ensemble_average,
    f_qc,
    f_qc_unitary,
    f_qs,
    f_qs_unitary,
    robustness_profile,
    sensitivity_link,
)
from ddsense.qcore import IDENTITY, SIGMA_X, SIGMA_Z, random_channel_chi, random_unitary, unitary_to_chi

ORACLES = json.loads((Path(__file__).parent / "data" / "oracles.json").read_text())


def rect_chi(r, eps=0.0):
    return unitary_to_chi(sequence_propagator(rect_pi(), ErrorPoint(r, eps)))


def rect_fqs_closed(r):
    return (1 - np.cos(np.pi * np.sqrt(1 + r**2))) / (2 * (1 + r**2))


def test_f_qs_examples():
    assert np.isclose(f_qs(unitary_to_chi(SIGMA_X)), 1.0)
    assert np.isclose(f_qs(unitary_to_chi(IDENTITY)), 0.0)
    # brute force: scipy expm of the raw Hamiltonian, then chi
    u = expm(-1j * np.pi * 0.5 * (SIGMA_Z + SIGMA_X))
    brute = f_qs(unitary_to_chi(u))
    assert abs(f_qs(rect_chi(1.0)) - brute) < 1e-12
    assert abs(brute - 0.316563836) < 1e-9


def test_f_qc_examples():
    u = random_unitary(np.random.default_rng(1))
    assert np.isclose(f_qc(unitary_to_chi(u), u), 1.0)
    assert abs(f_qc(unitary_to_chi(IDENTITY), SIGMA_X)) < 1e-12
    closed = np.sin(np.pi * np.sqrt(2) / 2) / np.sqrt(2)
    assert abs(f_qc(rect_chi(1.0), SIGMA_X) - closed) < 1e-10
    assert abs(closed - 0.5626) < 1e-3
    with pytest.raises(NotUnitaryTarget):
        f_qc(rect_chi(0.0), 2 * IDENTITY)


def test_unnormalized_channel_rejected():
    with pytest.raises(UnnormalizedChannel):
        f_qs(2 * unitary_to_chi(SIGMA_X))
    with pytest.raises(UnnormalizedChannel):
        f_qs(np.eye(3))


@given(st.floats(0, 2))
def test_rect_closed_form(r):
    assert abs(f_qs(rect_chi(r)) - rect_fqs_closed(r)) < 1e-10


@given(st.integers(0, 2**32 - 1))
def test_unitary_formula_matches_chi(seed):
    u = random_unitary(np.random.default_rng(seed))
    chi = unitary_to_chi(u)
    assert abs(f_qs(chi) - f_qs_unitary(u)) < 1e-12
    v = random_unitary(np.random.default_rng(seed + 1))
    assert abs(f_qc(chi, v) - f_qc_unitary(u, v)) < 1e-10


@given(st.integers(0, 2**32 - 1), st.floats(-np.pi, np.pi), st.floats(-np.pi, np.pi))
def test_f_qs_invariant_under_z_rotations(seed, a, b):
    u = random_unitary(np.random.default_rng(seed))
    rz = lambda t: np.diag([np.exp(-0.5j * t), np.exp(0.5j * t)])  # noqa: E731
    assert abs(f_qs_unitary(rz(a) @ u @ rz(b)) - f_qs_unitary(u)) < 1e-10


@given(st.integers(0, 2**32 - 1), st.integers(1, 4))
def test_metrics_bounded_for_channels(seed, n_kraus):
    rng = np.random.default_rng(seed)
    chi = random_channel_chi(rng, n_kraus)
    assert -1e-9 <= f_qs(chi) <= 1 + 1e-9
    assert -1e-9 <= f_qc(chi, random_unitary(rng)) <= 1 + 1e-9


def test_sensitivity_link():
    assert sensitivity_link(41e-9, 1.0) == 41e-9
    assert np.isclose(sensitivity_link(41e-9, 0.5), 82e-9)
    with pytest.raises(DegenerateOperation):
        sensitivity_link(41e-9, 1e-7)


def test_profile_examples():
    res = robustness_profile(rect_pi(), ErrorGrid.single())
    assert res["f_qs"][0] == pytest.approx(1.0) and res["f_qc"][0] == pytest.approx(1.0)
    res = robustness_profile(paper_composite(), ErrorGrid.from_points([(1.0, 0.0)]))
    assert res["f_qs"][0] >= 0.9
    r_min = ORACLES["f_qc_composite_min_location"]
    res = robustness_profile(paper_composite(), ErrorGrid.from_points([(r_min, 0.0)]))
    assert res["f_qc"][0] < 1e-6
    rs = [0, 0.25, 0.5, 0.75, 1.0]
    res = robustness_profile(rect_pi(), ErrorGrid.from_points([(r, 0) for r in rs]))
    assert np.all(np.diff(res["f_qs"]) < 0)


def test_profile_default_target_is_ideal_propagator():
    seq = paper_composite()
    res = robustness_profile(seq, ErrorGrid.single(0.0, 0.0))
    assert res["f_qc"][0] == pytest.approx(1.0, abs=1e-12)
    explicit = robustness_profile(seq, ErrorGrid.single(0.4), target=SIGMA_X)
    assert explicit["f_qc"][0] != pytest.approx(robustness_profile(seq, ErrorGrid.single(0.4))["f_qc"][0])


def test_error_grid():
    g = ErrorGrid.uniform(0.5, 0.1, 9, 5)
    assert len(g) == 45 and np.isclose(sum(g.weights), 1.0)
    g = ErrorGrid.gaussian_detuning(0.3)
    assert len(g) == 41 and g.points[20].delta_ratio == pytest.approx(0.0)
    assert max(g.weights) == g.weights[20]
    with pytest.raises(ValueError):
        ErrorGrid((), ())
    with pytest.raises(ValueError):
        ErrorGrid.from_points([(0, 0)], [-1.0])


def test_ensemble_average():
    rect = lambda p: f_qs_unitary(sequence_propagator(rect_pi(), p))  # noqa: E731
    comp = lambda p: f_qs_unitary(sequence_propagator(paper_composite(), p))  # noqa: E731
    assert ensemble_average(rect, ErrorGrid.single()) == pytest.approx(1.0)
    two = ErrorGrid.from_points([(-0.6, 0), (0.6, 0)])
    assert ensemble_average(rect, two) == pytest.approx(rect(ErrorPoint(0.6, 0)), abs=1e-12)
    gauss = ErrorGrid.gaussian_detuning(0.3)
    assert ensemble_average(comp, gauss) >= ensemble_average(rect, gauss)


@given(st.floats(0.05, 1.5))
def test_rect_fqs_even_in_detuning(r):
    seq = [PulseSegment(np.pi, 0.0)]
    plus = f_qs_unitary(sequence_propagator(seq, ErrorPoint(r, 0)))
    minus = f_qs_unitary(sequence_propagator(seq, ErrorPoint(-r, 0)))
    assert abs(plus - minus) < 1e-12
