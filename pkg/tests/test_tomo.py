import numpy as np
import pytest
from hypothesis import given, strategies as st

from ddsense.control import ErrorPoint, rect_pi, sequence_propagator
from ddsense.errors import DuplicateRecord, IncompleteRecordSet, UnphysicalChannel, ZeroTrace
from ddsense.evalfn import f_qc, f_qs
from ddsense.qcore import IDENTITY, SIGMA_X, random_channel_chi, random_unitary, unitary_to_chi
from ddsense.tomo import (
    TomoRecord,
    check_physical,
    linear_inversion,
    mle_project,
    records_from_csv,
    records_to_csv,
    simulate_tomography,
)


def record(records, state, obs):
    return next(r.mean for r in records if r.input_state_id == state and r.observable == obs)


def test_exact_records():
    recs = simulate_tomography(unitary_to_chi(IDENTITY), 0)
    assert record(recs, "0", "z") == 1.0
    recs = simulate_tomography(unitary_to_chi(SIGMA_X), 0)
    assert record(recs, "0", "z") == pytest.approx(-1.0)
    # sigma_x maps (|0> - i|1>)/sqrt2 to (|1> - i|0>)/sqrt2 ~ (|0> + i|1>)/sqrt2
    assert record(recs, "minus_i", "y") == pytest.approx(1.0)
    assert len(recs) == 12


def test_unphysical_input():
    with pytest.raises(UnphysicalChannel):
        simulate_tomography(np.diag([1.2, -0.2, 0, 0]), 0)
    with pytest.raises(UnphysicalChannel):
        check_physical(np.diag([0.5, 0.0, 0.0, 0.0]))


def test_linear_inversion_examples():
    chi = linear_inversion(simulate_tomography(unitary_to_chi(IDENTITY), 0))
    assert abs(chi[0, 0] - 1) < 1e-10
    chi = linear_inversion(simulate_tomography(unitary_to_chi(SIGMA_X), 0))
    assert abs(chi[1, 1] - 1) < 1e-10


def test_rect_at_075_lives_in_i_x_z_block():
    u = sequence_propagator(rect_pi(), ErrorPoint(0.75, 0.0))
    direct = unitary_to_chi(u)
    chi = linear_inversion(simulate_tomography(direct, 0))
    assert abs(chi[2, 2]) < 1e-10 and abs(chi[1, 2]) < 1e-10
    assert np.max(np.abs(chi[2, :])) < 1e-10
    assert np.max(np.abs(chi - direct)) < 1e-10
    # support on I, x, z
    assert chi[1, 1].real > 0.5 and chi[0, 0].real > 0.01 and chi[3, 3].real > 0.01


def test_missing_and_duplicate_records():
    recs = simulate_tomography(unitary_to_chi(SIGMA_X), 0)
    with pytest.raises(IncompleteRecordSet):
        linear_inversion(recs[:-1])
    with pytest.raises(DuplicateRecord):
        linear_inversion(recs + [recs[0]])


def test_round_trip_50_unitaries(rng):
    for _ in range(50):
        chi = unitary_to_chi(random_unitary(rng))
        err = np.linalg.norm(linear_inversion(simulate_tomography(chi, 0)) - chi)
        assert err < 1e-9


@given(st.integers(0, 2**32 - 1), st.integers(1, 4))
def test_round_trip_channels(seed, n_kraus):
    chi = random_channel_chi(np.random.default_rng(seed), n_kraus)
    assert np.linalg.norm(linear_inversion(simulate_tomography(chi, 0)) - chi) < 1e-9


@given(st.integers(0, 2**32 - 1))
def test_tomography_fqs_matches_direct(seed):
    u = random_unitary(np.random.default_rng(seed))
    chi = linear_inversion(simulate_tomography(unitary_to_chi(u), 0))
    assert abs(f_qs(chi) - f_qs(unitary_to_chi(u))) < 1e-9


def test_mle_examples():
    chi = unitary_to_chi(random_unitary(np.random.default_rng(9)))
    assert np.max(np.abs(mle_project(chi) - chi)) < 1e-12
    v = np.linalg.qr(np.random.default_rng(2).normal(size=(4, 4)))[0]
    raw = v @ np.diag([1.1, -0.1, 0, 0]) @ v.T
    assert np.allclose(mle_project(raw), v @ np.diag([1, 0, 0, 0]) @ v.T, atol=1e-12)
    with pytest.raises(ZeroTrace):
        mle_project(-np.eye(4))


@given(st.integers(0, 2**32 - 1))
def test_mle_does_not_move_away_from_generator(seed):
    rng = np.random.default_rng(seed)
    chi = random_channel_chi(rng, 2)
    raw = linear_inversion(simulate_tomography(chi, 200, seed=seed))
    fixed = mle_project(raw)
    assert np.linalg.eigvalsh(fixed).min() >= -1e-9
    assert abs(np.trace(fixed) - 1) < 1e-12
    assert np.linalg.norm(fixed - chi) <= np.linalg.norm(raw - chi) + 1e-12


def test_noisy_sigma_x_mle_fidelity():
    chi = unitary_to_chi(SIGMA_X)
    fids = []
    for seed in range(100):
        fixed = mle_project(linear_inversion(simulate_tomography(chi, 10_000, seed)))
        assert np.linalg.eigvalsh(fixed).min() >= -1e-9
        fids.append(f_qc(fixed, SIGMA_X))
    assert min(fids) >= 0.98


def test_records_csv_round_trip():
    recs = simulate_tomography(unitary_to_chi(SIGMA_X), 100, seed=4)
    text = records_to_csv(recs, ["seed=4"])
    assert text.splitlines()[0] == "# seed=4"
    assert text.splitlines()[1] == "input,observable,mean,shots"
    back = records_from_csv(text)
    assert [(r.input_state_id, r.observable, r.shots) for r in back] == [
        (r.input_state_id, r.observable, r.shots) for r in recs
    ]
    assert np.allclose([r.mean for r in back], [r.mean for r in recs])


def test_record_validation():
    with pytest.raises(ValueError):
        TomoRecord("2", "x", 0.0, 1)
    with pytest.raises(ValueError):
        TomoRecord("0", "x", 1.5, 1)
