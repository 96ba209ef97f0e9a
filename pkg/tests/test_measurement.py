import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from vibronic.fcf import JointDistribution, distance, fcf_distribution
from vibronic.fockspace import StateVector, doktorov_apply, fock_state
from vibronic.measurement import (
    BOX, CountMatrix, DetectorModel, LeakageError, MeasurementError, bit_projector, correct_readout,
    detector_forward, estimate, measure_shot, sample_binary_decomposition, sample_ideal,
    simulate_single_bit,
)
from vibronic.molparams import doktorov_params, preset

H2O_DETECTOR = DetectorModel(t_A=0.937, t_B=0.946, f_A=0.005, f_B=0.002)
H2O_NMAX = 16  # box probed for the H2O (0,0) data set


def random_box(rng, n=6):
    p = rng.random((n, n)) ** 3
    return p / p.sum()


def random_model(rng):
    t = rng.uniform(0.6, 1.0, 2)
    f = rng.uniform(0.0, 0.3, 2) * t
    return DetectorModel(t[0], t[1], f[0], f[1])


def vacuum_image(name, cutoff=40):
    p = doktorov_params(preset(name))
    t = np.zeros((cutoff, cutoff), dtype=complex)
    t[0, 0] = 1
    return StateVector(doktorov_apply(p, t, cutoff).ravel(), (cutoff, cutoff))


def test_detector_model_validation():
    with pytest.raises(MeasurementError):
        DetectorModel(0.5, 0.9, 0.6, 0.0)
    with pytest.raises(MeasurementError):
        DetectorModel(1.2, 0.9, 0.0, 0.0)


def test_sample_ideal_examples():
    c = sample_ideal(JointDistribution.point_mass((2, 3), 5), 100, seed=1)
    assert c[(2, 3)] == 100 and c.counts.sum() == 100
    p = np.zeros((2, 2))
    p[:] = 0.25
    c = sample_ideal(JointDistribution(p), 10**6, seed=2)
    sigma = math.sqrt(1e6 * 0.25 * 0.75)
    assert np.all(np.abs(c.counts - 2.5e5) < 4 * sigma)
    a = sample_ideal(JointDistribution(p), 1000, seed=3)
    b = sample_ideal(JointDistribution(p), 1000, seed=3)
    np.testing.assert_array_equal(a.counts, b.counts)
    with pytest.raises(MeasurementError):
        sample_ideal(JointDistribution(np.zeros((2, 2))), 10, seed=0)


def test_estimate_examples():
    c = CountMatrix(np.array([[50, 0], [100, 0]]), 100, "single-bit")
    q, s = estimate(c)
    assert q[0, 0] == 0.5 and s[0, 0] == pytest.approx(0.05)
    assert q[0, 1] == 0.0 and s[0, 1] == 0.0
    assert q[1, 0] == 1.0 and s[1, 0] == 0.0
    with pytest.raises(MeasurementError):
        estimate(CountMatrix(np.zeros((2, 2)), 0))
    with pytest.raises(MeasurementError):
        CountMatrix(np.array([[101, 0], [0, 0]]), 100, "single-bit")


def test_detector_forward_examples():
    rng = np.random.default_rng(0)
    P = random_box(rng)
    np.testing.assert_allclose(detector_forward(P, DetectorModel.perfect()), P, atol=1e-15)
    m = DetectorModel(0.8, 0.7, 0.0, 0.0)
    np.testing.assert_allclose(detector_forward(P, m), 0.56 * P, atol=1e-15)
    point = JointDistribution.point_mass((0, 0), 3).probs
    Q = detector_forward(point, DetectorModel(0.9, 0.9, 0.1, 0.1))
    assert Q[0, 0] == pytest.approx(0.81)
    assert Q[1, 1] == pytest.approx(0.01)
    assert Q[0, 1] == pytest.approx(0.09)
    with pytest.raises(MeasurementError):
        detector_forward(np.ones((2, 3)) / 6, m)


def test_correction_round_trip_random():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(100):
        P = random_box(rng, int(rng.integers(2, 9)))
        m = random_model(rng)
        back = correct_readout(detector_forward(P, m), m)
        worst = max(worst, np.abs(back - P).max())
    assert worst < 1e-12


def test_correction_round_trip_published_model():
    d = fcf_distribution(doktorov_params(preset("h2o")), (0, 0), H2O_NMAX)
    P = d.probs / d.probs.sum()
    back = correct_readout(detector_forward(d, H2O_DETECTOR), H2O_DETECTOR)
    assert np.abs(back - P).max() < 1e-12
    np.testing.assert_allclose(correct_readout(P, DetectorModel.perfect()), P, atol=1e-15)


def test_correction_clamps_negative_estimates():
    d = fcf_distribution(doktorov_params(preset("h2o")), (0, 0), H2O_NMAX)
    c = simulate_single_bit(d, H2O_DETECTOR, 200, seed=11)
    q, _ = estimate(c)
    raw = correct_readout(q, H2O_DETECTOR, clamp=False)
    assert raw.min() < 0
    fixed = correct_readout(q, H2O_DETECTOR)
    assert fixed.min() == 0.0
    np.testing.assert_array_equal(fixed[raw > 0], raw[raw > 0])


def test_correction_rejects_singular_model():
    class Broken:
        t_A, t_B, f_A, f_B = 0.5, 0.9, 0.5, 0.0
    with pytest.raises(MeasurementError):
        correct_readout(np.eye(2) / 2, Broken())


def test_single_bit_examples():
    P = JointDistribution.point_mass((1, 1), 3)
    c = simulate_single_bit(P, DetectorModel.perfect(), 50, seed=4)
    assert c[(1, 1)] == 50
    assert c.counts.sum() == 50
    a = simulate_single_bit(P, H2O_DETECTOR, 50, seed=4)
    b = simulate_single_bit(P, H2O_DETECTOR, 50, seed=4)
    np.testing.assert_array_equal(a.counts, b.counts)
    with pytest.raises(MeasurementError):
        simulate_single_bit(P, H2O_DETECTOR, 0, seed=1)


def _single_bit_distance(runs, seeds):
    d = fcf_distribution(doktorov_params(preset("h2o")), (0, 0), H2O_NMAX)
    out = []
    for s in seeds:
        q, _ = estimate(simulate_single_bit(d, H2O_DETECTOR, runs, seed=s))
        out.append(distance(JointDistribution(correct_readout(q, H2O_DETECTOR)), d))
    return out


def test_single_bit_matches_binomial_noise_floor():
    # expected half-l1 error of the unclamped inverse: sum of sqrt(2/pi) sigma_Q / (ab) / 2
    d = fcf_distribution(doktorov_params(preset("h2o")), (0, 0), H2O_NMAX)
    Q = detector_forward(d, H2O_DETECTOR)
    ab = (0.937 - 0.005) * (0.946 - 0.002)
    floor = 0.5 * math.sqrt(2 / math.pi) * np.sqrt(Q * (1 - Q) / 1e4).sum() / ab
    got = np.mean(_single_bit_distance(10**4, range(4)))
    assert 0.6 * floor < got < 1.1 * floor


def test_single_bit_converges_with_runs():
    assert max(_single_bit_distance(10**5, range(2))) < 0.02


@pytest.mark.xfail(strict=True, reason="binomial noise over 256 cells gives an expected distance of "
                                        "about 0.044 at 1e4 runs per cell")
def test_single_bit_pipeline_1e4_runs():
    assert _single_bit_distance(10**4, [0])[0] < 0.02


def test_bit_projector_examples():
    np.testing.assert_array_equal(bit_projector(0, 16).diagonal[:6], [1, -1, 1, -1, 1, -1])
    assert bit_projector(2, 16).diagonal[6] == -1
    patterns = {tuple(bit_projector(k, 16).diagonal[i] for k in range(4)) for i in range(16)}
    assert len(patterns) == 16
    with pytest.raises(MeasurementError):
        bit_projector(4, 16)
    with pytest.raises(MeasurementError):
        bit_projector(0, 8)


def test_projectors_commute_and_share_fock_basis():
    mats = [bit_projector(k, 20).matrix for k in range(4)]
    for A in mats:
        assert set(np.linalg.eigvalsh(A).round(12)) <= {-1.0, 1.0}
        for B in mats:
            np.testing.assert_array_equal(A @ B, B @ A)
        # diagonal in the Fock basis: every basis vector is an eigenvector
        assert np.count_nonzero(A - np.diag(np.diag(A))) == 0


def test_binary_examples():
    s = fock_state((5, 0), 16)
    c = sample_binary_decomposition(s, 200, seed=1)
    assert c[(5, 0)] == 200
    assert c.measurements_per_shot == 8
    rng = np.random.default_rng(0)
    (n, m), _ = measure_shot(s, rng)
    assert (n, m) == (5, 0)
    assert [(5 >> k) & 1 for k in (3, 2, 1, 0)] == [0, 1, 0, 1]
    c = sample_binary_decomposition(fock_state((0, 0), 16), 64000, seed=3, bit_flip_prob=0.5)
    marg = c.counts.sum(axis=1)
    sigma = math.sqrt(64000 / 16 * (15 / 16))
    assert np.all(np.abs(marg - 4000) < 4.5 * sigma)


def test_binary_sampling_o3_close_to_exact():
    s = vacuum_image("o3")
    c = sample_binary_decomposition(s, 10**5, seed=5)
    q, _ = estimate(c)
    exact = fcf_distribution(doktorov_params(preset("o3")), (0, 0), BOX - 1)
    assert distance(JointDistribution(q), exact) < 0.02


def test_sampler_equivalence():
    s = vacuum_image("so2")
    exact = s.probabilities()[:BOX, :BOX]
    exact = exact / exact.sum()
    shots = 10**5
    b = sample_binary_decomposition(s, shots, seed=8).counts
    i = sample_ideal(JointDistribution(exact), shots, seed=9).counts
    # difference of two independent multinomial counts
    sigma = np.sqrt(2 * shots * exact * (1 - exact))
    assert np.all(np.abs(b - i) <= 4 * sigma + 2)


def test_leakage_threshold():
    with pytest.raises(LeakageError):
        sample_binary_decomposition(vacuum_image("h2o"), 10, seed=0)
    c = sample_binary_decomposition(vacuum_image("h2o"), 10, seed=0, leakage_threshold=0.02)
    assert c.counts.sum() == 10


def test_binary_determinism():
    s = vacuum_image("o3")
    a = sample_binary_decomposition(s, 5000, seed=42, bit_flip_prob=0.01)
    b = sample_binary_decomposition(s, 5000, seed=42, bit_flip_prob=0.01)
    np.testing.assert_array_equal(a.counts, b.counts)


@given(st.integers(0, 2**31), st.integers(1, 6))
def test_collapse_consistency(seed, spread):
    rng = np.random.default_rng(seed)
    amps = np.zeros((BOX, BOX), dtype=complex)
    amps[:spread, :spread] = rng.normal(size=(spread, spread)) + 1j * rng.normal(size=(spread, spread))
    amps /= np.linalg.norm(amps)
    outcome, post = measure_shot(StateVector(amps.ravel(), (BOX, BOX)), rng)
    assert abs(post.tensor()[outcome]) ** 2 > 1 - 1e-12
    assert abs(amps[outcome]) > 0


@given(st.integers(0, 2**31))
def test_forward_inverse_property(seed):
    rng = np.random.default_rng(seed)
    P = random_box(rng, int(rng.integers(2, 7)))
    m = random_model(rng)
    assert np.abs(correct_readout(detector_forward(P, m), m) - P).max() < 1e-12
