import numpy as np
import pytest

from qaccel.backends import IdealSimulator, NoisySimulator, RemoteQpuMock
from qaccel.dataset import Dataset
from qaccel.errors import ValidationError
from qaccel.feature_map import FeatureMapSpec, build_feature_map
from qaccel.qsim import NoiseModel, run_statevector
from qaccel.vqc import (
    AnsatzSpec,
    TrainConfig,
    VqcModel,
    build_ansatz,
    classifier_batch,
    classify,
    cross_entropy,
    odd_parity_mask,
    parity_probability,
    labels_from_probability,
    predict_batch,
    spsa_gains,
    train,
)


def blobs(n, seed):
    rng = np.random.default_rng(seed)
    y = np.arange(n) % 2
    centers = np.array([[0.6, 0.6], [1.8, 1.8]])
    X = np.clip(centers[y] + 0.25 * rng.standard_normal((n, 2)), 0, 0.75 * np.pi)
    return Dataset(X, y, np.arange(n).astype(str))


FM = FeatureMapSpec(2)
ANSATZ = AnsatzSpec(2, 2)


def test_parameter_count_and_layout():
    assert ANSATZ.n_parameters == 8
    c = build_ansatz(np.zeros(8), ANSATZ)
    assert [g.kind for g in c.gates] == ["RX", "RX", "RY", "RY", "CZ"] * 2
    with pytest.raises(ValidationError):
        build_ansatz(np.zeros(7), ANSATZ)


def test_classifier_batch_matches_composed_circuit():
    theta = np.linspace(-1, 1, 8)
    X = np.array([[0.3, 1.2], [2.0, 0.1]])
    batch = classifier_batch(X, FM, ANSATZ, theta)
    for x, c in zip(X, (batch.circuit(0), batch.circuit(1))):
        ref = build_feature_map(x, FM) + build_ansatz(theta, ANSATZ)
        np.testing.assert_allclose(run_statevector(c).amplitudes, run_statevector(ref).amplitudes)


def test_parity_rule():
    assert odd_parity_mask(2).tolist() == [False, True, True, False]
    counts = np.array([[10, 30, 50, 10], [25, 25, 25, 25]])
    np.testing.assert_allclose(parity_probability(counts), [0.8, 0.5])
    # exactly one half is labelled 0
    assert labels_from_probability([0.5, 0.5001, 0.2]).tolist() == [0, 1, 0]


def test_cross_entropy_clamps():
    assert np.isfinite(cross_entropy([0.0, 1.0], [1, 0]))
    assert cross_entropy([0.9], [1]) == pytest.approx(-np.log(0.9))


def test_spsa_gains_decay():
    cfg = TrainConfig()
    a0, c0 = spsa_gains(cfg, 0)
    a9, c9 = spsa_gains(cfg, 9)
    assert a9 < a0 and c9 < c0
    assert a0 == pytest.approx(cfg.a / (cfg.A + 1) ** cfg.alpha)


def test_training_is_deterministic_and_learns():
    data = blobs(60, 0)
    cfg = TrainConfig(max_iterations=40, shots=200, seed=3)
    m1 = train(data, FM, ANSATZ, cfg)
    m2 = train(data, FM, ANSATZ, cfg)
    np.testing.assert_array_equal(m1.theta, m2.theta)
    assert m1.metadata["final_cost"] <= m1.metadata["initial_cost"]
    res = predict_batch(blobs(200, 1), m1, IdealSimulator(), seed=0)
    assert res.accuracy > 0.8
    assert res.circuit_count == 200


def test_train_rejects_bad_data():
    with pytest.raises(ValidationError):
        train(Dataset.from_arrays(np.zeros((0, 2)), []), FM, ANSATZ)
    with pytest.raises(ValidationError):
        train(Dataset.from_arrays(np.zeros((3, 3)), [0, 1, 0]), FM, ANSATZ)
    with pytest.raises(ValidationError):
        TrainConfig(shots=0)


def _model(seed=0):
    theta = np.random.default_rng(seed).uniform(-np.pi, np.pi, 8)
    return VqcModel(FM, ANSATZ, theta, shots=500)


def test_model_json_round_trip():
    m = _model()
    back = VqcModel.from_json(m.to_json())
    np.testing.assert_array_equal(back.theta, m.theta)
    assert back.feature_map_spec == m.feature_map_spec
    assert back.shots == 500


def test_classify_single_sample():
    label, p = classify([0.4, 1.0], _model(), seed=2)
    assert label == int(p > 0.5)
    assert classify([0.4, 1.0], _model(), seed=2) == (label, p)
    with pytest.raises(ValidationError):
        classify([[0.1, 0.2], [0.3, 0.4]], _model())
    with pytest.raises(ValidationError):
        classify([0.1, 0.2, 0.3], _model())


def test_backends_are_interchangeable():
    data = blobs(30, 4)
    m = _model()
    ideal = predict_batch(data, m, IdealSimulator(), seed=1)
    noisy0 = predict_batch(data, m, NoisySimulator(NoiseModel(0.0)), seed=1)
    mock0 = predict_batch(data, m, RemoteQpuMock(noise=NoiseModel(0.0)), seed=1)
    np.testing.assert_array_equal(ideal.p_hat, noisy0.p_hat)
    np.testing.assert_array_equal(ideal.p_hat, mock0.p_hat)
    noisy = predict_batch(data, m, NoisySimulator(NoiseModel(0.05)), seed=1)
    assert noisy.complete and len(noisy.labels) == 30


def test_remote_failure_returns_partial_results():
    data = blobs(200, 5)
    backend = RemoteQpuMock(noise=NoiseModel(0.0), fail_at=160)
    res = predict_batch(data, _model(), backend, seed=0, chunk_size=75)
    assert res.failed_index == 150
    assert not res.complete
    assert len(res.labels) == 150
    assert backend.timing.batch_count == 2


def test_empty_prediction():
    res = predict_batch(Dataset.from_arrays(np.zeros((0, 2)), []), _model())
    assert res.accuracy is None and res.circuit_count == 0
