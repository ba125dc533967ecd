"""Variational quantum classifier over the ZZ feature map.

A sample is classified by embedding it, applying the trainable rotation
circuit and measuring all qubits; the fraction of odd-parity bitstrings is
the estimated probability of label 1. Parameters are trained with SPSA on
the shot-estimated binary cross-entropy.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .backends import IdealSimulator
from .errors import BackendError, ValidationError
from .feature_map import FeatureMapSpec, feature_map_batch
from .qsim import Circuit, CircuitBatch, Gate

EPS = 1e-6
ENTANGLERS = ("linear-CZ", "full-CZ")


@dataclass(frozen=True)
class AnsatzSpec:
    n_qubits: int = 2
    layers: int = 2
    entangler: str = "linear-CZ"

    def __post_init__(self):
        if self.n_qubits < 1 or self.layers < 1:
            raise ValidationError("n_qubits and layers must be >= 1")
        if self.entangler not in ENTANGLERS:
            raise ValidationError(f"entangler must be one of {ENTANGLERS}")

    @property
    def n_parameters(self):
        return 2 * self.n_qubits * self.layers

    def entangling_pairs(self):
        n = self.n_qubits
        if self.entangler == "linear-CZ":
            return [(q, q + 1) for q in range(n - 1)]
        return [(a, b) for a in range(n) for b in range(a + 1, n)]


def _check_theta(theta, spec):
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (spec.n_parameters,):
        raise ValidationError(
            f"theta must have {spec.n_parameters} entries, got shape {theta.shape}"
        )
    if not np.all(np.isfinite(theta)):
        raise ValidationError("theta must be finite")
    return theta


def build_ansatz(theta, spec):
    theta = _check_theta(theta, spec)
    n = spec.n_qubits
    circuit = Circuit(n)
    for layer in range(spec.layers):
        block = theta[2 * n * layer : 2 * n * (layer + 1)]
        circuit.extend(Gate("RX", (q,), block[q]) for q in range(n))
        circuit.extend(Gate("RY", (q,), block[n + q]) for q in range(n))
        circuit.extend(Gate("CZ", pair) for pair in spec.entangling_pairs())
    return circuit


def classifier_batch(X, fm, ansatz, theta):
    """Feature map followed by the ansatz, one circuit per row of ``X``."""
    embed = feature_map_batch(X, fm)
    tail = build_ansatz(theta, ansatz)
    if tail.n_qubits != embed.n_qubits:
        raise ValidationError("feature map and ansatz act on different qubit counts")
    tail_angles = np.array([0.0 if g.angle is None else g.angle for g in tail.gates])
    angles = np.hstack([embed.angles, np.broadcast_to(tail_angles, (len(X), len(tail_angles)))])
    return CircuitBatch(embed.n_qubits, embed.layout + tail.layout(), angles)


def odd_parity_mask(n_qubits):
    idx = np.arange(2**n_qubits)
    return np.array([bin(i).count("1") % 2 == 1 for i in idx])


def parity_probability(counts):
    """Fraction of shots per row whose bitstring has odd parity."""
    counts = np.asarray(counts)
    n_qubits = int(np.log2(counts.shape[-1]))
    odd = odd_parity_mask(n_qubits)
    return counts[..., odd].sum(axis=-1) / counts.sum(axis=-1)


def labels_from_probability(p_hat):
    return (np.asarray(p_hat) > 0.5).astype(np.int64)


@dataclass
class TrainConfig:
    max_iterations: int = 200
    shots: int = 1000
    a: float = 2.0
    c: float = 0.2
    A: float = 20.0
    alpha: float = 0.602
    gamma: float = 0.101
    tolerance: float = 1e-3
    patience: int = 20
    seed: int = 0

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValidationError("max_iterations must be >= 1")
        if self.shots < 1:
            raise ValidationError("shots must be >= 1")


@dataclass
class VqcModel:
    feature_map_spec: FeatureMapSpec
    ansatz_spec: AnsatzSpec
    theta: np.ndarray
    shots: int = 1000
    label_rule: str = "parity"
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.theta = _check_theta(self.theta, self.ansatz_spec)
        if self.feature_map_spec.n_qubits != self.ansatz_spec.n_qubits:
            raise ValidationError("feature map and ansatz widths differ")

    def to_dict(self):
        return {
            "feature_map_spec": self.feature_map_spec.to_dict(),
            "ansatz_spec": asdict(self.ansatz_spec),
            "theta": self.theta.tolist(),
            "shots": self.shots,
            "label_rule": self.label_rule,
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            FeatureMapSpec.from_dict(d["feature_map_spec"]),
            AnsatzSpec(**d["ansatz_spec"]),
            np.asarray(d["theta"], dtype=float),
            int(d["shots"]),
            d.get("label_rule", "parity"),
            dict(d.get("metadata", {})),
        )

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def _check_features(X, fm):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != fm.n_features:
        raise ValidationError(
            f"expected {fm.n_features} features, got {X.shape[1]}"
        )
    return X


def estimate_parity(X, fm, ansatz, theta, shots, seed, backend=None):
    backend = backend or IdealSimulator()
    counts = backend.run_batch(classifier_batch(X, fm, ansatz, theta), shots, seed)
    return parity_probability(counts)


def classify(x, model, backend=None, seed=0):
    """Label and estimated P(label = 1) for one feature vector."""
    X = _check_features(x, model.feature_map_spec)
    if len(X) != 1:
        raise ValidationError("classify takes a single feature vector")
    try:
        p_hat = estimate_parity(
            X, model.feature_map_spec, model.ansatz_spec, model.theta, model.shots, seed, backend
        )[0]
    except BackendError as exc:
        raise BackendError(f"classification failed: {exc}", index=0) from exc
    return int(p_hat > 0.5), float(p_hat)


def cross_entropy(p_hat, labels):
    p = np.clip(np.asarray(p_hat, dtype=float), EPS, 1 - EPS)
    y = np.asarray(labels)
    return float(np.mean(-(y * np.log(p) + (1 - y) * np.log(1 - p))))


def empirical_cost(data, theta, fm, ansatz, shots, seed, backend=None):
    """Mean clamped binary cross-entropy of shot-estimated probabilities."""
    if len(data) == 0:
        raise ValidationError("cannot evaluate the cost of an empty dataset")
    data.require_binary()
    X = _check_features(data.features, fm)
    p_hat = estimate_parity(X, fm, ansatz, theta, shots, seed, backend)
    return cross_entropy(p_hat, data.labels)


def spsa_gains(cfg, k):
    a_k = cfg.a / (cfg.A + k + 1) ** cfg.alpha
    c_k = cfg.c / (k + 1) ** cfg.gamma
    return a_k, c_k


def train(data, fm, ansatz, cfg=None, backend=None, callback=None):
    """Fit ansatz angles with SPSA; returns the best parameters seen.

    Each iteration draws a Rademacher perturbation, evaluates the cost at
    theta +/- c_k * delta using the same shot seed for both sides, steps
    along the gradient estimate, and re-evaluates the cost at the new point
    to track the best iterate. Training stops after ``max_iterations`` or
    once the best cost has improved by less than ``tolerance`` over
    ``patience`` consecutive iterations.
    """
    cfg = cfg or TrainConfig()
    if len(data) == 0:
        raise ValidationError("empty training set")
    data.require_binary()
    _check_features(data.features, fm)
    if fm.n_qubits != ansatz.n_qubits:
        raise ValidationError("feature map and ansatz widths differ")

    rng = np.random.default_rng(cfg.seed)
    theta = rng.uniform(-np.pi, np.pi, ansatz.n_parameters)

    def cost(t, k, j):
        return empirical_cost(data, t, fm, ansatz, cfg.shots, [cfg.seed, k, j], backend)

    best_theta, best_cost = theta.copy(), cost(theta, 0, 2)
    initial_cost = best_cost
    history = [best_cost]
    anchor_cost, stale = best_cost, 0
    iterations = 0
    for k in range(cfg.max_iterations):
        a_k, c_k = spsa_gains(cfg, k)
        delta = rng.choice((-1.0, 1.0), size=ansatz.n_parameters)
        plus = cost(theta + c_k * delta, k, 0)
        minus = cost(theta - c_k * delta, k, 0)
        gradient = (plus - minus) / (2 * c_k) * delta
        theta = theta - a_k * gradient
        current = cost(theta, k, 1)
        history.append(current)
        iterations = k + 1
        if current < best_cost:
            best_cost, best_theta = current, theta.copy()
        if callback is not None:
            callback(k, theta, current)
        if anchor_cost - best_cost >= cfg.tolerance:
            anchor_cost, stale = best_cost, 0
        else:
            stale += 1
            if stale >= cfg.patience:
                break

    return VqcModel(
        fm,
        ansatz,
        best_theta,
        cfg.shots,
        metadata={
            "seed": cfg.seed,
            "iterations": iterations,
            "initial_cost": initial_cost,
            "final_cost": best_cost,
            "cost_history": history,
        },
    )


@dataclass
class PredictionResult:
    labels: np.ndarray
    p_hat: np.ndarray
    accuracy: float | None
    circuit_count: int
    shots: int
    failed_index: int | None = None

    @property
    def complete(self):
        return self.failed_index is None


def predict_batch(data, model, backend=None, seed=0, chunk_size=75):
    """One circuit per sample, sent in chunks of ``chunk_size``.

    A backend failure stops the run; results gathered so far are returned
    with ``failed_index`` set to the first sample without a result.
    """
    backend = backend or IdealSimulator()
    n = len(data)
    if n == 0:
        return PredictionResult(np.zeros(0, int), np.zeros(0), None, 0, model.shots)
    X = _check_features(data.features, model.feature_map_spec)
    batch = classifier_batch(X, model.feature_map_spec, model.ansatz_spec, model.theta)
    p_hat = np.full(n, np.nan)
    failed = None
    for chunk, start in enumerate(range(0, n, chunk_size)):
        rows = np.arange(start, min(n, start + chunk_size))
        try:
            counts = backend.run_batch(batch.select(rows), model.shots, [seed, chunk])
        except BackendError:
            # the whole chunk is lost
            failed = start
            break
        p_hat[rows] = parity_probability(counts)
    done = n if failed is None else failed
    labels = labels_from_probability(p_hat[:done])
    accuracy = float(np.mean(labels == data.labels[:done])) if done else None
    return PredictionResult(labels, p_hat[:done], accuracy, done, model.shots, failed)
