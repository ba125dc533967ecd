"""ZZ-type data embedding |Phi(x)> = U_Phi H U_Phi H |0...0>.

The phase block realizes, literally,

    exp(i * x_k * Z_k)                          for every qubit k
    exp(i * (pi - x_k)(pi - x_l) * Z_k Z_l)     for every coupled pair (k, l)

Features are expected in [0, pi] so that both factors of the pair phase are
nonnegative.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .qsim import Circuit, CircuitBatch, Gate, run_statevector, simulate_batch


@dataclass(frozen=True)
class FeatureMapSpec:
    n_features: int = 2
    repetitions: int = 2
    include_two_body: bool = True

    def __post_init__(self):
        if self.n_features < 1:
            raise ValidationError("n_features must be >= 1")
        if self.repetitions < 1:
            raise ValidationError("repetitions must be >= 1")

    @property
    def n_qubits(self):
        return self.n_features

    def pairs(self):
        """Coupled qubit pairs: a linear chain."""
        if not self.include_two_body:
            return []
        return [(k, k + 1) for k in range(self.n_features - 1)]

    def to_dict(self):
        return {
            "n_features": self.n_features,
            "repetitions": self.repetitions,
            "include_two_body": self.include_two_body,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


def _as_vector(x):
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or not np.all(np.isfinite(x)):
        raise ValidationError("feature vector must be a finite 1-d array")
    return x


def phase_one_body(x, k):
    x = _as_vector(x)
    if not 0 <= k < len(x):
        raise ValidationError(f"qubit index {k} out of range for {len(x)} features")
    return float(x[k])


def phase_two_body(x, k, l):
    x = _as_vector(x)
    if k == l:
        raise ValidationError("two-body phase needs two distinct qubits")
    if not (0 <= k < len(x) and 0 <= l < len(x)):
        raise ValidationError(f"qubit pair ({k}, {l}) out of range for {len(x)} features")
    return float((np.pi - x[k]) * (np.pi - x[l]))


def rz_exp(qubit, phi):
    """Gate implementing exp(i * phi * Z) on top of the standard RZ."""
    return Gate("RZ", (qubit,), -2.0 * phi)


def rzz_exp(k, l, phi):
    """Gate implementing exp(i * phi * Z Z); RZZ already uses this convention."""
    return Gate("RZZ", (k, l), phi)


def build_feature_map(x, spec=None):
    x = _as_vector(x)
    spec = spec or FeatureMapSpec(n_features=len(x))
    if len(x) != spec.n_features:
        raise ValidationError(
            f"feature vector has {len(x)} entries, map expects {spec.n_features}"
        )
    circuit = Circuit(spec.n_qubits)
    for _ in range(spec.repetitions):
        circuit.extend(Gate("H", (q,)) for q in range(spec.n_qubits))
        circuit.extend(rz_exp(k, phase_one_body(x, k)) for k in range(spec.n_qubits))
        circuit.extend(rzz_exp(k, l, phase_two_body(x, k, l)) for k, l in spec.pairs())
    return circuit


def feature_map_batch(X, spec=None):
    """Embedding circuits for every row of ``X`` as one ``CircuitBatch``.

    Same gates as ``build_feature_map`` row by row, computed without building
    per-sample gate objects.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValidationError("X must be 2-d")
    spec = spec or FeatureMapSpec(n_features=X.shape[1])
    if X.shape[1] != spec.n_features:
        raise ValidationError(
            f"data has {X.shape[1]} features, map expects {spec.n_features}"
        )
    if not np.all(np.isfinite(X)):
        raise ValidationError("features must be finite")
    n = spec.n_qubits
    layout = []
    columns = []
    for _ in range(spec.repetitions):
        for q in range(n):
            layout.append(("H", (q,)))
            columns.append(np.zeros(len(X)))
        for k in range(n):
            layout.append(("RZ", (k,)))
            columns.append(-2.0 * X[:, k])
        for k, l in spec.pairs():
            layout.append(("RZZ", (k, l)))
            columns.append((np.pi - X[:, k]) * (np.pi - X[:, l]))
    angles = np.stack(columns, axis=1) if columns else np.zeros((len(X), 0))
    return CircuitBatch(n, tuple(layout), angles)


def embed(x, spec=None):
    """Embedded statevector amplitudes of a single feature vector."""
    return run_statevector(build_feature_map(x, spec)).amplitudes


def embed_batch(X, spec=None):
    return simulate_batch(feature_map_batch(X, spec))


def embedding_fidelity(x1, x2, spec=None):
    x1, x2 = _as_vector(x1), _as_vector(x2)
    if len(x1) != len(x2):
        raise ValidationError("feature vectors differ in dimension")
    a = embed(x1, spec)
    b = embed(x2, spec)
    return float(min(1.0, abs(np.vdot(a, b)) ** 2))
