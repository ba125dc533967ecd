"""Dense statevector simulator with shot sampling and Pauli-trajectory noise.

Qubit 0 is the most significant bit: basis index ``i`` of an ``n``-qubit
register corresponds to the bitstring ``format(i, f"0{n}b")`` read left to
right as qubits ``0 .. n-1``.

Gate conventions::

    RX(t)  = exp(-i t X / 2)      RY(t) = exp(-i t Y / 2)
    RZ(t)  = exp(-i t Z / 2)
    RZZ(t) = exp(+i t Z(x)Z)       (no half angle, no minus sign)
    CNOT   = control targets[0], flips targets[1]

Every simulation routine works on a batch of states of shape ``(B, 2**n)`` so
that many circuits with the same gate layout but different angles (one per
data sample, one per noisy trajectory) share a single vectorized pass.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import CapacityError, ValidationError

DEFAULT_MAX_QUBITS = 12

GATE_ARITY = {
    "H": 1,
    "X": 1,
    "Y": 1,
    "Z": 1,
    "RX": 1,
    "RY": 1,
    "RZ": 1,
    "RZZ": 2,
    "CZ": 2,
    "CNOT": 2,
}
PARAMETRIC = frozenset({"RX", "RY", "RZ", "RZZ"})
DIAGONAL = frozenset({"Z", "RZ", "RZZ", "CZ"})

_SQRT1_2 = 1.0 / np.sqrt(2.0)
_FIXED = {
    "H": np.array([[1, 1], [1, -1]], dtype=complex) * _SQRT1_2,
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
    "CZ": np.diag([1, 1, 1, -1]).astype(complex),
    "CNOT": np.array(
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
    ),
}
PAULIS = ("X", "Y", "Z")


def gate_matrix(kind, angle=None):
    """Unitary of a gate kind; ``angle`` may be a scalar or a 1-d array.

    With an array of ``B`` angles the result has shape ``(B, d, d)``.
    """
    if kind in _FIXED:
        return _FIXED[kind].copy()
    if kind not in PARAMETRIC:
        raise ValidationError(f"unknown gate kind {kind!r}")
    t = np.asarray(angle, dtype=float)
    c = np.cos(t / 2)
    s = np.sin(t / 2)
    zero = np.zeros_like(t)
    if kind == "RX":
        m = [[c + 0j, -1j * s], [-1j * s, c + 0j]]
    elif kind == "RY":
        m = [[c + 0j, -s + 0j], [s + 0j, c + 0j]]
    elif kind == "RZ":
        m = [[np.exp(-0.5j * t), zero], [zero, np.exp(0.5j * t)]]
    else:
        p, q = np.exp(1j * t), np.exp(-1j * t)
        m = [
            [p, zero, zero, zero],
            [zero, q, zero, zero],
            [zero, zero, q, zero],
            [zero, zero, zero, p],
        ]
    out = np.array(m, dtype=complex)
    if t.ndim == 0:
        return out
    return np.moveaxis(out, -1, 0)


@dataclass(frozen=True)
class Gate:
    kind: str
    targets: tuple
    angle: float | None = None

    def __post_init__(self):
        if self.kind not in GATE_ARITY:
            raise ValidationError(f"unknown gate kind {self.kind!r}")
        targets = tuple(int(t) for t in self.targets)
        object.__setattr__(self, "targets", targets)
        if len(targets) != GATE_ARITY[self.kind]:
            raise ValidationError(
                f"{self.kind} acts on {GATE_ARITY[self.kind]} qubit(s), got {targets}"
            )
        if len(set(targets)) != len(targets):
            raise ValidationError(f"repeated target in {targets}")
        if any(t < 0 for t in targets):
            raise ValidationError(f"negative qubit index in {targets}")
        if self.kind in PARAMETRIC:
            if self.angle is None or not np.isfinite(self.angle):
                raise ValidationError(f"{self.kind} needs a finite angle")
            object.__setattr__(self, "angle", float(self.angle))
        elif self.angle is not None:
            raise ValidationError(f"{self.kind} takes no angle")

    def matrix(self):
        return gate_matrix(self.kind, self.angle)

    def to_dict(self):
        return {"kind": self.kind, "targets": list(self.targets), "angle": self.angle}

    @classmethod
    def from_dict(cls, d):
        return cls(d["kind"], tuple(d["targets"]), d.get("angle"))


@dataclass
class Circuit:
    n_qubits: int
    gates: list = field(default_factory=list)

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValidationError("a circuit needs at least one qubit")
        self.gates = list(self.gates)
        for g in self.gates:
            self._check(g)

    def _check(self, gate):
        if max(gate.targets) >= self.n_qubits:
            raise ValidationError(
                f"gate {gate.kind}{gate.targets} out of range for {self.n_qubits} qubits"
            )

    def append(self, gate):
        self._check(gate)
        self.gates.append(gate)
        return self

    def extend(self, gates):
        for g in gates:
            self.append(g)
        return self

    def __len__(self):
        return len(self.gates)

    def __add__(self, other):
        if other.n_qubits != self.n_qubits:
            raise ValidationError("cannot concatenate circuits of different width")
        return Circuit(self.n_qubits, self.gates + other.gates)

    def layout(self):
        """Gate kinds and targets without angles."""
        return tuple((g.kind, g.targets) for g in self.gates)

    def to_json(self):
        return json.dumps(
            {"n_qubits": self.n_qubits, "gates": [g.to_dict() for g in self.gates]}
        )

    @classmethod
    def from_json(cls, text, n_qubits=None):
        """Load either ``{"n_qubits", "gates"}`` or a bare array of gate records."""
        data = json.loads(text)
        if isinstance(data, dict):
            records, n_qubits = data["gates"], data.get("n_qubits", n_qubits)
        else:
            records = data
        gates = [Gate.from_dict(r) for r in records]
        if n_qubits is None:
            n_qubits = 1 + max((max(g.targets) for g in gates), default=0)
        return cls(int(n_qubits), gates)


@dataclass
class CircuitBatch:
    """Circuits sharing one gate layout, with one row of angles per circuit.

    ``angles[b, g]`` is the angle of gate ``g`` in circuit ``b`` (ignored for
    non-parametric gates).
    """

    n_qubits: int
    layout: tuple
    angles: np.ndarray

    def __post_init__(self):
        self.angles = np.asarray(self.angles, dtype=float)
        if self.angles.ndim != 2 or self.angles.shape[1] != len(self.layout):
            raise ValidationError(
                f"angles must have shape (B, {len(self.layout)}), got {self.angles.shape}"
            )
        for kind, targets in self.layout:
            Gate(kind, targets, 0.0 if kind in PARAMETRIC else None)
            if max(targets) >= self.n_qubits:
                raise ValidationError(f"{kind}{targets} out of range")

    def __len__(self):
        return self.angles.shape[0]

    @classmethod
    def from_circuits(cls, circuits):
        circuits = list(circuits)
        if not circuits:
            raise ValidationError("empty circuit list")
        layout = circuits[0].layout()
        n = circuits[0].n_qubits
        for c in circuits[1:]:
            if c.layout() != layout or c.n_qubits != n:
                raise ValidationError("circuits in a batch must share one gate layout")
        angles = np.array(
            [[0.0 if g.angle is None else g.angle for g in c.gates] for c in circuits],
            dtype=float,
        ).reshape(len(circuits), len(layout))
        return cls(n, layout, angles)

    def circuit(self, index):
        gates = [
            Gate(kind, targets, self.angles[index, j] if kind in PARAMETRIC else None)
            for j, (kind, targets) in enumerate(self.layout)
        ]
        return Circuit(self.n_qubits, gates)

    def select(self, rows):
        return CircuitBatch(self.n_qubits, self.layout, self.angles[rows])


@dataclass
class StateVector:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (2**self.n_qubits,):
            raise ValidationError(
                f"expected {2 ** self.n_qubits} amplitudes, got {self.amplitudes.shape}"
            )

    @classmethod
    def zero(cls, n_qubits):
        amps = np.zeros(2**n_qubits, dtype=complex)
        amps[0] = 1.0
        return cls(n_qubits, amps)

    def probabilities(self):
        return np.abs(self.amplitudes) ** 2

    def norm(self):
        return float(np.linalg.norm(self.amplitudes))


@dataclass
class ShotCounts:
    counts: dict
    total_shots: int
    n_qubits: int

    def __post_init__(self):
        if sum(self.counts.values()) != self.total_shots:
            raise ValidationError("counts do not sum to total_shots")
        for key, value in self.counts.items():
            if len(key) != self.n_qubits or set(key) - {"0", "1"}:
                raise ValidationError(f"bad outcome {key!r} for {self.n_qubits} qubits")
            if value < 0:
                raise ValidationError("negative count")

    @classmethod
    def from_array(cls, arr, n_qubits):
        arr = np.asarray(arr)
        counts = {
            format(i, f"0{n_qubits}b"): int(c) for i, c in enumerate(arr) if c > 0
        }
        return cls(counts, int(arr.sum()), n_qubits)

    def to_array(self):
        arr = np.zeros(2**self.n_qubits, dtype=np.int64)
        for key, value in self.counts.items():
            arr[int(key, 2)] = value
        return arr

    def frequencies(self):
        return self.to_array() / self.total_shots


# ---------------------------------------------------------------------------
# batched kernels


def _bit_planes(n_qubits):
    idx = np.arange(2**n_qubits)
    return [(idx >> (n_qubits - 1 - q)) & 1 for q in range(n_qubits)]


def _diagonal(kind, targets, angles, planes):
    """Phase vector(s) of a diagonal gate, broadcastable against (B, D)."""
    if kind == "Z":
        return 1.0 - 2.0 * planes[targets[0]]
    if kind == "CZ":
        return 1.0 - 2.0 * (planes[targets[0]] & planes[targets[1]])
    if kind == "RZ":
        z = 1.0 - 2.0 * planes[targets[0]]
        return np.exp(-0.5j * angles[:, None] * z[None, :])
    z = (1.0 - 2.0 * planes[targets[0]]) * (1.0 - 2.0 * planes[targets[1]])
    return np.exp(1j * angles[:, None] * z[None, :])


def _apply_1q(psi, mat, q, n):
    b = psi.shape[0]
    view = psi.reshape(b, 2**q, 2, 2 ** (n - q - 1))
    a0 = view[:, :, 0, :]
    a1 = view[:, :, 1, :]
    if mat.ndim == 3:
        m = mat[:, :, :, None, None]
        m00, m01, m10, m11 = m[:, 0, 0], m[:, 0, 1], m[:, 1, 0], m[:, 1, 1]
    else:
        m00, m01, m10, m11 = mat[0, 0], mat[0, 1], mat[1, 0], mat[1, 1]
    out = np.empty_like(view)
    out[:, :, 0, :] = m00 * a0 + m01 * a1
    out[:, :, 1, :] = m10 * a0 + m11 * a1
    return out.reshape(b, -1)


def _apply_2q(psi, mat, targets, n):
    b = psi.shape[0]
    tensor = psi.reshape((b,) + (2,) * n)
    axes = [1 + t for t in targets]
    moved = np.moveaxis(tensor, axes, [1, 2]).reshape(b, 4, -1)
    moved = mat @ moved
    moved = moved.reshape((b, 2, 2) + (2,) * (n - 2))
    return np.moveaxis(moved, [1, 2], axes).reshape(b, -1)


def _apply(psi, kind, targets, angles, n, planes):
    """Apply one gate to every row of ``psi``; ``angles`` has one entry per row."""
    if kind in DIAGONAL:
        return psi * _diagonal(kind, targets, angles, planes)
    mat = gate_matrix(kind, angles if kind in PARAMETRIC else None)
    if len(targets) == 1:
        return _apply_1q(psi, mat, targets[0], n)
    return _apply_2q(psi, mat, targets, n)


def _check_capacity(n_qubits, max_qubits):
    if n_qubits > max_qubits:
        raise CapacityError(
            f"{n_qubits} qubits exceeds the simulator cap of {max_qubits}"
        )


# ---------------------------------------------------------------------------
# public operations


def apply_gate(state, gate):
    if max(gate.targets) >= state.n_qubits:
        raise ValidationError(
            f"gate {gate.kind}{gate.targets} out of range for {state.n_qubits} qubits"
        )
    planes = _bit_planes(state.n_qubits)
    angles = np.array([0.0 if gate.angle is None else gate.angle])
    psi = _apply(
        state.amplitudes[None, :], gate.kind, gate.targets, angles, state.n_qubits, planes
    )
    return StateVector(state.n_qubits, psi[0])


def simulate_batch(batch, max_qubits=DEFAULT_MAX_QUBITS):
    """Final amplitudes of every circuit in ``batch``, shape ``(B, 2**n)``."""
    n = batch.n_qubits
    _check_capacity(n, max_qubits)
    planes = _bit_planes(n)
    psi = np.zeros((len(batch), 2**n), dtype=complex)
    psi[:, 0] = 1.0
    for j, (kind, targets) in enumerate(batch.layout):
        psi = _apply(psi, kind, targets, batch.angles[:, j], n, planes)
    return psi


def run_statevector(circuit, max_qubits=DEFAULT_MAX_QUBITS):
    _check_capacity(circuit.n_qubits, max_qubits)
    state = StateVector.zero(circuit.n_qubits)
    for gate in circuit.gates:
        state = apply_gate(state, gate)
    return state


def sample_counts(probs, shots, rng):
    """Multinomial outcome counts for each row of ``probs``; shape ``(B, D)``."""
    probs = np.clip(np.asarray(probs, dtype=float), 0.0, None)
    probs = probs / probs.sum(axis=-1, keepdims=True)
    return rng.multinomial(shots, probs)


def sample_shots(state, shots, seed):
    if shots < 1:
        raise ValidationError("shots must be >= 1")
    rng = np.random.default_rng(seed)
    counts = sample_counts(state.probabilities()[None, :], shots, rng)[0]
    return ShotCounts.from_array(counts, state.n_qubits)


@dataclass(frozen=True)
class NoiseModel:
    """Stochastic single-qubit Pauli errors after every gate.

    After each gate, each target qubit independently suffers a uniformly
    random X, Y or Z with probability ``per_gate_error``. ``forced_pauli``
    pins the error type and exists for tests.
    """

    per_gate_error: float = 0.0
    rng_seed: int = 0
    forced_pauli: str | None = None

    def __post_init__(self):
        if not 0.0 <= self.per_gate_error <= 1.0:
            raise ValidationError(
                f"per_gate_error must lie in [0, 1], got {self.per_gate_error}"
            )
        if self.forced_pauli is not None and self.forced_pauli not in PAULIS:
            raise ValidationError(f"forced_pauli must be one of {PAULIS}")


def _trajectories(batch, row, noise, shots, rng, planes):
    n = batch.n_qubits
    p = noise.per_gate_error
    psi = np.zeros((shots, 2**n), dtype=complex)
    psi[:, 0] = 1.0
    for j, (kind, targets) in enumerate(batch.layout):
        # a length-1 angle array broadcasts over all trajectories
        psi = _apply(psi, kind, targets, batch.angles[row, j : j + 1], n, planes)
        for q in targets:
            hit = rng.random(shots) < p
            which = rng.integers(0, 3, size=shots)
            if not hit.any():
                continue
            for k, pauli in enumerate(PAULIS):
                if noise.forced_pauli is not None:
                    if pauli != noise.forced_pauli:
                        continue
                    rows = hit
                else:
                    rows = hit & (which == k)
                if rows.any():
                    psi[rows] = _apply(psi[rows], pauli, (q,), None, n, planes)
    probs = np.abs(psi) ** 2
    cdf = np.cumsum(probs, axis=1)
    u = rng.random(shots) * cdf[:, -1]
    outcome = (cdf[:, :-1] <= u[:, None]).sum(axis=1)
    return np.bincount(outcome, minlength=2**n)


def run_noisy_batch(batch, noise, shots, seed=None, max_qubits=DEFAULT_MAX_QUBITS):
    """Outcome counts ``(B, 2**n)`` under ``noise``.

    Circuit ``b`` draws from its own stream seeded by ``(seed, b)``, so its
    counts do not depend on how the batch is split. With zero error rate the
    ideal sampler is used with the same seed.
    """
    if shots < 1:
        raise ValidationError("shots must be >= 1")
    seed = noise.rng_seed if seed is None else seed
    if noise.per_gate_error == 0.0:
        probs = np.abs(simulate_batch(batch, max_qubits)) ** 2
        return sample_counts(probs, shots, np.random.default_rng(seed))
    _check_capacity(batch.n_qubits, max_qubits)
    planes = _bit_planes(batch.n_qubits)
    out = np.empty((len(batch), 2**batch.n_qubits), dtype=np.int64)
    for b in range(len(batch)):
        rng = np.random.default_rng([seed, b])
        out[b] = _trajectories(batch, b, noise, shots, rng, planes)
    return out


def run_noisy(circuit, noise, shots):
    if noise.per_gate_error == 0.0:
        return sample_shots(run_statevector(circuit), shots, noise.rng_seed)
    counts = run_noisy_batch(CircuitBatch.from_circuits([circuit]), noise, shots)
    return ShotCounts.from_array(counts[0], circuit.n_qubits)
