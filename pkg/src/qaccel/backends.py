"""Interchangeable execution targets for circuit batches.

Every quantum backend exposes ``run_batch(batch, shots, seed)`` returning an
integer array of outcome counts with shape ``(len(batch), 2**n_qubits)``, and
``run(circuits, shots, seed)`` returning one ``ShotCounts`` per circuit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BackendError, ValidationError
from .qsim import (
    DEFAULT_MAX_QUBITS,
    CircuitBatch,
    NoiseModel,
    ShotCounts,
    run_noisy_batch,
    sample_counts,
    simulate_batch,
)

BACKEND_KINDS = ("classical_cpu", "simulator_ideal", "simulator_noisy", "remote_qpu_mock")


class QuantumBackend:
    kind = None
    hardware = None

    def run_batch(self, batch, shots, seed):
        raise NotImplementedError

    def run(self, circuits, shots, seed):
        circuits = list(circuits)
        if not circuits:
            return []
        try:
            batch = CircuitBatch.from_circuits(circuits)
        except ValidationError:
            batch = None
        if batch is not None:
            counts = self.run_batch(batch, shots, seed)
        else:
            counts = [
                self.run_batch(CircuitBatch.from_circuits([c]), shots, [seed, i])[0]
                for i, c in enumerate(circuits)
            ]
        n = circuits[0].n_qubits
        return [ShotCounts.from_array(row, n) for row in counts]


@dataclass
class IdealSimulator(QuantumBackend):
    max_qubits: int = DEFAULT_MAX_QUBITS
    kind = "simulator_ideal"
    hardware = "Simulator"

    def run_batch(self, batch, shots, seed):
        if shots < 1:
            raise ValidationError("shots must be >= 1")
        probs = np.abs(simulate_batch(batch, self.max_qubits)) ** 2
        return sample_counts(probs, shots, np.random.default_rng(seed))

    def probabilities(self, batch):
        """Exact outcome probabilities; only simulators can offer this."""
        return np.abs(simulate_batch(batch, self.max_qubits)) ** 2


@dataclass
class NoisySimulator(QuantumBackend):
    noise: NoiseModel = field(default_factory=NoiseModel)
    max_qubits: int = DEFAULT_MAX_QUBITS
    kind = "simulator_noisy"
    hardware = "Simulator (noisy)"

    def run_batch(self, batch, shots, seed):
        return run_noisy_batch(batch, self.noise, shots, seed, self.max_qubits)


@dataclass(frozen=True)
class Distribution:
    """Scalar distribution over seconds: ``constant``, ``uniform`` or ``loguniform``."""

    low: float
    high: float
    shape: str = "uniform"

    def __post_init__(self):
        if self.shape not in ("constant", "uniform", "loguniform"):
            raise ValidationError(f"unknown distribution shape {self.shape!r}")
        if self.low < 0 or self.high < self.low:
            raise ValidationError(f"bad support [{self.low}, {self.high}]")
        if self.shape == "loguniform" and self.low <= 0:
            raise ValidationError("log-uniform support must be positive")

    @classmethod
    def constant(cls, value):
        return cls(value, value, "constant")

    def sample(self, rng, size):
        if self.shape == "constant" or self.low == self.high:
            return np.full(size, float(self.low))
        if self.shape == "uniform":
            return rng.uniform(self.low, self.high, size)
        return np.exp(rng.uniform(math.log(self.low), math.log(self.high), size))

    def mean(self):
        if self.shape == "loguniform" and self.low != self.high:
            return (self.high - self.low) / math.log(self.high / self.low)
        return 0.5 * (self.low + self.high)

    def to_dict(self):
        return {"low": self.low, "high": self.high, "shape": self.shape}


@dataclass(frozen=True)
class LatencyModel:
    """Operational envelope of a shared cloud QPU.

    Defaults: 75 circuits per API call, 1000 shots per circuit, queue waits
    log-uniform on [5 s, 3600 s], 88-90 s of QPU time per call and 0.5 s of
    network overhead per call.
    """

    batch_size: int = 75
    shots_per_circuit: int = 1000
    queue_wait: Distribution = Distribution(5.0, 3600.0, "loguniform")
    qpu_seconds_per_batch: Distribution = Distribution(88.0, 90.0, "uniform")
    network_seconds: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.batch_size < 1 or self.shots_per_circuit < 1:
            raise ValidationError("batch_size and shots_per_circuit must be >= 1")
        if self.network_seconds < 0:
            raise ValidationError("network_seconds must be >= 0")

    @property
    def per_circuit_run_ms(self):
        """Mean QPU time of one shot of one circuit, in milliseconds."""
        runs = self.batch_size * self.shots_per_circuit
        return 1000.0 * self.qpu_seconds_per_batch.mean() / runs

    def exclusive(self):
        """Same device with a dedicated subscription: no queueing."""
        return LatencyModel(
            self.batch_size,
            self.shots_per_circuit,
            Distribution.constant(0.0),
            self.qpu_seconds_per_batch,
            self.network_seconds,
            self.seed,
        )

    def to_dict(self):
        return {
            "batch_size": self.batch_size,
            "shots_per_circuit": self.shots_per_circuit,
            "queue_wait": self.queue_wait.to_dict(),
            "qpu_seconds_per_batch": self.qpu_seconds_per_batch.to_dict(),
            "network_seconds": self.network_seconds,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        for key in ("queue_wait", "qpu_seconds_per_batch"):
            if key in d and isinstance(d[key], dict):
                d[key] = Distribution(**d[key])
        return cls(**d)


def batch_circuits(n_circuits, batch_size):
    """Number of API calls needed for ``n_circuits``."""
    if n_circuits < 1 or batch_size < 1:
        raise ValidationError("n_circuits and batch_size must be >= 1")
    return -(-n_circuits // batch_size)


@dataclass
class TimingRecord:
    """Wall-clock phase durations plus virtual remote-execution time (seconds)."""

    train_seconds: float = 0.0
    validate_seconds: float = 0.0
    queue_seconds: list = field(default_factory=list)
    qpu_seconds: list = field(default_factory=list)
    network_seconds: list = field(default_factory=list)
    circuit_count: int = 0

    @property
    def batch_count(self):
        return len(self.qpu_seconds)

    @property
    def queue_total(self):
        return float(sum(self.queue_seconds))

    @property
    def qpu_total(self):
        return float(sum(self.qpu_seconds))

    @property
    def network_total(self):
        return float(sum(self.network_seconds))

    @property
    def simulated_total(self):
        return float(
            sum(
                q + p + n
                for q, p, n in zip(self.queue_seconds, self.qpu_seconds, self.network_seconds)
            )
        )

    def merge(self, other):
        self.queue_seconds += other.queue_seconds
        self.qpu_seconds += other.qpu_seconds
        self.network_seconds += other.network_seconds
        self.circuit_count += other.circuit_count
        return self


def sample_remote_timing(n_circuits, lm, seed=None):
    """Virtual time of sending ``n_circuits`` through the remote queue."""
    rng = np.random.default_rng(lm.seed if seed is None else seed)
    n_batches = batch_circuits(n_circuits, lm.batch_size)
    queue = lm.queue_wait.sample(rng, n_batches)
    qpu = lm.qpu_seconds_per_batch.sample(rng, n_batches)
    return TimingRecord(
        queue_seconds=queue.tolist(),
        qpu_seconds=qpu.tolist(),
        network_seconds=[float(lm.network_seconds)] * n_batches,
        circuit_count=n_circuits,
    )


@dataclass
class RemoteQpuMock(QuantumBackend):
    """Noisy simulator behind a virtual queue.

    Results are computed as by ``NoisySimulator`` on the whole batch (so they
    do not depend on the API packing); each call additionally books queue,
    QPU and network time on ``self.timing``. Nothing sleeps.
    """

    latency: LatencyModel = field(default_factory=LatencyModel)
    noise: NoiseModel = field(default_factory=NoiseModel)
    max_qubits: int = DEFAULT_MAX_QUBITS
    fail_at: int | None = None
    timing: TimingRecord = field(default_factory=TimingRecord)
    kind = "remote_qpu_mock"
    hardware = "Quantum (mock)"

    def __post_init__(self):
        self._calls = 0
        self._submitted = 0

    def run_batch(self, batch, shots, seed):
        start = self._submitted
        if self.fail_at is not None and start <= self.fail_at < start + len(batch):
            raise BackendError(
                f"remote call failed at circuit {self.fail_at}", index=self.fail_at
            )
        counts = run_noisy_batch(batch, self.noise, shots, seed, self.max_qubits)
        self.timing.merge(
            sample_remote_timing(len(batch), self.latency, [self.latency.seed, self._calls])
        )
        self._calls += 1
        self._submitted += len(batch)
        return counts

    def reset_timing(self):
        self.timing = TimingRecord()
        self._calls = 0
        self._submitted = 0


@dataclass
class ClassicalCPU:
    """Marker backend for the classical SVM and QUBO paths."""

    kind = "classical_cpu"
    hardware = "Classical"


def make_backend(kind, noise=None, latency=None):
    if kind == "classical_cpu":
        return ClassicalCPU()
    if kind == "simulator_ideal":
        return IdealSimulator()
    if kind == "simulator_noisy":
        return NoisySimulator(noise or NoiseModel())
    if kind == "remote_qpu_mock":
        return RemoteQpuMock(latency or LatencyModel(), noise or NoiseModel())
    raise ValidationError(f"unknown backend kind {kind!r}; expected one of {BACKEND_KINDS}")
