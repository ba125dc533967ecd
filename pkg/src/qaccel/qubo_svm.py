"""SVM training cast as a QUBO and solved by enumeration or annealing.

Each dual coefficient is written in base ``B`` with ``K`` binary digits,
``alpha_i = sum_k B**k * b[i*K + k]`` (digit ``k`` has weight ``B**k``), and
the energy to minimize is

    1/2 sum_ij alpha_i alpha_j y_i y_j K(x_i, x_j) - sum_i alpha_i
        + penalty * (sum_i alpha_i y_i)**2

stored as an upper-triangular matrix with the linear terms on the diagonal.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, DegenerateModelError, ValidationError
from .svm import KernelSpec, SvmModel, gram

MAX_EXHAUSTIVE_VARIABLES = 24


@dataclass(frozen=True)
class QuboEncoding:
    precision_bits: int = 2
    base: float = 2.0
    penalty: float = 1.0

    def __post_init__(self):
        if self.precision_bits < 1:
            raise ValidationError("precision_bits must be >= 1")
        if self.base <= 0:
            raise ValidationError("base must be positive")
        if self.penalty < 0:
            raise ValidationError("penalty must be >= 0")

    def weights(self):
        return self.base ** np.arange(self.precision_bits)

    @property
    def alpha_max(self):
        return float(self.weights().sum())

    def decode(self, bits, n_samples):
        bits = np.asarray(bits, dtype=float)
        if bits.shape != (n_samples * self.precision_bits,):
            raise ValidationError(
                f"expected {n_samples * self.precision_bits} bits, got {bits.shape}"
            )
        return bits.reshape(n_samples, self.precision_bits) @ self.weights()


def _check_q(Q):
    Q = np.asarray(Q, dtype=float)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
        raise ValidationError("QUBO matrix must be square")
    if np.any(np.tril(Q, -1) != 0):
        raise ValidationError("QUBO matrix must be upper triangular")
    return Q


def build_qubo(data, kernel, enc):
    """Upper-triangular QUBO of size n*K for the SVM dual on ``data``."""
    if len(data) == 0:
        raise ValidationError("empty training data")
    y = data.signed_labels().astype(float)
    Kmat = gram(kernel, data.features, data.features)
    w = enc.weights()
    # coupling between digit (i, k) and digit (j, l) of the full symmetric form
    pair = np.outer(y, y) * (0.5 * Kmat + enc.penalty)
    M = np.kron(pair, np.outer(w, w))
    linear = -np.tile(w, len(data))
    Q = np.triu(2.0 * M, 1)
    Q[np.diag_indices_from(Q)] = np.diag(M) + linear
    return Q


def energy(Q, bits):
    Q = np.asarray(Q, dtype=float)
    b = np.asarray(bits, dtype=float)
    if b.shape[-1] != Q.shape[0]:
        raise ValidationError(f"bitstring length {b.shape[-1]} != dimension {Q.shape[0]}")
    return np.einsum("...i,ij,...j->...", b, Q, b)


def svm_energy(alpha, y, Kmat, penalty):
    """Dual objective plus squared constraint penalty, evaluated directly."""
    ya = alpha * y
    return float(0.5 * ya @ Kmat @ ya - alpha.sum() + penalty * ya.sum() ** 2)


def _all_bits(start, stop, d):
    idx = np.arange(start, stop, dtype=np.int64)
    shifts = np.arange(d - 1, -1, -1, dtype=np.int64)
    return ((idx[:, None] >> shifts) & 1).astype(float)


def solve_exhaustive(Q, chunk=1 << 15):
    """Global minimum; among equal energies the lexicographically smallest bits."""
    Q = _check_q(Q)
    d = Q.shape[0]
    if d > MAX_EXHAUSTIVE_VARIABLES:
        raise CapacityError(f"{d} variables exceeds exhaustive limit {MAX_EXHAUSTIVE_VARIABLES}")
    best_e, best_i = np.inf, 0
    total = 1 << d
    for start in range(0, total, chunk):
        bits = _all_bits(start, min(total, start + chunk), d)
        e = energy(Q, bits)
        i = int(np.argmin(e))
        if e[i] < best_e:
            best_e, best_i = float(e[i]), start + i
    bits = _all_bits(best_i, best_i + 1, d)[0].astype(np.int64)
    return bits, best_e


@dataclass(frozen=True)
class AnnealSchedule:
    """Geometric cooling for single-flip Metropolis sweeps.

    ``None`` temperatures are derived from the matrix: the start is the
    largest possible single-flip energy change, the end a thousandth of it.
    """

    initial_temperature: float | None = None
    final_temperature: float | None = None
    sweeps: int = 200
    restarts: int = 10
    seed: int = 0

    def __post_init__(self):
        for t in (self.initial_temperature, self.final_temperature):
            if t is not None and t <= 0:
                raise ValidationError("temperatures must be positive")
        if self.sweeps < 0 or self.restarts < 1:
            raise ValidationError("sweeps must be >= 0 and restarts >= 1")

    def temperatures(self, Q):
        J = np.abs(Q) + np.abs(Q).T
        scale = float(J.sum(axis=1).max()) or 1.0
        t0 = self.initial_temperature or scale
        t1 = self.final_temperature or t0 * 1e-3
        if self.sweeps <= 1:
            return np.array([t0] * self.sweeps)
        return t0 * (t1 / t0) ** (np.arange(self.sweeps) / (self.sweeps - 1))


def solve_annealing(Q, sched=None):
    """Simulated annealing; restarts run side by side as rows of one array."""
    sched = sched or AnnealSchedule()
    Q = _check_q(Q)
    d = Q.shape[0]
    rng = np.random.default_rng(sched.seed)
    R = sched.restarts
    h = np.diag(Q).copy()
    J = Q + Q.T
    np.fill_diagonal(J, 0.0)

    b = rng.integers(0, 2, size=(R, d)).astype(float)
    field = b @ J
    e = energy(Q, b)
    best_b, best_e = b.copy(), e.copy()
    rows = np.arange(R)
    for T in sched.temperatures(Q):
        # accept when dE <= -T log(u), i.e. u < exp(-dE / T)
        thresholds = -T * np.log1p(-rng.random((d, R)))
        for i in range(d):
            sign = 1.0 - 2.0 * b[:, i]
            dE = sign * (h[i] + field[:, i])
            accept = dE <= thresholds[i]
            if not accept.any():
                continue
            step = sign * accept
            b[:, i] += step
            field += step[:, None] * J[i]
            e += dE * accept
            better = e < best_e
            if better.any():
                best_e[better] = e[better]
                best_b[better] = b[better]
    exact = energy(Q, best_b)
    order = np.lexsort((rows, exact))
    k = order[0]
    return best_b[k].astype(np.int64), float(exact[k])


def decode_model(bits, enc, data, kernel):
    """SVM from a QUBO solution; bias averaged over the support vectors."""
    alpha = enc.decode(bits, len(data))
    sv = alpha > 0
    if not sv.any():
        raise DegenerateModelError("all decoded coefficients are zero")
    y = data.signed_labels().astype(float)
    kernel = kernel.resolve(data.n_features)
    Kmat = gram(kernel, data.features, data.features)
    margins = Kmat[sv] @ (alpha * y)
    bias = float(np.mean(y[sv] - margins))
    return SvmModel(data.features[sv].copy(), (alpha * y)[sv], bias, kernel, enc.alpha_max)


def train_qubo_svm(data, kernel, enc=None, sched=None, exhaustive=None):
    """Build, solve and decode in one step; enumeration when small enough."""
    enc = enc or QuboEncoding()
    kernel = kernel.resolve(data.n_features)
    Q = build_qubo(data, kernel, enc)
    if exhaustive is None:
        exhaustive = Q.shape[0] <= 16
    bits, _ = solve_exhaustive(Q) if exhaustive else solve_annealing(Q, sched)
    return decode_model(bits, enc, data, kernel)


def export_coo(Q):
    """Nonzero upper-triangle entries as ``i j value`` lines."""
    Q = _check_q(Q)
    lines = [f"# dimension {Q.shape[0]}"]
    for i, j in zip(*np.nonzero(Q)):
        lines.append(f"{i} {j} {float(Q[i, j])!r}")
    return "\n".join(lines) + "\n"


def import_coo(text):
    dim = None
    entries = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            if len(parts) == 2 and parts[0] == "dimension":
                dim = int(parts[1])
            continue
        try:
            i, j, v = line.split()
            entries.append((int(i), int(j), float(v)))
        except ValueError as exc:
            raise ValidationError(f"bad COO line {line!r}") from exc
    if dim is None:
        dim = 1 + max((max(i, j) for i, j, _ in entries), default=-1)
    Q = np.zeros((dim, dim))
    for i, j, v in entries:
        if i > j:
            raise ValidationError(f"entry ({i}, {j}) below the diagonal")
        Q[i, j] = v
    return Q


def qubo_scaling_probe(n_list, precision_bits=2, seed=0, sched=None, kernel=None):
    """Build and anneal QUBOs of growing training-set size.

    Returns one row per ``n`` with the QUBO dimension, the number of
    upper-triangle entries (diagonal included) and the wall-clock build and
    solve times in seconds.
    """
    from .pipeline import make_blobs

    sched = sched or AnnealSchedule(sweeps=50, restarts=4, seed=seed)
    kernel = kernel or KernelSpec("rbf")
    enc = QuboEncoding(precision_bits)
    rows = []
    for n in n_list:
        data = make_blobs(n, seed=seed)
        t0 = time.perf_counter()
        Q = build_qubo(data, kernel, enc)
        t1 = time.perf_counter()
        solve_annealing(Q, sched)
        t2 = time.perf_counter()
        d = Q.shape[0]
        rows.append(
            {
                "n": int(n),
                "dimension": d,
                "entries": d * (d + 1) // 2,
                "build_seconds": t1 - t0,
                "solve_seconds": t2 - t1,
            }
        )
    return rows
