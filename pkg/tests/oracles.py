"""Independent reference implementations used only by the tests."""

import itertools
from functools import reduce

import numpy as np
from scipy.linalg import expm
from scipy.optimize import minimize

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.diag([1, -1]).astype(complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
PAULI = {"X": X, "Y": Y, "Z": Z}


def embed_op(op_by_qubit, n):
    """Kronecker product with identities elsewhere; qubit 0 is the leftmost factor."""
    return reduce(np.kron, [op_by_qubit.get(q, I2) for q in range(n)])


def dense_gate(kind, targets, angle, n):
    """Full 2**n unitary built from matrix exponentials of Pauli generators."""
    if kind == "H":
        return embed_op({targets[0]: H}, n)
    if kind in PAULI:
        return embed_op({targets[0]: PAULI[kind]}, n)
    if kind in ("RX", "RY", "RZ"):
        gen = embed_op({targets[0]: PAULI[kind[1]]}, n)
        return expm(-0.5j * angle * gen)
    if kind == "RZZ":
        gen = embed_op({targets[0]: Z, targets[1]: Z}, n)
        return expm(1j * angle * gen)
    a, b = targets
    p1 = embed_op({a: np.diag([0, 1]).astype(complex)}, n)
    p0 = np.eye(2**n) - p1
    if kind == "CZ":
        return p0 + p1 @ embed_op({b: Z}, n)
    if kind == "CNOT":
        return p0 + p1 @ embed_op({b: X}, n)
    raise ValueError(kind)


def dense_state(circuit):
    n = circuit.n_qubits
    psi = np.zeros(2**n, dtype=complex)
    psi[0] = 1.0
    for g in circuit.gates:
        psi = dense_gate(g.kind, g.targets, g.angle, n) @ psi
    return psi


def zz_embedding(x, reps=2):
    """exp(i sum phi_S Z_S) H^n applied ``reps`` times, linear-chain pairs."""
    n = len(x)
    hn = embed_op({q: H for q in range(n)}, n)
    gen = sum(x[k] * embed_op({k: Z}, n) for k in range(n))
    for k in range(n - 1):
        gen = gen + (np.pi - x[k]) * (np.pi - x[k + 1]) * embed_op({k: Z, k + 1: Z}, n)
    u = expm(1j * gen) @ hn
    psi = np.zeros(2**n, dtype=complex)
    psi[0] = 1.0
    for _ in range(reps):
        psi = u @ psi
    return psi


def fisher_bruteforce(X, y):
    """Per-column Fisher score with explicit loops."""
    scores = []
    classes = sorted(set(y.tolist()))
    for j in range(X.shape[1]):
        col = X[:, j]
        mu = sum(col) / len(col)
        between = 0.0
        within = 0.0
        for c in classes:
            vals = [v for v, lab in zip(col, y) if lab == c]
            m = sum(vals) / len(vals)
            var = sum((v - m) ** 2 for v in vals) / len(vals)
            between += len(vals) * (m - mu) ** 2
            within += len(vals) * var
        scores.append(between / (within + 1e-12))
    return np.array(scores)


def svm_dual_qp(K, y, C):
    """Maximize the SVM dual with SLSQP from several starts; returns the best value."""
    n = len(y)
    Q = np.outer(y, y) * K

    def neg(a):
        return 0.5 * a @ Q @ a - a.sum()

    def grad(a):
        return Q @ a - 1.0

    best = None
    rng = np.random.default_rng(0)
    starts = [np.zeros(n)] + [rng.uniform(0, C, n) for _ in range(4)]
    for a0 in starts:
        res = minimize(
            neg,
            a0,
            jac=grad,
            method="SLSQP",
            bounds=[(0, C)] * n,
            constraints=[{"type": "eq", "fun": lambda a: a @ y, "jac": lambda a: y.astype(float)}],
            options={"ftol": 1e-12, "maxiter": 500},
        )
        if best is None or res.fun < best:
            best = res.fun
    return -best


def qubo_bruteforce(Q):
    """Minimum energy over every bitstring, plus all minimizers."""
    d = Q.shape[0]
    best, arg = np.inf, []
    for bits in itertools.product((0, 1), repeat=d):
        b = np.array(bits, dtype=float)
        e = b @ Q @ b
        if e < best - 1e-12:
            best, arg = e, [bits]
        elif abs(e - best) <= 1e-12:
            arg.append(bits)
    return best, arg
