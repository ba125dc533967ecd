"""Kernel SVM trained with sequential minimal optimization.

Solves the soft-margin dual

    min_a  1/2 a^T Q a - sum(a)   s.t.  0 <= a_i <= C,  y^T a = 0,

with ``Q_ij = y_i y_j K(x_i, x_j)``, choosing at each step the
maximal-violating pair under second-order gain (the rule used by libsvm).
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, replace

import numpy as np

from .errors import ValidationError

log = logging.getLogger(__name__)

KERNELS = ("linear", "poly", "rbf", "sigmoid")
TAU = 1e-12
ALPHA_THRESHOLD = 1e-8


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family and parameters; ``gamma=None`` means 1 / n_features."""

    kind: str = "rbf"
    gamma: float | None = None
    degree: int = 3
    coef0: float = 0.0

    def __post_init__(self):
        if self.kind not in KERNELS:
            raise ValidationError(f"kernel must be one of {KERNELS}, got {self.kind!r}")
        if self.gamma is not None and self.gamma <= 0:
            raise ValidationError("gamma must be positive")
        if self.kind == "poly" and (int(self.degree) != self.degree or self.degree < 1):
            raise ValidationError("polynomial degree must be an integer >= 1")

    @property
    def gamma_mode(self):
        return "auto" if self.gamma is None else "explicit"

    def resolve(self, n_features):
        if self.gamma is not None:
            return self
        return replace(self, gamma=1.0 / n_features)

    def label(self):
        return {"linear": "Linear", "poly": "Poly", "rbf": "Rbf", "sigmoid": "Sigmoid"}[self.kind]

    def to_dict(self):
        return {"kind": self.kind, "gamma": self.gamma, "degree": self.degree, "coef0": self.coef0}

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


def gram(spec, A, B):
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if A.shape[1] != B.shape[1]:
        raise ValidationError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    spec = spec.resolve(A.shape[1])
    if spec.kind == "rbf":
        sq = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * A @ B.T
        return np.exp(-spec.gamma * np.maximum(sq, 0.0))
    dot = A @ B.T
    if spec.kind == "linear":
        return dot
    if spec.kind == "poly":
        return (spec.gamma * dot + spec.coef0) ** spec.degree
    return np.tanh(spec.gamma * dot + spec.coef0)


def kernel_eval(spec, u, v):
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise ValidationError(f"dimension mismatch: {u.shape} vs {v.shape}")
    spec = spec.resolve(len(u))
    if spec.kind == "rbf":
        d = u - v
        return float(np.exp(-spec.gamma * (d @ d)))
    dot = float(u @ v)
    if spec.kind == "linear":
        return dot
    if spec.kind == "poly":
        return float((spec.gamma * dot + spec.coef0) ** spec.degree)
    return float(np.tanh(spec.gamma * dot + spec.coef0))


@dataclass
class SvmModel:
    support_vectors: np.ndarray
    dual_coefs: np.ndarray
    bias: float
    kernel: KernelSpec
    C: float
    iterations: int = 0

    @property
    def alphas(self):
        return np.abs(self.dual_coefs)

    @property
    def n_features(self):
        return self.support_vectors.shape[1]

    def to_dict(self):
        return {
            "kernel": self.kernel.to_dict(),
            "C": self.C,
            "support_vectors": self.support_vectors.tolist(),
            "dual_coefs": self.dual_coefs.tolist(),
            "bias": self.bias,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            np.asarray(d["support_vectors"], dtype=float).reshape(len(d["dual_coefs"]), -1),
            np.asarray(d["dual_coefs"], dtype=float),
            float(d["bias"]),
            KernelSpec.from_dict(d["kernel"]),
            float(d["C"]),
        )

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def dual_objective(alpha, y, K):
    """1/2 a^T Q a - sum(a); the quantity SMO minimizes."""
    ya = alpha * y
    return float(0.5 * ya @ K @ ya - alpha.sum())


def _select_pair(alpha, y, G, Qdiag, K, C, tol):
    minus_yG = -y * G
    up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
    low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
    if not up.any() or not low.any():
        return None
    cand = np.where(up, minus_yG, -np.inf)
    i = int(np.argmax(cand))
    g_max = cand[i]
    g_min = np.min(np.where(low, minus_yG, np.inf))
    if g_max - g_min < tol:
        return None
    b = g_max - minus_yG
    viol = low & (b > 0)
    a = Qdiag[i] + Qdiag - 2.0 * y[i] * y * K[i] * y[i] * y
    a = np.where(a > 0, a, TAU)
    gain = np.where(viol, -(b * b) / a, np.inf)
    j = int(np.argmin(gain))
    return i, j


def smo(K, y, C, tol=1e-3, max_iter=200_000):
    """Dual coefficients and bias for a precomputed Gram matrix ``K``."""
    n = len(y)
    y = y.astype(float)
    alpha = np.zeros(n)
    G = -np.ones(n)
    Qdiag = np.diag(K).copy()
    it = 0
    while it < max_iter:
        pair = _select_pair(alpha, y, G, Qdiag, K, C, tol)
        if pair is None:
            break
        i, j = pair
        Qi = y[i] * y * K[i]
        Qj = y[j] * y * K[j]
        ai, aj = alpha[i], alpha[j]
        if y[i] != y[j]:
            quad = Qdiag[i] + Qdiag[j] + 2.0 * Qi[j]
            quad = quad if quad > 0 else TAU
            delta = (-G[i] - G[j]) / quad
            diff = ai - aj
            ni, nj = ai + delta, aj + delta
            if diff > 0:
                if nj < 0:
                    nj, ni = 0.0, diff
            elif ni < 0:
                ni, nj = 0.0, -diff
            if diff > 0:
                if ni > C:
                    ni, nj = C, C - diff
            elif nj > C:
                nj, ni = C, C + diff
        else:
            quad = Qdiag[i] + Qdiag[j] - 2.0 * Qi[j]
            quad = quad if quad > 0 else TAU
            delta = (G[i] - G[j]) / quad
            total = ai + aj
            ni, nj = ai - delta, aj + delta
            if total > C:
                if ni > C:
                    ni, nj = C, total - C
            elif nj < 0:
                nj, ni = 0.0, total
            if total > C:
                if nj > C:
                    nj, ni = C, total - C
            elif ni < 0:
                ni, nj = 0.0, total
        alpha[i], alpha[j] = ni, nj
        G += Qi * (ni - ai) + Qj * (nj - aj)
        it += 1
    else:
        log.warning("SMO stopped at max_iter=%d before reaching tol=%g", max_iter, tol)
    return alpha, _bias(alpha, y, G, C), it


def _bias(alpha, y, G, C):
    yG = y * G
    at_upper = alpha >= C
    at_lower = alpha <= 0
    free = ~(at_upper | at_lower)
    if free.any():
        rho = yG[free].mean()
    else:
        ub_mask = (at_upper & (y < 0)) | (at_lower & (y > 0))
        lb_mask = (at_upper & (y > 0)) | (at_lower & (y < 0))
        ub = yG[ub_mask].min() if ub_mask.any() else np.inf
        lb = yG[lb_mask].max() if lb_mask.any() else -np.inf
        rho = 0.5 * (ub + lb) if np.isfinite(ub) and np.isfinite(lb) else (ub if np.isfinite(ub) else lb)
    return float(-rho)


def fit(data, spec=None, C=1.0, tol=1e-3, max_iter=200_000):
    spec = (spec or KernelSpec()).resolve(data.n_features)
    if C <= 0:
        raise ValidationError("C must be positive")
    data.require_both_classes()
    y = data.signed_labels().astype(float)
    K = gram(spec, data.features, data.features)
    alpha, bias, iterations = smo(K, y, C, tol, max_iter)
    keep = alpha > ALPHA_THRESHOLD
    return SvmModel(
        data.features[keep].copy(),
        (alpha * y)[keep],
        bias,
        spec,
        float(C),
        iterations,
    )


def _rows(model, x):
    X = np.asarray(x, dtype=float)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if X.shape[1] != model.n_features:
        raise ValidationError(f"expected {model.n_features} features, got {X.shape[1]}")
    return X, single


def decision_function(model, x):
    X, single = _rows(model, x)
    margin = gram(model.kernel, X, model.support_vectors) @ model.dual_coefs + model.bias
    return float(margin[0]) if single else margin


def predict(model, x):
    margin = decision_function(model, x)
    if np.ndim(margin) == 0:
        return int(margin > 0)
    return (np.asarray(margin) > 0).astype(np.int64)


def accuracy(model, data):
    if len(data) == 0:
        return None
    return float(np.mean(predict(model, data.features) == data.labels))


def select_kernel(train, test, candidates, C=1.0):
    """Candidate with the best test accuracy; earlier candidates win ties."""
    candidates = list(candidates)
    if not candidates:
        raise ValidationError("no candidate kernels")
    best, best_acc = None, -1.0
    for spec in candidates:
        acc = accuracy(fit(train, spec, C), test)
        log.info("kernel %s: test accuracy %.4f", spec.kind, acc)
        if acc > best_acc:
            best, best_acc = spec, acc
    return best
