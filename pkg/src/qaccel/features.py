"""Fisher-score filter feature selection for two-class data."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

EPS = 1e-12


@dataclass
class FeatureRanking:
    scores: np.ndarray
    order: np.ndarray
    feature_names: list

    def to_csv(self, fh):
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["feature_name", "score", "rank"])
        for rank, j in enumerate(self.order, start=1):
            writer.writerow([self.feature_names[j], repr(float(self.scores[j])), rank])


def fisher_score(data):
    """Per-feature ratio of between-class to within-class scatter.

    F_j = sum_c n_c (mu_cj - mu_j)^2 / (sum_c n_c var_cj + EPS), with var the
    population variance inside class c.
    """
    data.require_both_classes()
    X = data.features
    mu = X.mean(axis=0)
    num = np.zeros(X.shape[1])
    den = np.zeros(X.shape[1])
    for c in (0, 1):
        Xc = X[data.labels == c]
        num += len(Xc) * (Xc.mean(axis=0) - mu) ** 2
        den += len(Xc) * Xc.var(axis=0)
    scores = num / (den + EPS)
    # stable sort on -score keeps lower index first among ties
    order = np.argsort(-scores, kind="stable")
    return FeatureRanking(scores, order, list(data.feature_names))


def select_top_k(ranking, k):
    n = len(ranking.order)
    if not 1 <= k <= n:
        raise ValidationError(f"k must be in [1, {n}], got {k}")
    return [int(j) for j in ranking.order[:k]]
