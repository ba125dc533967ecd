from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError


@dataclass
class Dataset:
    """Feature matrix with binary labels and the drive each row came from."""

    features: np.ndarray
    labels: np.ndarray
    drive_ids: np.ndarray
    feature_names: list = field(default_factory=list)

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        if self.features.ndim == 1:
            self.features = self.features.reshape(-1, 1)
        self.labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        self.drive_ids = np.asarray(self.drive_ids).reshape(-1)
        n = self.features.shape[0]
        if len(self.labels) != n or len(self.drive_ids) != n:
            raise ValidationError(
                f"row counts differ: features {n}, labels {len(self.labels)}, "
                f"drive_ids {len(self.drive_ids)}"
            )
        if not self.feature_names:
            self.feature_names = [f"f{j}" for j in range(self.n_features)]
        if len(self.feature_names) != self.n_features:
            raise ValidationError("feature_names length does not match columns")
        self.feature_names = list(self.feature_names)

    @classmethod
    def from_arrays(cls, X, y, drive_ids=None, feature_names=None):
        X = np.asarray(X, dtype=float)
        if drive_ids is None:
            drive_ids = np.arange(len(X))
        return cls(X, y, drive_ids, list(feature_names or []))

    def __len__(self):
        return self.features.shape[0]

    @property
    def n_features(self):
        return self.features.shape[1]

    def subset(self, rows):
        rows = np.asarray(rows)
        return Dataset(
            self.features[rows],
            self.labels[rows],
            self.drive_ids[rows],
            self.feature_names,
        )

    def select_features(self, indices):
        indices = list(indices)
        return Dataset(
            self.features[:, indices],
            self.labels,
            self.drive_ids,
            [self.feature_names[j] for j in indices],
        )

    def require_binary(self):
        bad = set(np.unique(self.labels)) - {0, 1}
        if bad:
            raise ValidationError(f"labels must be 0/1, found {sorted(bad)}")

    def require_both_classes(self):
        self.require_binary()
        if len(np.unique(self.labels)) < 2:
            raise ValidationError("data contains a single class")

    def signed_labels(self):
        self.require_binary()
        return 2 * self.labels - 1
