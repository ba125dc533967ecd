"""Telemetry ingestion, cleaning, drive labelling, drive-level splits and a
synthetic stand-in for the vehicle drive recordings."""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import asdict, dataclass
from datetime import datetime

import numpy as np

from .dataset import Dataset
from .errors import ValidationError

log = logging.getLogger(__name__)

MANDATORY_COLUMNS = ("drive_id", "timestamp", "seat_heating")
AUGMENTED_FEATURES = ("hour_sin", "hour_cos", "elapsed_minutes", "weekday_sin", "weekday_cos")
N_AUGMENTED = len(AUGMENTED_FEATURES)
# upper end of the feature range fed to the quantum embedding; must stay <= pi
SCALE_MAX = 0.75 * np.pi

_ON = {"on", "1", "true", "yes"}
_OFF = {"off", "0", "false", "no"}


@dataclass
class Drive:
    """One trip: time-ordered raw samples plus the per-sample heater state.

    ``valid`` flags rows whose cells could not be parsed; they are kept so the
    row count matches the source and dropped by ``preprocess``.
    """

    drive_id: str
    timestamps: np.ndarray
    features: np.ndarray
    seat_heating: np.ndarray
    feature_names: list
    valid: np.ndarray = None

    def __post_init__(self):
        self.drive_id = str(self.drive_id)
        self.timestamps = np.asarray(self.timestamps, dtype="datetime64[s]")
        self.features = np.asarray(self.features, dtype=float).reshape(
            len(self.timestamps), -1
        )
        self.seat_heating = np.asarray(self.seat_heating, dtype=bool)
        if self.valid is None:
            self.valid = np.ones(len(self.timestamps), dtype=bool)
        self.valid = np.asarray(self.valid, dtype=bool)
        if len(self.timestamps) > 1 and not np.all(np.diff(self.timestamps) > np.timedelta64(0, "s")):
            raise ValidationError(f"drive {self.drive_id}: timestamps not strictly increasing")
        if self.features.shape[1] != len(self.feature_names):
            raise ValidationError(f"drive {self.drive_id}: feature name count mismatch")

    def __len__(self):
        return len(self.timestamps)


# ---------------------------------------------------------------------------
# ingestion


def _parse_time(text):
    text = text.strip()
    try:
        return np.datetime64(datetime.fromisoformat(text).replace(tzinfo=None), "s")
    except ValueError:
        return np.datetime64(int(float(text)), "s")


def _parse_state(text):
    t = text.strip().lower()
    if t in _ON:
        return True
    if t in _OFF:
        return False
    raise ValueError(text)


def ingest_csv(path, schema=None):
    """Read a drive CSV into a list of drives ordered by first appearance.

    ``schema`` optionally names the feature columns to keep (in that order);
    by default every column after the mandatory three is a feature.
    Rows with an unparseable timestamp are dropped; rows with a bad heater
    state or a non-numeric feature cell are kept but flagged invalid.
    """
    try:
        if hasattr(path, "read"):
            text = path.read()
        else:
            with open(path, newline="", encoding="utf-8") as fh:
                text = fh.read()
    except (OSError, UnicodeDecodeError) as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from exc
    try:
        reader = csv.reader(io.StringIO(text))
        header = next(reader, None)
        rows = list(reader)
    except csv.Error as exc:
        raise ValidationError(f"unparseable CSV: {exc}") from exc
    if header is None:
        raise ValidationError("CSV has no header row")
    header = [h.strip() for h in header]
    missing = [c for c in MANDATORY_COLUMNS if c not in header]
    if missing:
        raise ValidationError(f"missing mandatory columns: {missing}")
    pos = {name: i for i, name in enumerate(header)}
    if schema is None:
        names = [h for h in header if h not in MANDATORY_COLUMNS]
    else:
        names = list(schema)
        absent = [n for n in names if n not in pos]
        if absent:
            raise ValidationError(f"missing feature columns: {absent}")
    cols = [pos[n] for n in names]

    grouped = {}
    n_flagged = 0
    for lineno, row in enumerate(rows, start=2):
        if not row:
            continue
        if len(row) != len(header):
            log.warning("line %d: expected %d cells, got %d; skipped", lineno, len(header), len(row))
            continue
        try:
            ts = _parse_time(row[pos["timestamp"]])
        except ValueError:
            log.warning("line %d: bad timestamp %r; skipped", lineno, row[pos["timestamp"]])
            continue
        ok = True
        try:
            state = _parse_state(row[pos["seat_heating"]])
        except ValueError:
            state, ok = False, False
        values = []
        for c in cols:
            try:
                values.append(float(row[c]))
            except ValueError:
                values.append(np.nan)
                ok = False
        if not ok:
            n_flagged += 1
        grouped.setdefault(row[pos["drive_id"]].strip(), []).append((ts, state, values, ok))
    if n_flagged:
        log.info("%d row(s) flagged invalid", n_flagged)

    drives = []
    for drive_id, items in grouped.items():
        items.sort(key=lambda item: item[0])
        dedup = [items[0]] + [b for a, b in zip(items, items[1:]) if b[0] != a[0]]
        if len(dedup) < len(items):
            log.warning("drive %s: %d duplicate timestamp(s) dropped", drive_id, len(items) - len(dedup))
        drives.append(
            Drive(
                drive_id,
                [i[0] for i in dedup],
                np.array([i[2] for i in dedup], dtype=float).reshape(len(dedup), len(names)),
                [i[1] for i in dedup],
                names,
                [i[3] for i in dedup],
            )
        )
    return drives


def write_csv(drives, fh):
    """Write drives in the format read by ``ingest_csv``."""
    if not drives:
        raise ValidationError("nothing to write")
    names = drives[0].feature_names
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(list(MANDATORY_COLUMNS) + list(names))
    for d in drives:
        stamps = np.datetime_as_string(d.timestamps, unit="s")
        for i in range(len(d)):
            writer.writerow(
                [d.drive_id, stamps[i], "on" if d.seat_heating[i] else "off"]
                + [f"{v:.6g}" for v in d.features[i]]
            )


# ---------------------------------------------------------------------------
# labelling and preprocessing


def majority_vote(drive):
    """1 iff strictly more than half of the valid samples have the heater on."""
    states = drive.seat_heating[drive.valid]
    if len(states) == 0:
        raise ValidationError(f"drive {drive.drive_id} has no valid samples")
    return int(2 * int(states.sum()) > len(states))


def time_features(timestamps, start):
    """The five augmented context columns for one drive."""
    ts = np.asarray(timestamps, dtype="datetime64[s]")
    seconds_of_day = (ts - ts.astype("datetime64[D]")).astype(np.int64)
    hour = seconds_of_day / 3600.0
    # 1970-01-01 was a Thursday; shift so Monday = 0
    weekday = (ts.astype("datetime64[D]").astype(np.int64) + 3) % 7
    elapsed = (ts - np.datetime64(start, "s")).astype(np.int64) / 60.0
    return np.column_stack(
        [
            np.sin(2 * np.pi * hour / 24),
            np.cos(2 * np.pi * hour / 24),
            elapsed,
            np.sin(2 * np.pi * weekday / 7),
            np.cos(2 * np.pi * weekday / 7),
        ]
    )


def preprocess(drives, scaler=None):
    """Drop invalid rows, label by majority vote, append context features.

    Values stay in raw units unless a fitted ``scaler`` is given; scaling
    statistics must come from the training partition, which only exists
    after ``split_by_drive``.
    """
    blocks, labels, ids = [], [], []
    names = None
    for d in drives:
        if names is None:
            names = list(d.feature_names)
        elif list(d.feature_names) != names:
            raise ValidationError(f"drive {d.drive_id}: feature columns differ")
        keep = d.valid & np.all(np.isfinite(d.features), axis=1)
        if not keep.any():
            continue
        label = majority_vote(d)
        extra = time_features(d.timestamps, d.timestamps[0])
        blocks.append(np.hstack([d.features[keep], extra[keep]]))
        labels.append(np.full(int(keep.sum()), label))
        ids.append(np.full(int(keep.sum()), d.drive_id, dtype=object))
    if not blocks:
        raise ValidationError("no valid rows after cleaning")
    data = Dataset(
        np.vstack(blocks),
        np.concatenate(labels),
        np.concatenate(ids).astype(str),
        names + list(AUGMENTED_FEATURES),
    )
    return scaler.transform(data) if scaler is not None else data


@dataclass
class FeatureScaler:
    """Per-column min-max map onto [0, upper]; constant columns map to 0.

    Values outside the fitted range are clipped. ``upper`` defaults to
    3*pi/4: the full [0, pi] lets the one-body phase exp(i x Z) wrap almost
    a whole turn, so samples at opposite ends of a feature embed close
    together.
    """

    minimum: np.ndarray
    maximum: np.ndarray
    upper: float = SCALE_MAX

    def __post_init__(self):
        if not 0 < self.upper <= np.pi:
            raise ValidationError(f"upper must lie in (0, pi], got {self.upper}")

    @classmethod
    def fit(cls, data, upper=SCALE_MAX):
        if len(data) == 0:
            raise ValidationError("cannot fit a scaler on an empty dataset")
        return cls(data.features.min(axis=0).copy(), data.features.max(axis=0).copy(), upper)

    def transform_array(self, X):
        X = np.asarray(X, dtype=float)
        span = self.maximum - self.minimum
        safe = np.where(span > 0, span, 1.0)
        scaled = (X - self.minimum) / safe * self.upper
        scaled = np.where(span > 0, scaled, 0.0)
        return np.clip(scaled, 0.0, self.upper)

    def transform(self, data):
        return Dataset(
            self.transform_array(data.features),
            data.labels,
            data.drive_ids,
            data.feature_names,
        )

    def select(self, indices):
        indices = list(indices)
        return FeatureScaler(self.minimum[indices], self.maximum[indices], self.upper)

    def to_dict(self):
        return {
            "minimum": self.minimum.tolist(),
            "maximum": self.maximum.tolist(),
            "upper": self.upper,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            np.asarray(d["minimum"], float),
            np.asarray(d["maximum"], float),
            float(d.get("upper", SCALE_MAX)),
        )


# ---------------------------------------------------------------------------
# splitting


@dataclass(frozen=True)
class SplitSpec:
    train: float = 0.8
    test: float = 0.1
    validation: float = 0.1
    seed: int = 0

    def __post_init__(self):
        fractions = (self.train, self.test, self.validation)
        if any(f <= 0 for f in fractions):
            raise ValidationError("split fractions must be positive")
        if sum(fractions) > 1 + 1e-9:
            raise ValidationError(f"split fractions sum to {sum(fractions):.3f} > 1")


def _apportion(n, fractions):
    raw = np.array(fractions) * n
    counts = np.floor(raw + 1e-9).astype(int)
    if abs(sum(fractions) - 1.0) < 1e-9:
        # largest remainder so every drive is assigned
        order = np.argsort(-(raw - counts), kind="stable")
        for i in order[: n - counts.sum()]:
            counts[i] += 1
    return counts


def split_by_drive(data, spec):
    """Partition whole drives into (train, test, validation).

    With fractions summing below one the leftover drives are left out.
    """
    drives = np.array(sorted(set(data.drive_ids.tolist())))
    rng = np.random.default_rng(spec.seed)
    drives = drives[rng.permutation(len(drives))]
    counts = _apportion(len(drives), (spec.train, spec.test, spec.validation))
    if np.any(counts == 0):
        raise ValidationError(
            f"split of {len(drives)} drives leaves a partition empty: {counts.tolist()}"
        )
    bounds = np.concatenate([[0], np.cumsum(counts)])
    parts = []
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        members = set(drives[lo:hi].tolist())
        rows = np.flatnonzero([d in members for d in data.drive_ids])
        parts.append(data.subset(rows))
    return tuple(parts)


def partition_manifest(train, test, validation):
    """Drive ids per partition, for writing alongside results."""
    return {
        name: sorted(set(part.drive_ids.tolist()))
        for name, part in (("train", train), ("test", test), ("validation", validation))
    }


# ---------------------------------------------------------------------------
# synthetic drives


@dataclass
class SyntheticConfig:
    n_drives: int = 79
    n_on_drives: int = 27
    n_features: int = 121
    n_informative: int = 2
    separation: float = 2.0
    noise: float = 1.0
    total_samples: int = 20458
    min_samples_per_drive: int = 60
    state_flip_rate: float = 0.1
    sample_period_s: int = 5
    seed: int = 0
    informative_names: tuple = ("outside_temperature", "evaporator_temperature")

    def __post_init__(self):
        raw = self.n_features - N_AUGMENTED
        if raw < 1:
            raise ValidationError(f"n_features must exceed {N_AUGMENTED}")
        if not 0 <= self.n_informative <= raw:
            raise ValidationError(
                f"n_informative={self.n_informative} exceeds {raw} raw features"
            )
        if not 0 <= self.n_on_drives <= self.n_drives:
            raise ValidationError("n_on_drives out of range")
        if self.total_samples < self.n_drives * self.min_samples_per_drive:
            raise ValidationError("total_samples too small for min_samples_per_drive")

    @property
    def n_raw(self):
        return self.n_features - N_AUGMENTED

    def to_dict(self):
        d = asdict(self)
        d["informative_names"] = list(self.informative_names)
        return d


def planted_features(cfg):
    """Column indices of the label-dependent raw features."""
    rng = np.random.default_rng([cfg.seed, 1])
    return sorted(rng.choice(cfg.n_raw, size=cfg.n_informative, replace=False).tolist())


def _feature_names(cfg, planted):
    names = [f"signal_{j:03d}" for j in range(cfg.n_raw)]
    for rank, j in enumerate(planted):
        names[j] = (
            cfg.informative_names[rank]
            if rank < len(cfg.informative_names)
            else f"informative_{rank}"
        )
    return names


def generate_synthetic(cfg=None):
    """Drives whose planted features are class-conditional Gaussians.

    The drive label decides the mean of every planted feature (shifted by
    ``separation`` within-class standard deviations); all other columns are
    label-independent. Per-sample heater states agree with the drive label
    except for a ``state_flip_rate`` fraction, always leaving a strict
    majority.
    """
    cfg = cfg or SyntheticConfig()
    rng = np.random.default_rng(cfg.seed)
    planted = planted_features(cfg)
    names = _feature_names(cfg, planted)

    labels = np.zeros(cfg.n_drives, dtype=int)
    labels[: cfg.n_on_drives] = 1
    labels = labels[rng.permutation(cfg.n_drives)]

    spare = cfg.total_samples - cfg.n_drives * cfg.min_samples_per_drive
    sizes = cfg.min_samples_per_drive + rng.multinomial(
        spare, rng.dirichlet(np.full(cfg.n_drives, 4.0))
    )

    centers = rng.uniform(-20.0, 40.0, size=cfg.n_raw)
    scales = cfg.noise * rng.lognormal(0.0, 0.5, size=cfg.n_raw)
    # heater on goes with colder readings
    shift = np.zeros(cfg.n_raw)
    shift[planted] = -cfg.separation * scales[planted]

    epoch = np.datetime64("2019-10-01T00:00:00", "s")
    drives = []
    for i in range(cfg.n_drives):
        n = int(sizes[i])
        day = int(rng.integers(0, 150))
        start = epoch + np.timedelta64(day * 86400 + int(rng.integers(6 * 3600, 20 * 3600)), "s")
        stamps = start + np.arange(n) * np.timedelta64(cfg.sample_period_s, "s")
        X = centers + labels[i] * shift + scales * rng.standard_normal((n, cfg.n_raw))
        n_flip = min(int(round(cfg.state_flip_rate * n)), (n - 1) // 2)
        state = np.full(n, bool(labels[i]))
        state[rng.choice(n, size=n_flip, replace=False)] ^= True
        drives.append(Drive(f"drive_{i:03d}", stamps, X, state, names))
    return drives


def save_manifest(manifest, fh):
    json.dump(manifest, fh, indent=2, sort_keys=True)


def make_blobs(n, centers=((0.5, 0.5), (2.5, 2.5)), sigma=0.3, seed=0):
    """Two isotropic Gaussian classes, alternating labels so both appear."""
    rng = np.random.default_rng(seed)
    centers = np.asarray(centers, dtype=float)
    labels = np.arange(n) % 2
    X = centers[labels] + sigma * rng.standard_normal((n, centers.shape[1]))
    return Dataset(X, labels, np.arange(n).astype(str))
