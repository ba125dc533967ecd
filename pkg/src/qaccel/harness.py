"""Benchmark runner, remote-execution model and Table-style reports."""

from __future__ import annotations

import csv
import io
import json
import logging
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import qubo_svm, svm, vqc
from .backends import (
    ClassicalCPU,
    Distribution,
    IdealSimulator,
    LatencyModel,
    RemoteQpuMock,
    TimingRecord,
    batch_circuits,
    sample_remote_timing,
)
from .errors import QaccelError, ValidationError
from .feature_map import FeatureMapSpec
from .features import fisher_score, select_top_k
from .pipeline import (
    FeatureScaler,
    SplitSpec,
    SyntheticConfig,
    generate_synthetic,
    ingest_csv,
    preprocess,
    split_by_drive,
)
from .qsim import CircuitBatch, NoiseModel, ShotCounts, run_noisy_batch

log = logging.getLogger(__name__)

METHODS = ("classical_svm", "vqc_simulator", "vqc_remote_mock", "qubo_svm")
UPDATE_LOOP_SECONDS = 60.0


# ---------------------------------------------------------------------------
# remote execution


def simulate_remote_execution(circuits, lm=None, nm=None):
    """Run ``circuits`` as the remote accelerator would, in virtual time.

    Circuits go out in API calls of ``lm.batch_size``; each call's results
    come from the Pauli-trajectory simulator with stream ``(nm.rng_seed,
    call)``. Queue, QPU and network time are drawn from ``lm`` and summed
    without sleeping.
    """
    lm = lm or LatencyModel()
    nm = nm or NoiseModel()
    circuits = list(circuits)
    if not circuits:
        raise ValidationError("no circuits to execute")
    results = []
    for call, start in enumerate(range(0, len(circuits), lm.batch_size)):
        chunk = circuits[start : start + lm.batch_size]
        groups = {}
        for i, c in enumerate(chunk):
            groups.setdefault((c.n_qubits, c.layout()), []).append(i)
        out = [None] * len(chunk)
        for g, members in enumerate(groups.values()):
            batch = CircuitBatch.from_circuits([chunk[i] for i in members])
            counts = run_noisy_batch(batch, nm, lm.shots_per_circuit, [nm.rng_seed, call, g])
            for i, row in zip(members, counts):
                out[i] = ShotCounts.from_array(row, chunk[i].n_qubits)
        results.extend(out)
    return results, sample_remote_timing(len(circuits), lm, lm.seed)


def single_sample_latency(lm=None, shots=None, exclusive=True):
    """Seconds to classify one sample remotely.

    With an exclusive subscription there is no queue; the QPU time is the
    per-shot run time times the shot count, plus one network round trip.
    """
    lm = lm or LatencyModel()
    shots = lm.shots_per_circuit if shots is None else shots
    qpu = shots * lm.per_circuit_run_ms / 1000.0
    queue = 0.0 if exclusive else lm.queue_wait.mean()
    return queue + qpu + lm.network_seconds


def update_loop_check(classify_latency_s, loop_period_s=UPDATE_LOOP_SECONDS):
    """True when a classification fits inside one update period (strictly)."""
    if classify_latency_s <= 0 or loop_period_s <= 0:
        raise ValidationError("latencies must be positive")
    return classify_latency_s < loop_period_s


# ---------------------------------------------------------------------------
# reports


def half_range(values):
    values = np.asarray(values, dtype=float)
    return float((values.max() - values.min()) / 2) if len(values) else 0.0


def format_duration(seconds, spread):
    """Render as ``value ±spread unit`` with ms below 1 s, s below 60 s, else m."""
    if seconds < 1.0:
        unit, scale = "ms", 1e3
    elif seconds < 60.0:
        unit, scale = "s", 1.0
    else:
        unit, scale = "m", 1 / 60.0
    value, sp = seconds * scale, spread * scale
    digits = 0 if value >= 10 else 1
    return f"{value:.{digits}f} ±{sp:.{digits}f} {unit}"


def format_accuracy(acc, spread):
    return f"{100 * acc:.1f} ±{100 * spread:.1f}%"


@dataclass
class BenchmarkRow:
    method: str
    kernel: str
    train_hardware: str
    validate_hardware: str
    train_times: list
    validate_times: list
    accuracies: list

    def __post_init__(self):
        if not self.accuracies:
            raise ValidationError("a report row needs at least one run")

    @property
    def runs(self):
        return len(self.accuracies)

    @property
    def train_time(self):
        return float(np.mean(self.train_times))

    @property
    def validate_time(self):
        return float(np.mean(self.validate_times))

    @property
    def accuracy(self):
        return float(np.mean(self.accuracies))

    @property
    def median_accuracy(self):
        return float(np.median(self.accuracies))

    @property
    def train_spread(self):
        return half_range(self.train_times)

    @property
    def validate_spread(self):
        return half_range(self.validate_times)

    @property
    def accuracy_spread(self):
        return half_range(self.accuracies)


@dataclass
class BenchmarkReport:
    rows: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def row(self, method):
        for r in self.rows:
            if r.method == method:
                return r
        raise KeyError(method)

    def to_dict(self):
        return {"rows": [asdict(r) for r in self.rows], "metadata": self.metadata}

    @classmethod
    def from_dict(cls, d):
        return cls([BenchmarkRow(**r) for r in d["rows"]], dict(d.get("metadata", {})))

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


COLUMNS = (
    "Method",
    "Kernel",
    "Train Hardware",
    "Train Time",
    "Validate Hardware",
    "Validate Time",
    "Accuracy",
)


def _cells(row):
    return [
        row.method,
        row.kernel,
        row.train_hardware,
        format_duration(row.train_time, row.train_spread),
        row.validate_hardware,
        format_duration(row.validate_time, row.validate_spread),
        format_accuracy(row.accuracy, row.accuracy_spread),
    ]


def emit_report(report, fmt="markdown"):
    if not report.rows:
        raise ValidationError("empty report")
    if fmt == "json":
        return json.dumps(report.to_dict(), indent=2, sort_keys=True)
    table = [_cells(r) for r in report.rows]
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(COLUMNS)
        writer.writerows(table)
        return buf.getvalue()
    if fmt == "markdown":
        widths = [max(len(c), *(len(t[i]) for t in table)) for i, c in enumerate(COLUMNS)]
        line = lambda cells: "| " + " | ".join(c.ljust(w) for c, w in zip(cells, widths)) + " |"
        out = [line(COLUMNS), "|" + "|".join("-" * (w + 2) for w in widths) + "|"]
        out += [line(t) for t in table]
        return "\n".join(out) + "\n"
    raise ValidationError(f"unknown report format {fmt!r}")


# ---------------------------------------------------------------------------
# benchmark


@dataclass
class BenchmarkConfig:
    """Everything a benchmark run needs; loadable from TOML or JSON.

    The split is fixed by ``seed``; each repetition ``r`` draws its training
    subsample, SPSA start and shot streams from ``seed + r``.
    """

    methods: list = field(default_factory=lambda: ["classical_svm", "vqc_simulator", "vqc_remote_mock"])
    repetitions: int = 3
    seed: int = 0
    dataset: str = "synthetic"
    synthetic: dict = field(default_factory=dict)
    split: tuple = (0.8, 0.1, 0.1)
    k_features: int = 2
    train_samples: int | None = 1813
    scale_max: float | None = None
    svm: dict = field(default_factory=dict)
    vqc: dict = field(default_factory=dict)
    noise: dict = field(default_factory=lambda: {"per_gate_error": 0.01})
    latency: dict = field(default_factory=dict)
    qubo: dict = field(default_factory=dict)

    def __post_init__(self):
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown:
            raise ValidationError(f"unknown method(s) {unknown}; expected a subset of {METHODS}")
        if not self.methods:
            raise ValidationError("no methods configured")
        if self.repetitions < 1:
            raise ValidationError("repetitions must be >= 1")
        self.split = tuple(self.split)

    @classmethod
    def from_dict(cls, d):
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ValidationError(f"unknown benchmark config keys {sorted(extra)}")
        return cls(**d)

    @classmethod
    def load(cls, path):
        path = str(path)
        try:
            with open(path, "rb") as fh:
                raw = fh.read()
        except OSError as exc:
            raise ValidationError(f"cannot read config {path}: {exc}") from exc
        try:
            if path.endswith(".json"):
                d = json.loads(raw)
            else:
                try:
                    import tomllib
                except ModuleNotFoundError:
                    import tomli as tomllib
                d = tomllib.loads(raw.decode("utf-8"))
        except ValueError as exc:
            raise ValidationError(f"cannot parse config {path}: {exc}") from exc
        return cls.from_dict(d)

    def split_spec(self):
        return SplitSpec(*self.split, seed=self.seed)

    def latency_model(self):
        return LatencyModel.from_dict(self.latency)

    def noise_model(self, seed):
        return NoiseModel(rng_seed=seed, **self.noise)


@dataclass
class PreparedData:
    train: object
    test: object
    validation: object
    features: list
    scaler: FeatureScaler


def load_dataset(cfg):
    """Cleaned, unscaled dataset named by the config."""
    if cfg.dataset == "synthetic":
        synth = dict(cfg.synthetic)
        synth.setdefault("seed", cfg.seed)
        drives = generate_synthetic(SyntheticConfig(**synth))
    else:
        drives = ingest_csv(cfg.dataset)
    return preprocess(drives)


def prepare(data, split, k, scale_max=None):
    """Split by drive, rank features on the training drives and scale.

    Ranking and scaling statistics come from the training partition only.
    """
    train, test, validation = split_by_drive(data, split)
    top = select_top_k(fisher_score(train), k)
    train, test, validation = (p.select_features(top) for p in (train, test, validation))
    scaler = FeatureScaler.fit(train) if scale_max is None else FeatureScaler.fit(train, scale_max)
    return PreparedData(
        scaler.transform(train),
        scaler.transform(test),
        scaler.transform(validation),
        [data.feature_names[j] for j in top],
        scaler,
    )


def _subsample(data, n, rng):
    if n is None or n >= len(data):
        return data
    return data.subset(np.sort(rng.choice(len(data), size=n, replace=False)))


def balanced_subsample(data, n, rng):
    per_class = max(1, n // 2)
    rows = []
    for c in (0, 1):
        idx = np.flatnonzero(data.labels == c)
        rows.append(rng.choice(idx, size=min(per_class, len(idx)), replace=False))
    return data.subset(np.sort(np.concatenate(rows)))


def _run_classical(prep, train, cfg):
    opts = {"C": 1.0, "kernels": ["linear", "poly", "rbf", "sigmoid"], **cfg.svm}
    candidates = [svm.KernelSpec(k) for k in opts["kernels"]]
    spec = svm.select_kernel(train, prep.test, candidates, opts["C"])
    t0 = time.perf_counter()
    model = svm.fit(train, spec, opts["C"])
    t1 = time.perf_counter()
    acc = svm.accuracy(model, prep.validation)
    t2 = time.perf_counter()
    return spec.label(), t1 - t0, t2 - t1, acc


def vqc_parts(cfg, n_features, seed):
    opts = dict(cfg.vqc)
    layers = opts.pop("layers", 2)
    entangler = opts.pop("entangler", "linear-CZ")
    fm = FeatureMapSpec(n_features)
    ansatz = vqc.AnsatzSpec(n_features, layers, entangler)
    return fm, ansatz, vqc.TrainConfig(seed=seed, **opts)


def _run_qubo(prep, train, cfg, seed):
    opts = {"train_samples": 20, "precision_bits": 2, "penalty": 1.0, "kernel": "rbf", **cfg.qubo}
    rng = np.random.default_rng([seed, 7])
    small = balanced_subsample(train, opts["train_samples"], rng)
    enc = qubo_svm.QuboEncoding(opts["precision_bits"], penalty=opts["penalty"])
    sched = qubo_svm.AnnealSchedule(
        sweeps=opts.get("sweeps", 200), restarts=opts.get("restarts", 10), seed=seed
    )
    kernel = svm.KernelSpec(opts["kernel"])
    t0 = time.perf_counter()
    model = qubo_svm.train_qubo_svm(small, kernel, enc, sched, exhaustive=False)
    t1 = time.perf_counter()
    acc = svm.accuracy(model, prep.validation)
    t2 = time.perf_counter()
    return kernel.label(), t1 - t0, t2 - t1, acc


def run_benchmark(cfg, data=None):
    """One report row per configured method, each over ``cfg.repetitions`` runs.

    ``vqc_simulator`` and ``vqc_remote_mock`` share the model trained in the
    same repetition; the remote row's validation time is the virtual queue +
    QPU + network time of the mock accelerator.
    """
    if data is None:
        try:
            data = load_dataset(cfg)
        except QaccelError:
            raise
        except Exception as exc:
            raise ValidationError(f"dataset load failed: {exc}") from exc
    prep = prepare(data, cfg.split_spec(), cfg.k_features, cfg.scale_max)
    results = {m: {"train": [], "validate": [], "acc": [], "kernel": set()} for m in cfg.methods}
    cpu = ClassicalCPU()
    hardware = {
        "classical_svm": (cpu.hardware, cpu.hardware),
        "vqc_simulator": (IdealSimulator.hardware, IdealSimulator.hardware),
        "vqc_remote_mock": (IdealSimulator.hardware, RemoteQpuMock.hardware),
        "qubo_svm": ("Classical (annealing)", cpu.hardware),
    }

    for r in range(cfg.repetitions):
        seed = cfg.seed + r
        rng = np.random.default_rng(seed)
        train = _subsample(prep.train, cfg.train_samples, rng)
        trained = None
        for method in cfg.methods:
            out = results[method]
            if method == "classical_svm":
                kernel, t_train, t_val, acc = _run_classical(prep, train, cfg)
            elif method == "qubo_svm":
                kernel, t_train, t_val, acc = _run_qubo(prep, train, cfg, seed)
            else:
                kernel = "Q. enhanced"
                if trained is None:
                    fm, ansatz, tcfg = vqc_parts(cfg, train.n_features, seed)
                    t0 = time.perf_counter()
                    model = vqc.train(train, fm, ansatz, tcfg, IdealSimulator())
                    trained = (model, time.perf_counter() - t0)
                model, t_train = trained
                if method == "vqc_simulator":
                    t0 = time.perf_counter()
                    res = vqc.predict_batch(prep.validation, model, IdealSimulator(), seed)
                    t_val = time.perf_counter() - t0
                else:
                    remote = RemoteQpuMock(
                        LatencyModel.from_dict({**cfg.latency, "seed": seed}),
                        cfg.noise_model(seed),
                    )
                    chunk = remote.latency.batch_size
                    res = vqc.predict_batch(prep.validation, model, remote, seed, chunk)
                    t_val = remote.timing.simulated_total
                acc = res.accuracy
            log.info("rep %d %s: acc %.4f train %.3fs validate %.3fs", r, method, acc, t_train, t_val)
            out["train"].append(t_train)
            out["validate"].append(t_val)
            out["acc"].append(acc)
            out["kernel"].add(kernel)

    rows = [
        BenchmarkRow(
            method,
            "/".join(sorted(results[method]["kernel"])),
            hardware[method][0],
            hardware[method][1],
            results[method]["train"],
            results[method]["validate"],
            results[method]["acc"],
        )
        for method in cfg.methods
    ]
    meta = {
        "features": prep.features,
        "train_rows": min(len(prep.train), cfg.train_samples or len(prep.train)),
        "validation_rows": len(prep.validation),
        "validation_batches": batch_circuits(len(prep.validation), cfg.latency_model().batch_size),
        "repetitions": cfg.repetitions,
        "seed": cfg.seed,
    }
    return BenchmarkReport(rows, meta)


__all__ = [
    "BenchmarkConfig",
    "BenchmarkReport",
    "BenchmarkRow",
    "Distribution",
    "LatencyModel",
    "TimingRecord",
    "batch_circuits",
    "emit_report",
    "run_benchmark",
    "simulate_remote_execution",
    "single_sample_latency",
    "update_loop_check",
]
