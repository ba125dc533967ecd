import json

import numpy as np
import pytest

from qaccel.backends import Distribution, LatencyModel
from qaccel.errors import ValidationError
from qaccel.feature_map import build_feature_map
from qaccel.harness import (
    BenchmarkConfig,
    BenchmarkReport,
    BenchmarkRow,
    emit_report,
    format_accuracy,
    format_duration,
    half_range,
    run_benchmark,
    simulate_remote_execution,
    single_sample_latency,
    update_loop_check,
)
from qaccel.qsim import NoiseModel


def _row(**kw):
    base = dict(
        method="classical_svm",
        kernel="Rbf",
        train_hardware="Classical",
        validate_hardware="Classical",
        train_times=[0.074, 0.072, 0.076],
        validate_times=[0.480, 0.485, 0.490],
        accuracies=[0.932, 0.932, 0.932],
    )
    base.update(kw)
    return BenchmarkRow(**base)


def test_update_loop_boundaries():
    assert update_loop_check(1.2)
    assert not update_loop_check(61.0)
    assert not update_loop_check(60.0, 60.0)
    with pytest.raises(ValidationError):
        update_loop_check(0.0)


def test_single_sample_latency_fits_the_loop():
    lat = single_sample_latency()
    assert lat == pytest.approx(1000 * 89 / 75_000 + 0.5)
    assert update_loop_check(lat)
    assert single_sample_latency(exclusive=False) > lat


def test_simulated_execution_degenerate_clock():
    lm = LatencyModel(
        batch_size=75,
        shots_per_circuit=20,
        queue_wait=Distribution.constant(0.0),
        qpu_seconds_per_batch=Distribution.constant(89.0),
        network_seconds=0.0,
    )
    circuits = [build_feature_map(np.array([0.1 * i, 0.2])) for i in range(160)]
    counts, timing = simulate_remote_execution(circuits, lm, NoiseModel(0.01, rng_seed=1))
    assert len(counts) == 160 and all(c.total_shots == 20 for c in counts)
    assert timing.batch_count == 3
    assert timing.simulated_total == 3 * 89.0
    again = simulate_remote_execution(circuits, lm, NoiseModel(0.01, rng_seed=1))
    assert again[1] == timing
    assert [c.counts for c in again[0]] == [c.counts for c in counts]
    with pytest.raises(ValidationError):
        simulate_remote_execution([], lm)


@pytest.mark.parametrize(
    "seconds,spread,text",
    [
        (0.485, 0.005, "485 ±5 ms"),
        (0.074, 0.002, "74 ±2 ms"),
        (52.0, 1.0, "52 ±1 s"),
        (1.2, 0.1, "1.2 ±0.1 s"),
        (267 * 60, 60.0, "267 ±1 m"),
    ],
)
def test_duration_format(seconds, spread, text):
    assert format_duration(seconds, spread) == text


def test_accuracy_format_and_spread():
    assert format_accuracy(0.932, 0.0) == "93.2 ±0.0%"
    assert half_range([0.9, 0.95, 0.92]) == pytest.approx(0.025)
    assert half_range([0.9]) == 0.0


def test_report_formats():
    report = BenchmarkReport([_row()])
    text = emit_report(report, "csv")
    lines = text.splitlines()
    assert lines[0] == "Method,Kernel,Train Hardware,Train Time,Validate Hardware,Validate Time,Accuracy"
    assert len(lines) == 2
    assert "485 ±5 ms" in lines[1] and "93.2 ±0.0%" in lines[1]
    md = emit_report(report, "markdown")
    assert md.splitlines()[0].startswith("| Method")
    back = BenchmarkReport.from_json(emit_report(report, "json"))
    assert back == report
    with pytest.raises(ValidationError):
        emit_report(BenchmarkReport([]))
    with pytest.raises(ValidationError):
        emit_report(report, "html")
    with pytest.raises(ValidationError):
        _row(accuracies=[])


def test_config_validation(tmp_path):
    with pytest.raises(ValidationError):
        BenchmarkConfig(methods=["quantum_magic"])
    with pytest.raises(ValidationError):
        BenchmarkConfig(repetitions=0)
    with pytest.raises(ValidationError):
        BenchmarkConfig.from_dict({"bogus": 1})
    path = tmp_path / "bench.toml"
    path.write_text('methods = ["classical_svm"]\nrepetitions = 2\n[svm]\nC = 2.0\n')
    cfg = BenchmarkConfig.load(path)
    assert cfg.methods == ["classical_svm"] and cfg.svm == {"C": 2.0}
    jpath = tmp_path / "bench.json"
    jpath.write_text(json.dumps({"methods": ["qubo_svm"], "seed": 4}))
    assert BenchmarkConfig.load(jpath).seed == 4
    bad = tmp_path / "bad.toml"
    bad.write_text("methods = [")
    with pytest.raises(ValidationError):
        BenchmarkConfig.load(bad)
    with pytest.raises(ValidationError):
        BenchmarkConfig.load(tmp_path / "missing.toml")


def test_benchmark_single_repetition(synthetic_data):
    cfg = BenchmarkConfig(methods=["classical_svm"], repetitions=1, svm={"kernels": ["rbf"]})
    report = run_benchmark(cfg, synthetic_data)
    row = report.row("classical_svm")
    assert row.runs == 1 and row.accuracy_spread == 0.0
    assert row.kernel == "Rbf"
    assert 0.85 < row.accuracy <= 1.0


def test_noiseless_mock_matches_simulator(synthetic_data):
    cfg = BenchmarkConfig(
        methods=["vqc_simulator", "vqc_remote_mock"],
        repetitions=1,
        noise={"per_gate_error": 0.0},
        latency={"queue_wait": {"low": 0.0, "high": 0.0, "shape": "constant"}},
        vqc={"max_iterations": 10, "shots": 200},
        train_samples=300,
    )
    report = run_benchmark(cfg, synthetic_data)
    sim, mock = report.row("vqc_simulator"), report.row("vqc_remote_mock")
    assert sim.accuracies == mock.accuracies
    batches = report.metadata["validation_batches"]
    assert batches * 88 <= mock.validate_time <= batches * 90.5


def test_unknown_dataset_fails():
    cfg = BenchmarkConfig(methods=["classical_svm"], dataset="/no/such.csv")
    with pytest.raises(ValidationError):
        run_benchmark(cfg)
