"""Command-line entry point: ``qaccel <verb> [options]``.

Exit status is 0 on success, 1 for invalid input or configuration and 2 for
any other failure. Diagnostics go to standard error; data and reports go to
standard output or ``--out``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import replace

import numpy as np

from . import harness, qubo_svm, svm, vqc
from .backends import IdealSimulator, LatencyModel, NoisySimulator, RemoteQpuMock
from .errors import QaccelError, ValidationError
from .features import fisher_score
from .pipeline import (
    FeatureScaler,
    SyntheticConfig,
    generate_synthetic,
    ingest_csv,
    preprocess,
    split_by_drive,
    write_csv,
)
from .qsim import NoiseModel

log = logging.getLogger("qaccel")

MODEL_FORMAT = "qaccel-model"
METHOD_ALIASES = {"svm": "svm", "classical_svm": "svm", "vqc": "vqc", "qubo": "qubo", "qubo_svm": "qubo"}
BACKENDS = ("simulator", "noisy", "remote-mock")
DEFAULT_NOISE = 0.01


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(f"{self.prog}: {message}")


def _common(p, *names):
    if "config" in names:
        p.add_argument("--config", help="benchmark-style TOML or JSON file")
    if "seed" in names:
        p.add_argument("--seed", type=int, default=0)
    if "out" in names:
        p.add_argument("--out", help="output file (default: standard output)")
    if "data" in names:
        p.add_argument("--data", help="drive CSV (default: synthetic data from --seed)")
    if "k" in names:
        p.add_argument("--k", type=int, help="number of selected features")
    if "backend" in names:
        p.add_argument("--backend", choices=BACKENDS, default="simulator")
        p.add_argument("--noise", type=float, help="per-gate error probability")
        p.add_argument("--shots", type=int, help="shots per circuit")


def build_parser():
    parser = _Parser(prog="qaccel", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", help="write a synthetic drive CSV")
    _common(p, "config", "seed", "out")

    p = sub.add_parser("select-features", help="Fisher ranking on the training drives")
    _common(p, "config", "seed", "out", "data", "k")

    p = sub.add_parser("train", help="train one method and write a model file")
    _common(p, "config", "seed", "out", "data", "k", "backend")
    p.add_argument("--method", choices=sorted(METHOD_ALIASES), default="vqc")
    p.add_argument("--train-samples", type=int, help="training subsample size")

    p = sub.add_parser("predict", help="label a partition with a trained model")
    _common(p, "seed", "out", "data", "backend")
    p.add_argument("--model", required=True)
    p.add_argument(
        "--partition", choices=("all", "train", "test", "validation"), default="validation"
    )

    p = sub.add_parser("benchmark", help="run the comparison and print the report")
    _common(p, "config", "out", "k")
    p.add_argument("--seed", type=int, help="overrides the config seed")
    p.add_argument("--method", action="append", choices=harness.METHODS)
    p.add_argument("--repetitions", type=int)
    p.add_argument("--noise", type=float)
    p.add_argument("--shots", type=int)
    p.add_argument("--format", choices=("markdown", "csv", "json"), default="markdown")

    p = sub.add_parser("qubo-probe", help="QUBO size and solve time versus training-set size")
    _common(p, "seed", "out")
    p.add_argument("--sizes", default="4,8,16,32,64", help="comma-separated sample counts")
    p.add_argument("--precision-bits", type=int, default=2)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    return parser


# ---------------------------------------------------------------------------
# helpers


def _write(text, out):
    if out is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    try:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise ValidationError(f"cannot write {out}: {exc}") from exc


def _config(args):
    path = getattr(args, "config", None)
    cfg = harness.BenchmarkConfig.load(path) if path else harness.BenchmarkConfig()
    seed = getattr(args, "seed", None)
    if seed is not None:
        cfg.seed = seed
    if getattr(args, "k", None) is not None:
        cfg.k_features = args.k
    return cfg


def _synthetic_config(cfg):
    return SyntheticConfig(**{"seed": cfg.seed, **cfg.synthetic})


def _load_drives(data_path, cfg):
    if data_path:
        return ingest_csv(data_path)
    if cfg.dataset != "synthetic":
        return ingest_csv(cfg.dataset)
    return generate_synthetic(_synthetic_config(cfg))


def _backend(args, seed, latency=None):
    if args.backend == "simulator":
        if args.noise:
            raise ValidationError("--noise needs --backend noisy or remote-mock")
        return IdealSimulator()
    p = DEFAULT_NOISE if args.noise is None else args.noise
    noise = NoiseModel(per_gate_error=p, rng_seed=seed)
    if args.backend == "noisy":
        return NoisySimulator(noise)
    return RemoteQpuMock(LatencyModel.from_dict({**(latency or {}), "seed": seed}), noise)


def _subsample(data, n, seed):
    if n is None or n >= len(data):
        return data
    rng = np.random.default_rng(seed)
    return data.subset(np.sort(rng.choice(len(data), size=n, replace=False)))


# ---------------------------------------------------------------------------
# verbs


def cmd_generate(args):
    cfg = _config(args)
    drives = generate_synthetic(_synthetic_config(cfg))
    buf = io.StringIO()
    write_csv(drives, buf)
    _write(buf.getvalue(), args.out)
    log.info("%d drives, %d samples", len(drives), sum(len(d) for d in drives))


def cmd_select_features(args):
    cfg = _config(args)
    data = preprocess(_load_drives(args.data, cfg))
    train, _, _ = split_by_drive(data, cfg.split_spec())
    ranking = fisher_score(train)
    k = min(cfg.k_features, len(ranking.order))
    buf = io.StringIO()
    ranking.to_csv(buf)
    _write(buf.getvalue(), args.out)
    top = [ranking.feature_names[j] for j in ranking.order[:k]]
    print(f"top {k}: {', '.join(top)}", file=sys.stderr)


def cmd_train(args):
    cfg = _config(args)
    method = METHOD_ALIASES[args.method]
    data = preprocess(_load_drives(args.data, cfg))
    prep = harness.prepare(data, cfg.split_spec(), cfg.k_features, cfg.scale_max)
    n_train = args.train_samples if args.train_samples is not None else cfg.train_samples
    train = _subsample(prep.train, n_train, cfg.seed)

    if method == "svm":
        if args.backend != "simulator" or args.noise or args.shots:
            raise ValidationError("the classical SVM takes no quantum backend options")
        opts = {"C": 1.0, "kernels": ["linear", "poly", "rbf", "sigmoid"], **cfg.svm}
        spec = svm.select_kernel(train, prep.test, [svm.KernelSpec(k) for k in opts["kernels"]], opts["C"])
        model = svm.fit(train, spec, opts["C"])
    elif method == "qubo":
        opts = {"train_samples": 20, "precision_bits": 2, "penalty": 1.0, "kernel": "rbf", **cfg.qubo}
        small = harness.balanced_subsample(train, opts["train_samples"], np.random.default_rng([cfg.seed, 7]))
        enc = qubo_svm.QuboEncoding(opts["precision_bits"], penalty=opts["penalty"])
        sched = qubo_svm.AnnealSchedule(
            sweeps=opts.get("sweeps", 200), restarts=opts.get("restarts", 10), seed=cfg.seed
        )
        model = qubo_svm.train_qubo_svm(small, svm.KernelSpec(opts["kernel"]), enc, sched, exhaustive=False)
        train = small
    else:
        fm, ansatz, tcfg = harness.vqc_parts(cfg, train.n_features, cfg.seed)
        if args.shots is not None:
            tcfg = replace(tcfg, shots=args.shots)
        backend = _backend(args, cfg.seed, cfg.latency)
        model = vqc.train(train, fm, ansatz, tcfg, backend)
        if isinstance(backend, RemoteQpuMock):
            log.info("virtual remote time %.1f s", backend.timing.simulated_total)

    envelope = {
        "format": MODEL_FORMAT,
        "method": method,
        "features": prep.features,
        "scaler": prep.scaler.to_dict(),
        "split": list(cfg.split),
        "seed": cfg.seed,
        # a --data path is not recorded so the file does not depend on where the input lived
        "data": None if args.data or cfg.dataset == "synthetic" else cfg.dataset,
        "synthetic": _synthetic_config(cfg).to_dict() if not args.data and cfg.dataset == "synthetic" else None,
        "model": model.to_dict(),
    }
    _write(json.dumps(envelope, indent=2, sort_keys=True) + "\n", args.out)
    print(f"trained {method} on {len(train)} samples", file=sys.stderr)


def _load_envelope(path):
    try:
        with open(path, encoding="utf-8") as fh:
            env = json.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read model {path}: {exc}") from exc
    except ValueError as exc:
        raise ValidationError(f"model {path} is not JSON: {exc}") from exc
    if not isinstance(env, dict) or env.get("format") != MODEL_FORMAT:
        raise ValidationError(f"{path} is not a {MODEL_FORMAT} file")
    for key in ("method", "features", "scaler", "model", "split", "seed"):
        if key not in env:
            raise ValidationError(f"model file lacks {key!r}")
    return env


def cmd_predict(args):
    env = _load_envelope(args.model)
    if args.data:
        drives = ingest_csv(args.data)
    elif env.get("synthetic"):
        drives = generate_synthetic(SyntheticConfig(**env["synthetic"]))
    elif env.get("data"):
        drives = ingest_csv(env["data"])
    else:
        raise ValidationError("no data: pass --data")
    data = preprocess(drives)
    missing = [f for f in env["features"] if f not in data.feature_names]
    if missing:
        raise ValidationError(f"data lacks model features {missing}")
    data = data.select_features([data.feature_names.index(f) for f in env["features"]])
    if args.partition != "all":
        cfg = harness.BenchmarkConfig(split=env["split"], seed=env["seed"])
        parts = dict(zip(("train", "test", "validation"), split_by_drive(data, cfg.split_spec())))
        data = parts[args.partition]
    data = FeatureScaler.from_dict(env["scaler"]).transform(data)

    if env["method"] == "vqc":
        model = vqc.VqcModel.from_dict(env["model"])
        if args.shots is not None:
            model.shots = args.shots
        backend = _backend(args, args.seed)
        chunk = backend.latency.batch_size if isinstance(backend, RemoteQpuMock) else 75
        res = vqc.predict_batch(data, model, backend, args.seed, chunk)
        labels, scores, acc = res.labels, res.p_hat, res.accuracy
        if isinstance(backend, RemoteQpuMock):
            t = backend.timing
            print(
                f"remote: {t.batch_count} calls, virtual time {t.simulated_total:.1f} s",
                file=sys.stderr,
            )
        if not res.complete:
            raise QaccelError(f"backend failed at sample {res.failed_index}")
    else:
        if args.backend != "simulator" or args.noise or args.shots:
            raise ValidationError(f"{env['method']} models take no quantum backend options")
        model = svm.SvmModel.from_dict(env["model"])
        scores = svm.decision_function(model, data.features)
        labels = svm.predict(model, data.features)
        acc = svm.accuracy(model, data)

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["drive_id", "label", "true_label", "score"])
    for d, lab, true, s in zip(data.drive_ids, labels, data.labels, scores):
        writer.writerow([d, int(lab), int(true), f"{float(s):.6g}"])
    _write(buf.getvalue(), args.out)
    if acc is not None:
        print(f"accuracy {acc:.4f} on {len(data)} samples", file=sys.stderr)


def cmd_benchmark(args):
    cfg = _config(args)
    if args.method:
        cfg.methods = list(args.method)
    if args.repetitions is not None:
        cfg.repetitions = args.repetitions
    if args.noise is not None:
        cfg.noise = {**cfg.noise, "per_gate_error": args.noise}
    if args.shots is not None:
        cfg.vqc = {**cfg.vqc, "shots": args.shots}
        cfg.latency = {**cfg.latency, "shots_per_circuit": args.shots}
    cfg = harness.BenchmarkConfig.from_dict(
        {name: getattr(cfg, name) for name in harness.BenchmarkConfig.__dataclass_fields__}
    )
    report = harness.run_benchmark(cfg)
    _write(harness.emit_report(report, args.format), args.out)


def cmd_qubo_probe(args):
    try:
        sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
    except ValueError as exc:
        raise ValidationError(f"bad --sizes: {args.sizes}") from exc
    if not sizes or min(sizes) < 2:
        raise ValidationError("--sizes must list sample counts >= 2")
    rows = qubo_svm.qubo_scaling_probe(sizes, args.precision_bits, args.seed)
    if args.format == "json":
        text = json.dumps(rows, indent=2) + "\n"
    else:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        text = buf.getvalue()
    _write(text, args.out)


COMMANDS = {
    "generate": cmd_generate,
    "select-features": cmd_select_features,
    "train": cmd_train,
    "predict": cmd_predict,
    "benchmark": cmd_benchmark,
    "qubo-probe": cmd_qubo_probe,
}


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        level = logging.WARNING - 10 * min(args.verbose, 2)
        logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
        COMMANDS[args.verb](args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (QaccelError, OSError, ArithmeticError, MemoryError) as exc:
        print(f"failed: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
