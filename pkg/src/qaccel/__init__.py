"""Quantum-enhanced and classical SVM pipeline with a simulated remote QPU."""

from .backends import IdealSimulator, LatencyModel, NoisySimulator, RemoteQpuMock, make_backend
from .dataset import Dataset
from .errors import (
    BackendError,
    CapacityError,
    DegenerateModelError,
    QaccelError,
    ValidationError,
)
from .feature_map import FeatureMapSpec, build_feature_map, embed
from .features import fisher_score, select_top_k
from .harness import (
    BenchmarkConfig,
    BenchmarkReport,
    emit_report,
    run_benchmark,
    simulate_remote_execution,
    update_loop_check,
)
from .pipeline import FeatureScaler, SplitSpec, SyntheticConfig, generate_synthetic
from .qsim import Circuit, Gate, NoiseModel, ShotCounts, run_noisy, run_statevector
from .qubo_svm import QuboEncoding, build_qubo, solve_annealing, solve_exhaustive
from .svm import KernelSpec, SvmModel
from .vqc import AnsatzSpec, TrainConfig, VqcModel

__version__ = "0.1.0"
