import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from qaccel.pipeline import SplitSpec, SyntheticConfig, generate_synthetic, preprocess  # noqa: E402
from qaccel.harness import prepare  # noqa: E402


@pytest.fixture(scope="session")
def synthetic_data():
    return preprocess(generate_synthetic(SyntheticConfig(seed=0)))


@pytest.fixture(scope="session")
def prepared(synthetic_data):
    return prepare(synthetic_data, SplitSpec(seed=0), 2)


@pytest.fixture(scope="session")
def small_config():
    return SyntheticConfig(
        n_drives=12, n_on_drives=5, n_features=12, total_samples=1200, min_samples_per_drive=40, seed=3
    )


_CRITERIA = []


@pytest.fixture
def criterion():
    """Record one acceptance line; the caller still asserts."""

    def record(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        _CRITERIA.append((number, line))
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_CRITERIA):
        terminalreporter.write_line(line)
