import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles import fisher_bruteforce
from qaccel.dataset import Dataset
from qaccel.errors import ValidationError
from qaccel.features import fisher_score, select_top_k
from qaccel.pipeline import SyntheticConfig, generate_synthetic, planted_features, preprocess


@settings(max_examples=50, deadline=None)
@given(arrays(float, (12, 3), elements=st.floats(-100, 100)), st.integers(0, 2**16))
def test_matches_bruteforce(X, seed):
    y = np.random.default_rng(seed).permutation(np.arange(12) % 2)
    r = fisher_score(Dataset.from_arrays(X, y))
    np.testing.assert_allclose(r.scores, fisher_bruteforce(X, y), rtol=1e-9, atol=1e-9)


def test_ranking_order_and_ties():
    X = np.array([[0, 0, 5], [0, 0, 5], [1, 1, 5], [1, 1, 5]], dtype=float)
    r = fisher_score(Dataset.from_arrays(X, [0, 0, 1, 1], feature_names=["a", "b", "c"]))
    assert r.order.tolist() == [0, 1, 2]
    assert r.scores[2] == 0.0
    assert select_top_k(r, 1) == [0]


def test_k_bounds():
    r = fisher_score(Dataset.from_arrays(np.eye(4), [0, 1, 0, 1]))
    for k in (0, 5):
        with pytest.raises(ValidationError):
            select_top_k(r, k)


def test_single_class_rejected():
    with pytest.raises(ValidationError):
        fisher_score(Dataset.from_arrays(np.eye(3), [1, 1, 1]))


def test_csv_output():
    r = fisher_score(Dataset.from_arrays(np.eye(4)[:, :2], [0, 1, 0, 1], feature_names=["u", "v"]))
    buf = io.StringIO()
    r.to_csv(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "feature_name,score,rank"
    assert len(lines) == 3 and lines[1].endswith(",1")


@pytest.mark.parametrize("seed", [0, 1])
def test_recovers_planted_features(seed):
    cfg = SyntheticConfig(seed=seed)
    data = preprocess(generate_synthetic(cfg))
    assert sorted(select_top_k(fisher_score(data), 2)) == planted_features(cfg)
