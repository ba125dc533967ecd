import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import zz_embedding
from qaccel.errors import ValidationError
from qaccel.feature_map import (
    FeatureMapSpec,
    build_feature_map,
    embed,
    embed_batch,
    embedding_fidelity,
    feature_map_batch,
    phase_one_body,
    phase_two_body,
)


def test_phase_functions():
    assert phase_two_body([np.pi, np.pi], 0, 1) == 0.0
    assert phase_one_body([0.3, 1.7], 1) == 1.7
    assert phase_two_body([0.0, 1.0], 0, 1) == pytest.approx(np.pi * (np.pi - 1))
    with pytest.raises(ValidationError):
        phase_two_body([1.0, 2.0], 1, 1)
    with pytest.raises(ValidationError):
        phase_one_body([1.0], 3)


def test_two_feature_map_layout():
    c = build_feature_map(np.array([0.2, 0.4]))
    assert len(c) == 10
    assert [g.kind for g in c.gates[:5]] == ["H", "H", "RZ", "RZ", "RZZ"]


def test_embedding_matches_matrix_exponential_oracle():
    rng = np.random.default_rng(0)
    for x in rng.uniform(0, np.pi, size=(100, 2)):
        np.testing.assert_allclose(embed(x), zz_embedding(x), atol=1e-8)


def test_three_qubit_chain_matches_oracle():
    x = np.array([0.4, 2.0, 1.1])
    np.testing.assert_allclose(embed(x, FeatureMapSpec(3)), zz_embedding(x), atol=1e-10)


def test_batch_equals_per_sample():
    rng = np.random.default_rng(1)
    X = rng.uniform(0, np.pi, size=(7, 2))
    out = embed_batch(X)
    for x, psi in zip(X, out):
        np.testing.assert_allclose(psi, embed(x), atol=1e-12)
    batch = feature_map_batch(X)
    assert batch.circuit(3) == build_feature_map(X[3])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0, np.pi), min_size=4, max_size=4))
def test_fidelity_properties(v):
    a, b = np.array(v[:2]), np.array(v[2:])
    f = embedding_fidelity(a, b)
    assert 0.0 <= f <= 1.0
    assert f == pytest.approx(embedding_fidelity(b, a), abs=1e-12)
    assert embedding_fidelity(a, a) == pytest.approx(1.0, abs=1e-12)


def test_dimension_mismatch():
    with pytest.raises(ValidationError):
        build_feature_map(np.array([0.1, 0.2, 0.3]), FeatureMapSpec(2))
    with pytest.raises(ValidationError):
        feature_map_batch(np.array([[np.nan, 0.0]]))
    with pytest.raises(ValidationError):
        embedding_fidelity([0.1, 0.2], [0.1])


def test_spec_round_trip():
    spec = FeatureMapSpec(3, 1, False)
    assert FeatureMapSpec.from_dict(spec.to_dict()) == spec
    assert len(build_feature_map(np.zeros(3), spec)) == 6
