import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import qubo_bruteforce
from qaccel.dataset import Dataset
from qaccel.errors import CapacityError, DegenerateModelError, ValidationError
from qaccel.pipeline import make_blobs
from qaccel.qubo_svm import (
    AnnealSchedule,
    QuboEncoding,
    build_qubo,
    decode_model,
    energy,
    export_coo,
    import_coo,
    qubo_scaling_probe,
    solve_annealing,
    solve_exhaustive,
    svm_energy,
    train_qubo_svm,
)
from qaccel.svm import KernelSpec, accuracy, gram

LINE = Dataset.from_arrays([[0.0], [1.0]], [0, 1])


def _instance(n, K, seed, kind="rbf"):
    data = make_blobs(n, seed=seed)
    enc = QuboEncoding(K, penalty=1.0)
    return data, enc, build_qubo(data, KernelSpec(kind), enc)


def test_two_sample_dimension_and_entries():
    enc = QuboEncoding(2)
    Q = build_qubo(LINE, KernelSpec("linear"), enc)
    assert Q.shape == (4, 4)
    # y = (-1, 1), K = [[0, 0], [0, 1]], weights (1, 2)
    expected = np.array(
        [
            [0.0, 4.0, -2.0, -4.0],
            [0.0, 2.0, -4.0, -8.0],
            [0.0, 0.0, 0.5, 6.0],
            [0.0, 0.0, 0.0, 4.0],
        ]
    )
    np.testing.assert_allclose(Q, expected)


@pytest.mark.parametrize("n,K", [(2, 1), (2, 2), (3, 2), (4, 3)])
def test_energy_equals_objective(n, K):
    data, enc, Q = _instance(n, K, seed=n * 10 + K)
    y = data.signed_labels().astype(float)
    Kmat = gram(KernelSpec("rbf"), data.features, data.features)
    for bits in itertools.product((0, 1), repeat=n * K):
        alpha = enc.decode(bits, n)
        assert energy(Q, bits) == pytest.approx(svm_energy(alpha, y, Kmat, 1.0), abs=1e-10)


def test_decode_weights():
    enc = QuboEncoding(3, base=2.0)
    np.testing.assert_array_equal(enc.decode([1, 0, 1, 0, 1, 1], 2), [5.0, 6.0])
    assert enc.alpha_max == 7.0
    with pytest.raises(ValidationError):
        enc.decode([1, 0], 2)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 10), st.integers(0, 2**16))
def test_exhaustive_matches_bruteforce(d, seed):
    Q = np.triu(np.random.default_rng(seed).normal(size=(d, d)))
    bits, e = solve_exhaustive(Q)
    best, minimizers = qubo_bruteforce(Q)
    assert e == pytest.approx(best, abs=1e-12)
    # ties resolve to the lexicographically smallest bitstring
    assert tuple(bits.tolist()) == min(minimizers)


def test_linear_two_sample_optimum():
    bits, e = solve_exhaustive(build_qubo(LINE, KernelSpec("linear"), QuboEncoding(2)))
    assert bits.tolist() == [0, 1, 0, 1]
    assert e == pytest.approx(-2.0)
    model = decode_model(bits, QuboEncoding(2), LINE, KernelSpec("linear"))
    np.testing.assert_allclose(model.dual_coefs, [-2.0, 2.0])
    assert model.bias == pytest.approx(-1.0)


def test_annealer_finds_small_optima():
    hits = 0
    for seed in range(20):
        Q = np.triu(np.random.default_rng(seed).normal(size=(10, 10)))
        _, e_opt = solve_exhaustive(Q)
        _, e = solve_annealing(Q, AnnealSchedule(seed=seed))
        assert e >= e_opt - 1e-9
        hits += e <= e_opt + 1e-9
    assert hits >= 19


def test_annealer_is_seeded():
    Q = np.triu(np.random.default_rng(3).normal(size=(12, 12)))
    a = solve_annealing(Q, AnnealSchedule(seed=5))
    b = solve_annealing(Q, AnnealSchedule(seed=5))
    np.testing.assert_array_equal(a[0], b[0])
    assert a[1] == b[1]
    assert energy(Q, a[0]) == pytest.approx(a[1])


def test_matrix_checks():
    with pytest.raises(ValidationError):
        solve_exhaustive(np.ones((2, 3)))
    with pytest.raises(ValidationError):
        solve_exhaustive(np.ones((2, 2)))
    with pytest.raises(CapacityError):
        solve_exhaustive(np.zeros((25, 25)))
    with pytest.raises(ValidationError):
        energy(np.zeros((2, 2)), [1, 0, 1])
    with pytest.raises(ValidationError):
        AnnealSchedule(initial_temperature=-1.0)


def test_all_zero_solution_is_degenerate():
    with pytest.raises(DegenerateModelError):
        decode_model(np.zeros(4), QuboEncoding(2), LINE, KernelSpec("linear"))


def test_coo_round_trip():
    _, _, Q = _instance(3, 2, seed=1)
    text = export_coo(Q)
    assert text.startswith("# dimension 6")
    np.testing.assert_array_equal(import_coo(text), Q)
    with pytest.raises(ValidationError):
        import_coo("1 0 2.0\n")


def test_trained_model_separates_blobs():
    data = make_blobs(8, seed=2)
    model = train_qubo_svm(data, KernelSpec("rbf"), QuboEncoding(2))
    assert accuracy(model, make_blobs(200, seed=9)) > 0.95


def test_scaling_probe_rows():
    rows = qubo_scaling_probe([4, 8], precision_bits=2, seed=0)
    assert [r["dimension"] for r in rows] == [8, 16]
    assert [r["entries"] for r in rows] == [36, 136]
    assert all(r["build_seconds"] >= 0 and r["solve_seconds"] >= 0 for r in rows)
