import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qcrm.errors import DomainError
from qcrm.readout import (
    build_report,
    joint_true_probability,
    top_k_assignments,
    truth_probability,
    z_expectation,
    z_expectations,
    zz_correlation,
)
from qcrm.state import Statevector, basis_probabilities, prepare_from_angles, prepare_from_features
from conftest import random_state

R = 1 / math.sqrt(2)


def _marginal(s, i):
    n = s.num_qubits
    return sum(abs(complex(a)) ** 2 for x, a in enumerate(s.amps) if (x >> (n - 1 - i)) & 1)


def test_z_examples():
    assert z_expectation(Statevector([1, 0]), 0) == 1
    assert z_expectation(Statevector([0, 1]), 0) == -1
    assert abs(z_expectation(Statevector([R, R]), 0)) <= 1e-15
    with pytest.raises(DomainError):
        z_expectation(Statevector([1, 0]), 1)


def test_truth_probability_examples():
    assert truth_probability(Statevector([0, 1]), 0) == 1
    assert truth_probability(Statevector([1, 0]), 0) == 0
    # sin^2(0.15 pi), evaluated with mpmath at 30 digits
    s = prepare_from_features([0.3])
    assert truth_probability(s, 0) == pytest.approx(0.2061073738537634, abs=1e-12)


def test_zz_examples():
    assert zz_correlation(Statevector([R, 0, 0, R]), 0, 1) == pytest.approx(1, abs=1e-15)
    assert zz_correlation(Statevector([0, R, R, 0]), 0, 1) == pytest.approx(-1, abs=1e-15)
    assert abs(zz_correlation(Statevector([R, 0, R, 0]), 0, 1)) <= 1e-15
    with pytest.raises(DomainError):
        zz_correlation(Statevector([1, 0, 0, 0]), 1, 1)


def test_zz_symmetric(rng):
    s = random_state(rng, 4)
    assert zz_correlation(s, 0, 3) == pytest.approx(zz_correlation(s, 3, 0), abs=1e-15)


def test_top_k_examples(rng):
    assert top_k_assignments(Statevector.basis(3, 0b101), 1) == [("101", 1.0)]
    uniform = Statevector([0.5, 0.5, 0.5, 0.5])
    assert top_k_assignments(uniform, 2) == [("00", 0.25), ("01", 0.25)]
    s = random_state(rng, 4)
    top = top_k_assignments(s, 16)
    assert abs(sum(p for _, p in top) - 1) <= 1e-10
    probs = [p for _, p in top]
    assert probs == sorted(probs, reverse=True)
    assert sorted(int(b, 2) for b, _ in top) == list(range(16))
    for k in (0, 17):
        with pytest.raises(DomainError):
            top_k_assignments(s, k)


def test_readout_consistency_with_born_rule(rng):
    for _ in range(100):
        n = int(rng.integers(1, 11))
        s = random_state(rng, n)
        zs = z_expectations(s)
        probs = basis_probabilities(s)
        for i in range(n):
            idx = np.arange(1 << n)
            direct = probs[((idx >> (n - 1 - i)) & 1) == 1].sum()
            assert abs(truth_probability(s, i) - direct) <= 1e-12
            assert abs(zs[i] - z_expectation(s, i)) <= 1e-12


def test_truth_probability_vs_elementwise_loop(rng):
    s = random_state(rng, 3)
    for i in range(3):
        assert truth_probability(s, i) == pytest.approx(_marginal(s, i), abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.floats(-7, 7), st.floats(-7, 7)), min_size=2, max_size=6), st.floats(-7, 7))
def test_product_states_factorize_and_phase_blind(pairs, alpha):
    s = prepare_from_angles(pairs)
    n = s.num_qubits
    rotated = Statevector(s.amps * np.exp(1j * alpha))
    for i in range(n):
        zi = z_expectation(s, i)
        assert -1 - 1e-12 <= zi <= 1 + 1e-12
        assert 0 - 1e-12 <= truth_probability(s, i) <= 1 + 1e-12
        assert abs(z_expectation(rotated, i) - zi) <= 1e-12
        for j in range(i + 1, n):
            zz = zz_correlation(s, i, j)
            assert abs(zz - zi * z_expectation(s, j)) <= 1e-12
            assert abs(zz_correlation(rotated, i, j) - zz) <= 1e-12


def test_joint_probability():
    s = prepare_from_features([0.5, 1.0, 0.0])
    assert joint_true_probability(s, [0, 1]) == pytest.approx(0.5)
    assert joint_true_probability(s, [0, 2]) == pytest.approx(0.0, abs=1e-30)


def test_report_json_shape():
    s = prepare_from_features([1.0, 0.0, 0.5])
    rep = build_report(s, ["A", "B", "C"], [("A", "C")], k=2)
    doc = json.loads(rep.to_json())
    assert list(doc) == ["y_hat", "z", "zz", "top_k"]
    assert list(doc["y_hat"]) == ["A", "B", "C"]
    assert doc["zz"][0]["pair"] == ["A", "C"]
    assert doc["top_k"][0]["bits"] == "100"
    for y, z in zip(rep.y_hat, rep.z_exp):
        assert y == (1 - z) / 2
