"""Exact observables on a statevector: <Z_i>, truth probabilities, <Z_i Z_j>, top-k."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError
from .state import Statevector, basis_probabilities, bitstring


@dataclass
class ReadoutReport:
    names: list[str]
    y_hat: list[float]
    z_exp: list[float]
    zz: dict[tuple[str, str], float] = field(default_factory=dict)
    top_k: list[tuple[str, float]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "y_hat": {n: v for n, v in zip(self.names, self.y_hat)},
            "z": {n: v for n, v in zip(self.names, self.z_exp)},
            "zz": [{"pair": list(pair), "value": v} for pair, v in self.zz.items()],
            "top_k": [{"bits": bits, "prob": p} for bits, p in self.top_k],
        }

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)


def _check_index(s: Statevector, i: int) -> None:
    if not 0 <= i < s.num_qubits:
        raise DomainError(f"qubit {i} out of range for {s.num_qubits} qubits")


def _split_probs(s: Statevector, i: int) -> np.ndarray:
    n = s.num_qubits
    return basis_probabilities(s).reshape(1 << i, 2, 1 << (n - 1 - i))


def z_expectation(s: Statevector, i: int) -> float:
    _check_index(s, i)
    p = _split_probs(s, i)
    return float(p[:, 0, :].sum() - p[:, 1, :].sum())


def z_expectations(s: Statevector) -> np.ndarray:
    probs = basis_probabilities(s).reshape((2,) * s.num_qubits)
    out = np.empty(s.num_qubits)
    for i in range(s.num_qubits):
        axes = tuple(k for k in range(s.num_qubits) if k != i)
        marg = probs.sum(axis=axes) if axes else probs
        out[i] = marg[0] - marg[1]
    return out


def truth_probability(s: Statevector, i: int) -> float:
    """(1 - <Z_i>) / 2, the probability that proposition ``i`` is true."""
    return (1.0 - z_expectation(s, i)) / 2.0


def zz_correlation(s: Statevector, i: int, j: int) -> float:
    _check_index(s, i)
    _check_index(s, j)
    if i == j:
        raise DomainError("<Z_i Z_i> is identically 1 and is not a valid query")
    n = s.num_qubits
    idx = np.arange(1 << n)
    parity = ((idx >> (n - 1 - i)) ^ (idx >> (n - 1 - j))) & 1
    return float(np.dot(basis_probabilities(s), 1.0 - 2.0 * parity))


def joint_true_probability(s: Statevector, qubits: Sequence[int]) -> float:
    """Probability that every listed proposition is true at once."""
    n = s.num_qubits
    mask = 0
    for q in qubits:
        _check_index(s, q)
        mask |= 1 << (n - 1 - q)
    idx = np.arange(1 << n)
    return float(basis_probabilities(s)[(idx & mask) == mask].sum())


def top_k_assignments(s: Statevector, k: int) -> list[tuple[str, float]]:
    """The k most probable basis states, ties broken by ascending index."""
    if not 1 <= k <= s.dim:
        raise DomainError(f"k = {k} outside [1, {s.dim}]")
    probs = basis_probabilities(s)
    # stable sort on -p keeps ascending index within ties
    order = np.argsort(-probs, kind="stable")[:k]
    return [(bitstring(int(x), s.num_qubits), float(probs[x])) for x in order]


def build_report(s: Statevector, names: Sequence[str], pairs: Sequence[tuple[str, str]] = (),
                 k: int = 0) -> ReadoutReport:
    names = list(names)
    if len(names) != s.num_qubits:
        raise DomainError(f"{len(names)} names for {s.num_qubits} qubits")
    z = z_expectations(s)
    zz = {}
    for a, b in pairs:
        zz[(a, b)] = zz_correlation(s, names.index(a), names.index(b))
    top = top_k_assignments(s, min(k, s.dim)) if k > 0 else []
    return ReadoutReport(names, [float((1.0 - v) / 2.0) for v in z], [float(v) for v in z], zz, top)
