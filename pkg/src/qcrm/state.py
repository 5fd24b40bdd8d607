"""Statevector representation and state preparation.

Basis convention: qubit 0 is the most significant bit of a basis index, so
``|x_0 x_1 ... x_{N-1}>`` reads left to right as a binary numeral. Reshaping
the amplitude array to ``(2,) * N`` therefore puts qubit ``i`` on axis ``i``.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError, ResourceLimitError

MAX_QUBITS = 24
NORM_TOL = 1e-10


@dataclass
class Statevector:
    amps: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amps, dtype=np.complex128)
        if amps.ndim != 1 or amps.size < 2 or amps.size & (amps.size - 1):
            raise DomainError(f"amplitude count must be 2**N with N >= 1, got {amps.size}")
        self.amps = amps

    @property
    def num_qubits(self) -> int:
        return self.amps.size.bit_length() - 1

    @property
    def dim(self) -> int:
        return self.amps.size

    def copy(self) -> "Statevector":
        return Statevector(self.amps.copy())

    def norm(self) -> float:
        return float(np.sqrt(np.vdot(self.amps, self.amps).real))

    def is_normalized(self, tol: float = NORM_TOL) -> bool:
        return abs(float(np.vdot(self.amps, self.amps).real) - 1.0) <= tol

    @classmethod
    def basis(cls, num_qubits: int, index: int = 0) -> "Statevector":
        check_qubit_count(num_qubits)
        if not 0 <= index < 1 << num_qubits:
            raise DomainError(f"basis index {index} out of range for {num_qubits} qubits")
        amps = np.zeros(1 << num_qubits, dtype=np.complex128)
        amps[index] = 1.0
        return cls(amps)


def check_qubit_count(n: int, max_qubits: int | None = MAX_QUBITS) -> None:
    if n < 1:
        raise DomainError(f"need at least one qubit, got {n}")
    if max_qubits is not None and n > max_qubits:
        raise ResourceLimitError(f"{n} qubits exceeds the cap of {max_qubits}")


def bit_of(index: int, qubit: int, num_qubits: int) -> int:
    return (index >> (num_qubits - 1 - qubit)) & 1


def bitstring(index: int, num_qubits: int) -> str:
    return format(index, f"0{num_qubits}b")


def _product(factors: Sequence[np.ndarray]) -> np.ndarray:
    out = factors[0]
    for f in factors[1:]:
        out = np.multiply.outer(out, f).reshape(-1)
    return out


def prepare_from_features(x: Sequence[float], max_qubits: int | None = MAX_QUBITS) -> Statevector:
    """Product state with qubit i in cos(pi*x_i/2)|0> + sin(pi*x_i/2)|1>."""
    x = [float(v) for v in x]
    check_qubit_count(len(x), max_qubits)
    for i, v in enumerate(x):
        if not 0.0 <= v <= 1.0:
            raise DomainError(f"feature {i} = {v} outside [0, 1]")
    factors = [np.array([np.cos(np.pi * v / 2), np.sin(np.pi * v / 2)]) for v in x]
    return Statevector(_product(factors).astype(np.complex128))


def prepare_from_angles(pairs: Sequence[tuple[float, float]], max_qubits: int | None = MAX_QUBITS) -> Statevector:
    """Product of R_z(theta_z) R_y(theta_y)|0> per qubit; pairs are (theta_y, theta_z)."""
    pairs = list(pairs)
    if not pairs:
        raise DomainError("prepare_from_angles needs at least one angle pair")
    check_qubit_count(len(pairs), max_qubits)
    factors = []
    for i, (ty, tz) in enumerate(pairs):
        if not (np.isfinite(ty) and np.isfinite(tz)):
            raise DomainError(f"angle pair {i} is not finite: {(ty, tz)}")
        factors.append(np.array([
            np.exp(-0.5j * tz) * np.cos(ty / 2),
            np.exp(0.5j * tz) * np.sin(ty / 2),
        ]))
    return Statevector(_product(factors))


def basis_probabilities(s: Statevector) -> np.ndarray:
    return s.amps.real ** 2 + s.amps.imag ** 2


def inner_product(a: Statevector, b: Statevector) -> complex:
    """<a|b>, conjugating the left argument."""
    if a.num_qubits != b.num_qubits:
        raise DomainError(f"qubit counts differ: {a.num_qubits} vs {b.num_qubits}")
    return complex(np.vdot(a.amps, b.amps))


def amplitude_records(s: Statevector) -> list[dict]:
    n = s.num_qubits
    probs = basis_probabilities(s)
    return [
        {
            "index": i,
            "bits": bitstring(i, n),
            "re": float(a.real),
            "im": float(a.imag),
            "prob": float(p),
        }
        for i, (a, p) in enumerate(zip(s.amps, probs))
    ]


def amplitudes_to_json(s: Statevector, indent: int | None = 2) -> str:
    return json.dumps(amplitude_records(s), indent=indent)


def amplitudes_to_csv(s: Statevector) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=["index", "bits", "re", "im", "prob"], lineterminator="\n")
    writer.writeheader()
    for row in amplitude_records(s):
        writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()
