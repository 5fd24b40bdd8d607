"""In-place gate kernels for the three gate families, plus a dense oracle.

Every parameterized gate here satisfies ``U(a)^-1 == U(-a)``, which is what
``apply_gate_inverse`` relies on. Kernels never build a 2^N x 2^N matrix;
``dense_embed`` exists only so tests can check the kernels against an
explicit Kronecker construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Union

import numpy as np

from .errors import DomainError, ResourceLimitError
from .state import Statevector

AND = "and"
OR = "or"
DENSE_MAX_QUBITS = 10


@dataclass(frozen=True)
class RotY:
    qubit: int
    param: int = 0
    family = "ry"

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.qubit,)


@dataclass(frozen=True)
class RotZ:
    qubit: int
    param: int = 0
    family = "rz"

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.qubit,)


@dataclass(frozen=True)
class Rule:
    """exp(-i theta/2 P (x) X_target); P selects control patterns satisfying ``mode``."""

    controls: tuple[int, ...]
    mode: str
    target: int
    param: int = 0
    family = "rule"

    def __post_init__(self):
        object.__setattr__(self, "controls", tuple(self.controls))
        if not self.controls:
            raise DomainError("rule gate needs at least one control")
        if self.mode not in (AND, OR):
            raise DomainError(f"unknown rule mode {self.mode!r}")
        if len(set(self.controls)) != len(self.controls):
            raise DomainError(f"repeated control qubit in {self.controls}")
        if self.target in self.controls:
            raise DomainError(f"target {self.target} is also a control")

    @property
    def qubits(self) -> tuple[int, ...]:
        return self.controls + (self.target,)


@dataclass(frozen=True)
class Phase:
    """exp(i phi |1..1><1..1|) over ``subset``."""

    subset: tuple[int, ...]
    param: int = 0
    family = "phase"

    def __post_init__(self):
        object.__setattr__(self, "subset", tuple(self.subset))
        if len(self.subset) < 2:
            raise DomainError(f"phase gate needs arity >= 2, got {len(self.subset)}")
        if len(set(self.subset)) != len(self.subset):
            raise DomainError(f"repeated qubit in phase subset {self.subset}")

    @property
    def qubits(self) -> tuple[int, ...]:
        return self.subset


Gate = Union[RotY, RotZ, Rule, Phase]


def _check_qubits(n: int, qubits) -> None:
    for q in qubits:
        if not 0 <= q < n:
            raise DomainError(f"qubit {q} out of range for {n} qubits")


def _split(amps: np.ndarray, n: int, q: int) -> np.ndarray:
    # view with axis 1 = bit of qubit q
    return amps.reshape(1 << q, 2, 1 << (n - 1 - q))


@lru_cache(maxsize=512)
def _rule_pairs(n: int, controls: tuple[int, ...], mode: str, target: int):
    idx = np.arange(1 << n)
    bits = [(idx >> (n - 1 - c)) & 1 for c in controls]
    if mode == AND:
        pred = np.logical_and.reduce(bits) if len(bits) > 1 else bits[0].astype(bool)
    else:
        pred = np.logical_or.reduce(bits) if len(bits) > 1 else bits[0].astype(bool)
    tshift = n - 1 - target
    i0 = idx[pred & (((idx >> tshift) & 1) == 0)]
    i1 = i0 | (1 << tshift)
    i0.setflags(write=False)
    i1.setflags(write=False)
    return i0, i1


@lru_cache(maxsize=512)
def _all_ones(n: int, subset: tuple[int, ...]) -> np.ndarray:
    mask = 0
    for q in subset:
        mask |= 1 << (n - 1 - q)
    idx = np.arange(1 << n)
    out = idx[(idx & mask) == mask]
    out.setflags(write=False)
    return out


# -- raw kernels on amplitude arrays --------------------------------------

def ry_(amps: np.ndarray, n: int, q: int, angle: float) -> None:
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    v = _split(amps, n, q)
    a0 = v[:, 0, :].copy()
    a1 = v[:, 1, :]
    v[:, 0, :] = c * a0 - s * a1
    v[:, 1, :] = s * a0 + c * a1


def rz_(amps: np.ndarray, n: int, q: int, angle: float) -> None:
    v = _split(amps, n, q)
    v[:, 0, :] *= np.exp(-0.5j * angle)
    v[:, 1, :] *= np.exp(0.5j * angle)


def rule_(amps: np.ndarray, n: int, controls, mode: str, target: int, angle: float) -> None:
    i0, i1 = _rule_pairs(n, tuple(controls), mode, target)
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    a0 = amps[i0]
    a1 = amps[i1]
    amps[i0] = c * a0 - 1j * s * a1
    amps[i1] = c * a1 - 1j * s * a0


def phase_(amps: np.ndarray, n: int, subset, angle: float) -> None:
    idx = _all_ones(n, tuple(subset))
    amps[idx] *= np.exp(1j * angle)


def apply_raw(amps: np.ndarray, n: int, g: Gate, value: float) -> None:
    if isinstance(g, RotY):
        ry_(amps, n, g.qubit, value)
    elif isinstance(g, RotZ):
        rz_(amps, n, g.qubit, value)
    elif isinstance(g, Rule):
        rule_(amps, n, g.controls, g.mode, g.target, value)
    elif isinstance(g, Phase):
        phase_(amps, n, g.subset, value)
    else:
        raise TypeError(f"not a gate: {g!r}")


def generator_raw(amps: np.ndarray, n: int, g: Gate) -> np.ndarray:
    """Return (dU/da) U^-1 applied to ``amps`` (a fresh array).

    For U(a) = exp(-i a K) this is -i K; the generator commutes with U so it
    may be applied either before or after the gate.
    """
    out = np.zeros_like(amps)
    if isinstance(g, RotY):
        src, dst = _split(amps, n, g.qubit), _split(out, n, g.qubit)
        dst[:, 0, :] = -0.5 * src[:, 1, :]
        dst[:, 1, :] = 0.5 * src[:, 0, :]
    elif isinstance(g, RotZ):
        src, dst = _split(amps, n, g.qubit), _split(out, n, g.qubit)
        dst[:, 0, :] = -0.5j * src[:, 0, :]
        dst[:, 1, :] = 0.5j * src[:, 1, :]
    elif isinstance(g, Rule):
        i0, i1 = _rule_pairs(n, g.controls, g.mode, g.target)
        out[i0] = -0.5j * amps[i1]
        out[i1] = -0.5j * amps[i0]
    elif isinstance(g, Phase):
        idx = _all_ones(n, g.subset)
        out[idx] = 1j * amps[idx]
    else:
        raise TypeError(f"not a gate: {g!r}")
    return out


# -- public Statevector API -------------------------------------------------

def apply_rot_y(s: Statevector, q: int, angle: float) -> None:
    """Apply R_y(angle) = exp(-i angle/2 Y) to qubit ``q`` in place."""
    _check_qubits(s.num_qubits, (q,))
    ry_(s.amps, s.num_qubits, q, angle)


def apply_rot_z(s: Statevector, q: int, angle: float) -> None:
    _check_qubits(s.num_qubits, (q,))
    rz_(s.amps, s.num_qubits, q, angle)


def apply_rule_gate(s: Statevector, controls, mode: str, target: int, theta: float) -> None:
    """Rotate ``target`` about X by ``theta`` on the subspace where the controls satisfy ``mode``.

    ``mode`` is ``"and"`` (all controls true) or ``"or"`` (at least one true).
    """
    g = Rule(tuple(controls), mode, target)
    _check_qubits(s.num_qubits, g.qubits)
    rule_(s.amps, s.num_qubits, g.controls, mode, target, theta)


def apply_phase_gate(s: Statevector, subset, phi: float) -> None:
    g = Phase(tuple(subset))
    _check_qubits(s.num_qubits, g.subset)
    phase_(s.amps, s.num_qubits, g.subset, phi)


def apply_gate(s: Statevector, g: Gate, value: float) -> None:
    _check_qubits(s.num_qubits, g.qubits)
    apply_raw(s.amps, s.num_qubits, g, value)


def apply_gate_inverse(s: Statevector, g: Gate, value: float) -> None:
    apply_gate(s, g, -value)


# -- dense oracle -----------------------------------------------------------

_I2 = np.eye(2, dtype=np.complex128)
_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)


def _embed_single(m: np.ndarray, q: int, n: int) -> np.ndarray:
    out = np.ones((1, 1), dtype=np.complex128)
    for k in range(n):
        out = np.kron(out, m if k == q else _I2)
    return out


def _projector_diag(n: int, controls, mode: str) -> np.ndarray:
    # 0/1 diagonal of the control projector over the full space
    factors = []
    for k in range(n):
        factors.append(np.array([0.0, 1.0]) if k in controls else np.array([1.0, 1.0]))
    if mode == AND:
        diag = np.ones(1)
        for f in factors:
            diag = np.kron(diag, f)
        return diag
    none_true = np.ones(1)
    for k in range(n):
        none_true = np.kron(none_true, np.array([1.0, 0.0]) if k in controls else np.array([1.0, 1.0]))
    return 1.0 - none_true


def dense_embed(g: Gate, value: float, n: int) -> np.ndarray:
    """Full 2^n x 2^n matrix of ``g`` at ``value``, built from Kronecker products."""
    if n > DENSE_MAX_QUBITS:
        raise ResourceLimitError(f"dense embedding refused for {n} > {DENSE_MAX_QUBITS} qubits")
    _check_qubits(n, g.qubits)
    c, s = np.cos(value / 2), np.sin(value / 2)
    if isinstance(g, RotY):
        return _embed_single(np.array([[c, -s], [s, c]], dtype=np.complex128), g.qubit, n)
    if isinstance(g, RotZ):
        return _embed_single(np.diag([np.exp(-0.5j * value), np.exp(0.5j * value)]), g.qubit, n)
    if isinstance(g, Rule):
        p = np.diag(_projector_diag(n, g.controls, g.mode)).astype(np.complex128)
        rot = c * np.eye(1 << n) - 1j * s * _embed_single(_X, g.target, n)
        return (np.eye(1 << n) - p) + p @ rot
    if isinstance(g, Phase):
        diag = _projector_diag(n, g.subset, AND)
        return np.diag(np.where(diag > 0, np.exp(1j * value), 1.0 + 0j))
    raise TypeError(f"not a gate: {g!r}")
