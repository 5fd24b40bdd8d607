"""Compile a ProblemSpec into a layered gate program and evolve states through it.

Each block applies, in order: one rule gate per rule (declaration order), one
phase gate per constraint (declaration order), then R_y followed by R_z on
every qubit. Blocks are stacked ``layers`` times with independent parameters.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import CompileError, DomainError
from .gates import Gate, Phase, RotY, RotZ, Rule, apply_raw
from .problem import DEFAULT_GAMMA, ProblemSpec
from .state import MAX_QUBITS, Statevector, prepare_from_features

FAMILIES = ("theta", "phi", "gamma_y", "gamma_z")


@dataclass(frozen=True, eq=False)
class ParameterStore:
    values: np.ndarray
    names: tuple[str, ...]
    families: tuple[str, ...]
    layers: tuple[int, ...]
    trainable: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        values.setflags(write=False)
        trainable = np.array(self.trainable, dtype=bool)
        trainable.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "trainable", trainable)
        if not (len(values) == len(self.names) == len(self.families) == len(self.layers) == len(trainable)):
            raise DomainError("parameter store columns differ in length")
        if len(set(self.names)) != len(self.names):
            raise DomainError("parameter names must be unique")

    def __len__(self) -> int:
        return len(self.values)

    def with_values(self, values) -> "ParameterStore":
        values = np.asarray(values, dtype=np.float64)
        if values.shape != self.values.shape:
            raise DomainError(f"expected {len(self)} parameter values, got {values.shape}")
        return ParameterStore(values, self.names, self.families, self.layers, self.trainable)

    def index(self, name: str) -> int:
        return self.names.index(name)

    def records(self) -> list[dict]:
        return [
            {"name": n, "family": f, "layer": l, "trainable": bool(t), "value": float(v)}
            for n, f, l, t, v in zip(self.names, self.families, self.layers, self.trainable, self.values)
        ]

    def to_json(self) -> str:
        return json.dumps({"parameters": self.records()}, indent=2)

    def load_values(self, data: dict) -> "ParameterStore":
        """Overwrite values by name from a ``{"parameters": [...]}`` document."""
        values = self.values.copy()
        for rec in data["parameters"]:
            try:
                values[self.index(rec["name"])] = float(rec["value"])
            except ValueError:
                raise DomainError(f"unknown parameter {rec['name']!r}") from None
        return self.with_values(values)


@dataclass(frozen=True)
class CircuitProgram:
    num_qubits: int
    gates: tuple[Gate, ...]
    layer_boundaries: tuple[int, ...] = ()
    labels: tuple[str, ...] = ()

    def blocks(self) -> list[tuple[Gate, ...]]:
        bounds = list(self.layer_boundaries) + [len(self.gates)]
        return [self.gates[a:b] for a, b in zip(bounds[:-1], bounds[1:])]


def compile_problem(p: ProblemSpec, final_mix: bool = True,
                    max_qubits: int | None = MAX_QUBITS) -> tuple[CircuitProgram, ParameterStore]:
    """Build the gate program and its parameter store.

    With ``final_mix=False`` the last block omits its mixing sublayer.
    """
    from .dsl import validate

    errors = validate(p, max_qubits=max_qubits)
    if errors:
        raise CompileError(errors)

    n = p.num_qubits
    idx = {name: i for i, name in enumerate(p.propositions)}
    gates: list[Gate] = []
    bounds: list[int] = []
    values: list[float] = []
    names: list[str] = []
    families: list[str] = []
    layers: list[int] = []
    trainable: list[bool] = []

    def param(name, family, layer, value, train=True) -> int:
        names.append(name)
        families.append(family)
        layers.append(layer)
        values.append(float(value))
        trainable.append(train)
        return len(values) - 1

    for layer in range(1, p.layers + 1):
        bounds.append(len(gates))
        for k, r in enumerate(p.rules, 1):
            ref = param(f"L{layer}.rule{k}.theta", "theta", layer, r.theta, not r.frozen)
            gates.append(Rule(tuple(idx[a] for a in r.antecedents), r.mode, idx[r.consequent], ref))
        for k, c in enumerate(p.constraints, 1):
            ref = param(f"L{layer}.excl{k}.phi", "phi", layer, c.phi, not c.frozen)
            gates.append(Phase(tuple(idx[a] for a in c.subset), ref))
        if final_mix or layer < p.layers:
            for q, name in enumerate(p.propositions):
                gates.append(RotY(q, param(f"L{layer}.mix.{name}.gamma_y", "gamma_y", layer, DEFAULT_GAMMA)))
                gates.append(RotZ(q, param(f"L{layer}.mix.{name}.gamma_z", "gamma_z", layer, DEFAULT_GAMMA)))

    prog = CircuitProgram(n, tuple(gates), tuple(bounds), tuple(p.propositions))
    store = ParameterStore(np.array(values), tuple(names), tuple(families), tuple(layers), np.array(trainable, dtype=bool))
    return prog, store


def initial_state(p: ProblemSpec, max_qubits: int | None = MAX_QUBITS) -> Statevector:
    return prepare_from_features(p.prior_vector(), max_qubits=max_qubits)


def _check(prog: CircuitProgram, params: ParameterStore, s: Statevector) -> None:
    if s.num_qubits != prog.num_qubits:
        raise DomainError(f"state has {s.num_qubits} qubits, program expects {prog.num_qubits}")
    for g in prog.gates:
        if not 0 <= g.param < len(params):
            raise DomainError(f"gate {g} references missing parameter {g.param}")


def forward(prog: CircuitProgram, params: ParameterStore, init: Statevector) -> Statevector:
    _check(prog, params, init)
    out = init.copy()
    values = params.values
    for g in prog.gates:
        apply_raw(out.amps, prog.num_qubits, g, values[g.param])
    return out


def forward_inverse(prog: CircuitProgram, params: ParameterStore, final: Statevector) -> Statevector:
    """Undo ``forward``: inverse gates in reverse order."""
    _check(prog, params, final)
    out = final.copy()
    values = params.values
    for g in reversed(prog.gates):
        apply_raw(out.amps, prog.num_qubits, g, -values[g.param])
    return out


def forward_states(prog: CircuitProgram, params: ParameterStore, init: Statevector) -> list[Statevector]:
    """States at every block boundary: index 0 is ``init``, index k is after block k."""
    _check(prog, params, init)
    states = [init.copy()]
    cur = init.copy()
    for block in prog.blocks():
        for g in block:
            apply_raw(cur.amps, prog.num_qubits, g, params.values[g.param])
        states.append(cur.copy())
    return states


def _describe(g: Gate, labels: Sequence[str]) -> str:
    lab = (lambda q: labels[q]) if labels else str
    if isinstance(g, Rule):
        sep = "&" if g.mode == "and" else "|"
        return sep.join(lab(c) for c in g.controls) + "=>" + lab(g.target)
    if isinstance(g, Phase):
        return ",".join(lab(q) for q in g.subset)
    return lab(g.qubit)


def dump_program(prog: CircuitProgram, params: ParameterStore) -> str:
    """One line per gate: layer, family, qubits, parameter name, value."""
    lines = []
    for g in prog.gates:
        lines.append(
            f"{params.layers[g.param]:>3}  {g.family:<5}  {_describe(g, prog.labels):<16}  "
            f"{params.names[g.param]:<24}  {params.values[g.param]:.10g}"
        )
    return "\n".join(lines) + ("\n" if lines else "")
