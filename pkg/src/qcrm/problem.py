"""Declarative problem description: propositions, priors, rules, constraints."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .gates import AND, OR

DEFAULT_PRIOR = 0.5
DEFAULT_THETA = math.pi / 2
DEFAULT_PHI = math.pi
DEFAULT_GAMMA = 0.05


@dataclass
class RuleSpec:
    antecedents: tuple[str, ...]
    consequent: str
    mode: str = AND
    theta: float = DEFAULT_THETA
    frozen: bool = False
    line: int | None = field(default=None, compare=False)

    def __post_init__(self):
        self.antecedents = tuple(self.antecedents)
        if len(self.antecedents) == 1:
            # "A => B" is the same gate under either mode
            self.mode = AND


@dataclass
class ConstraintSpec:
    subset: tuple[str, ...]
    phi: float = DEFAULT_PHI
    frozen: bool = False
    line: int | None = field(default=None, compare=False)

    def __post_init__(self):
        self.subset = tuple(self.subset)


@dataclass
class ProblemSpec:
    propositions: list[str]
    priors: dict[str, float] = field(default_factory=dict)
    rules: list[RuleSpec] = field(default_factory=list)
    constraints: list[ConstraintSpec] = field(default_factory=list)
    layers: int = 1
    targets: dict[str, int] = field(default_factory=dict)
    queries: list[tuple[str, ...]] = field(default_factory=list)
    # source line per proposition / target / query, for diagnostics only
    lines: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def num_qubits(self) -> int:
        return len(self.propositions)

    def index(self, name: str) -> int:
        return self.propositions.index(name)

    def prior(self, name: str) -> float:
        return self.priors.get(name, DEFAULT_PRIOR)

    def prior_vector(self) -> list[float]:
        return [self.prior(p) for p in self.propositions]

    def target_indices(self) -> dict[int, int]:
        return {self.index(k): v for k, v in self.targets.items()}

    def pair_queries(self) -> list[tuple[str, str]]:
        return [q for q in self.queries if len(q) == 2]


__all__ = [
    "AND", "OR", "DEFAULT_PRIOR", "DEFAULT_THETA", "DEFAULT_PHI", "DEFAULT_GAMMA",
    "RuleSpec", "ConstraintSpec", "ProblemSpec",
]
