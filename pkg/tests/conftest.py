import math

import numpy as np
import pytest
from hypothesis import strategies as st

from qcrm.gates import AND, OR, Phase, RotY, RotZ, Rule
from qcrm.problem import ConstraintSpec, ProblemSpec, RuleSpec
from qcrm.state import Statevector

# criterion id -> (passed, detail); filled by tests/test_acceptance.py
ACCEPTANCE: dict[str, tuple[bool, str]] = {}


def random_state(rng, n):
    v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return Statevector(v / np.linalg.norm(v))


def random_gate(rng, n, family=None, param=0):
    family = family or rng.choice(["ry", "rz", "rule", "phase"] if n >= 2 else ["ry", "rz"])
    if family == "ry":
        return RotY(int(rng.integers(n)), param)
    if family == "rz":
        return RotZ(int(rng.integers(n)), param)
    qubits = [int(q) for q in rng.permutation(n)]
    if family == "rule":
        k = int(rng.integers(1, n))
        return Rule(tuple(qubits[:k]), str(rng.choice([AND, OR])), qubits[k], param)
    k = int(rng.integers(2, n + 1))
    return Phase(tuple(qubits[:k]), param)


def random_problem(rng, n, layers, n_rules=None, n_excl=None, targets=None):
    names = [f"P{i}" for i in range(n)]
    priors = {p: float(rng.uniform(0.05, 0.95)) for p in names}
    rules = []
    for _ in range(n_rules if n_rules is not None else int(rng.integers(0, n + 1))):
        perm = [names[i] for i in rng.permutation(n)]
        k = int(rng.integers(1, min(3, n - 1) + 1))
        rules.append(RuleSpec(tuple(perm[:k]), perm[k], str(rng.choice([AND, OR])),
                              float(rng.uniform(-math.pi, math.pi))))
    excl = []
    for _ in range(n_excl if n_excl is not None else int(rng.integers(0, 3))):
        perm = [names[i] for i in rng.permutation(n)]
        excl.append(ConstraintSpec(tuple(perm[:int(rng.integers(2, min(3, n) + 1))]),
                                   float(rng.uniform(-math.pi, math.pi))))
    if targets is None:
        chosen = rng.choice(n, size=int(rng.integers(1, n + 1)), replace=False)
        targets = {names[int(i)]: int(rng.integers(2)) for i in chosen}
    return ProblemSpec(names, priors, rules, excl, layers, targets)


names_st = st.lists(st.from_regex(r"[A-Za-z_][A-Za-z0-9_]{0,5}", fullmatch=True)
                    .filter(lambda s: s not in ("prop", "prior", "rule", "excl", "layers", "target", "query")),
                    min_size=2, max_size=7, unique=True)
angle = st.floats(-10, 10, allow_nan=False)


@st.composite
def problem_specs(draw):
    names = draw(names_st)
    priors = {n: draw(st.floats(0, 1)) for n in names}
    rules = []
    for _ in range(draw(st.integers(0, 4))):
        perm = draw(st.permutations(names))
        k = draw(st.integers(1, len(names) - 1))
        rules.append(RuleSpec(tuple(perm[:k]), perm[k], draw(st.sampled_from([AND, OR])),
                              draw(angle), draw(st.booleans())))
    constraints = []
    for _ in range(draw(st.integers(0, 3))):
        perm = draw(st.permutations(names))
        constraints.append(ConstraintSpec(tuple(perm[:draw(st.integers(2, len(names)))]),
                                          draw(angle), draw(st.booleans())))
    targets = {n: draw(st.integers(0, 1)) for n in draw(st.lists(st.sampled_from(names), unique=True))}
    queries = []
    for _ in range(draw(st.integers(0, 3))):
        perm = draw(st.permutations(names))
        queries.append(tuple(perm[:draw(st.integers(1, 2))]))
    return ProblemSpec(names, priors, rules, constraints, draw(st.integers(1, 5)), targets, queries)



@pytest.fixture
def rng():
    return np.random.default_rng(20261015)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k.split("-")[0])):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {key:<28} {detail}")
