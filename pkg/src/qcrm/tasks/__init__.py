"""Bundled desk-scale reasoning tasks and the harness that checks them.

Each case is a ``.qrp`` file in this directory plus an entry in
``manifest.json`` listing training settings and checks. A check names a
metric, a comparator and a threshold. Metrics:

``final_loss``, ``initial_loss``, ``epochs``
    from the training trace
``y_hat:NAME``, ``z:NAME``
    single-proposition readout
``joint:A,B[,...]``
    probability that all listed propositions are true together
``zz:A,B``
    two-point correlator
``witness``
    :func:`entanglement_witness` on the final state

The ``within`` comparator passes when the value lies within ``tolerance``
(relative) of the pinned threshold.
"""

from __future__ import annotations

import fnmatch
import json
import operator
from dataclasses import dataclass, field
from importlib import resources

from ..circuit import compile_problem, forward, initial_state
from ..dsl import parse
from ..errors import DomainError
from ..problem import ProblemSpec
from ..readout import joint_true_probability, z_expectation, zz_correlation
from ..state import Statevector
from ..train import TrainConfig, TrainTrace, train

_OPS = {"<=": operator.le, ">=": operator.ge, "<": operator.lt, ">": operator.gt}


@dataclass
class TaskCase:
    name: str
    problem: ProblemSpec
    expected: list[dict]
    train: dict = field(default_factory=dict)


@dataclass
class CheckResult:
    case: str
    metric: str
    comparator: str
    threshold: float
    value: float
    passed: bool

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"{mark}  {self.case:<14} {self.metric:<12} {self.value:.6g} {self.comparator} {self.threshold:g}"


@dataclass
class SuiteReport:
    results: list[CheckResult]
    traces: dict[str, TrainTrace]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "checks": [vars(r) for r in self.results],
        }


def _manifest() -> dict:
    return json.loads(resources.files(__name__).joinpath("manifest.json").read_text(encoding="utf-8"))


def read_task_text(filename: str) -> str:
    return resources.files(__name__).joinpath(filename).read_text(encoding="utf-8")


def task_path(filename: str):
    """Filesystem path of a bundled task file (for the CLI and scripts)."""
    return resources.files(__name__).joinpath(filename)


def load_cases(pattern: str | None = None) -> list[TaskCase]:
    cases = []
    for entry in _manifest()["cases"]:
        if pattern and not fnmatch.fnmatch(entry["name"], pattern):
            continue
        problem = parse(read_task_text(entry["file"]))
        cases.append(TaskCase(entry["name"], problem, entry["checks"], entry.get("train", {})))
    return cases


def _pair_witness(s: Statevector, problem: ProblemSpec) -> float:
    pairs = problem.pair_queries()
    if not pairs:
        raise DomainError("entanglement witness needs at least one pair query")
    best = 0.0
    for a, b in pairs:
        i, j = problem.index(a), problem.index(b)
        dev = abs(zz_correlation(s, i, j) - z_expectation(s, i) * z_expectation(s, j))
        best = max(best, dev)
    return best


def entanglement_witness(problem: ProblemSpec, params=None) -> float:
    """max over pair queries of |<Z_i Z_j> - <Z_i><Z_j>| after evolving the problem.

    Uses the compiled initial parameters unless a ParameterStore is given.
    """
    if not problem.pair_queries():
        raise DomainError("entanglement witness needs at least one pair query")
    prog, store = compile_problem(problem)
    final = forward(prog, params if params is not None else store, initial_state(problem))
    return _pair_witness(final, problem)


def _metric(name: str, problem: ProblemSpec, state: Statevector, trace: TrainTrace | None) -> float:
    if name in ("final_loss", "initial_loss", "epochs"):
        if trace is None:
            raise DomainError(f"metric {name!r} needs a training run")
        return {"final_loss": trace.final_loss, "initial_loss": trace.initial_loss,
                "epochs": trace.epochs_run}[name]
    if name == "witness":
        return _pair_witness(state, problem)
    kind, _, arg = name.partition(":")
    names = arg.split(",")
    idx = [problem.index(n) for n in names]
    if kind == "y_hat":
        return (1.0 - z_expectation(state, idx[0])) / 2.0
    if kind == "z":
        return z_expectation(state, idx[0])
    if kind == "joint":
        return joint_true_probability(state, idx)
    if kind == "zz":
        return zz_correlation(state, idx[0], idx[1])
    raise DomainError(f"unknown metric {name!r}")


def _compare(value: float, check: dict) -> bool:
    comp, thr = check["comparator"], check["threshold"]
    if comp == "within":
        return abs(value - thr) <= check.get("tolerance", 0.1) * abs(thr)
    return _OPS[comp](value, thr)


def run_case(case: TaskCase) -> tuple[list[CheckResult], TrainTrace | None, Statevector]:
    """Train when the case has targets, otherwise just evolve; then evaluate its checks."""
    prog, store = compile_problem(case.problem)
    init = initial_state(case.problem)
    trace = None
    if case.problem.targets:
        trace = train(case.problem, TrainConfig(**case.train))
        store = trace.params
    state = forward(prog, store, init)
    results = []
    for check in case.expected:
        value = float(_metric(check["metric"], case.problem, state, trace))
        results.append(CheckResult(case.name, check["metric"], check["comparator"],
                                   check["threshold"], value, _compare(value, check)))
    return results, trace, state


def run_suite(pattern: str | None = None) -> SuiteReport:
    results: list[CheckResult] = []
    traces: dict[str, TrainTrace] = {}
    finals: dict[str, tuple] = {}
    for case in load_cases(pattern):
        res, trace, state = run_case(case)
        results.extend(res)
        finals[case.name] = (case, state, trace)
        if trace is not None:
            traces[case.name] = trace
    for comp in _manifest().get("comparisons", []):
        if comp["left"] not in finals or comp["right"] not in finals:
            continue
        lv, rv = (float(_metric(comp["metric"], finals[k][0].problem, finals[k][1], finals[k][2]))
                  for k in (comp["left"], comp["right"]))
        results.append(CheckResult(f"{comp['left']}~{comp['right']}", comp["metric"], comp["comparator"],
                                   rv, lv, _OPS[comp["comparator"]](lv, rv)))
    return SuiteReport(results, traces)
