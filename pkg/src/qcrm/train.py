"""Loss, gradients and the optimization loop.

Three gradient routes share one signature ``(prog, params, init, targets)``:

* ``grad_adjoint`` - exact reverse pass, one forward and one backward sweep.
* ``grad_parameter_shift`` - two-term shift at +-pi/2. Exact for the mixing
  rotations and phase gates (single-frequency generators) but not for rule
  gates, whose generator ``P (x) X / 2`` has eigenvalues {-1/2, 0, 1/2}.
* ``grad_finite_difference`` - central differences, used as an oracle.

``targets`` maps qubit index to the desired truth value (0 or 1).
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Mapping

import numpy as np

from .circuit import CircuitProgram, ParameterStore, compile_problem, forward, initial_state
from .errors import DomainError
from .gates import apply_raw, generator_raw
from .problem import ProblemSpec
from .readout import ReadoutReport, build_report
from .state import Statevector

BCE_EPS = 1e-7
SHIFT = math.pi / 2

ADJOINT = "adjoint"
PARAMETER_SHIFT = "parameter-shift"
FINITE_DIFFERENCE = "finite-difference"
_METHOD_ALIASES = {"adjoint": ADJOINT, "shift": PARAMETER_SHIFT, "parameter-shift": PARAMETER_SHIFT,
                   "fd": FINITE_DIFFERENCE, "finite-difference": FINITE_DIFFERENCE}


def bce_loss(y_hat: float, y: int, eps: float = BCE_EPS) -> float:
    c = min(max(float(y_hat), eps), 1.0 - eps)
    return -(y * math.log(c) + (1 - y) * math.log(1.0 - c))


def bce_grad(y_hat: float, y: int, eps: float = BCE_EPS) -> float:
    """d bce_loss / d y_hat; zero where the clamp is active."""
    if y_hat < eps or y_hat > 1.0 - eps:
        return 0.0
    return -y / y_hat + (1 - y) / (1.0 - y_hat)


@dataclass
class LossValue:
    total: float
    per_target: dict

    def __float__(self) -> float:
        return self.total


@dataclass
class GradientVector:
    values: np.ndarray
    method: str

    def __len__(self) -> int:
        return len(self.values)

    def inf_norm(self) -> float:
        return float(np.max(np.abs(self.values))) if len(self.values) else 0.0


def _target_marginals(amps: np.ndarray, n: int, targets: Mapping[int, int]) -> dict[int, float]:
    probs = (amps.real ** 2 + amps.imag ** 2).reshape((2,) * n)
    out = {}
    for q in targets:
        if not 0 <= q < n:
            raise DomainError(f"target qubit {q} out of range for {n} qubits")
        out[q] = float(np.take(probs, 1, axis=q).sum())
    return out


def _loss_from_state(s: Statevector, targets: Mapping[int, int]) -> float:
    y_hat = _target_marginals(s.amps, s.num_qubits, targets)
    return sum(bce_loss(y_hat[q], y) for q, y in targets.items())


def evaluate_loss(prog: CircuitProgram, params: ParameterStore, init: Statevector,
                  targets: Mapping[int, int]) -> LossValue:
    out = forward(prog, params, init)
    y_hat = _target_marginals(out.amps, out.num_qubits, targets)
    per = {}
    for q, y in targets.items():
        key = prog.labels[q] if prog.labels else q
        per[key] = bce_loss(y_hat[q], y)
    return LossValue(sum(per.values()), per)


def observable_gradient(prog: CircuitProgram, params: ParameterStore, init: Statevector,
                        diag: np.ndarray) -> np.ndarray:
    """Exact d<psi|D|psi>/d(param) for a diagonal observable D, by one reverse sweep."""
    n = prog.num_qubits
    grad = np.zeros(len(params))
    psi = forward(prog, params, init).amps
    lam = np.asarray(diag, dtype=float) * psi
    values, trainable = params.values, params.trainable
    for g in reversed(prog.gates):
        v = values[g.param]
        if trainable[g.param]:
            grad[g.param] += 2.0 * np.vdot(lam, generator_raw(psi, n, g)).real
        apply_raw(psi, n, g, -v)
        apply_raw(lam, n, g, -v)
    return grad


def z_gradient(prog: CircuitProgram, params: ParameterStore, init: Statevector, qubit: int) -> np.ndarray:
    n = prog.num_qubits
    bits = (np.arange(1 << n) >> (n - 1 - qubit)) & 1
    return observable_gradient(prog, params, init, 1.0 - 2.0 * bits)


def grad_adjoint(prog: CircuitProgram, params: ParameterStore, init: Statevector,
                 targets: Mapping[int, int]) -> GradientVector:
    n = prog.num_qubits
    if not targets:
        return GradientVector(np.zeros(len(params)), ADJOINT)
    y_hat = _target_marginals(forward(prog, params, init).amps, n, targets)
    # loss-weighted diagonal observable sum_t w_t |1><1|_t
    idx = np.arange(1 << n)
    obs = np.zeros(1 << n)
    for q, y in targets.items():
        obs += bce_grad(y_hat[q], y) * ((idx >> (n - 1 - q)) & 1)
    return GradientVector(observable_gradient(prog, params, init, obs), ADJOINT)


def grad_parameter_shift(prog: CircuitProgram, params: ParameterStore, init: Statevector,
                         targets: Mapping[int, int], shift: float = SHIFT) -> GradientVector:
    """Chain d(loss)/d(y_hat) with the two-term shift estimate of d(y_hat)/d(param)."""
    n = prog.num_qubits
    grad = np.zeros(len(params))
    if not targets:
        return GradientVector(grad, PARAMETER_SHIFT)
    base = _target_marginals(forward(prog, params, init).amps, n, targets)
    weights = {q: bce_grad(base[q], y) for q, y in targets.items()}
    for k in np.flatnonzero(params.trainable):
        shifted = []
        for sign in (1.0, -1.0):
            vals = params.values.copy()
            vals[k] += sign * shift
            shifted.append(_target_marginals(forward(prog, params.with_values(vals), init).amps, n, targets))
        plus, minus = shifted
        grad[k] = sum(w * 0.5 * (plus[q] - minus[q]) for q, w in weights.items())
    return GradientVector(grad, PARAMETER_SHIFT)


def grad_finite_difference(prog: CircuitProgram, params: ParameterStore, init: Statevector,
                           targets: Mapping[int, int], h: float = 1e-5) -> GradientVector:
    if h <= 0:
        raise DomainError(f"finite-difference step must be positive, got {h}")
    grad = np.zeros(len(params))
    if not targets:
        return GradientVector(grad, FINITE_DIFFERENCE)
    for k in np.flatnonzero(params.trainable):
        vals = params.values.copy()
        vals[k] += h
        up = _loss_from_state(forward(prog, params.with_values(vals), init), targets)
        vals[k] -= 2 * h
        down = _loss_from_state(forward(prog, params.with_values(vals), init), targets)
        grad[k] = (up - down) / (2 * h)
    return GradientVector(grad, FINITE_DIFFERENCE)


def gradient(method: str, prog, params, init, targets, h: float = 1e-5) -> GradientVector:
    method = _METHOD_ALIASES.get(method, method)
    if method == ADJOINT:
        return grad_adjoint(prog, params, init, targets)
    if method == PARAMETER_SHIFT:
        return grad_parameter_shift(prog, params, init, targets)
    if method == FINITE_DIFFERENCE:
        return grad_finite_difference(prog, params, init, targets, h)
    raise DomainError(f"unknown gradient method {method!r}")


def gradients_agree(reference: np.ndarray, other: np.ndarray, rtol: float = 1e-5,
                    atol: float = 1e-7, small: float = 1e-2) -> np.ndarray:
    """Componentwise check: relative error for large entries, absolute below ``small``."""
    reference, other = np.asarray(reference), np.asarray(other)
    err = np.abs(reference - other)
    big = np.abs(reference) >= small
    return np.where(big, err <= rtol * np.abs(reference), err <= atol)


def shift_deviation(prog, params, init, targets) -> np.ndarray:
    """Parameter-shift minus exact gradient, per parameter."""
    return (grad_parameter_shift(prog, params, init, targets).values
            - grad_adjoint(prog, params, init, targets).values)


# -- optimizers ---------------------------------------------------------------

class SGD:
    def __init__(self, lr: float):
        self.lr = lr

    def step(self, values: np.ndarray, grad: np.ndarray) -> np.ndarray:
        return values - self.lr * grad


class Adam:
    def __init__(self, lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = None
        self.v = None
        self.t = 0

    def step(self, values: np.ndarray, grad: np.ndarray) -> np.ndarray:
        if self.m is None:
            self.m = np.zeros_like(values)
            self.v = np.zeros_like(values)
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1 - self.beta2) * grad ** 2
        m_hat = self.m / (1 - self.beta1 ** self.t)
        v_hat = self.v / (1 - self.beta2 ** self.t)
        return values - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


@dataclass
class TrainConfig:
    epochs: int = 500
    learning_rate: float = 0.05
    optimizer: str = "adam"
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    grad_method: str = ADJOINT
    threshold: float = 1e-3
    seed: int = 0
    # std-dev of Gaussian noise added to trainable mixing angles before training
    init_jitter: float = 0.0
    fd_step: float = 1e-5
    top_k: int = 4

    def __post_init__(self):
        if self.epochs < 0:
            raise DomainError(f"epochs must be >= 0, got {self.epochs}")
        if self.learning_rate <= 0:
            raise DomainError(f"learning rate must be positive, got {self.learning_rate}")
        if self.optimizer not in ("adam", "sgd"):
            raise DomainError(f"unknown optimizer {self.optimizer!r}")
        self.grad_method = _METHOD_ALIASES.get(self.grad_method, self.grad_method)
        if self.grad_method not in (ADJOINT, PARAMETER_SHIFT, FINITE_DIFFERENCE):
            raise DomainError(f"unknown gradient method {self.grad_method!r}")

    def make_optimizer(self):
        if self.optimizer == "sgd":
            return SGD(self.learning_rate)
        return Adam(self.learning_rate, self.beta1, self.beta2, self.eps)


@dataclass
class EpochRecord:
    epoch: int
    loss: float
    grad_inf_norm: float


@dataclass
class TrainTrace:
    initial_loss: float
    records: list[EpochRecord]
    params: ParameterStore
    report: ReadoutReport | None = None
    config: TrainConfig = field(default_factory=TrainConfig)

    @property
    def final_loss(self) -> float:
        return self.records[-1].loss if self.records else self.initial_loss

    @property
    def epochs_run(self) -> int:
        return len(self.records)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["epoch", "loss", "grad_inf_norm"])
        for r in self.records:
            w.writerow([r.epoch, repr(r.loss), repr(r.grad_inf_norm)])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "config": asdict(self.config),
            "initial_loss": self.initial_loss,
            "final_loss": self.final_loss,
            "epochs_run": self.epochs_run,
            "epochs": [asdict(r) for r in self.records],
            "parameters": self.params.records(),
            "report": self.report.to_dict() if self.report is not None else None,
        }

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)


def train_program(prog: CircuitProgram, params: ParameterStore, init: Statevector,
                  targets: Mapping[int, int], config: TrainConfig,
                  callback: Callable[[EpochRecord], None] | None = None) -> TrainTrace:
    if not targets:
        raise DomainError("training needs at least one target")
    values = params.values.copy()
    mask = params.trainable
    if config.init_jitter > 0:
        rng = np.random.default_rng(config.seed)
        mix = mask & np.isin(np.array(params.families), ("gamma_y", "gamma_z"))
        values[mix] += config.init_jitter * rng.standard_normal(int(mix.sum()))
    store = params.with_values(values)

    def loss_at(store):
        return _loss_from_state(forward(prog, store, init), targets)

    opt = config.make_optimizer()
    loss = initial = loss_at(store)
    records: list[EpochRecord] = []
    for epoch in range(1, config.epochs + 1):
        if loss < config.threshold:
            break
        g = gradient(config.grad_method, prog, store, init, targets, config.fd_step).values
        g = np.where(mask, g, 0.0)
        values = np.where(mask, opt.step(store.values, g), store.values)
        store = store.with_values(values)
        loss = loss_at(store)
        rec = EpochRecord(epoch, loss, float(np.max(np.abs(g))) if len(g) else 0.0)
        records.append(rec)
        if callback is not None:
            callback(rec)
    return TrainTrace(initial, records, store, config=config)


def train(problem: ProblemSpec, config: TrainConfig | None = None, final_mix: bool = True,
          callback: Callable[[EpochRecord], None] | None = None) -> TrainTrace:
    """Compile ``problem``, fit its parameters to the declared targets, read out the result."""
    config = config or TrainConfig()
    if not problem.targets:
        raise DomainError("problem declares no targets; nothing to train against")
    prog, params = compile_problem(problem, final_mix=final_mix)
    init = initial_state(problem)
    trace = train_program(prog, params, init, problem.target_indices(), config, callback)
    final = forward(prog, trace.params, init)
    trace.report = build_report(final, problem.propositions, problem.pair_queries(),
                                k=min(config.top_k, final.dim))
    return trace
