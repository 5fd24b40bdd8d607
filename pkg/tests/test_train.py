import math

import numpy as np
import pytest

from qcrm.circuit import CircuitProgram, ParameterStore, compile_problem, forward, initial_state
from qcrm.dsl import parse
from qcrm.errors import DomainError
from qcrm.gates import RotY, Rule
from qcrm.problem import ProblemSpec
from qcrm.readout import joint_true_probability
from qcrm.state import Statevector
from qcrm.train import (
    Adam,
    TrainConfig,
    bce_loss,
    evaluate_loss,
    grad_adjoint,
    grad_finite_difference,
    grad_parameter_shift,
    gradients_agree,
    shift_deviation,
    train,
    z_gradient,
)
from conftest import random_problem

MP = "prop A B C\nprior A 1\nprior B 1\nprior C 0\nrule A & B => C theta={theta}\ntarget C 1\n"


def _single_ry(theta, trainable=True):
    prog = CircuitProgram(1, (RotY(0, 0),))
    store = ParameterStore([theta], ("t",), ("gamma_y",), (1,), [trainable])
    return prog, store, Statevector.basis(1)


def _mp(theta):
    p = parse(MP.format(theta=repr(theta)))
    prog, params = compile_problem(p)
    vals = params.values.copy()
    vals[1:] = 0.0
    return prog, params.with_values(vals), initial_state(p), p.target_indices()


def test_bce_examples():
    assert bce_loss(1, 1) == pytest.approx(1e-7, rel=1e-6)
    assert bce_loss(0.5, 1) == pytest.approx(0.6931471805599453, abs=1e-12)
    assert bce_loss(0, 1) == pytest.approx(16.11809565095832, abs=1e-9)
    assert bce_loss(0.2, 0) == pytest.approx(-math.log(0.8))


def test_evaluate_loss_examples():
    assert evaluate_loss(*_mp(math.pi)).total == pytest.approx(0, abs=1e-6)
    assert evaluate_loss(*_mp(0.0)).total == pytest.approx(16.11809565095832, abs=1e-9)
    lv = evaluate_loss(*_mp(math.pi / 2))
    assert lv.total == pytest.approx(math.log(2), abs=1e-12)
    assert lv.per_target == {"C": lv.total}


def test_loss_total_is_sum(rng):
    p = random_problem(rng, 4, 2)
    prog, params = compile_problem(p)
    lv = evaluate_loss(prog, params, initial_state(p), p.target_indices())
    assert abs(lv.total - sum(lv.per_target.values())) <= 1e-12


def test_target_free_gradients_are_zero(rng):
    p = random_problem(rng, 3, 1, targets={})
    prog, params = compile_problem(p)
    for fn in (grad_adjoint, grad_parameter_shift, grad_finite_difference):
        assert not np.any(fn(prog, params, initial_state(p), {}).values)


def test_single_qubit_analytic():
    # loss = -ln sin^2(theta/2)  =>  dloss/dtheta = -cot(theta/2) = -1 at pi/2
    prog, store, init = _single_ry(math.pi / 2)
    assert grad_adjoint(prog, store, init, {0: 1}).values[0] == pytest.approx(-1, abs=1e-12)
    assert grad_finite_difference(prog, store, init, {0: 1}, h=1e-5).values[0] == pytest.approx(-1, abs=1e-8)
    assert grad_parameter_shift(prog, store, init, {0: 1}).values[0] == pytest.approx(-1, abs=1e-12)


def test_flat_clamped_point():
    prog, store, init = _single_ry(math.pi)
    assert abs(grad_finite_difference(prog, store, init, {0: 1}).values[0]) <= 1e-9
    assert grad_adjoint(prog, store, init, {0: 1}).values[0] == 0


def test_frozen_components_zero():
    prog, store, init = _single_ry(0.4, trainable=False)
    for fn in (grad_adjoint, grad_parameter_shift, grad_finite_difference):
        assert fn(prog, store, init, {0: 1}).values[0] == 0


def test_adjoint_matches_finite_differences(rng):
    for _ in range(20):
        p = random_problem(rng, 4, 2, n_rules=3)
        prog, params = compile_problem(p)
        params = params.with_values(params.values + rng.normal(0, 0.3, len(params)))
        init = initial_state(p)
        t = p.target_indices()
        adj = grad_adjoint(prog, params, init, t).values
        fd = grad_finite_difference(prog, params, init, t, h=1e-5).values
        assert np.all(gradients_agree(adj, fd)), np.c_[adj, fd]


def test_shift_exact_on_mixing_only(rng):
    for _ in range(20):
        p = random_problem(rng, int(rng.integers(1, 5)), int(rng.integers(1, 3)), n_rules=0, n_excl=0)
        prog, params = compile_problem(p)
        params = params.with_values(rng.uniform(-3, 3, len(params)))
        init = initial_state(p)
        t = p.target_indices()
        diff = grad_parameter_shift(prog, params, init, t).values - grad_adjoint(prog, params, init, t).values
        assert np.max(np.abs(diff)) <= 1e-10


def test_shift_exact_for_phase_gates(rng):
    # phase generator |1..1><1..1| has spectrum {0, 1}: one frequency, so two-term shift is exact
    for _ in range(20):
        p = random_problem(rng, 4, 2, n_rules=0, n_excl=2)
        prog, params = compile_problem(p)
        params = params.with_values(rng.uniform(-3, 3, len(params)))
        dev = shift_deviation(prog, params, initial_state(p), p.target_indices())
        assert np.max(np.abs(dev)) <= 1e-10


def test_shift_inexact_for_rule_gates():
    p = parse("prop A B\nprior A 0.5\nprior B 0.1\nrule A => B theta=0.7\ntarget B 1\n")
    prog, params = compile_problem(p)
    # a y-rotation on the control after the rule mixes the rule's two frequencies into the readout
    prog = CircuitProgram(2, (prog.gates[0], RotY(0, 1), Rule((0,), "and", 1, 0)), (0,), prog.labels)
    store = ParameterStore([0.7, 0.9], ("r", "m"), ("theta", "gamma_y"), (1, 1), [True, True])
    dev = shift_deviation(prog, store, initial_state(p), p.target_indices())
    assert abs(dev[0]) > 1e-3
    assert abs(dev[1]) <= 1e-10


def test_descent_sanity(rng):
    for _ in range(20):
        p = random_problem(rng, 3, 1)
        prog, params = compile_problem(p)
        init, t = initial_state(p), p.target_indices()
        g = grad_adjoint(prog, params, init, t).values
        before = evaluate_loss(prog, params, init, t).total
        after = evaluate_loss(prog, params.with_values(params.values - 1e-3 * g), init, t).total
        assert after <= before + 1e-9


def test_adam_bias_correction_first_step():
    opt = Adam(0.1)
    out = opt.step(np.array([1.0, 1.0]), np.array([2.0, -0.5]))
    # first Adam step moves each coordinate by lr * sign(g) up to eps
    np.testing.assert_allclose(out, [0.9, 1.1], atol=1e-7)


def test_train_modus_ponens_baseline():
    p = parse("prop A B C\nprior A 0.95\nprior B 0.9\nprior C 0.05\nrule A & B => C\ntarget C 1\n")
    trace = train(p, TrainConfig(epochs=500, learning_rate=0.05, threshold=0.05))
    assert trace.final_loss <= 0.05
    assert trace.epochs_run == 32
    assert [r.epoch for r in trace.records] == list(range(1, 33))


def test_train_exclusion_baseline():
    p = parse("prop A B\nprior A 0.9\nprior B 0.9\nexcl A B\nlayers 2\ntarget A 1\ntarget B 0\n")
    trace = train(p, TrainConfig(threshold=0.05))
    prog, _ = compile_problem(p)
    final = forward(prog, trace.params, initial_state(p))
    assert joint_true_probability(final, [0, 1]) <= 0.05


def test_zero_epochs():
    p = parse(MP.format(theta="1.0"))
    prog, params = compile_problem(p)
    trace = train(p, TrainConfig(epochs=0))
    assert trace.records == []
    assert trace.final_loss == trace.initial_loss
    assert np.array_equal(trace.params.values, params.values)


def test_no_targets_rejected():
    with pytest.raises(DomainError):
        train(ProblemSpec(["A", "B"]), TrainConfig())


def test_frozen_parameters_never_move(rng):
    p = parse("prop A B C\nprior A 0.8\nprior B 0.7\nrule A & B => C theta=0.3!\nexcl A C phi=1.0!\n"
              "layers 2\ntarget C 1\n")
    prog, params = compile_problem(p)
    for method in ("adjoint", "shift", "fd"):
        trace = train(p, TrainConfig(epochs=15, grad_method=method, threshold=0.0))
        frozen = ~params.trainable
        assert frozen.sum() == 4
        assert np.array_equal(trace.params.values[frozen], params.values[frozen])
        assert not np.array_equal(trace.params.values, params.values)


def test_determinism_with_jitter():
    p = parse("prop A B C\nprior A 0.7\nrule A => B\nrule B => C\nlayers 2\ntarget C 1\n")
    cfg = TrainConfig(epochs=40, seed=7, init_jitter=0.1, threshold=0.0)
    a, b = train(p, cfg), train(p, cfg)
    assert a.to_json() == b.to_json()
    c = train(p, TrainConfig(epochs=40, seed=8, init_jitter=0.1, threshold=0.0))
    assert c.to_json() != a.to_json()


def test_sgd_runs_and_decreases():
    p = parse("prop A B\nprior A 0.6\nrule A => B\ntarget B 1\n")
    trace = train(p, TrainConfig(epochs=50, optimizer="sgd", learning_rate=0.1, threshold=0.0))
    assert trace.final_loss < trace.initial_loss


def test_shift_training_converges_on_mixing_only():
    p = parse("prop A B\nprior A 0.2\nprior B 0.7\ntarget A 1\ntarget B 0\n")
    a = train(p, TrainConfig(grad_method="adjoint", threshold=0.05))
    s = train(p, TrainConfig(grad_method="shift", threshold=0.05))
    assert a.final_loss <= 0.05 and s.final_loss <= 0.05
    assert a.epochs_run == s.epochs_run


def test_trace_exports():
    import json
    p = parse(MP.format(theta="1.0"))
    trace = train(p, TrainConfig(epochs=5, threshold=0.0))
    rows = trace.to_csv().splitlines()
    assert rows[0] == "epoch,loss,grad_inf_norm" and len(rows) == 6
    doc = json.loads(trace.to_json())
    assert doc["final_loss"] == trace.final_loss
    assert len(doc["parameters"]) == len(trace.params)
    assert doc["report"]["y_hat"]["C"] == trace.report.y_hat[2]


def test_bad_config():
    with pytest.raises(DomainError):
        TrainConfig(learning_rate=0)
    with pytest.raises(DomainError):
        TrainConfig(optimizer="rmsprop")
    with pytest.raises(DomainError):
        TrainConfig(grad_method="magic")


@pytest.mark.parametrize("theta", [0.0, math.pi / 4, math.pi / 2])
def test_z_derivative_is_minus_sine(theta):
    prog, store, init = _single_ry(theta)
    assert z_gradient(prog, store, init, 0)[0] == pytest.approx(-math.sin(theta), abs=1e-10)
