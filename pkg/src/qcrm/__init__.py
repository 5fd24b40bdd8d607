"""Statevector engine for layered rule circuits: compile, evolve, read out, train."""

from .circuit import (
    CircuitProgram,
    ParameterStore,
    compile_problem,
    dump_program,
    forward,
    forward_inverse,
    forward_states,
    initial_state,
)
from .dsl import ParseError, SourceSpan, parse, serialize, validate
from .errors import CompileError, DomainError, ParseFailure, ResourceLimitError
from .gates import (
    Phase,
    RotY,
    RotZ,
    Rule,
    apply_gate,
    apply_gate_inverse,
    apply_phase_gate,
    apply_rot_y,
    apply_rot_z,
    apply_rule_gate,
    dense_embed,
)
from .problem import ConstraintSpec, ProblemSpec, RuleSpec
from .readout import (
    ReadoutReport,
    build_report,
    top_k_assignments,
    truth_probability,
    z_expectation,
    zz_correlation,
)
from .state import (
    Statevector,
    basis_probabilities,
    inner_product,
    prepare_from_angles,
    prepare_from_features,
)
from .train import (
    TrainConfig,
    TrainTrace,
    bce_loss,
    evaluate_loss,
    grad_adjoint,
    grad_finite_difference,
    grad_parameter_shift,
    observable_gradient,
    train,
    z_gradient,
)

__version__ = "0.1.0"
