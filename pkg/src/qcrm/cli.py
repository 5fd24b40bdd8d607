"""Command-line front end.

    qcrm run FILE.qrp [--top-k K] [--params P.json]
    qcrm train FILE.qrp [--epochs N --lr X --optimizer adam|sgd --grad adjoint|shift|fd
                         --seed S --trace out.csv --trace-json out.json --save-params out.json]
    qcrm grad-check FILE.qrp [--h 1e-5]
    qcrm inspect FILE.qrp [--program] [--amplitudes] [--layer K]
    qcrm export FILE.qrp
    qcrm suite [--filter PATTERN]

Exit codes: 0 ok, 1 input error, 2 resource cap exceeded, 3 gradient check failed.
With ``--format json`` stdout carries exactly one JSON document; diagnostics
always go to stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import dsl
from .circuit import compile_problem, dump_program, forward, forward_states, initial_state
from .errors import CompileError, DomainError, ParseFailure, ResourceLimitError
from .gates import Rule
from .readout import build_report
from .state import MAX_QUBITS, amplitudes_to_csv, amplitude_records
from .train import (
    TrainConfig,
    grad_adjoint,
    grad_finite_difference,
    grad_parameter_shift,
    gradients_agree,
    train,
)

EXIT_OK, EXIT_INPUT, EXIT_RESOURCE, EXIT_GRADIENT = 0, 1, 2, 3


class _Exit(Exception):
    def __init__(self, code: int, message: str = ""):
        self.code = code
        self.message = message


def _err(msg: str) -> None:
    print(msg, file=sys.stderr)


def _load(args):
    path = Path(args.problem)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise _Exit(EXIT_INPUT, f"{path}: {exc.strerror or exc}")
    try:
        problem = dsl.parse(text, max_qubits=None)
    except ParseFailure as exc:
        raise _Exit(EXIT_INPUT, "\n".join(f"{path}:{e}" for e in exc.errors))
    if problem.num_qubits > args.max_qubits:
        raise _Exit(EXIT_RESOURCE, f"{path}: {problem.num_qubits} propositions exceed the qubit cap "
                                   f"of {args.max_qubits} (raise with --max-qubits)")
    prog, params = compile_problem(problem, final_mix=not args.no_final_mix, max_qubits=args.max_qubits)
    if getattr(args, "params", None):
        try:
            params = params.load_values(json.loads(Path(args.params).read_text(encoding="utf-8")))
        except (OSError, ValueError, KeyError) as exc:
            raise _Exit(EXIT_INPUT, f"{args.params}: cannot load parameters: {exc}")
    init = initial_state(problem, max_qubits=args.max_qubits)
    return problem, prog, params, init


def _emit(text: str) -> None:
    sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _csv(rows, header) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _report_rows(report):
    rows = [("y_hat", n, repr(v)) for n, v in zip(report.names, report.y_hat)]
    rows += [("z", n, repr(v)) for n, v in zip(report.names, report.z_exp)]
    rows += [("zz", f"{a}:{b}", repr(v)) for (a, b), v in report.zz.items()]
    rows += [("top_k", bits, repr(p)) for bits, p in report.top_k]
    return rows


def _print_report(report, fmt: str) -> None:
    if fmt == "json":
        _emit(report.to_json())
    elif fmt == "csv":
        _emit(_csv(_report_rows(report), ["quantity", "key", "value"]))
    else:
        width = max(len(n) for n in report.names)
        lines = [f"{n:<{width}}  y_hat={y:.6f}  <Z>={z:+.6f}"
                 for n, y, z in zip(report.names, report.y_hat, report.z_exp)]
        lines += [f"<Z{a} Z{b}> = {v:+.6f}" for (a, b), v in report.zz.items()]
        lines += [f"|{bits}>  p={p:.6f}" for bits, p in report.top_k]
        _emit("\n".join(lines))


def cmd_run(args) -> int:
    problem, prog, params, init = _load(args)
    final = forward(prog, params, init)
    report = build_report(final, problem.propositions, problem.pair_queries(), k=min(args.top_k, final.dim))
    _print_report(report, args.format)
    return EXIT_OK


def cmd_train(args) -> int:
    problem, prog, params, init = _load(args)
    if not problem.targets:
        raise _Exit(EXIT_INPUT, f"{args.problem}: no targets declared; nothing to train against")
    config = TrainConfig(epochs=args.epochs, learning_rate=args.lr, optimizer=args.optimizer,
                         grad_method=args.grad, seed=args.seed, threshold=args.threshold,
                         init_jitter=args.jitter, top_k=args.top_k)
    trace = train(problem, config, final_mix=not args.no_final_mix)
    if args.trace:
        Path(args.trace).write_text(trace.to_csv(), encoding="utf-8")
    if args.trace_json:
        Path(args.trace_json).write_text(trace.to_json() + "\n", encoding="utf-8")
    if args.save_params:
        Path(args.save_params).write_text(trace.params.to_json() + "\n", encoding="utf-8")
    if args.format == "json":
        _emit(trace.to_json())
    elif args.format == "csv":
        _emit(trace.to_csv())
    else:
        lines = [f"initial_loss {trace.initial_loss:.8g}", f"final_loss {trace.final_loss:.8g}",
                 f"epochs {trace.epochs_run}"]
        y = dict(zip(trace.report.names, trace.report.y_hat))
        lines += [f"y_hat {name} {y[name]:.6f} (target {t})" for name, t in problem.targets.items()]
        _emit("\n".join(lines))
    return EXIT_OK


def cmd_grad_check(args) -> int:
    problem, prog, params, init = _load(args)
    if not problem.targets:
        raise _Exit(EXIT_INPUT, f"{args.problem}: gradient check needs at least one target")
    targets = problem.target_indices()
    adj = grad_adjoint(prog, params, init, targets).values
    shift = grad_parameter_shift(prog, params, init, targets).values
    fd = grad_finite_difference(prog, params, init, targets, h=args.h).values
    ok = gradients_agree(adj, fd, rtol=args.rtol)
    # rule gates are the only family where the two-term shift rule is inexact
    rule_params = {g.param for g in prog.gates if isinstance(g, Rule)}
    rows = []
    for k, name in enumerate(params.names):
        # relative error for components >= 1e-2, absolute below (same split as the pass test)
        err = abs(adj[k] - fd[k])
        rel = err / abs(adj[k]) if abs(adj[k]) >= 1e-2 else err
        shift_dev = abs(shift[k] - adj[k]) > 1e-8
        rows.append({
            "parameter": name, "adjoint": float(adj[k]), "shift": float(shift[k]), "fd": float(fd[k]),
            "err_adjoint_fd": float(rel), "ok": bool(ok[k]),
            "shift_deviates": bool(shift_dev), "shift_exact_family": k not in rule_params,
        })
    passed = bool(np.all(ok))
    if args.format == "json":
        _emit(json.dumps({"passed": passed, "h": args.h, "rows": rows}, indent=2))
    elif args.format == "csv":
        keys = list(rows[0]) if rows else ["parameter"]
        _emit(_csv([[r[k] for k in keys] for r in rows], keys))
    else:
        lines = [f"{'parameter':<26}{'adjoint':>16}{'shift':>16}{'fd':>16}{'adj-fd err':>14}"]
        for r in rows:
            flag = "  shift-deviates" if r["shift_deviates"] else ""
            bad = "  FAIL" if not r["ok"] else ""
            lines.append(f"{r['parameter']:<26}{r['adjoint']:>16.9g}{r['shift']:>16.9g}{r['fd']:>16.9g}"
                         f"{r['err_adjoint_fd']:>14.2e}{bad}{flag}")
        lines.append("adjoint vs fd: " + ("ok" if passed else "MISMATCH"))
        _emit("\n".join(lines))
    if not passed:
        _err("gradient check failed: adjoint and finite differences disagree")
    return EXIT_OK if passed else EXIT_GRADIENT


def cmd_inspect(args) -> int:
    problem, prog, params, init = _load(args)
    show_program = args.program
    show_amps = args.amplitudes or args.layer is not None or not args.program
    out = {}
    text_parts = []
    if show_program:
        gates = [{"layer": params.layers[g.param], "family": g.family, "qubits": list(g.qubits),
                  "parameter": params.names[g.param], "value": float(params.values[g.param])}
                 for g in prog.gates]
        out["program"] = gates
        if args.format == "csv":
            text_parts.append(_csv([[d["layer"], d["family"], " ".join(map(str, d["qubits"])),
                                     d["parameter"], repr(d["value"])] for d in gates],
                                   ["layer", "family", "qubits", "parameter", "value"]))
        else:
            text_parts.append(dump_program(prog, params))
    if show_amps:
        if args.layer is not None:
            if not 0 <= args.layer <= problem.layers:
                raise _Exit(EXIT_INPUT, f"--layer {args.layer} outside [0, {problem.layers}]")
            state = forward_states(prog, params, init)[args.layer]
        else:
            state = forward(prog, params, init)
        out["amplitudes"] = amplitude_records(state)
        if args.format == "csv":
            text_parts.append(amplitudes_to_csv(state))
        else:
            text_parts.append("\n".join(f"{r['index']:>6} |{r['bits']}>  {r['re']:+.8f} {r['im']:+.8f}i"
                                        f"  p={r['prob']:.8f}" for r in out["amplitudes"]))
    if args.format == "json":
        doc = out if len(out) > 1 else next(iter(out.values()))
        _emit(json.dumps(doc, indent=2))
    else:
        _emit("".join(p if p.endswith("\n") else p + "\n" for p in text_parts))
    return EXIT_OK


def cmd_export(args) -> int:
    problem, prog, params, init = _load(args)
    if args.format == "text":
        _emit(dsl.serialize(problem))
        return EXIT_OK
    if args.format == "csv":
        recs = params.records()
        _emit(_csv([[r["name"], r["family"], r["layer"], r["trainable"], repr(r["value"])] for r in recs],
                   ["name", "family", "layer", "trainable", "value"]))
        return EXIT_OK
    doc = {
        "propositions": problem.propositions,
        "priors": problem.priors,
        "rules": [{"antecedents": list(r.antecedents), "mode": r.mode, "consequent": r.consequent,
                   "theta": r.theta, "frozen": r.frozen} for r in problem.rules],
        "constraints": [{"subset": list(c.subset), "phi": c.phi, "frozen": c.frozen} for c in problem.constraints],
        "layers": problem.layers,
        "targets": problem.targets,
        "queries": [list(q) for q in problem.queries],
        "parameters": params.records(),
    }
    _emit(json.dumps(doc, indent=2))
    return EXIT_OK


def cmd_suite(args) -> int:
    from .tasks import run_suite

    report = run_suite(args.filter)
    if args.format == "json":
        _emit(json.dumps(report.to_dict(), indent=2))
    else:
        _emit("\n".join(r.line() for r in report.results))
    return EXIT_OK if report.passed else EXIT_INPUT


class _Parser(argparse.ArgumentParser):
    # usage errors are input errors; exit code 2 is reserved for the qubit cap
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="qcrm", description="Simulate and train rule circuits from .qrp files.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, formats=("text", "json", "csv")):
        p.add_argument("problem", help="path to a .qrp problem file")
        p.add_argument("--format", choices=formats, default="text")
        p.add_argument("--max-qubits", type=int, default=MAX_QUBITS)
        p.add_argument("--no-final-mix", action="store_true", help="omit mixing in the last block")
        p.add_argument("--params", help="JSON parameter file written by 'train --save-params'")

    p = sub.add_parser("run", help="evolve and read out, no training")
    common(p)
    p.add_argument("--top-k", type=int, default=4)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("train", help="fit parameters to the declared targets")
    common(p)
    p.add_argument("--epochs", type=int, default=500)
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--optimizer", choices=("adam", "sgd"), default="adam")
    p.add_argument("--grad", choices=("adjoint", "shift", "fd"), default="adjoint")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threshold", type=float, default=1e-3)
    p.add_argument("--jitter", type=float, default=0.0)
    p.add_argument("--top-k", type=int, default=4)
    p.add_argument("--trace", help="write per-epoch CSV here")
    p.add_argument("--trace-json", help="write the full trace as JSON here")
    p.add_argument("--save-params", help="write final parameters as JSON here")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("grad-check", help="compare adjoint, parameter-shift and finite-difference gradients")
    common(p)
    p.add_argument("--h", type=float, default=1e-5, help="finite-difference step")
    p.add_argument("--rtol", type=float, default=1e-5)
    p.set_defaults(func=cmd_grad_check)

    p = sub.add_parser("inspect", help="dump the compiled program and/or amplitudes")
    common(p)
    p.add_argument("--program", action="store_true")
    p.add_argument("--amplitudes", action="store_true")
    p.add_argument("--layer", type=int, help="state after block K (0 = prepared state)")
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("export", help="problem and parameters as JSON (text: canonical .qrp)")
    common(p)
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("suite", help="run the bundled task suite")
    p.add_argument("--filter", help="fnmatch pattern over case names")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_suite)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _Exit as exc:
        if exc.message:
            _err(exc.message)
        return exc.code
    except ResourceLimitError as exc:
        _err(str(exc))
        return EXIT_RESOURCE
    except (DomainError, CompileError) as exc:
        _err(str(exc))
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
