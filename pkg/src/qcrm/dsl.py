"""Line-oriented problem format (``.qrp``).

Grammar, one statement per line, ``#`` starts a comment::

    prop   NAME+
    prior  NAME FLOAT                          # FLOAT in [0, 1]
    rule   NAME (& NAME)* => NAME [theta=FLOAT[!]]
    rule   NAME (| NAME)* => NAME [theta=FLOAT[!]]
    excl   NAME NAME+ [phi=FLOAT[!]]
    layers INT
    target NAME 0|1
    query  NAME [NAME]

A trailing ``!`` on a parameter freezes it during training. Qubit order is
the order in which ``prop`` names are declared. Names may be referenced
before their ``prop`` line; resolution happens after the whole file is read.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

from .errors import ParseFailure
from .gates import AND, OR
from .problem import (
    DEFAULT_PHI,
    DEFAULT_PRIOR,
    DEFAULT_THETA,
    ConstraintSpec,
    ProblemSpec,
    RuleSpec,
)
from .state import MAX_QUBITS

SYNTAX = "syntax"
UNKNOWN_NAME = "unknown-name"
DUPLICATE_NAME = "duplicate-name"
RANGE = "range"
ARITY = "arity"
KINDS = (SYNTAX, UNKNOWN_NAME, DUPLICATE_NAME, RANGE, ARITY)

KEYWORDS = ("prop", "prior", "rule", "excl", "layers", "target", "query")

_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
_TOKEN = re.compile(r"=>|[&|]|(?:(?!=>)[^\s&|])+")
# locale-independent: '.' is the only decimal separator accepted
_FLOAT = re.compile(r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?\Z")
_INT = re.compile(r"[+-]?\d+\Z")


@dataclass(frozen=True)
class SourceSpan:
    line: int
    column: int = 1

    def __str__(self) -> str:
        return f"{self.line}:{self.column}"


@dataclass(frozen=True)
class ParseError:
    span: SourceSpan
    kind: str
    message: str

    def __str__(self) -> str:
        return f"{self.span}: {self.kind}: {self.message}"


@dataclass
class _Tok:
    text: str
    col: int


def _tokenize(line: str) -> list[_Tok]:
    return [_Tok(m.group(), m.start() + 1) for m in _TOKEN.finditer(line)]


def _float(text: str) -> float | None:
    return float(text) if _FLOAT.match(text) else None


def _param(tok: _Tok, key: str, line: int, errors: list) -> tuple[float | None, bool]:
    if not tok.text.startswith(key + "="):
        errors.append(ParseError(SourceSpan(line, tok.col), SYNTAX, f"expected {key}=FLOAT, got {tok.text!r}"))
        return None, False
    raw = tok.text[len(key) + 1:]
    frozen = raw.endswith("!")
    value = _float(raw[:-1] if frozen else raw)
    if value is None:
        errors.append(ParseError(SourceSpan(line, tok.col), SYNTAX, f"bad number in {tok.text!r}"))
    return value, frozen


class _Reader:
    def __init__(self):
        self.errors: list[ParseError] = []
        self.props: list[str] = []
        self.prop_span: dict[str, SourceSpan] = {}
        self.priors: dict[str, float] = {}
        self.rules: list[RuleSpec] = []
        self.constraints: list[ConstraintSpec] = []
        self.layers: int | None = None
        self.targets: dict[str, int] = {}
        self.queries: list[tuple[str, ...]] = []
        # (name, span) pairs that must resolve to a declared prop
        self.refs: list[tuple[str, SourceSpan]] = []
        self.lines: dict = {}

    def err(self, line, col, kind, msg):
        self.errors.append(ParseError(SourceSpan(line, col), kind, msg))

    def name(self, tok: _Tok, line: int) -> str | None:
        if not _NAME.match(tok.text) or tok.text in KEYWORDS:
            self.err(line, tok.col, SYNTAX, f"invalid name {tok.text!r}")
            return None
        self.refs.append((tok.text, SourceSpan(line, tok.col)))
        return tok.text

    def statement(self, toks: list[_Tok], line: int) -> None:
        head, args = toks[0], toks[1:]
        handler = getattr(self, "do_" + head.text, None) if head.text in KEYWORDS else None
        if handler is None:
            self.err(line, head.col, SYNTAX, f"unknown statement {head.text!r}")
            return
        handler(args, line, head)

    def do_prop(self, args, line, head):
        if not args:
            self.err(line, head.col, SYNTAX, "prop needs at least one name")
        for t in args:
            if not _NAME.match(t.text) or t.text in KEYWORDS:
                self.err(line, t.col, SYNTAX, f"invalid name {t.text!r}")
            elif t.text in self.prop_span:
                self.err(line, t.col, DUPLICATE_NAME,
                         f"proposition {t.text!r} already declared at line {self.prop_span[t.text].line}")
            else:
                self.props.append(t.text)
                self.prop_span[t.text] = SourceSpan(line, t.col)

    def do_prior(self, args, line, head):
        if len(args) != 2:
            self.err(line, head.col, SYNTAX, "usage: prior NAME FLOAT")
            return
        name = self.name(args[0], line)
        value = _float(args[1].text)
        if value is None:
            self.err(line, args[1].col, SYNTAX, f"bad number {args[1].text!r}")
        elif not 0.0 <= value <= 1.0:
            self.err(line, args[1].col, RANGE, f"prior {value} outside [0, 1]")
        elif name is not None:
            if name in self.priors:
                self.err(line, args[0].col, DUPLICATE_NAME, f"prior for {name!r} given twice")
            else:
                self.priors[name] = value

    def do_rule(self, args, line, head):
        arrow = [i for i, t in enumerate(args) if t.text == "=>"]
        if len(arrow) != 1:
            self.err(line, head.col, SYNTAX, "rule needs exactly one '=>'")
            return
        lhs, rhs = args[:arrow[0]], args[arrow[0] + 1:]
        if not lhs or not rhs:
            self.err(line, head.col, SYNTAX, "rule needs antecedents and a consequent")
            return
        ops = {t.text for t in lhs[1::2]}
        if ops - {"&", "|"} or len(lhs) % 2 == 0 or any(t.text in "&|" for t in lhs[0::2]):
            self.err(line, lhs[0].col, SYNTAX, "antecedents must be NAME (& NAME)* or NAME (| NAME)*")
            return
        if len(ops) > 1:
            bad = next(t for t in lhs[1::2] if t.text != lhs[1].text)
            self.err(line, bad.col, SYNTAX, "cannot mix '&' and '|' in one rule")
            return
        mode = OR if ops == {"|"} else AND
        names = [self.name(t, line) for t in lhs[0::2]]
        cons = self.name(rhs[0], line)
        theta, frozen = DEFAULT_THETA, False
        if len(rhs) > 2:
            self.err(line, rhs[2].col, SYNTAX, f"unexpected {rhs[2].text!r}")
            return
        if len(rhs) == 2:
            theta, frozen = _param(rhs[1], "theta", line, self.errors)
            if theta is None:
                return
        if None in names or cons is None:
            return
        if cons in names:
            self.err(line, rhs[0].col, ARITY, f"consequent {cons!r} also appears as an antecedent")
            return
        if len(set(names)) != len(names):
            self.err(line, lhs[0].col, ARITY, "repeated antecedent")
            return
        self.rules.append(RuleSpec(tuple(names), cons, mode, theta, frozen, line=line))

    def do_excl(self, args, line, head):
        phi, frozen = DEFAULT_PHI, False
        if args and "=" in args[-1].text:
            phi, frozen = _param(args[-1], "phi", line, self.errors)
            args = args[:-1]
            if phi is None:
                return
        names = [self.name(t, line) for t in args]
        if None in names:
            return
        if len(names) < 2 or len(set(names)) != len(names):
            self.err(line, head.col, ARITY, f"excl needs at least 2 distinct propositions, got {names}")
            return
        self.constraints.append(ConstraintSpec(tuple(names), phi, frozen, line=line))

    def do_layers(self, args, line, head):
        if len(args) != 1 or not _INT.match(args[0].text):
            self.err(line, head.col, SYNTAX, "usage: layers INT")
            return
        if self.layers is not None:
            self.err(line, head.col, DUPLICATE_NAME, "layers given twice")
            return
        self.layers = int(args[0].text)
        self.lines["layers"] = SourceSpan(line, args[0].col)

    def do_target(self, args, line, head):
        if len(args) != 2:
            self.err(line, head.col, SYNTAX, "usage: target NAME 0|1")
            return
        name = self.name(args[0], line)
        if args[1].text not in ("0", "1"):
            self.err(line, args[1].col, RANGE, f"target value must be 0 or 1, got {args[1].text!r}")
        elif name is not None:
            if name in self.targets:
                self.err(line, args[0].col, DUPLICATE_NAME, f"target for {name!r} given twice")
            else:
                self.targets[name] = int(args[1].text)

    def do_query(self, args, line, head):
        if len(args) not in (1, 2):
            self.err(line, head.col, SYNTAX, "usage: query NAME [NAME]")
            return
        names = [self.name(t, line) for t in args]
        if len(names) == 2 and names[0] is not None and names[0] == names[1]:
            self.err(line, args[1].col, ARITY, "pair query needs two distinct propositions")
        elif None not in names:
            self.queries.append(tuple(names))
            self.lines.setdefault("queries", []).append(SourceSpan(line, args[0].col))


def parse(text: str, max_qubits: int | None = MAX_QUBITS) -> ProblemSpec:
    """Parse ``.qrp`` text into a validated ProblemSpec.

    Collects every diagnostic instead of stopping at the first; raises
    :class:`ParseFailure` carrying them all when any are found.
    """
    r = _Reader()
    for lineno, raw in enumerate(text.splitlines(), 1):
        body = raw.split("#", 1)[0]
        toks = _tokenize(body)
        if toks:
            r.statement(toks, lineno)

    declared = set(r.props)
    for name, span in r.refs:
        if name not in declared:
            r.errors.append(ParseError(span, UNKNOWN_NAME, f"undeclared proposition {name!r}"))

    r.lines["props"] = r.prop_span
    spec = ProblemSpec(
        propositions=list(r.props),
        priors={p: r.priors.get(p, DEFAULT_PRIOR) for p in r.props},
        rules=r.rules,
        constraints=r.constraints,
        layers=1 if r.layers is None else r.layers,
        targets=dict(r.targets),
        queries=list(r.queries),
        lines=r.lines,
    )
    if not r.errors:
        r.errors.extend(validate(spec, max_qubits=max_qubits))
    if r.errors:
        r.errors.sort(key=lambda e: (e.span.line, e.span.column))
        raise ParseFailure(r.errors)
    return spec


def validate(p: ProblemSpec, max_qubits: int | None = MAX_QUBITS) -> list[ParseError]:
    """Semantic checks; returns an empty list for a valid spec."""
    errors: list[ParseError] = []

    def span(line=None, col=1):
        return SourceSpan(line if line else 1, col)

    seen = set()
    for name in p.propositions:
        if not isinstance(name, str) or not _NAME.match(name) or name in KEYWORDS:
            errors.append(ParseError(span(), SYNTAX, f"invalid proposition name {name!r}"))
        if name in seen:
            errors.append(ParseError(span(), DUPLICATE_NAME, f"duplicate proposition {name!r}"))
        seen.add(name)
    if not p.propositions:
        errors.append(ParseError(span(), ARITY, "no propositions declared"))
    if max_qubits is not None and len(p.propositions) > max_qubits:
        errors.append(ParseError(span(), RANGE,
                                 f"{len(p.propositions)} propositions exceed the qubit cap of {max_qubits}"))

    def resolve(names, line):
        ok = True
        for n in names:
            if n not in seen:
                errors.append(ParseError(span(line), UNKNOWN_NAME, f"undeclared proposition {n!r}"))
                ok = False
        return ok

    for name, x in p.priors.items():
        resolve([name], None)
        if not (isinstance(x, (int, float)) and 0.0 <= x <= 1.0):
            errors.append(ParseError(span(), RANGE, f"prior for {name!r} = {x} outside [0, 1]"))
    for r in p.rules:
        resolve(r.antecedents + (r.consequent,), r.line)
        if r.mode not in (AND, OR):
            errors.append(ParseError(span(r.line), SYNTAX, f"unknown rule mode {r.mode!r}"))
        if not r.antecedents:
            errors.append(ParseError(span(r.line), ARITY, "rule has no antecedents"))
        if r.consequent in r.antecedents:
            errors.append(ParseError(span(r.line), ARITY,
                                     f"consequent {r.consequent!r} also appears as an antecedent"))
        if len(set(r.antecedents)) != len(r.antecedents):
            errors.append(ParseError(span(r.line), ARITY, "repeated antecedent"))
        if not math.isfinite(r.theta):
            errors.append(ParseError(span(r.line), RANGE, f"theta {r.theta} is not finite"))
    for c in p.constraints:
        resolve(c.subset, c.line)
        if len(c.subset) < 2:
            errors.append(ParseError(span(c.line), ARITY, f"excl needs at least 2 propositions, got {len(c.subset)}"))
        if len(set(c.subset)) != len(c.subset):
            errors.append(ParseError(span(c.line), ARITY, "repeated proposition in excl"))
        if not math.isfinite(c.phi):
            errors.append(ParseError(span(c.line), RANGE, f"phi {c.phi} is not finite"))
    if not isinstance(p.layers, int) or p.layers < 1:
        lspan = p.lines.get("layers") if isinstance(p.lines, dict) else None
        errors.append(ParseError(lspan or span(), RANGE, f"layers must be >= 1, got {p.layers}"))
    for name, y in p.targets.items():
        resolve([name], None)
        if y not in (0, 1):
            errors.append(ParseError(span(), RANGE, f"target for {name!r} must be 0 or 1"))
    qspans = p.lines.get("queries", []) if isinstance(p.lines, dict) else []
    for k, q in enumerate(p.queries):
        line = qspans[k].line if k < len(qspans) else None
        resolve(q, line)
        if len(q) not in (1, 2):
            errors.append(ParseError(span(line), ARITY, "query takes one or two propositions"))
        elif len(q) == 2 and q[0] == q[1]:
            errors.append(ParseError(span(line), ARITY, "pair query needs two distinct propositions"))
    return errors


def _num(x: float) -> str:
    return repr(float(x))


def serialize(p: ProblemSpec) -> str:
    """Canonical text: props, priors, rules, excl, layers, targets, queries."""
    out = ["prop " + " ".join(p.propositions)]
    out += [f"prior {name} {_num(p.prior(name))}" for name in p.propositions]
    for r in p.rules:
        op = " | " if r.mode == OR else " & "
        out.append(f"rule {op.join(r.antecedents)} => {r.consequent} theta={_num(r.theta)}{'!' if r.frozen else ''}")
    for c in p.constraints:
        out.append(f"excl {' '.join(c.subset)} phi={_num(c.phi)}{'!' if c.frozen else ''}")
    out.append(f"layers {p.layers}")
    out += [f"target {name} {y}" for name, y in p.targets.items()]
    out += ["query " + " ".join(q) for q in p.queries]
    return "\n".join(out) + "\n"


def load(path, max_qubits: int | None = MAX_QUBITS) -> ProblemSpec:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read(), max_qubits=max_qubits)
