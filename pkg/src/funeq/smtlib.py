"""SMT-LIB2 script emission and solver output parsing.

Scripts target the combined theory of uninterpreted functions and nonlinear
real arithmetic.  Emission is deterministic: identical inputs produce
byte-identical scripts, so archived runs can be replayed and diffed.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction

from .formula import (
    And,
    Cmp,
    Exists,
    FALSE,
    Forall,
    Formula,
    Implies,
    Not,
    Or,
    Rel,
    TRUE,
    conjuncts,
    free_vars,
    has_existential,
)
from .poly import FApp, Poly, Var


class NonGroundExistential(ValueError):
    """An existential quantifier survived outside solved-form processing."""


class Status(enum.Enum):
    SAT = "sat"
    UNSAT = "unsat"
    UNKNOWN = "unknown"
    TIMEOUT = "timeout"
    CRASH = "crash"


@dataclass(frozen=True)
class SolverVerdict:
    status: Status
    solver_id: str = ""
    wall_time: float = 0.0

    def definitive(self) -> bool:
        return self.status in (Status.SAT, Status.UNSAT)


# -- terms ----------------------------------------------------------------


def rational_to_smt(c: Fraction) -> str:
    if c < 0:
        return f"(- {rational_to_smt(-c)})"
    if c.denominator == 1:
        return str(c.numerator)
    return f"(/ {c.numerator} {c.denominator})"


def poly_to_smt(p: Poly) -> str:
    if not p.monomials:
        return "0"
    parts = []
    for m in p.monomials:
        factors = []
        for a, e in m.powers:
            base = a.name if isinstance(a, Var) else f"(f {poly_to_smt(a.arg)})"
            factors.extend([base] * e)
        if m.coeff == 1 and factors:
            term = factors[0] if len(factors) == 1 else f"(* {' '.join(factors)})"
        elif not factors:
            term = rational_to_smt(m.coeff)
        elif m.coeff == -1:
            inner = factors[0] if len(factors) == 1 else f"(* {' '.join(factors)})"
            term = f"(- {inner})"
        else:
            term = f"(* {rational_to_smt(m.coeff)} {' '.join(factors)})"
        parts.append(term)
    if len(parts) == 1:
        return parts[0]
    return f"(+ {' '.join(parts)})"


def formula_to_smt(phi: Formula) -> str:
    if phi == TRUE:
        return "true"
    if phi == FALSE:
        return "false"
    if isinstance(phi, Cmp):
        body = poly_to_smt(phi.lhs)
        if phi.rel is Rel.EQ:
            return f"(= {body} 0)"
        if phi.rel is Rel.NE:
            return f"(not (= {body} 0))"
        if phi.rel is Rel.LE:
            return f"(<= {body} 0)"
        return f"(< {body} 0)"
    if isinstance(phi, Not):
        return f"(not {formula_to_smt(phi.arg)})"
    if isinstance(phi, And):
        return f"(and {' '.join(formula_to_smt(a) for a in phi.args)})"
    if isinstance(phi, Or):
        return f"(or {' '.join(formula_to_smt(a) for a in phi.args)})"
    if isinstance(phi, Implies):
        return f"(=> {formula_to_smt(phi.lhs)} {formula_to_smt(phi.rhs)})"
    if isinstance(phi, Forall):
        binds = " ".join(f"({v} Real)" for v in phi.vars)
        return f"(forall ({binds}) {formula_to_smt(phi.body)})"
    if isinstance(phi, Exists):
        raise NonGroundExistential(f"existential survives in {phi}")
    raise TypeError(f"cannot emit {phi!r}")


# -- scripts ---------------------------------------------------------------


def emit_script(assertions: tuple, extra_consts: tuple = (), logic: str = "UFNRA") -> str:
    """Emit a complete script asserting the given formulas.

    Free variables of the assertions are declared as real constants
    (skolems); the function symbol f is always declared.
    """
    consts: set = set(extra_consts)
    seen_keys = set()
    deduped = []
    for phi in assertions:
        if has_existential(phi):
            raise NonGroundExistential(f"existential survives in {phi}")
        if phi == TRUE:
            continue
        key = id_key(phi)
        if key in seen_keys:
            continue
        seen_keys.add(key)
        deduped.append(phi)
        consts |= free_vars(phi)
    lines = [
        f"(set-logic {logic})",
        "(declare-fun f (Real) Real)",
    ]
    for name in sorted(consts):
        lines.append(f"(declare-const {name} Real)")
    for phi in deduped:
        lines.append(f"(assert {formula_to_smt(phi)})")
    lines.append("(check-sat)")
    return "\n".join(lines) + "\n"


def id_key(phi: Formula):
    from .formula import canonical_key

    return canonical_key(phi)


def emit_smtlib(ob, include_original: bool | None = None) -> str:
    """Emit the script for a proof obligation.

    Assertion order: specification conjuncts, instantiations, lemmas,
    skolemized negation constraints.  ``include_original`` overrides the
    obligation's own flag (used by the original-equation-removal ablation).
    """
    keep = ob.include_original if include_original is None else include_original
    assertions: list = []
    for c in conjuncts(ob.spec):
        if isinstance(c, Forall) and not keep:
            continue
        assertions.append(c)
    assertions.extend(ob.instantiations)
    assertions.extend(ob.lemmas)
    assertions.extend(ob.negation_constraints)
    return emit_script(tuple(assertions), extra_consts=tuple(ob.skolems))


def parse_solver_output(
    stdout: str,
    stderr: str = "",
    exit_code: int = 0,
    deadline_exceeded: bool = False,
) -> Status:
    """Map raw solver process output onto a verdict status.

    The first line that is exactly sat/unsat/unknown wins; a deadline kill
    is a timeout; a nonzero exit without a verdict line is a crash.
    """
    for line in stdout.splitlines():
        token = line.strip().lower()
        if token == "sat":
            return Status.SAT
        if token == "unsat":
            return Status.UNSAT
        if token == "unknown":
            return Status.UNKNOWN
    if deadline_exceeded:
        return Status.TIMEOUT
    if exit_code != 0:
        return Status.CRASH
    return Status.UNKNOWN
