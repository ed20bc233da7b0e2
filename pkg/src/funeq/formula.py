"""First-order formulas over polynomial atoms.

Comparisons are stored one-sided (``p ⋈ 0``); connectives are n-ary and
flattened; quantifier prefixes carry plain variable names.  ``TRUE`` and
``FALSE`` are the empty conjunction and disjunction.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .poly import FApp, Poly, Var, ZERO

Q = Fraction


class Rel(enum.Enum):
    EQ = "="
    NE = "!="
    LE = "<="
    LT = "<"


class Formula:
    __slots__ = ()


@dataclass(frozen=True, slots=True)
class Cmp(Formula):
    """lhs ⋈ 0 with everything moved to the left side."""

    lhs: Poly
    rel: Rel

    def __str__(self):
        return f"{self.lhs} {self.rel.value} 0"


@dataclass(frozen=True, slots=True)
class Not(Formula):
    arg: Formula

    def __str__(self):
        return f"not ({self.arg})"


@dataclass(frozen=True, slots=True)
class And(Formula):
    args: tuple

    def __str__(self):
        return " and ".join(f"({a})" for a in self.args) if self.args else "true"


@dataclass(frozen=True, slots=True)
class Or(Formula):
    args: tuple

    def __str__(self):
        return " or ".join(f"({a})" for a in self.args) if self.args else "false"


@dataclass(frozen=True, slots=True)
class Implies(Formula):
    lhs: Formula
    rhs: Formula

    def __str__(self):
        return f"({self.lhs}) -> ({self.rhs})"


@dataclass(frozen=True, slots=True)
class Forall(Formula):
    vars: tuple
    body: Formula

    def __str__(self):
        return f"forall {' '.join(self.vars)}. {self.body}"


@dataclass(frozen=True, slots=True)
class Exists(Formula):
    vars: tuple
    body: Formula

    def __str__(self):
        return f"exists {' '.join(self.vars)}. {self.body}"


TRUE = And(())
FALSE = Or(())


def conj(args: Iterable[Formula]) -> Formula:
    flat = []
    for a in args:
        if isinstance(a, And):
            flat.extend(a.args)
        elif a == FALSE:
            return FALSE
        else:
            flat.append(a)
    seen = []
    for a in flat:
        if a not in seen:
            seen.append(a)
    if not seen:
        return TRUE
    if len(seen) == 1:
        return seen[0]
    return And(tuple(seen))


def disj(args: Iterable[Formula]) -> Formula:
    flat = []
    for a in args:
        if isinstance(a, Or):
            flat.extend(a.args)
        elif a == TRUE:
            return TRUE
        else:
            flat.append(a)
    seen = []
    for a in flat:
        if a not in seen:
            seen.append(a)
    if not seen:
        return FALSE
    if len(seen) == 1:
        return seen[0]
    return Or(tuple(seen))


def negate(phi: Formula) -> Formula:
    """Negation pushed through comparisons and connectives (ground use)."""
    if isinstance(phi, Cmp):
        if phi.rel is Rel.EQ:
            return Cmp(phi.lhs, Rel.NE)
        if phi.rel is Rel.NE:
            return Cmp(phi.lhs, Rel.EQ)
        if phi.rel is Rel.LE:  # not(p <= 0)  ==  -p < 0
            return Cmp(-phi.lhs, Rel.LT)
        return Cmp(-phi.lhs, Rel.LE)  # not(p < 0)  ==  -p <= 0
    if isinstance(phi, Not):
        return phi.arg
    if isinstance(phi, And):
        return disj(negate(a) for a in phi.args)
    if isinstance(phi, Or):
        return conj(negate(a) for a in phi.args)
    if isinstance(phi, Implies):
        return conj([phi.lhs, negate(phi.rhs)])
    if isinstance(phi, Forall):
        return Exists(phi.vars, negate(phi.body))
    if isinstance(phi, Exists):
        return Forall(phi.vars, negate(phi.body))
    raise TypeError(f"cannot negate {phi!r}")


def _canonical_cmp(lhs: Poly, rel: Rel) -> Formula:
    """Fold decided comparisons; fix the sign of equations."""
    if lhs.is_rational():
        c = lhs.as_rational()
        holds = {
            Rel.EQ: c == 0,
            Rel.NE: c != 0,
            Rel.LE: c <= 0,
            Rel.LT: c < 0,
        }[rel]
        return TRUE if holds else FALSE
    if rel in (Rel.EQ, Rel.NE) and lhs.leading_coeff() < 0:
        lhs = -lhs
    return Cmp(lhs, rel)


def simplify(phi: Formula) -> Formula:
    """Ground simplification: fold rational atoms, absorb true/false."""
    if isinstance(phi, Cmp):
        return _canonical_cmp(phi.lhs, phi.rel)
    if isinstance(phi, Not):
        inner = simplify(phi.arg)
        if inner == TRUE:
            return FALSE
        if inner == FALSE:
            return TRUE
        if isinstance(inner, Cmp):
            return simplify(negate(inner))
        return Not(inner)
    if isinstance(phi, And):
        return conj(simplify(a) for a in phi.args)
    if isinstance(phi, Or):
        return disj(simplify(a) for a in phi.args)
    if isinstance(phi, Implies):
        lhs = simplify(phi.lhs)
        rhs = simplify(phi.rhs)
        if lhs == TRUE:
            return rhs
        if lhs == FALSE or rhs == TRUE:
            return TRUE
        if rhs == FALSE:
            return simplify(negate(lhs))
        return Implies(lhs, rhs)
    if isinstance(phi, Forall):
        body = simplify(phi.body)
        if body in (TRUE, FALSE):
            return body
        used = free_vars(body)
        keep = tuple(v for v in phi.vars if v in used)
        return Forall(keep, body) if keep else body
    if isinstance(phi, Exists):
        body = simplify(phi.body)
        if body in (TRUE, FALSE):
            return body
        used = free_vars(body)
        keep = tuple(v for v in phi.vars if v in used)
        return Exists(keep, body) if keep else body
    raise TypeError(f"cannot simplify {phi!r}")


def substitute_formula(phi: Formula, mapping: Mapping[str, Poly]) -> Formula:
    if isinstance(phi, Cmp):
        return Cmp(phi.lhs.substitute(mapping), phi.rel)
    if isinstance(phi, Not):
        return Not(substitute_formula(phi.arg, mapping))
    if isinstance(phi, And):
        return And(tuple(substitute_formula(a, mapping) for a in phi.args))
    if isinstance(phi, Or):
        return Or(tuple(substitute_formula(a, mapping) for a in phi.args))
    if isinstance(phi, Implies):
        return Implies(
            substitute_formula(phi.lhs, mapping),
            substitute_formula(phi.rhs, mapping),
        )
    if isinstance(phi, (Forall, Exists)):
        inner = {k: v for k, v in mapping.items() if k not in phi.vars}
        cls = type(phi)
        return cls(phi.vars, substitute_formula(phi.body, inner))
    raise TypeError(f"cannot substitute in {phi!r}")


def free_vars(phi: Formula) -> set:
    if isinstance(phi, Cmp):
        return phi.lhs.variables()
    if isinstance(phi, Not):
        return free_vars(phi.arg)
    if isinstance(phi, (And, Or)):
        out: set = set()
        for a in phi.args:
            out |= free_vars(a)
        return out
    if isinstance(phi, Implies):
        return free_vars(phi.lhs) | free_vars(phi.rhs)
    if isinstance(phi, (Forall, Exists)):
        return free_vars(phi.body) - set(phi.vars)
    raise TypeError(f"cannot inspect {phi!r}")


def has_quantifier(phi: Formula) -> bool:
    if isinstance(phi, (Forall, Exists)):
        return True
    if isinstance(phi, Cmp):
        return False
    if isinstance(phi, Not):
        return has_quantifier(phi.arg)
    if isinstance(phi, (And, Or)):
        return any(has_quantifier(a) for a in phi.args)
    if isinstance(phi, Implies):
        return has_quantifier(phi.lhs) or has_quantifier(phi.rhs)
    raise TypeError(f"cannot inspect {phi!r}")


def has_existential(phi: Formula) -> bool:
    if isinstance(phi, Exists):
        return True
    if isinstance(phi, Cmp):
        return False
    if isinstance(phi, Not):
        return has_existential(phi.arg)
    if isinstance(phi, (And, Or)):
        return any(has_existential(a) for a in phi.args)
    if isinstance(phi, Implies):
        return has_existential(phi.lhs) or has_existential(phi.rhs)
    if isinstance(phi, Forall):
        return has_existential(phi.body)
    raise TypeError(f"cannot inspect {phi!r}")


def conjuncts(phi: Formula) -> tuple:
    return phi.args if isinstance(phi, And) else (phi,)


def instantiate(
    phi: Formula,
    mapping: Mapping[str, Poly],
    constants: frozenset = frozenset(),
) -> Formula:
    """Instantiate a universally quantified formula with polynomials.

    Variables of the prefix not covered by the mapping stay quantified, as
    do fresh variables introduced by the mapping's images; names listed in
    ``constants`` (skolems) are never requantified.  The body is
    renormalized and ground-simplified.
    """
    if not isinstance(phi, Forall):
        raise TypeError("instantiate expects a universally quantified formula")
    unknown = set(mapping) - set(phi.vars)
    if unknown:
        raise ValueError(f"substitution touches non-prefix variables {sorted(unknown)}")
    body = simplify(substitute_formula(phi.body, mapping))
    if body in (TRUE, FALSE):
        return body
    remaining = [v for v in phi.vars if v not in mapping]
    fresh = sorted(
        {
            name
            for image in mapping.values()
            for name in image.variables()
        }
        - set(phi.vars)
        - set(constants)
    )
    prefix = tuple(remaining + fresh)
    present = free_vars(body)
    prefix = tuple(v for v in prefix if v in present)
    return Forall(prefix, body) if prefix else body


def collect_f_arguments(phi: Formula) -> list:
    """Distinct outermost f-arguments of a formula, in appearance order.

    An argument that is literally a single f-application is skipped in
    favor of its own argument, so a chain f(f(x)) contributes x.
    """
    out: list = []
    seen: set = set()

    def is_pure_fapp(p: Poly) -> bool:
        return (
            len(p.monomials) == 1
            and p.monomials[0].coeff == 1
            and len(p.monomials[0].powers) == 1
            and p.monomials[0].powers[0][1] == 1
            and isinstance(p.monomials[0].powers[0][0], FApp)
        )

    def visit_poly(p: Poly):
        for m in p.monomials:
            for a, _ in m.powers:
                if isinstance(a, FApp):
                    arg = a.arg
                    if not is_pure_fapp(arg) and arg not in seen:
                        seen.add(arg)
                        out.append(arg)
                    visit_poly(arg)

    def visit(f: Formula):
        if isinstance(f, Cmp):
            visit_poly(f.lhs)
        elif isinstance(f, Not):
            visit(f.arg)
        elif isinstance(f, (And, Or)):
            for a in f.args:
                visit(a)
        elif isinstance(f, Implies):
            visit(f.lhs)
            visit(f.rhs)
        elif isinstance(f, (Forall, Exists)):
            visit(f.body)

    visit(phi)
    return out


def rename_bound(phi: Formula, counter: list | None = None) -> Formula:
    """Rename bound variables to a canonical sequence (dedup key helper)."""
    if counter is None:
        counter = [0]
    if isinstance(phi, Cmp):
        return phi
    if isinstance(phi, Not):
        return Not(rename_bound(phi.arg, counter))
    if isinstance(phi, And):
        return And(tuple(rename_bound(a, counter) for a in phi.args))
    if isinstance(phi, Or):
        return Or(tuple(rename_bound(a, counter) for a in phi.args))
    if isinstance(phi, Implies):
        return Implies(rename_bound(phi.lhs, counter), rename_bound(phi.rhs, counter))
    if isinstance(phi, (Forall, Exists)):
        fresh = []
        mapping = {}
        for v in phi.vars:
            name = f"_b{counter[0]}"
            counter[0] += 1
            fresh.append(name)
            mapping[v] = Poly.var(name)
        body = substitute_formula(phi.body, mapping)
        cls = type(phi)
        return cls(tuple(fresh), rename_bound(body, counter))
    raise TypeError(f"cannot rename in {phi!r}")


def canonical_key(phi: Formula):
    """Hashable identity of a formula modulo bound-variable names."""
    return _struct_key(rename_bound(simplify(phi)))


def _struct_key(phi: Formula):
    if isinstance(phi, Cmp):
        return ("cmp", phi.rel.value, phi.lhs.key)
    if isinstance(phi, Not):
        return ("not", _struct_key(phi.arg))
    if isinstance(phi, And):
        return ("and",) + tuple(_struct_key(a) for a in phi.args)
    if isinstance(phi, Or):
        return ("or",) + tuple(_struct_key(a) for a in phi.args)
    if isinstance(phi, Implies):
        return ("implies", _struct_key(phi.lhs), _struct_key(phi.rhs))
    if isinstance(phi, (Forall, Exists)):
        tag = "forall" if isinstance(phi, Forall) else "exists"
        return (tag, phi.vars, _struct_key(phi.body))
    raise TypeError(f"cannot key {phi!r}")


def formula_atoms(phi: Formula) -> list:
    """All atoms appearing anywhere in the formula, canonical order."""
    seen = {}

    def visit(f: Formula):
        if isinstance(f, Cmp):
            for a in f.lhs.all_atoms():
                seen.setdefault(a.key, a)
        elif isinstance(f, Not):
            visit(f.arg)
        elif isinstance(f, (And, Or)):
            for a in f.args:
                visit(a)
        elif isinstance(f, Implies):
            visit(f.lhs)
            visit(f.rhs)
        elif isinstance(f, (Forall, Exists)):
            visit(f.body)

    visit(phi)
    return [seen[k] for k in sorted(seen)]
