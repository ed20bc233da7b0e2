"""Instantiation generators that enrich a proof obligation.

Two families: partial instantiations, which ground one variable at a time
with very small terms, and theory-unification instantiations, which solve
argument equations over the reals so that f ends up applied to a single
fresh variable or to zero.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from fractions import Fraction

from .formula import (
    Forall,
    Formula,
    TRUE,
    canonical_key,
    collect_f_arguments,
    instantiate,
)
from .poly import Poly, Var, ZERO, ONE
from .synthesis import ProofObligation

Q = Fraction


class TermLevel(enum.Enum):
    MINIMAL = "minimal"
    EXTENDED = "extended"


@dataclass(frozen=True)
class SmallTermSet:
    level: TermLevel
    terms: tuple  # ground Polys, deterministic order
    constant_names: frozenset = frozenset()  # skolems: never requantified

    @staticmethod
    def for_problem(
        skolems, level: TermLevel = TermLevel.MINIMAL, constants=()
    ) -> "SmallTermSet":
        terms = [ZERO, ONE]
        terms.extend(Poly.var(s) for s in sorted(skolems))
        if level is TermLevel.EXTENDED:
            for value in sorted(constants):
                p = Poly.const(value)
                if p not in terms:
                    terms.append(p)
        return SmallTermSet(
            level=level, terms=tuple(terms), constant_names=frozenset(skolems)
        )


@dataclass(frozen=True)
class InstantiationBatch:
    origin: str
    items: tuple  # ((formula, witness-substitution), ...)
    truncated: bool = False

    @property
    def formulas(self) -> tuple:
        return tuple(f for f, _ in self.items)

    @property
    def witnesses(self) -> tuple:
        return tuple(w for _, w in self.items)


def _dedup_items(items, drop_keys=()):
    seen = set(drop_keys)
    out = []
    for formula, witness in items:
        if formula in (TRUE,):
            continue
        key = canonical_key(formula)
        if key in seen:
            continue
        seen.add(key)
        out.append((formula, witness))
    return out


def partial_instantiations(
    phi: Formula, terms: SmallTermSet, keep_original: bool = True
) -> InstantiationBatch:
    """One variable grounded with a small term, the rest left quantified."""
    if not isinstance(phi, Forall):
        raise TypeError("expected a universally quantified formula")
    items = []
    if keep_original:
        items.append((phi, {}))
    for name in phi.vars:
        for term in terms.terms:
            sigma = {name: term}
            items.append(
                (instantiate(phi, sigma, constants=terms.constant_names), sigma)
            )
    kept = _dedup_items(items)
    return InstantiationBatch(origin="partial", items=tuple(kept))


def full_instantiations_fi(
    phi: Formula, terms: SmallTermSet, budget: int = 2000
) -> InstantiationBatch:
    """Instantiations into up to three variables from a grown term universe.

    The universe is the small-term set extended by one application of
    addition, subtraction, multiplication, or f.
    """
    if not isinstance(phi, Forall):
        raise TypeError("expected a universally quantified formula")
    universe = list(terms.terms)
    seen = {t.key for t in universe}

    def push(t: Poly):
        if t.key not in seen:
            seen.add(t.key)
            universe.append(t)

    base = list(terms.terms)
    for u in base:
        for v in base:
            push(u + v)
            push(u - v)
            push(u * v)
    for u in base:
        push(Poly.fapp(u))

    items = []
    truncated = False
    count = 0
    max_arity = min(3, len(phi.vars))
    for size in range(1, max_arity + 1):
        for names in itertools.combinations(phi.vars, size):
            for images in itertools.product(universe, repeat=size):
                if count >= budget:
                    truncated = True
                    break
                sigma = dict(zip(names, images))
                items.append(
                    (instantiate(phi, sigma, constants=terms.constant_names), sigma)
                )
                count += 1
            if truncated:
                break
        if truncated:
            break
    kept = _dedup_items(items)
    return InstantiationBatch(origin="full", items=tuple(kept), truncated=truncated)


# -- theory unification -------------------------------------------------------


_MAX_ARGUMENTS = 6


def _linear_solve_var(eq: Poly, names) -> tuple | None:
    """A variable occurring linearly in eq with a rational coefficient,
    nowhere else in the equation (not under f, not in other monomials)."""
    for name in names:
        coeff = ZERO
        rest_terms = {}
        usable = True
        for m in eq.monomials:
            involved = any(
                (isinstance(a, Var) and a.name == name)
                or (not isinstance(a, Var) and name in a.arg.variables())
                for a, _ in m.powers
            )
            if not involved:
                rest_terms[m.powkey] = (m.powers, m.coeff)
                continue
            if (
                len(m.powers) == 1
                and isinstance(m.powers[0][0], Var)
                and m.powers[0][0].name == name
                and m.powers[0][1] == 1
            ):
                coeff = coeff + Poly.const(m.coeff)
            else:
                usable = False
                break
        if not usable or not coeff.is_rational() or coeff.is_zero():
            continue
        rest = Poly.from_terms(rest_terms)
        return name, rest.scale(Q(-1) / coeff.as_rational())
    return None


def _unique_rational_root(eq: Poly, names) -> tuple | None:
    """var = the unique real root, when eq is univariate with rational
    coefficients and that root is rational."""
    present = [n for n in names if n in eq.variables()]
    if len(present) != 1:
        return None
    name = present[0]
    try:
        view = eq.coefficients_wrt({name})
    except Exception:
        return None
    coeffs = [Q(0)] * (eq.degree + 1)
    for exponent, poly in view.items():
        if not poly.is_rational():
            return None
        deg = exponent[0][1] if exponent else 0
        coeffs[deg] = poly.as_rational()
    while coeffs and coeffs[-1] == 0:
        coeffs.pop()
    if len(coeffs) == 3:
        a0, a1, a2 = coeffs
        disc = a1 * a1 - 4 * a2 * a0
        if disc == 0:
            return name, Poly.const(-a1 / (2 * a2))
        return None
    if len(coeffs) == 2:
        return name, Poly.const(-coeffs[0] / coeffs[1])
    return None


def _solve_partition(args_z, args_0, var_names, fresh: str):
    """Substitution sending each args_z member to the fresh variable and
    each args_0 member to zero; None when not uniquely solvable."""
    z = Poly.var(fresh)
    equations = [arg - z for arg in args_z] + [arg for arg in args_0]
    assignment: dict = {}
    pending = list(equations)
    progress = True
    while progress:
        normalized = []
        for eq in pending:
            eq = eq.substitute(assignment)
            if eq.is_zero():
                continue
            if eq.is_rational():
                return None  # contradictory system
            normalized.append(eq)
        pending = normalized
        if not pending:
            break
        progress = False
        unsolved = [n for n in var_names if n not in assignment]
        for eq in pending:
            found = _linear_solve_var(eq, unsolved)
            if found is None:
                found = _unique_rational_root(eq, unsolved)
            if found is not None:
                name, value = found
                assignment = {
                    k: v.substitute({name: value}) for k, v in assignment.items()
                }
                assignment[name] = value
                pending = [e for e in pending if e is not eq]
                progress = True
                break
    if pending:
        return None
    touched = set()
    for arg in list(args_z) + list(args_0):
        touched |= arg.variables()
    if any(n in touched and n not in assignment for n in var_names):
        return None  # underdetermined
    if fresh in assignment:
        return None
    for value in assignment.values():
        if value.variables() - {fresh}:
            return None
    # validity: the substitution really unifies the partitions
    for arg in args_z:
        if arg.substitute(assignment) != z:
            return None
    for arg in args_0:
        if not arg.substitute(assignment).is_zero():
            return None
    return assignment


def enumerate_tu_substitutions(
    phi: Formula, fresh_name: str | None = None, zero_as_fresh: bool = False
) -> list:
    """Solved partition substitutions in enumeration order.

    Partitions of the f-argument set are enumerated in binary-mask order
    with the empty fresh-side last; each solvable one contributes its
    substitution.  ``zero_as_fresh`` switches the zero target to a second
    fresh variable (off by default).
    """
    if not isinstance(phi, Forall):
        raise TypeError("expected a universally quantified formula")
    args = [
        a
        for a in collect_f_arguments(phi)
        if a.variables() and a.variables(recursive=True) <= set(phi.vars)
    ]
    if not args or len(args) > _MAX_ARGUMENTS:
        return []
    taken = set(phi.vars)
    fresh = fresh_name or "z"
    suffix = 0
    while fresh in taken:
        fresh = f"z{suffix}"
        suffix += 1
    zero_name = None
    if zero_as_fresh:
        zero_name = f"{fresh}k"
        while zero_name in taken:
            suffix += 1
            zero_name = f"{fresh}k{suffix}"

    n = len(args)
    masks = list(range(1, 2 ** n)) + [0]
    out = []
    for mask in masks:
        args_z = [args[i] for i in range(n) if mask >> i & 1]
        args_0 = [args[i] for i in range(n) if not mask >> i & 1]
        if zero_name is not None:
            args_0 = [a - Poly.var(zero_name) for a in args_0]
        sigma = _solve_partition(args_z, args_0, phi.vars, fresh)
        if sigma is not None:
            out.append(sigma)
    return out


def theory_unification_instantiations(
    phi: Formula, fresh_name: str | None = None, zero_as_fresh: bool = False
) -> InstantiationBatch:
    """Instantiations that make every chosen f-argument equal to a fresh
    variable and the rest equal to zero, found by solving the argument
    equations exactly."""
    items = []
    for sigma in enumerate_tu_substitutions(phi, fresh_name, zero_as_fresh):
        items.append((instantiate(phi, sigma), sigma))
    kept = _dedup_items(items, drop_keys={canonical_key(phi)})
    return InstantiationBatch(origin="theory-unification", items=tuple(kept))


# -- obligation enrichment ----------------------------------------------------


class Stage(enum.Enum):
    TU = "TU"
    PI = "PI"
    FI = "FI"


def enrich_obligation(
    ob: ProofObligation,
    stage: Stage,
    term_set: SmallTermSet | None = None,
    keep_eq: bool = True,
    fi_budget: int = 2000,
) -> ProofObligation:
    """Extend the obligation's instantiations for the given stage.

    Idempotent per stage; the original quantified equation is dropped from
    emission only at the PI stage under the keep_eq=False ablation.
    """
    from .formula import conjuncts

    quantified = [c for c in conjuncts(ob.spec) if isinstance(c, Forall)]
    new_formulas: list = []
    if stage is Stage.TU:
        for phi in quantified:
            new_formulas.extend(theory_unification_instantiations(phi).formulas)
        return ob.extended(instantiations=new_formulas)
    if term_set is None:
        term_set = SmallTermSet.for_problem(ob.skolems)
    if stage is Stage.PI:
        for phi in quantified:
            batch = partial_instantiations(phi, term_set, keep_original=False)
            new_formulas.extend(batch.formulas)
        out = ob.extended(instantiations=new_formulas)
        if not keep_eq:
            out = ProofObligation(
                spec=out.spec,
                skolems=out.skolems,
                negation_constraints=out.negation_constraints,
                instantiations=out.instantiations,
                lemmas=out.lemmas,
                include_original=False,
            )
        return out
    if stage is Stage.FI:
        for phi in quantified:
            batch = full_instantiations_fi(phi, term_set, budget=fi_budget)
            new_formulas.extend(batch.formulas)
        return ob.extended(instantiations=new_formulas)
    raise ValueError(f"unknown stage {stage}")
