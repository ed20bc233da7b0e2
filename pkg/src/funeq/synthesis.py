"""Polynomial template synthesis and proof obligation construction.

Substitutes a parametric polynomial shape for f in the specification,
extracts the coefficient system implied by the zero-polynomial rule,
solves it into finitely many branches, eliminates the surviving parameters
through interpolation at 0, 1 and -1, and packages the negated candidate
as skolemized disequations ready for SMT dispatch.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from fractions import Fraction

from .formula import (
    And,
    Cmp,
    FALSE,
    Forall,
    Formula,
    Not,
    Or,
    Rel,
    TRUE,
    canonical_key,
    conj,
    conjuncts,
    disj,
    negate,
    simplify,
    substitute_formula,
)
from .poly import FApp, Monomial, Poly, Var, ZERO, ONE

Q = Fraction


class SystemTooHard(ValueError):
    """The parameter system is outside the bounded solving rules."""


class UnsupportedSideCondition(ValueError):
    """A non-equation constraint stayed quantified after template substitution."""


class TemplateKind(enum.Enum):
    CONSTANT = "const"
    LINEAR = "lin"
    QUAD_MONOMIAL = "mono"
    QUADRATIC = "quad"


# Parameters used by each shape, in elimination order c, a, b.
_KIND_PARAMS = {
    TemplateKind.CONSTANT: ("c",),
    TemplateKind.LINEAR: ("b", "c"),
    TemplateKind.QUAD_MONOMIAL: ("a",),
    TemplateKind.QUADRATIC: ("a", "b", "c"),
}

ESCALATION_ORDER = (
    TemplateKind.CONSTANT,
    TemplateKind.LINEAR,
    TemplateKind.QUAD_MONOMIAL,
    TemplateKind.QUADRATIC,
)


@dataclass(frozen=True)
class Template:
    kind: TemplateKind
    params: tuple  # actual fresh parameter names, aligned with _KIND_PARAMS

    @staticmethod
    def for_problem(kind: TemplateKind, taken: set) -> "Template":
        names = []
        for base in _KIND_PARAMS[kind]:
            name = base
            while name in taken or name in names:
                name = "_" + name
            names.append(name)
        return Template(kind, tuple(names))

    def param(self, role: str) -> str | None:
        roles = _KIND_PARAMS[self.kind]
        return self.params[roles.index(role)] if role in roles else None

    def definition(self, at: Poly) -> Poly:
        """The template body evaluated at a polynomial argument."""
        a = self.param("a")
        b = self.param("b")
        c = self.param("c")
        out = ZERO
        if a is not None:
            out = out + Poly.var(a) * at * at
        if b is not None:
            out = out + Poly.var(b) * at
        if c is not None:
            out = out + Poly.var(c)
        return out


F0 = Poly.fapp(ZERO)
F1 = Poly.fapp(ONE)
FM1 = Poly.fapp(Poly.const(-1))


@dataclass(frozen=True)
class ParameterSolution:
    """One branch of the parameter system: fixed values plus free parameters."""

    assignment: dict
    residual_constraints: Formula = TRUE

    def key(self):
        return tuple(sorted((k, v.key) for k, v in self.assignment.items()))


@dataclass(frozen=True)
class Branch:
    """gamma and rhs use only the ground atoms f(0), f(1), f(-1)."""

    gamma: Formula
    rhs: Poly

    def describe(self) -> str:
        text = f"f(x) = {self.rhs}"
        if self.gamma != TRUE:
            text = f"{self.gamma} and {text}"
        return text


@dataclass(frozen=True)
class SolvedForm:
    branches: tuple

    def describe(self) -> str:
        return " | ".join(b.describe() for b in self.branches)


@dataclass(frozen=True)
class ProofObligation:
    """spec plus the skolemized negation of a candidate, ready for emission."""

    spec: Formula
    skolems: tuple
    negation_constraints: tuple
    instantiations: tuple = ()
    lemmas: tuple = ()
    include_original: bool = True

    def extended(self, instantiations=(), lemmas=()) -> "ProofObligation":
        known = {canonical_key(f) for f in self.instantiations}
        new_insts = list(self.instantiations)
        for f in instantiations:
            k = canonical_key(f)
            if k not in known:
                known.add(k)
                new_insts.append(f)
        known_l = {canonical_key(f) for f in self.lemmas}
        new_lemmas = list(self.lemmas)
        for f in lemmas:
            k = canonical_key(f)
            if k not in known_l:
                known_l.add(k)
                new_lemmas.append(f)
        return ProofObligation(
            spec=self.spec,
            skolems=self.skolems,
            negation_constraints=self.negation_constraints,
            instantiations=tuple(new_insts),
            lemmas=tuple(new_lemmas),
            include_original=self.include_original,
        )


# -- template application ---------------------------------------------------


def _apply_f_definition(p: Poly, define) -> Poly:
    """Replace every f-application by define(argument), innermost first."""
    out = ZERO
    for m in p.monomials:
        term = Poly.const(m.coeff)
        for atom, e in m.powers:
            if isinstance(atom, FApp):
                arg = _apply_f_definition(atom.arg, define)
                base = define(arg)
            else:
                base = Poly.from_atom(atom)
            term = term * (base ** e)
        out = out + term
    return out


def apply_template(spec: Formula, template: Template):
    """Substitute the template for f throughout the specification.

    Returns (residuals, side) where each residual is the left side of a
    quantified equation after substitution, and side is the conjunction of
    remaining non-equation constraints (must be ground).
    """
    residuals = []
    side_parts = []
    for c in conjuncts(spec):
        if isinstance(c, Forall):
            if not isinstance(c.body, Cmp) or c.body.rel is not Rel.EQ:
                raise UnsupportedSideCondition(
                    f"quantified non-equation constraint: {c}"
                )
            residuals.append(_apply_f_definition(c.body.lhs, template.definition))
        elif isinstance(c, Cmp):
            replaced = Cmp(
                _apply_f_definition(c.lhs, template.definition), c.rel
            )
            side_parts.append(simplify(replaced))
        else:
            raise UnsupportedSideCondition(f"unsupported constraint shape: {c}")
    side = conj(side_parts)
    from .formula import free_vars

    if free_vars(side) - set(template.params):
        raise UnsupportedSideCondition(
            "side condition stays non-ground after template substitution"
        )
    return residuals, side


def extract_coefficient_system(residuals, quantified_vars) -> list:
    """Zero-polynomial rule: each coefficient over the quantified variables
    must vanish.  Returns deduplicated, sign-normalized parameter equations."""
    seen = set()
    system = []
    for resid in residuals:
        coeffs = resid.coefficients_wrt(quantified_vars)
        for exponent in sorted(coeffs):
            eq = coeffs[exponent]
            if eq.is_zero():
                continue
            if eq.leading_coeff() < 0:
                eq = -eq
            if eq.key not in seen:
                seen.add(eq.key)
                system.append(eq)
    return system


# -- parameter system solving -------------------------------------------------


_BRANCH_CAP = 8


def _find_rational_roots(coeffs: list) -> tuple:
    """All rational roots (with multiplicity stripped) of a univariate poly
    given by ascending rational coefficients, plus the unfactored remainder.

    Returns (roots, remainder_coeffs).  Raises SystemTooHard when real
    irrational roots may remain.
    """
    # strip trailing zero high-order coeffs
    while coeffs and coeffs[-1] == 0:
        coeffs.pop()
    if not coeffs:
        return [], []
    roots = []
    # factor out powers of the variable (root 0)
    while coeffs and coeffs[0] == 0:
        if 0 not in roots:
            roots.append(Q(0))
        coeffs = coeffs[1:]
    changed = True
    while changed and len(coeffs) > 1:
        changed = False
        lcm = 1
        for c in coeffs:
            lcm = lcm * c.denominator // _gcd(lcm, c.denominator)
        ints = [int(c * lcm) for c in coeffs]
        lead, const = ints[-1], ints[0]
        if const == 0:
            coeffs = coeffs[1:]
            if 0 not in roots:
                roots.append(Q(0))
            changed = True
            continue
        for p in _divisors(abs(const)):
            for q in _divisors(abs(lead)):
                for cand in (Q(p, q), Q(-p, q)):
                    if _poly_eval(coeffs, cand) == 0:
                        if cand not in roots:
                            roots.append(cand)
                        coeffs = _poly_divide_root(coeffs, cand)
                        changed = True
                        break
                if changed:
                    break
            if changed:
                break
    if len(coeffs) <= 1:
        return roots, []
    if len(coeffs) == 3:
        a0, a1, a2 = coeffs
        disc = a1 * a1 - 4 * a2 * a0
        if disc < 0:
            return roots, []  # no further real roots
    raise SystemTooHard(
        "parameter equation has non-rational real roots or resists factoring"
    )


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return abs(a)


def _divisors(n: int) -> list:
    out = [d for d in range(1, n + 1) if n % d == 0]
    return out


def _poly_eval(coeffs, value):
    total = Q(0)
    for c in reversed(coeffs):
        total = total * value + c
    return total


def _poly_divide_root(coeffs, root):
    """Synthetic division by (x - root); assumes root is exact."""
    out = [Q(0)] * (len(coeffs) - 1)
    carry = Q(0)
    for i in range(len(coeffs) - 1, 0, -1):
        carry = coeffs[i] + carry * root
        out[i - 1] = carry
    return out


def _linear_param(eq: Poly, params: tuple):
    """Find a parameter occurring linearly with a rational coefficient."""
    for name in params:
        view = eq.coefficients_wrt({name})
        degrees = {sum(e for _, e in k) for k in view}
        if degrees <= {0, 1} and 1 in degrees:
            coeff = view.get(((name, 1),), ZERO)
            if coeff.is_rational() and not coeff.is_zero():
                rest = view.get((), ZERO)
                return name, rest.scale(Q(-1) / coeff.as_rational())
    return None


def _common_monomial(eq: Poly):
    """Atoms dividing every monomial of eq, and the cofactor polynomial."""
    if len(eq.monomials) < 2:
        return [], eq
    shared: dict | None = None
    for m in eq.monomials:
        powers = {a: e for a, e in m.powers}
        if shared is None:
            shared = powers
        else:
            shared = {
                a: min(e, powers[a]) for a, e in shared.items() if a in powers
            }
        if not shared:
            return [], eq
    terms = {}
    for m in eq.monomials:
        powers = tuple(
            (a, e - shared.get(a, 0))
            for a, e in m.powers
            if e - shared.get(a, 0) > 0
        )
        key = tuple((a.key, e) for a, e in powers)
        terms[key] = (powers, m.coeff)
    cofactor = Poly.from_terms(terms)
    return sorted(shared, key=lambda a: a.key), cofactor


def _univariate_view(eq: Poly, params: tuple):
    """If eq involves exactly one parameter, return (name, ascending coeffs)."""
    present = [p for p in params if p in eq.variables(recursive=False)]
    if len(present) != 1:
        return None
    name = present[0]
    view = eq.coefficients_wrt({name})
    coeffs = [Q(0)] * (eq.degree + 1)
    for exponent, poly in view.items():
        if not poly.is_rational():
            return None
        deg = exponent[0][1] if exponent else 0
        coeffs[deg] = poly.as_rational()
    return name, coeffs


def solve_parameter_system(system, params: tuple) -> list:
    """Complete finite branch list for the parameter equations.

    Strategy, applied to exhaustion: eliminate parameters that occur
    linearly with rational coefficients; split single-monomial equations on
    their atoms; pull out common monomial factors; solve single-parameter
    equations by rational root extraction.  Raises SystemTooHard when no
    rule applies or roots escape the rationals.
    """
    solutions: list = []
    seen = set()

    def record(assignment):
        sol = ParameterSolution(
            assignment={k: v for k, v in sorted(assignment.items())}
        )
        if sol.key() not in seen:
            seen.add(sol.key())
            solutions.append(sol)

    def norm_all(eqs, assignment):
        out = []
        for eq in eqs:
            eq = eq.substitute(assignment)
            if eq.is_zero():
                continue
            if eq.is_rational():
                return None  # nonzero constant: contradictory branch
            if eq.leading_coeff() < 0:
                eq = -eq
            out.append(eq)
        return out

    def explore(eqs, assignment, depth):
        eqs = norm_all(eqs, assignment)
        if eqs is None:
            return
        if not eqs:
            record(assignment)
            return
        # rule 1: linear elimination, no branching
        for eq in eqs:
            found = _linear_param(eq, params)
            if found:
                name, value = found
                new_assignment = {
                    k: v.substitute({name: value}) for k, v in assignment.items()
                }
                new_assignment[name] = value
                explore([e for e in eqs if e is not eq], new_assignment, depth)
                return
        if depth >= _BRANCH_CAP:
            raise SystemTooHard("branch depth cap exceeded")
        # rule 2: single-monomial equations split on their atoms
        for eq in eqs:
            if len(eq.monomials) == 1:
                atoms = [a for a, _ in eq.monomials[0].powers]
                rest = [e for e in eqs if e is not eq]
                for atom in atoms:
                    if not isinstance(atom, Var):
                        raise SystemTooHard(f"non-parameter atom in system: {eq}")
                    explore(rest + [Poly.var(atom.name)], assignment, depth + 1)
                return
        # rule 3: common monomial factor -> product split
        for eq in eqs:
            shared, cofactor = _common_monomial(eq)
            if shared:
                rest = [e for e in eqs if e is not eq]
                for atom in shared:
                    if not isinstance(atom, Var):
                        raise SystemTooHard(f"non-parameter atom in system: {eq}")
                    explore(rest + [Poly.var(atom.name)], assignment, depth + 1)
                explore(rest + [cofactor], assignment, depth + 1)
                return
        # rule 4: single-parameter equation, rational roots
        for eq in eqs:
            view = _univariate_view(eq, params)
            if view:
                name, coeffs = view
                roots, _ = _find_rational_roots(list(coeffs))
                rest = [e for e in eqs if e is not eq]
                for root in roots:
                    new_assignment = {
                        k: v.substitute({name: Poly.const(root)})
                        for k, v in assignment.items()
                    }
                    new_assignment[name] = Poly.const(root)
                    explore(rest, new_assignment, depth + 1)
                return
        raise SystemTooHard(f"no solving rule applies to {[str(e) for e in eqs]}")

    explore(list(system), {}, 0)
    return solutions


# -- solved form construction --------------------------------------------------


def lagrange_eliminate(sol: ParameterSolution, template: Template) -> Branch:
    """Replace free parameters by their interpolation images at 0, 1, -1."""
    values: dict = {}
    assigned = sol.assignment
    c = template.param("c")
    a = template.param("a")
    b = template.param("b")
    c_val = ZERO
    if c is not None:
        c_val = assigned.get(c)
        if c_val is None:
            c_val = F0
        values[c] = c_val
    a_val = ZERO
    if a is not None:
        a_val = assigned.get(a)
        if a_val is None:
            a_val = (F1 + FM1).scale(Q(1, 2)) - c_val
        values[a] = a_val
    if b is not None:
        b_val = assigned.get(b)
        if b_val is None:
            b_val = F1 - a_val - c_val
        values[b] = b_val
    # fixed parameters may still reference free ones; close the mapping
    closed = {k: v.substitute(values) for k, v in values.items()}
    rhs = template.definition(Poly.var("x")).substitute(closed)
    gamma = simplify(substitute_formula(sol.residual_constraints, closed))
    return Branch(gamma=gamma, rhs=rhs)


def dedup_branches(branches) -> tuple:
    out = []
    seen = set()
    for br in branches:
        key = (canonical_key(br.gamma), br.rhs.key)
        if key not in seen:
            seen.add(key)
            out.append(br)
    unconstrained = {br.rhs.key for br in out if br.gamma == TRUE}
    out = [
        br for br in out if br.gamma == TRUE or br.rhs.key not in unconstrained
    ]
    return tuple(out)


def _expand_f(p: Poly, rhs: Poly) -> Poly:
    """Expand f-applications by the candidate definition, innermost first.

    An application whose expansion mentions itself (the interpolation atoms
    f(0), f(1), f(-1)) is kept opaque.
    """
    out = ZERO
    for m in p.monomials:
        term = Poly.const(m.coeff)
        for atom, e in m.powers:
            if isinstance(atom, FApp):
                arg = _expand_f(atom.arg, rhs)
                expansion = rhs.substitute({"x": arg})
                if FApp(arg) in {a for a in expansion.all_atoms()}:
                    base = Poly.from_atom(FApp(arg))
                else:
                    base = expansion
            else:
                base = Poly.from_atom(atom)
            term = term * (base ** e)
        out = out + term
    return out


def _gamma_rewrites(gamma: Formula) -> dict:
    """Equality conjuncts of gamma usable as atom rewrites."""
    rewrites: dict = {}
    for part in conjuncts(gamma):
        if isinstance(part, Cmp) and part.rel is Rel.EQ:
            for atom in part.lhs.atoms():
                single = _linear_atom_solution(part.lhs, atom)
                if single is not None:
                    rewrites[atom] = single
                    break
    return rewrites


def _linear_atom_solution(p: Poly, atom) -> Poly | None:
    coeff = ZERO
    rest_terms = {}
    for m in p.monomials:
        powers = dict(m.powers)
        if atom in powers:
            if powers[atom] != 1 or len(powers) != 1:
                return None
            coeff = coeff + Poly.const(m.coeff)
        else:
            rest_terms[m.powkey] = (m.powers, m.coeff)
    if not coeff.is_rational() or coeff.is_zero():
        return None
    rest = Poly.from_terms(rest_terms)
    return rest.scale(Q(-1) / coeff.as_rational())


def verify_candidate(spec: Formula, sf: SolvedForm) -> bool:
    """Check that every branch satisfies the specification identically."""
    for br in sf.branches:
        rewrites = _gamma_rewrites(br.gamma)
        for c in conjuncts(spec):
            if isinstance(c, Forall):
                if not isinstance(c.body, Cmp) or c.body.rel is not Rel.EQ:
                    return False
                resid = _expand_f(c.body.lhs, br.rhs)
                if rewrites:
                    resid = resid.substitute_atoms(rewrites)
                if not resid.is_zero():
                    return False
            else:
                expanded = simplify(
                    substituted_ground(c, br.rhs, rewrites)
                )
                if expanded == TRUE:
                    continue
                gamma_parts = {canonical_key(g) for g in conjuncts(br.gamma)}
                if canonical_key(expanded) not in gamma_parts:
                    return False
    return True


def substituted_ground(c: Formula, rhs: Poly, rewrites: dict) -> Formula:
    if isinstance(c, Cmp):
        p = _expand_f(c.lhs, rhs)
        if rewrites:
            p = p.substitute_atoms(rewrites)
        return Cmp(p, c.rel)
    if isinstance(c, Not):
        return Not(substituted_ground(c.arg, rhs, rewrites))
    if isinstance(c, (And, Or)):
        cls = type(c)
        return cls(tuple(substituted_ground(a, rhs, rewrites) for a in c.args))
    raise TypeError(f"unsupported ground conjunct {c!r}")


def build_obligation(spec: Formula, sf: SolvedForm) -> ProofObligation:
    """Skolemize the negated candidate: one fresh constant per branch."""
    from .formula import free_vars, formula_atoms

    taken = set()
    for c in conjuncts(spec):
        if isinstance(c, Forall):
            taken |= set(c.vars)
    taken |= free_vars(spec)
    skolems = []
    constraints = []
    index = 1
    for br in sf.branches:
        name = f"c{index}"
        while name in taken or name in skolems:
            index += 1
            name = f"c{index}"
        skolems.append(name)
        index += 1
        diseq = simplify(
            Cmp(Poly.fapp(Poly.var(name)) - br.rhs.substitute({"x": Poly.var(name)}), Rel.NE)
        )
        if br.gamma == TRUE:
            constraints.append(diseq)
        else:
            constraints.append(simplify(disj([negate(br.gamma), diseq])))
    return ProofObligation(
        spec=spec,
        skolems=tuple(skolems),
        negation_constraints=tuple(constraints),
    )


# -- the per-template synthesis entry point -----------------------------------


@dataclass(frozen=True)
class SynthesisResult:
    template: Template
    solved_form: SolvedForm
    verified: bool


def synthesize(problem, kind: TemplateKind) -> SynthesisResult | None:
    """Candidate solved form for one template; None when no branch survives."""
    spec = problem.spec
    taken = set()
    for c in conjuncts(spec):
        if isinstance(c, Forall):
            taken |= set(c.vars)
    template = Template.for_problem(kind, taken)
    residuals, side = apply_template(spec, template)
    qvars = set()
    for c in conjuncts(spec):
        if isinstance(c, Forall):
            qvars |= set(c.vars)
    system = extract_coefficient_system(residuals, qvars)
    solutions = solve_parameter_system(system, template.params)
    if side != TRUE:
        solutions = [
            ParameterSolution(
                assignment=s.assignment,
                residual_constraints=simplify(
                    substitute_formula(side, s.assignment)
                ),
            )
            for s in solutions
        ]
        solutions = [
            s for s in solutions if s.residual_constraints != FALSE
        ]
    branches = dedup_branches(lagrange_eliminate(s, template) for s in solutions)
    if not branches:
        return None
    sf = SolvedForm(branches=branches)
    return SynthesisResult(
        template=template,
        solved_form=sf,
        verified=verify_candidate(spec, sf),
    )
