"""Bundled fallback solver: bounded refutation for emitted UFNRA scripts.

Reads an SMT-LIB2 script of the fragment this package emits (one unary
uninterpreted function over the reals, polynomial atoms), instantiates the
universally quantified assertions with a budgeted ground term set, and
saturates the ground problem with exact algebraic reasoning: linear atom
elimination, congruence via normalization, single-monomial and quadratic
case splits.  Prints ``unsat`` when every branch closes, else ``unknown``.
It never answers ``sat``, so it is sound for refutation portfolios.
"""

from __future__ import annotations

import argparse
import heapq
import sys
import time
from fractions import Fraction

from .formula import (
    And,
    Cmp,
    FALSE,
    Forall,
    Formula,
    Implies,
    Not,
    Or,
    Rel,
    TRUE,
    canonical_key,
    conjuncts,
    negate,
    simplify,
    substitute_formula,
)
from .poly import FApp, Monomial, Poly, Var, ZERO, ONE

Q = Fraction


# -- script reading -----------------------------------------------------------


class UnsupportedScript(Exception):
    pass


def _tokenize_sexp(text: str):
    out = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch in " \t\r\n":
            i += 1
        elif ch == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif ch in "()":
            out.append(ch)
            i += 1
        elif ch == "|":
            j = text.index("|", i + 1)
            out.append(text[i + 1 : j])
            i = j + 1
        elif ch == '"':
            j = text.index('"', i + 1)
            out.append(text[i : j + 1])
            i = j + 1
        else:
            j = i
            while j < n and text[j] not in " \t\r\n();":
                j += 1
            out.append(text[i:j])
            i = j
    return out


def _parse_sexps(tokens):
    stack = [[]]
    for tok in tokens:
        if tok == "(":
            stack.append([])
        elif tok == ")":
            done = stack.pop()
            stack[-1].append(done)
        else:
            stack[-1].append(tok)
    if len(stack) != 1:
        raise UnsupportedScript("unbalanced parentheses")
    return stack[0]


def _number(token: str) -> Fraction | None:
    try:
        if "." in token:
            whole, frac = token.split(".")
            sign = -1 if whole.startswith("-") else 1
            whole = whole.lstrip("-")
            return sign * Q(int(whole + frac), 10 ** len(frac))
        return Q(int(token))
    except ValueError:
        return None


class ScriptReader:
    """Convert a script into formulas over the package's polynomial core."""

    def __init__(self, fname: str = "f"):
        self.fname = fname
        self.consts: list = []
        self.assertions: list = []

    def read(self, text: str):
        for form in _parse_sexps(_tokenize_sexp(text)):
            if not isinstance(form, list) or not form:
                continue
            head = form[0]
            if head == "assert":
                self.assertions.append(self._formula(form[1], {}))
            elif head == "declare-const":
                self.consts.append(form[1])
            elif head == "declare-fun":
                name, params, ret = form[1], form[2], form[3]
                if params == []:
                    self.consts.append(name)
                elif name == self.fname and params == ["Real"] and ret == "Real":
                    pass
                else:
                    raise UnsupportedScript(f"unsupported declaration {name}")
            elif head in ("set-logic", "set-info", "set-option", "check-sat", "exit", "get-info"):
                continue
            else:
                raise UnsupportedScript(f"unsupported command {head}")
        return self

    def _formula(self, form, bound: dict) -> Formula:
        if form == "true":
            return TRUE
        if form == "false":
            return FALSE
        if not isinstance(form, list) or not form:
            raise UnsupportedScript(f"unexpected formula {form!r}")
        head = form[0]
        if head == "not":
            return Not(self._formula(form[1], bound))
        if head == "and":
            return And(tuple(self._formula(a, bound) for a in form[1:]))
        if head == "or":
            return Or(tuple(self._formula(a, bound) for a in form[1:]))
        if head == "=>":
            out = self._formula(form[-1], bound)
            for a in reversed(form[1:-1]):
                out = Implies(self._formula(a, bound), out)
            return out
        if head in ("forall", "exists"):
            names = tuple(b[0] for b in form[1])
            inner = dict(bound)
            for name in names:
                inner[name] = Poly.var(name)
            body = self._formula(form[2], inner)
            if head == "exists":
                raise UnsupportedScript("existential quantifier")
            return Forall(names, body)
        if head in ("=", "<=", "<", ">=", ">"):
            args = [self._term(a, bound) for a in form[1:]]
            if len(args) != 2:
                raise UnsupportedScript("chained comparisons unsupported")
            lhs, rhs = args
            if head == "=":
                return Cmp(lhs - rhs, Rel.EQ)
            if head == "<=":
                return Cmp(lhs - rhs, Rel.LE)
            if head == "<":
                return Cmp(lhs - rhs, Rel.LT)
            if head == ">=":
                return Cmp(rhs - lhs, Rel.LE)
            return Cmp(rhs - lhs, Rel.LT)
        raise UnsupportedScript(f"unsupported connective {head!r}")

    def _term(self, form, bound: dict) -> Poly:
        if isinstance(form, str):
            value = _number(form)
            if value is not None:
                return Poly.const(value)
            if form in bound:
                return bound[form]
            return Poly.var(form)
        head = form[0]
        args = [self._term(a, bound) for a in form[1:]]
        if head == "+":
            out = ZERO
            for a in args:
                out = out + a
            return out
        if head == "-":
            if len(args) == 1:
                return -args[0]
            out = args[0]
            for a in args[1:]:
                out = out - a
            return out
        if head == "*":
            out = ONE
            for a in args:
                out = out * a
            return out
        if head == "/":
            if len(args) != 2 or not args[1].is_rational() or args[1].is_zero():
                raise UnsupportedScript("division only by nonzero rationals")
            return args[0].scale(Q(1) / args[1].as_rational())
        if head == self.fname:
            if len(args) != 1:
                raise UnsupportedScript("f is unary")
            return Poly.fapp(args[0])
        raise UnsupportedScript(f"unsupported term head {head!r}")


# -- ground term harvesting -----------------------------------------------------


def _poly_size(p: Poly) -> int:
    return p.size()


def _ground_terms_of(phi: Formula, acc: dict):
    """Ground f-arguments and f-applications occurring anywhere in phi."""

    def visit_poly(p: Poly, quantified: set):
        for m in p.monomials:
            for a, _ in m.powers:
                if isinstance(a, FApp):
                    if not (a.arg.variables() & quantified):
                        acc.setdefault(a.arg.key, a.arg)
                        app = Poly.from_atom(a)
                        if not (app.variables() & quantified):
                            acc.setdefault(app.key, app)
                    visit_poly(a.arg, quantified)

    def visit(f: Formula, quantified: set):
        if isinstance(f, Cmp):
            visit_poly(f.lhs, quantified)
        elif isinstance(f, Not):
            visit(f.arg, quantified)
        elif isinstance(f, (And, Or)):
            for a in f.args:
                visit(a, quantified)
        elif isinstance(f, Implies):
            visit(f.lhs, quantified)
            visit(f.rhs, quantified)
        elif isinstance(f, Forall):
            visit(f.body, quantified | set(f.vars))

    visit(phi, set())


def _rational_consts_of(phi: Formula, acc: set):
    def visit_poly(p: Poly):
        for m in p.monomials:
            if m.coeff not in (0, 1, -1):
                acc.add(abs(m.coeff))
            for a, _ in m.powers:
                if isinstance(a, FApp):
                    visit_poly(a.arg)

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
        elif isinstance(f, Forall):
            visit(f.body)

    visit(phi)


# -- the ground algebraic core ---------------------------------------------------


class _Contradiction(Exception):
    pass


class _GiveUp(Exception):
    pass


class GroundState:
    """One DPLL leaf: solved atoms, pending equations, disequations, inequalities.

    Saturation is worklist-driven and processes small equations first; an
    equation is reexamined only when an atom it mentions gets assigned.
    """

    __slots__ = ("solved", "queue", "stuck", "diseqs", "ineqs", "splits_left", "expired")

    def __init__(self, splits_left: int, expired=None):
        self.solved: dict = {}
        self.queue: list = []  # heap of (size, key, poly)
        self.stuck: list = []
        self.diseqs: list = []
        self.ineqs: list = []  # (poly, strict) meaning poly > 0 / poly >= 0
        self.splits_left = splits_left
        self.expired = expired or (lambda: False)

    def clone(self) -> "GroundState":
        out = GroundState(self.splits_left, self.expired)
        out.solved = dict(self.solved)
        out.queue = list(self.queue)
        out.stuck = list(self.stuck)
        out.diseqs = list(self.diseqs)
        out.ineqs = list(self.ineqs)
        return out

    def _push(self, eq: Poly):
        heapq.heappush(self.queue, (eq.size(), eq.key, eq))

    # -- assimilation ----------------------------------------------------

    def add_formula(self, phi: Formula):
        if not isinstance(phi, Cmp):
            raise TypeError(f"not a literal: {phi}")
        p = phi.lhs.substitute_atoms(self.solved)
        if phi.rel is Rel.EQ:
            self._push(p)
        elif phi.rel is Rel.NE:
            self.diseqs.append(p)
        elif phi.rel is Rel.LE:
            self.ineqs.append((-p, False))
        else:
            self.ineqs.append((-p, True))

    def _occurs(self, atom, value: Poly) -> bool:
        return atom.key in value.atom_keys()

    def _assign(self, atom, value: Poly):
        value = value.substitute_atoms(self.solved)
        if self._occurs(atom, value):
            raise ValueError(f"occurs check failed for {atom!r}")
        step = {atom: value}
        new_solved: dict = {}
        for key, image in self.solved.items():
            rekeyed = Poly.from_atom(key).substitute_atoms(step)
            new_image = image.substitute_atoms(step)
            if rekeyed == Poly.from_atom(key):
                new_key = key
            else:
                assert len(rekeyed.monomials) == 1
                new_key = rekeyed.monomials[0].powers[0][0]
            if new_key in new_solved:
                self.queue.append(new_solved[new_key] - new_image)
            elif new_key == atom:
                self.queue.append(value - new_image)
            else:
                new_solved[new_key] = new_image
        new_solved[atom] = value
        self.solved = new_solved
        # touched stuck constraints move back to the work queue; queued
        # entries are renormalized when popped, so they stay put
        akey = atom.key
        still_stuck = []
        for e in self.stuck:
            if akey in e.atom_keys():
                self._push(e.substitute_atoms(step))
            else:
                still_stuck.append(e)
        self.stuck = still_stuck
        self.diseqs = [d.substitute_atoms(step) for d in self.diseqs]
        self.ineqs = [(p.substitute_atoms(step), s) for p, s in self.ineqs]

    # -- saturation -------------------------------------------------------

    def _solve_linear_atom(self, eq: Poly):
        atoms = sorted(eq.atoms(), key=lambda a: a.key, reverse=True)
        for atom in atoms:
            coeff = Q(0)
            rest_terms = {}
            usable = True
            for m in eq.monomials:
                powers = dict(m.powers)
                if atom in powers:
                    if powers[atom] != 1 or len(powers) != 1:
                        usable = False
                        break
                    coeff += m.coeff
                else:
                    rest_terms[m.powkey] = (m.powers, m.coeff)
            if not usable or coeff == 0:
                continue
            value = Poly.from_terms(rest_terms).scale(Q(-1) / coeff)
            if self._occurs(atom, value):
                continue
            return atom, value
        return None

    def saturate(self):
        """Exhaust non-branching rules.  Raises _Contradiction when closed."""
        ticks = 0
        while True:
            while self.queue:
                ticks += 1
                if ticks % 64 == 0 and self.expired():
                    raise _GiveUp()
                eq = heapq.heappop(self.queue)[2].substitute_atoms(self.solved)
                if eq.is_zero():
                    continue
                if eq.is_rational():
                    raise _Contradiction()
                found = self._solve_linear_atom(eq)
                if found is None and len(eq.monomials) == 1:
                    distinct = [a for a, _ in eq.monomials[0].powers]
                    if len(distinct) == 1:
                        found = (distinct[0], ZERO)
                if found is not None:
                    self._assign(*found)
                else:
                    self.stuck.append(eq)
            # disequations and inequalities can close the branch or add facts
            next_diseqs = []
            for d in self.diseqs:
                d = d.substitute_atoms(self.solved)
                if d.is_zero():
                    raise _Contradiction()
                if not d.is_rational():
                    next_diseqs.append(d)
            self.diseqs = next_diseqs
            next_ineqs = []
            for p, strict in self.ineqs:
                p = p.substitute_atoms(self.solved)
                if p.is_rational():
                    c = p.as_rational()
                    if (strict and c <= 0) or (not strict and c < 0):
                        raise _Contradiction()
                    continue
                next_ineqs.append((p, strict))
            self.ineqs = next_ineqs
            for p, strict in self.ineqs:
                for q, strict2 in self.ineqs:
                    if (p + q).is_zero():
                        if strict or strict2:
                            raise _Contradiction()
                        if not any(e == p for e in self.stuck):
                            self._push(p)
            if not self.queue:
                return

    # -- branching rules ----------------------------------------------------

    def algebraic_split(self):
        """A case split justified by real arithmetic, or None.

        Returns a list of callables, each mutating a cloned state.
        """
        if self.splits_left <= 0:
            return None
        ordered = sorted(self.stuck, key=lambda e: (e.size(), e.key))
        for eq in ordered:
            if len(eq.monomials) == 1:
                atoms = [a for a, _ in eq.monomials[0].powers]
                if len(atoms) > 1:
                    return [self._branch_assign(eq, a, ZERO) for a in atoms]
        for eq in ordered:
            quad = self._quadratic_roots(eq)
            if quad is not None:
                atom, roots = quad
                return [self._branch_assign(eq, atom, r) for r in roots]
        return None

    def _branch_assign(self, eq: Poly, atom, value: Poly):
        def apply(state: "GroundState"):
            state.splits_left -= 1
            state.stuck = [e for e in state.stuck if e != eq]
            state._assign(atom, value.substitute_atoms(state.solved))

        return apply

    def _quadratic_roots(self, eq: Poly):
        for atom in sorted(eq.atoms(), key=lambda a: a.key, reverse=True):
            alpha = ZERO
            beta_terms = {}
            gamma_terms = {}
            ok = True
            for m in eq.monomials:
                powers = dict(m.powers)
                e = powers.get(atom, 0)
                others = [(a, x) for a, x in m.powers if a != atom]
                # the view alpha*A^2 + beta*A + gamma needs every other
                # factor (and the constant part) free of A, even nested
                nested = any(
                    isinstance(a, FApp) and atom in a.arg.all_atoms()
                    for a, _ in others
                )
                if nested:
                    ok = False
                    break
                if e == 0:
                    gamma_terms[m.powkey] = (m.powers, m.coeff)
                elif e == 1:
                    key = tuple((a.key, x) for a, x in others)
                    if key in beta_terms:
                        old_p, old_c = beta_terms[key]
                        beta_terms[key] = (old_p, old_c + m.coeff)
                    else:
                        beta_terms[key] = (tuple(others), m.coeff)
                elif e == 2:
                    if others:
                        ok = False
                        break
                    alpha = alpha + Poly.const(m.coeff)
                else:
                    ok = False
                    break
            if not ok or not alpha.is_rational() or alpha.is_zero():
                continue
            a = alpha.as_rational()
            beta = Poly.from_terms(beta_terms)
            gamma = Poly.from_terms(gamma_terms)
            disc = beta * beta - gamma.scale(4 * a)
            root = _poly_sqrt(disc)
            if root is None:
                continue
            half = Q(1, 2) / a
            r1 = (-beta + root).scale(half)
            r2 = (-beta - root).scale(half)
            if r1 == r2:
                return atom, [r1]
            return atom, [r1, r2]
        return None


def _rat_sqrt(c: Fraction) -> Fraction | None:
    if c < 0:
        return None
    num = _isqrt(c.numerator)
    den = _isqrt(c.denominator)
    if num is None or den is None:
        return None
    return Q(num, den)


def _isqrt(n: int) -> int | None:
    r = int(n ** 0.5)
    for cand in (r - 1, r, r + 1):
        if cand >= 0 and cand * cand == n:
            return cand
    return None


def _poly_sqrt(p: Poly) -> Poly | None:
    """Square root of a rational constant or a perfect-square monomial."""
    if p.is_zero():
        return ZERO
    if len(p.monomials) != 1:
        return None
    m = p.monomials[0]
    coeff = _rat_sqrt(m.coeff)
    if coeff is None:
        return None
    if any(e % 2 for _, e in m.powers):
        return None
    halved = tuple((a, e // 2) for a, e in m.powers)
    return Poly((Monomial(coeff, halved),))


# -- the refuter -------------------------------------------------------------


class Refuter:
    def __init__(
        self,
        rounds: int = 2,
        max_single_terms: int = 64,
        max_pair_base: int = 20,
        max_instances: int = 1200,
        alg_splits: int = 1,
        node_cap: int = 400,
        time_limit: float = 60.0,
    ):
        self.rounds = rounds
        self.max_single_terms = max_single_terms
        self.max_pair_base = max_pair_base
        self.max_instances = max_instances
        self.alg_splits = alg_splits
        self.node_cap = node_cap
        self.time_limit = time_limit
        self.deadline = None
        self.nodes = 0

    def _expired(self) -> bool:
        return self.deadline is not None and time.monotonic() > self.deadline

    # -- instantiation ----------------------------------------------------

    def _instantiate_all(self, consts, quantified, ground):
        """Budgeted rounds of ground instantiation."""
        instances = list(ground)
        seen = {canonical_key(g) for g in ground}
        base: dict = {}
        for name in consts:
            p = Poly.var(name)
            base[p.key] = p
        for p in (ZERO, ONE):
            base[p.key] = p
        rationals: set = set()
        for phi in quantified + list(ground):
            _rational_consts_of(phi, rationals)
            _ground_terms_of(phi, base)
        for value in sorted(rationals):
            p = Poly.const(value)
            base.setdefault(p.key, p)

        for _ in range(self.rounds):
            if self._expired():
                break
            base_terms = sorted(base.values(), key=lambda p: (p.size(), p.key))
            pair_base = base_terms[: self.max_pair_base]
            singles = self._single_terms(base_terms[: max(24, self.max_pair_base)])
            added = False
            for phi in quantified:
                for sigma in self._substitutions(phi, singles, pair_base):
                    if len(instances) >= self.max_instances or self._expired():
                        break
                    inst = simplify(substitute_formula(phi.body, sigma))
                    if inst == TRUE:
                        continue
                    key = canonical_key(inst)
                    if key in seen:
                        continue
                    seen.add(key)
                    instances.append(inst)
                    added = True
                    _ground_terms_of(inst, base)
            if not added:
                break
        return instances

    def _single_terms(self, base_terms):
        combos: dict = {}
        for t in base_terms:
            combos[t.key] = t
        for i, u in enumerate(base_terms):
            if self._expired():
                break
            for v in base_terms[i:]:
                for w in (u + v, u * v):
                    combos.setdefault(w.key, w)
            for v in base_terms:
                w = u - v
                combos.setdefault(w.key, w)
        for u in base_terms:
            combos.setdefault(Poly.fapp(u).key, Poly.fapp(u))
        for u in list(combos.values()):
            combos.setdefault((-u).key, -u)
        out = sorted(combos.values(), key=lambda p: (p.size(), p.key))
        return out[: self.max_single_terms]

    def _substitutions(self, phi: Forall, singles, pair_base):
        names = phi.vars
        if len(names) == 1:
            for t in singles:
                yield {names[0]: t}
        elif len(names) == 2:
            for u in pair_base:
                for v in pair_base:
                    yield {names[0]: u, names[1]: v}
        else:
            small = pair_base[: max(4, self.max_pair_base // 3)]
            import itertools

            for images in itertools.product(small, repeat=len(names)):
                yield dict(zip(names, images))

    # -- search -----------------------------------------------------------

    def solve_script(self, text: str) -> str:
        try:
            reader = ScriptReader().read(text)
        except (UnsupportedScript, IndexError, ValueError):
            return "unknown"
        self.deadline = time.monotonic() + self.time_limit
        quantified = []
        ground = []
        for phi in reader.assertions:
            phi = simplify(phi)
            if phi == FALSE:
                return "unsat"
            if phi == TRUE:
                continue
            for part in conjuncts(phi):
                if isinstance(part, Forall):
                    quantified.append(part)
                else:
                    ground.append(part)
        try:
            instances = self._instantiate_all(reader.consts, quantified, ground)
        except (UnsupportedScript, ValueError):
            return "unknown"
        self.nodes = 0
        try:
            closed = self._search(
                instances, GroundState(self.alg_splits, expired=self._expired)
            )
        except (RecursionError, _GiveUp):
            return "unknown"
        return "unsat" if closed else "unknown"

    def _search(self, pending: list, state: GroundState) -> bool:
        """True when every branch below closes with a contradiction."""
        self.nodes += 1
        if self.nodes > self.node_cap or self._expired():
            return False
        pending = list(pending)
        try:
            while pending:
                phi = pending.pop(0)
                if phi == TRUE:
                    continue
                if phi == FALSE:
                    raise _Contradiction()
                if isinstance(phi, Cmp):
                    state.add_formula(phi)
                elif isinstance(phi, And):
                    pending = list(phi.args) + pending
                elif isinstance(phi, Not):
                    pending.insert(0, negate(phi.arg))
                elif isinstance(phi, Implies):
                    pending.insert(0, Or((negate(phi.lhs), phi.rhs)))
                elif isinstance(phi, Or):
                    state.saturate()
                    for arm in phi.args:
                        branch = state.clone()
                        if not self._search([arm] + pending, branch):
                            return False
                    return True
                elif isinstance(phi, Forall):
                    continue  # quantified leftovers were instantiated upfront
                else:
                    return False
            state.saturate()
        except _Contradiction:
            return True
        except _GiveUp:
            return False
        split = state.algebraic_split()
        if split is None:
            return False
        for apply_case in split:
            branch = state.clone()
            try:
                apply_case(branch)
            except _Contradiction:
                continue
            except ValueError:
                return False
            if not self._search([], branch):
                return False
        return True


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="funeq-refute",
        description="bounded UFNRA refutation for funeq-emitted scripts",
    )
    parser.add_argument("script", help="SMT-LIB2 file")
    parser.add_argument("--rounds", type=int, default=2)
    parser.add_argument("--max-single-terms", type=int, default=64)
    parser.add_argument("--max-pair-base", type=int, default=20)
    parser.add_argument("--max-instances", type=int, default=1200)
    parser.add_argument("--alg-splits", type=int, default=1)
    parser.add_argument("--node-cap", type=int, default=400)
    parser.add_argument("--time-limit", type=float, default=60.0)
    args = parser.parse_args(argv)
    with open(args.script, encoding="utf-8") as handle:
        text = handle.read()
    refuter = Refuter(
        rounds=args.rounds,
        max_single_terms=args.max_single_terms,
        max_pair_base=args.max_pair_base,
        max_instances=args.max_instances,
        alg_splits=args.alg_splits,
        node_cap=args.node_cap,
        time_limit=args.time_limit,
    )
    print(refuter.solve_script(text), flush=True)
    return 0


if __name__ == "__main__":
    sys.exit(main())
