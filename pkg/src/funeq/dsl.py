"""Parser and printer for the .feq problem language.

Grammar::

    problem     := statement+
    statement   := "find" "f" ";"
                 | "forall" var+ "." comparison ";"
                 | "where" comparison ("," comparison)* ";"
    comparison  := term REL term          REL in  = != <= < >= >
    term        := sum of products of factors
    factor      := NUMBER | VAR | "f" "(" term ")" | "(" term ")"
                 | "-" factor | factor "^" POSINT

Division is allowed only by nonzero rational literals.  `f` is the single
function symbol; anything else applied to arguments is rejected.  `#` starts
a comment running to the end of the line.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction

from .formula import (
    And,
    Cmp,
    Forall,
    Formula,
    Not,
    Or,
    Rel,
    TRUE,
    conj,
    conjuncts,
    free_vars,
    simplify,
)
from .poly import FApp, Poly, Var

Q = Fraction

RESERVED = {"forall", "find", "where", "domain", "f", "exists", "and", "or", "not"}


class ProblemSyntaxError(ValueError):
    """Malformed problem text; carries the offending position."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class UnsupportedFeature(ValueError):
    """Syntactically valid input outside the supported fragment."""


@dataclass(frozen=True)
class Problem:
    """A parsed specification for a single unknown unary function f."""

    name: str
    spec: Formula
    declared_constants: frozenset = field(default_factory=frozenset)
    source_note: str | None = None

    def quantified_conjuncts(self) -> tuple:
        return tuple(c for c in conjuncts(self.spec) if isinstance(c, Forall))

    def ground_conjuncts(self) -> tuple:
        return tuple(c for c in conjuncts(self.spec) if not isinstance(c, Forall))


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>\#[^\n]*)
  | (?P<number>\d+(?:\.\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op><=|>=|!=|[-+*/^();.,=<>])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    line: int
    column: int


def _tokenize(text: str) -> list:
    tokens = []
    line = 1
    col = 1
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ProblemSyntaxError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        chunk = m.group()
        if kind not in ("ws", "comment"):
            tokens.append(_Tok(kind, chunk, line, col))
        newlines = chunk.count("\n")
        if newlines:
            line += newlines
            col = len(chunk) - chunk.rfind("\n")
        else:
            col += len(chunk)
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    def _err(self, message: str) -> ProblemSyntaxError:
        if self.pos < len(self.tokens):
            t = self.tokens[self.pos]
            return ProblemSyntaxError(message, t.line, t.column)
        last = self.tokens[-1] if self.tokens else _Tok("", "", 1, 1)
        return ProblemSyntaxError(message, last.line, last.column + len(last.text))

    def peek(self) -> _Tok | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def next(self) -> _Tok:
        tok = self.peek()
        if tok is None:
            raise self._err("unexpected end of input")
        self.pos += 1
        return tok

    def expect(self, text: str) -> _Tok:
        tok = self.peek()
        if tok is None or tok.text != text:
            raise self._err(f"expected {text!r}")
        return self.next()

    def at(self, text: str) -> bool:
        tok = self.peek()
        return tok is not None and tok.text == text

    # -- statements ----------------------------------------------------

    def parse_problem(self, name: str) -> Problem:
        axioms: list[Formula] = []
        ground: list[Formula] = []
        saw_statement = False
        while self.peek() is not None:
            tok = self.peek()
            if tok.text == "find":
                self.next()
                self.expect("f")
                self.expect(";")
            elif tok.text == "forall":
                axioms.append(self._parse_axiom())
            elif tok.text == "where":
                self.next()
                ground.append(self._parse_comparison(bound=()))
                while self.at(","):
                    self.next()
                    ground.append(self._parse_comparison(bound=()))
                self.expect(";")
            elif tok.text == "domain":
                raise UnsupportedFeature(
                    "domain restrictions are not supported; f must be total on the reals"
                )
            else:
                raise self._err("expected a statement (find / forall / where)")
            saw_statement = True
        if not saw_statement or not axioms:
            raise ProblemSyntaxError("problem contains no forall axiom", 1, 1)
        for g in ground:
            if free_vars(g):
                raise ProblemSyntaxError(
                    f"where-constraint is not ground: {g}", 1, 1
                )
        spec = simplify(conj(axioms + ground))
        constants = frozenset(_rational_constants(spec))
        return Problem(name=name, spec=spec, declared_constants=constants)

    def _parse_axiom(self) -> Formula:
        self.expect("forall")
        names = []
        while True:
            tok = self.peek()
            if tok is None:
                raise self._err("unterminated quantifier prefix")
            if tok.kind == "name" and tok.text not in RESERVED:
                if tok.text in names:
                    raise self._err(f"duplicate quantified variable {tok.text!r}")
                names.append(tok.text)
                self.next()
            elif tok.text == ".":
                self.next()
                break
            else:
                raise self._err("expected a variable name or '.'")
        if not names:
            raise self._err("empty quantifier prefix")
        body = self._parse_comparison(bound=tuple(names))
        self.expect(";")
        loose = free_vars(body) - set(names)
        if loose:
            raise UnsupportedFeature(
                f"free variables {sorted(loose)} are not bound by the quantifier"
            )
        return Forall(tuple(names), body)

    # -- terms ----------------------------------------------------------

    def _parse_comparison(self, bound: tuple) -> Formula:
        lhs = self._parse_term(bound)
        tok = self.peek()
        if tok is None or tok.text not in ("=", "!=", "<=", "<", ">=", ">"):
            raise self._err("expected a comparison operator")
        op = self.next().text
        rhs = self._parse_term(bound)
        diff = lhs - rhs
        if op == "=":
            return Cmp(diff, Rel.EQ)
        if op == "!=":
            return Cmp(diff, Rel.NE)
        if op == "<=":
            return Cmp(diff, Rel.LE)
        if op == "<":
            return Cmp(diff, Rel.LT)
        if op == ">=":
            return Cmp(rhs - lhs, Rel.LE)
        return Cmp(rhs - lhs, Rel.LT)

    def _parse_term(self, bound: tuple) -> Poly:
        node = self._parse_product(bound)
        while True:
            tok = self.peek()
            if tok is not None and tok.text == "+":
                self.next()
                node = node + self._parse_product(bound)
            elif tok is not None and tok.text == "-":
                self.next()
                node = node - self._parse_product(bound)
            else:
                return node

    def _parse_product(self, bound: tuple) -> Poly:
        node = self._parse_factor(bound)
        while True:
            tok = self.peek()
            if tok is not None and tok.text == "*":
                self.next()
                node = node * self._parse_factor(bound)
            elif tok is not None and tok.text == "/":
                self.next()
                divisor_tok = self.peek()
                divisor = self._parse_factor(bound)
                if not divisor.is_rational() or divisor.as_rational() == 0:
                    raise ProblemSyntaxError(
                        "division is only allowed by nonzero rational constants",
                        divisor_tok.line if divisor_tok else 1,
                        divisor_tok.column if divisor_tok else 1,
                    )
                node = node.scale(Q(1) / divisor.as_rational())
            else:
                return node

    def _parse_factor(self, bound: tuple) -> Poly:
        tok = self.peek()
        if tok is None:
            raise self._err("unexpected end of term")
        if tok.text == "-":
            self.next()
            return -self._parse_factor(bound)
        if tok.text == "(":
            self.next()
            inner = self._parse_term(bound)
            self.expect(")")
            return self._maybe_power(inner, bound)
        if tok.kind == "number":
            self.next()
            if "." in tok.text:
                whole, frac = tok.text.split(".")
                value = Q(int(whole + frac), 10 ** len(frac))
            else:
                value = Q(int(tok.text))
            return self._maybe_power(Poly.const(value), bound)
        if tok.kind == "name":
            if tok.text == "f":
                self.next()
                self.expect("(")
                arg = self._parse_term(bound)
                self.expect(")")
                return self._maybe_power(Poly.fapp(arg), bound)
            if tok.text in RESERVED:
                raise self._err(f"unexpected keyword {tok.text!r} in a term")
            name = self.next().text
            if self.at("("):
                raise UnsupportedFeature(
                    f"only the unary function f is supported, found {name}(...)"
                )
            return self._maybe_power(Poly.var(name), bound)
        raise self._err(f"unexpected token {tok.text!r}")

    def _maybe_power(self, base: Poly, bound: tuple) -> Poly:
        if self.at("^"):
            self.next()
            tok = self.peek()
            if tok is None or tok.kind != "number" or "." in tok.text:
                raise self._err("exponent must be a positive integer literal")
            self.next()
            exponent = int(tok.text)
            if exponent < 1:
                raise self._err("exponent must be a positive integer literal")
            return base ** exponent
        return base


def _rational_constants(phi: Formula) -> set:
    """Rational values appearing as coefficients other than 0, +-1."""
    out: set = set()

    def visit_poly(p: Poly):
        for m in p.monomials:
            if m.coeff not in (0, 1, -1):
                out.add(abs(m.coeff))
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
        elif isinstance(f, Forall):
            visit(f.body)

    visit(phi)
    return out


def parse_problem(text: str, name: str = "problem") -> Problem:
    """Parse .feq text into a Problem; raises ProblemSyntaxError / UnsupportedFeature."""
    return _Parser(text).parse_problem(name)


def parse_term(text: str) -> Poly:
    """Parse a single term (used by fixtures and tests)."""
    parser = _Parser(text)
    term = parser._parse_term(bound=())
    if parser.peek() is not None:
        raise parser._err("trailing input after term")
    return term


# -- printing -----------------------------------------------------------


def _split_sides(p: Poly) -> tuple[Poly, Poly]:
    """Present p ⋈ 0 as lhs ⋈ rhs by moving negative monomials right."""
    from .poly import Monomial, ZERO

    pos = [m for m in p.monomials if m.coeff > 0]
    neg = [Monomial(-m.coeff, m.powers) for m in p.monomials if m.coeff < 0]
    lhs = Poly(tuple(pos)) if pos else ZERO
    rhs = Poly(tuple(neg)) if neg else ZERO
    return lhs, rhs


def comparison_to_str(phi: Cmp) -> str:
    lhs, rhs = _split_sides(phi.lhs)
    op = {Rel.EQ: "=", Rel.NE: "!=", Rel.LE: "<=", Rel.LT: "<"}[phi.rel]
    return f"{lhs} {op} {rhs}"


def pretty_print(problem: Problem) -> str:
    """Render a Problem back into parseable .feq text."""
    lines = [f"# {problem.name}", "find f;"]
    if problem.source_note:
        lines.insert(1, f"# {problem.source_note}")
    wheres = []
    for c in conjuncts(problem.spec):
        if isinstance(c, Forall):
            if not isinstance(c.body, Cmp):
                raise ValueError("only comparison bodies can be printed")
            lines.append(
                f"forall {' '.join(c.vars)}. {comparison_to_str(c.body)};"
            )
        elif isinstance(c, Cmp):
            wheres.append(comparison_to_str(c))
        else:
            raise ValueError(f"cannot print conjunct {c}")
    if wheres:
        lines.append("where " + ", ".join(wheres) + ";")
    return "\n".join(lines) + "\n"
