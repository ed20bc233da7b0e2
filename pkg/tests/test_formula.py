from fractions import Fraction as Q

import pytest

from funeq.dsl import parse_problem
from funeq.formula import (
    And,
    Cmp,
    FALSE,
    Forall,
    Not,
    Or,
    Rel,
    TRUE,
    canonical_key,
    collect_f_arguments,
    free_vars,
    instantiate,
    negate,
    simplify,
)
from funeq.poly import Poly, ZERO, ONE

x = Poly.var("x")
y = Poly.var("y")
z = Poly.var("z")


def forall_eq(names, p):
    return Forall(tuple(names), Cmp(p, Rel.EQ))


class TestSimplify:
    def test_zero_equation_is_true(self):
        assert simplify(Cmp(ZERO, Rel.EQ)) == TRUE

    def test_nonzero_constant_equation_is_false(self):
        assert simplify(Cmp(Poly.const(3), Rel.EQ)) == FALSE

    def test_sign_canonicalization(self):
        a = simplify(Cmp(-x + ONE, Rel.EQ))
        b = simplify(Cmp(x - ONE, Rel.EQ))
        assert a == b

    def test_inequality_folding(self):
        assert simplify(Cmp(Poly.const(-1), Rel.LT)) == TRUE
        assert simplify(Cmp(Poly.const(Q(1, 2)), Rel.LE)) == FALSE

    def test_connective_absorption(self):
        assert simplify(And((TRUE, Cmp(x, Rel.EQ)))) == Cmp(x, Rel.EQ)
        assert simplify(Or((FALSE, Cmp(x, Rel.EQ)))) == Cmp(x, Rel.EQ)
        assert simplify(And((FALSE, Cmp(x, Rel.EQ)))) == FALSE

    def test_forall_drops_unused_vars(self):
        phi = Forall(("x", "y"), Cmp(x, Rel.EQ))
        assert simplify(phi) == Forall(("x",), Cmp(x, Rel.EQ))


class TestNegate:
    def test_round_trip(self):
        phi = Cmp(x - ONE, Rel.LE)
        assert negate(negate(phi)) == phi

    def test_de_morgan(self):
        phi = And((Cmp(x, Rel.EQ), Cmp(y, Rel.LT)))
        got = negate(phi)
        assert isinstance(got, Or)
        assert got.args[0] == Cmp(x, Rel.NE)


class TestInstantiate:
    def setup_method(self):
        text = "forall x y. f(x+y) = x*f(y) + y*f(x);"
        self.eq1 = parse_problem(text, "eq1").spec

    def test_full_instantiation_at_origin(self):
        got = instantiate(self.eq1, {"x": ZERO, "y": ZERO})
        assert got == simplify(Cmp(Poly.fapp(ZERO), Rel.EQ))

    def test_partial_instantiation_keeps_other_vars(self):
        got = instantiate(self.eq1, {"x": ZERO})
        assert isinstance(got, Forall)
        assert got.vars == ("y",)
        # f(y) = y f(0)
        expected = Cmp(Poly.fapp(y) - y * Poly.fapp(ZERO), Rel.EQ)
        assert simplify(got.body) == simplify(expected)

    def test_fresh_variables_requantified(self):
        u6 = parse_problem("forall x y. f(x+y) - f(x-y) = x*y;", "u6").spec
        half = z.scale(Q(1, 2))
        got = instantiate(u6, {"x": half, "y": half})
        assert isinstance(got, Forall)
        assert got.vars == ("z",)
        expected = Cmp(
            Poly.fapp(z) - Poly.fapp(ZERO) - (z * z).scale(Q(1, 4)), Rel.EQ
        )
        assert simplify(got.body) == simplify(expected)

    def test_rejects_non_prefix_substitution(self):
        with pytest.raises(ValueError):
            instantiate(self.eq1, {"w": ZERO})


class TestCollectArguments:
    def test_u6_arguments(self):
        u6 = parse_problem("forall x y. f(x+y) - f(x-y) = x*y;", "u6").spec
        assert collect_f_arguments(u6) == [x + y, x - y]

    def test_u10_arguments_include_inner(self):
        u10 = parse_problem(
            "forall x y. f(x^2+y) + f(f(x)-y) = 2*f(f(x)) + 2*y^2;", "u10"
        ).spec
        got = collect_f_arguments(u10)
        assert got == [x * x + y, Poly.fapp(x) - y, x]

    def test_ground_formula_has_none(self):
        phi = Cmp(x - ONE, Rel.EQ)
        assert collect_f_arguments(phi) == []


class TestCanonicalKey:
    def test_alpha_equivalence(self):
        a = forall_eq(["x"], Poly.fapp(x) - x)
        b = forall_eq(["z"], Poly.fapp(z) - z)
        assert canonical_key(a) == canonical_key(b)

    def test_distinct_formulas_differ(self):
        a = forall_eq(["x"], Poly.fapp(x) - x)
        b = forall_eq(["x"], Poly.fapp(x) + x)
        assert canonical_key(a) != canonical_key(b)

    def test_free_vars(self):
        phi = Forall(("x",), Cmp(x + y, Rel.EQ))
        assert free_vars(phi) == {"y"}
