import pytest
from fractions import Fraction as Q

from funeq.dsl import (
    Problem,
    ProblemSyntaxError,
    UnsupportedFeature,
    parse_problem,
    parse_term,
    pretty_print,
)
from funeq.formula import Cmp, Forall, Rel, conjuncts
from funeq.poly import Poly


class TestParse:
    def test_eq1(self):
        p = parse_problem("forall x y. f(x+y) = x*f(y) + y*f(x);", "eq1")
        assert isinstance(p.spec, Forall)
        assert p.spec.vars == ("x", "y")

    def test_u6(self):
        from funeq.formula import simplify

        p = parse_problem("forall x y. f(x+y) - f(x-y) = x*y;", "u6")
        x, y = Poly.var("x"), Poly.var("y")
        body = p.spec.body
        expected = Cmp(Poly.fapp(x + y) - Poly.fapp(x - y) - x * y, Rel.EQ)
        assert body == simplify(expected)

    def test_other_function_rejected(self):
        with pytest.raises(UnsupportedFeature):
            parse_problem("forall x. g(x) = 0;", "bad")

    def test_domain_rejected(self):
        with pytest.raises(UnsupportedFeature):
            parse_problem("domain positive; forall x. f(x) = 0;", "bad")

    def test_syntax_error_carries_position(self):
        with pytest.raises(ProblemSyntaxError) as exc:
            parse_problem("forall x y. f(x+y) = ;", "bad")
        assert exc.value.line == 1
        assert exc.value.column >= 20

    def test_free_variable_rejected(self):
        with pytest.raises(UnsupportedFeature):
            parse_problem("forall x. f(x) = y;", "bad")

    def test_division_by_variable_rejected(self):
        with pytest.raises(ProblemSyntaxError):
            parse_problem("forall x. f(x)/x = 1;", "bad")

    def test_rational_division_folds(self):
        p = parse_term("x/4 + 1/2")
        x = Poly.var("x")
        assert p == x.scale(Q(1, 4)) + Poly.const(Q(1, 2))

    def test_decimal_literals(self):
        assert parse_term("0.25") == Poly.const(Q(1, 4))

    def test_power_sugar(self):
        assert parse_term("x^3") == Poly.var("x") ** 3

    def test_where_clause_ground(self):
        p = parse_problem(
            "forall x y. f(x+y) = f(x) + y; where f(0) > 0;", "shifted"
        )
        parts = conjuncts(p.spec)
        assert len(parts) == 2

    def test_where_clause_must_be_ground(self):
        with pytest.raises(ProblemSyntaxError):
            parse_problem("forall x. f(x) = x; where f(y) > 0;", "bad")

    def test_declared_constants(self):
        p = parse_problem(
            "forall x y. f(x^2+y) + f(f(x)-y) = 2*f(f(x)) + 2*y^2;", "u10"
        )
        assert p.declared_constants == frozenset({Q(2)})

    def test_comments_and_find(self):
        text = "# a problem\nfind f;\nforall x. f(x) = x; # inline\n"
        p = parse_problem(text, "c")
        assert isinstance(p.spec, Forall)

    def test_multiple_axioms_conjoin(self):
        text = "forall x. f(x+1) = f(x) + 1; forall x y. f(x+y) = f(x) + y;"
        p = parse_problem(text, "multi")
        assert len(conjuncts(p.spec)) == 2


class TestPrettyPrint:
    @pytest.mark.parametrize(
        "text",
        [
            "forall x y. f(x+y) = x*f(y) + y*f(x);",
            "forall x y. f(x+y) - f(x-y) = x*y;",
            "forall x y. f(x^2+y) + f(f(x)-y) = 2*f(f(x)) + 2*y^2;",
            "forall x y. f(x*y + f(x)) = x*f(y) + f(x);",
            "forall x y. f(x+y) = f(x) + y; where f(0) > 0;",
        ],
    )
    def test_round_trip(self, text):
        p = parse_problem(text, "t")
        reparsed = parse_problem(pretty_print(p), "t")
        assert reparsed.spec == p.spec
