import random
from fractions import Fraction as Q

import pytest

from funeq.poly import FApp, Poly, Var, VarsUnderF, ZERO, ONE

x = Poly.var("x")
y = Poly.var("y")


def rand_rational(rng, span=6):
    return Q(rng.randint(-span, span), rng.randint(1, span))


def rand_point(rng, names):
    return {n: rand_rational(rng) for n in names}


def rand_f(rng):
    a, b, c = (rand_rational(rng) for _ in range(3))
    return lambda t: a * t * t + b * t + c


def assert_equal_by_evaluation(p, q, names, cases=5, seed=0):
    rng = random.Random(seed)
    for _ in range(cases):
        point = rand_point(rng, names)
        f = rand_f(rng)
        assert p.evaluate(point, f) == q.evaluate(point, f)


class TestArithmetic:
    def test_add_cancellation(self):
        assert (x + ONE) + (-x) == ONE

    def test_add_identity(self):
        p = x * y + Poly.fapp(x)
        assert ZERO + p == p

    def test_add_mixed_cross_terms(self):
        # (x^2 + 2xy) + (y^2 - 2xy) == x^2 + y^2, checked against the
        # evaluation oracle at random rational points.
        two_xy = (x * y).scale(2)
        lhs = (x * x + two_xy) + (y * y - two_xy)
        assert_equal_by_evaluation(lhs, x * x + y * y, ["x", "y"])
        assert lhs == x * x + y * y

    def test_mul_difference_of_squares(self):
        assert (x + y) * (x - y) == x * x - y * y

    def test_mul_annihilator(self):
        p = (x + y) ** 3 + Poly.fapp(x * y)
        assert p * ZERO == ZERO

    def test_square_expansion(self):
        sq = (x + y) ** 2
        expected = x * x + (x * y).scale(2) + y * y
        assert_equal_by_evaluation(sq, expected, ["x", "y"])
        assert sq == expected

    def test_monomial_order_is_graded(self):
        p = (x + y) ** 2 + x + ONE
        assert [str(m.coeff) for m in p.monomials] == ["1", "2", "1", "1", "1"]
        assert str(p) == "x^2 + 2*x*y + y^2 + x + 1"


class TestSubstitution:
    def test_substitute_sets_y_to_zero(self):
        # f(x+y) - x f(y) - y f(x) with y -> 0 becomes f(x) - x f(0)
        p = Poly.fapp(x + y) - x * Poly.fapp(y) - y * Poly.fapp(x)
        got = p.substitute({"y": ZERO})
        assert got == Poly.fapp(x) - x * Poly.fapp(ZERO)

    def test_substitute_empty_is_identity(self):
        p = Poly.fapp(x * x) + x.scale(3)
        assert p.substitute({}) == p

    def test_substitute_half_sum(self):
        # f(x+y) - f(x-y) - xy with x -> z/2, y -> z/2
        z = Poly.var("z")
        p = Poly.fapp(x + y) - Poly.fapp(x - y) - x * y
        half = z.scale(Q(1, 2))
        got = p.substitute({"x": half, "y": half})
        expected = Poly.fapp(z) - Poly.fapp(ZERO) - (z * z).scale(Q(1, 4))
        assert got == expected

    def test_substitution_homomorphism(self):
        rng = random.Random(7)
        p = Poly.fapp(x + y) * x - y ** 2 + Poly.fapp(Poly.fapp(x))
        sigma = {"x": y * y + ONE, "y": x - y.scale(2)}
        for _ in range(20):
            point = rand_point(rng, ["x", "y"])
            f = rand_f(rng)
            via_subst = p.substitute(sigma).evaluate(point, f)
            inner_point = {
                name: image.evaluate(point, f) for name, image in sigma.items()
            }
            assert via_subst == p.evaluate(inner_point, f)


class TestEvaluate:
    def test_plain_square(self):
        p = (x + y) ** 2
        assert p.evaluate({"x": Q(1), "y": Q(2)}, lambda t: t) == 9

    def test_f_application(self):
        assert Poly.fapp(x).evaluate({"x": Q(3)}, lambda t: t * t) == 9

    def test_composition(self):
        p = Poly.fapp(Poly.fapp(x))
        assert p.evaluate({"x": Q(2)}, lambda t: t + 1) == 4


class TestCoefficients:
    def test_eq1_quadratic_residual(self):
        a, b, c = Poly.var("a"), Poly.var("b"), Poly.var("c")

        def template(t):
            return a * t * t + b * t + c

        resid = template(x + y) - x * template(y) - y * template(x)
        got = resid.coefficients_wrt({"x", "y"})
        expected = {
            (("x", 2),): a,
            (("x", 2), ("y", 1)): -a,
            (("y", 2),): a,
            (("x", 1), ("y", 2)): -a,
            (("x", 1), ("y", 1)): a.scale(2) - b.scale(2),
            (("x", 1),): b - c,
            (("y", 1),): b - c,
            (): c,
        }
        assert got == expected

    def test_zero_poly_has_no_coefficients(self):
        assert ZERO.coefficients_wrt({"x"}) == {}

    def test_u6_residual_coefficients(self):
        a, b = Poly.var("a"), Poly.var("b")
        resid = (a.scale(4) - ONE) * x * y + b.scale(2) * y
        got = resid.coefficients_wrt({"x", "y"})
        assert got == {
            (("x", 1), ("y", 1)): a.scale(4) - ONE,
            (("y", 1),): b.scale(2),
        }

    def test_vars_under_f_rejected(self):
        p = Poly.fapp(x + y) + x
        with pytest.raises(VarsUnderF):
            p.coefficients_wrt({"x"})

    def test_round_trip(self):
        rng = random.Random(3)
        for _ in range(50):
            p = ZERO
            for _ in range(rng.randint(1, 5)):
                coeff = random_poly(rng, depth=1, allow_vars=("a", "b"))
                mono = ONE
                for _ in range(rng.randint(0, 3)):
                    mono = mono * Poly.var(rng.choice(["x", "y"]))
                p = p + coeff * mono
            parts = p.coefficients_wrt({"x", "y"})
            total = ZERO
            for exponent, coeff in parts.items():
                mono = ONE
                for name, e in exponent:
                    mono = mono * (Poly.var(name) ** e)
                total = total + coeff * mono
            assert total == p


def random_poly(rng, depth=2, allow_vars=("x", "y")):
    terms = ZERO
    for _ in range(rng.randint(1, 4)):
        factor = Poly.const(rand_rational(rng))
        for _ in range(rng.randint(0, 2)):
            pick = rng.random()
            if pick < 0.55 or depth == 0:
                factor = factor * Poly.var(rng.choice(allow_vars))
            else:
                factor = factor * Poly.fapp(random_poly(rng, depth - 1, allow_vars))
        terms = terms + factor
    return terms


class TestCanonicalForm:
    def test_normal_forms_agree_with_oracle(self):
        rng = random.Random(11)
        for _ in range(200):
            p = random_poly(rng)
            q = random_poly(rng)
            left = (p + q) * (p - q)
            right = p * p - q * q
            assert left == right
            assert_equal_by_evaluation(left, right, ["x", "y"], cases=2, seed=rng.randint(0, 10**6))

    def test_distinct_normal_forms_differ_semantically(self):
        rng = random.Random(13)
        checked = 0
        for _ in range(300):
            p = random_poly(rng)
            q = random_poly(rng)
            if p == q:
                continue
            checked += 1
            found = False
            for trial in range(40):
                point = rand_point(rng, ["x", "y"])
                f = rand_f(rng)
                if p.evaluate(point, f) != q.evaluate(point, f):
                    found = True
                    break
            assert found, f"no separating point for {p} vs {q}"
        assert checked > 200
