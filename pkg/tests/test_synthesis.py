from fractions import Fraction as Q

import pytest

from funeq.dsl import parse_problem
from funeq.formula import Cmp, Forall, Rel, TRUE, conjuncts, simplify
from funeq.poly import Poly, ZERO, ONE
from funeq.synthesis import (
    ESCALATION_ORDER,
    ParameterSolution,
    SystemTooHard,
    Template,
    TemplateKind,
    UnsupportedSideCondition,
    apply_template,
    build_obligation,
    extract_coefficient_system,
    lagrange_eliminate,
    solve_parameter_system,
    synthesize,
    verify_candidate,
)

EQ1 = "forall x y. f(x+y) = x*f(y) + y*f(x);"
U6 = "forall x y. f(x+y) - f(x-y) = x*y;"
U10 = "forall x y. f(x^2+y) + f(f(x)-y) = 2*f(f(x)) + 2*y^2;"
INDIA = "forall x y. f(x*y + f(x)) = x*f(y) + f(x);"


def quad_template(problem):
    return Template.for_problem(TemplateKind.QUADRATIC, {"x", "y"})


def poly_to_sympy(p, sym):
    """Independent conversion for CAS cross-checks (f-free polys only)."""
    import sympy

    total = sympy.Integer(0)
    for m in p.monomials:
        term = sympy.Rational(m.coeff.numerator, m.coeff.denominator)
        for atom, e in m.powers:
            term *= sym[atom.name] ** e
        total += term
    return sympy.expand(total)


class TestApplyTemplate:
    def test_eq1_quadratic_residual_against_cas(self):
        import sympy

        problem = parse_problem(EQ1, "eq1")
        template = quad_template(problem)
        residuals, side = apply_template(problem.spec, template)
        assert side == TRUE
        assert len(residuals) == 1

        a, b, c, x, y = sympy.symbols("a b c x y")
        sym = {
            template.params[0]: a,
            template.params[1]: b,
            template.params[2]: c,
            "x": x,
            "y": y,
        }

        def T(t):
            return a * t ** 2 + b * t + c

        expected = sympy.expand(T(x + y) - x * T(y) - y * T(x))
        got = poly_to_sympy(residuals[0], sym)
        assert got - expected == 0 or got + expected == 0

    def test_u6_quadratic_residual(self):
        problem = parse_problem(U6, "u6")
        template = quad_template(problem)
        residuals, _ = apply_template(problem.spec, template)
        a = Poly.var(template.params[0])
        b = Poly.var(template.params[1])
        x, y = Poly.var("x"), Poly.var("y")
        expected = (a.scale(4) - ONE) * x * y + b.scale(2) * y
        assert residuals[0] == expected or residuals[0] == -expected

    def test_constant_template_on_eq1(self):
        problem = parse_problem(EQ1, "eq1")
        template = Template.for_problem(TemplateKind.CONSTANT, {"x", "y"})
        residuals, _ = apply_template(problem.spec, template)
        c = Poly.var(template.params[0])
        x, y = Poly.var("x"), Poly.var("y")
        expected = c - x * c - y * c
        assert residuals[0] in (expected, -expected)

    def test_quantified_inequality_rejected(self):
        problem = parse_problem(EQ1, "eq1")
        bad = Forall(("x",), Cmp(Poly.fapp(Poly.var("x")), Rel.LE))
        template = quad_template(problem)
        with pytest.raises(UnsupportedSideCondition):
            apply_template(bad, template)


class TestCoefficientSystem:
    def test_eq1_system_and_solution(self):
        problem = parse_problem(EQ1, "eq1")
        template = quad_template(problem)
        residuals, _ = apply_template(problem.spec, template)
        system = extract_coefficient_system(residuals, {"x", "y"})
        a, b, c = (Poly.var(n) for n in template.params)
        assert set(system) == {a, a.scale(2) - b.scale(2), b - c, c}
        solutions = solve_parameter_system(system, template.params)
        assert len(solutions) == 1
        assert solutions[0].assignment == {
            template.params[0]: ZERO,
            template.params[1]: ZERO,
            template.params[2]: ZERO,
        }

    def test_u6_system_leaves_c_free(self):
        problem = parse_problem(U6, "u6")
        template = quad_template(problem)
        residuals, _ = apply_template(problem.spec, template)
        system = extract_coefficient_system(residuals, {"x", "y"})
        solutions = solve_parameter_system(system, template.params)
        assert len(solutions) == 1
        sol = solutions[0].assignment
        assert sol[template.params[0]] == Poly.const(Q(1, 4))
        assert sol[template.params[1]] == ZERO
        assert template.params[2] not in sol

    def test_india_two_branches(self):
        problem = parse_problem(INDIA, "india")
        template = quad_template(problem)
        residuals, _ = apply_template(problem.spec, template)
        system = extract_coefficient_system(residuals, {"x", "y"})
        solutions = solve_parameter_system(system, template.params)
        a, b, c = template.params
        keyed = sorted(
            tuple(sorted((k, str(v)) for k, v in s.assignment.items()))
            for s in solutions
        )
        assert keyed == sorted(
            [
                ((a, "0"), (b, "0"), (c, "0")),
                ((a, "0"), (b, "1"), (c, "0")),
            ]
        )

    def test_back_substitution_is_zero(self):
        for text in (EQ1, U6, INDIA):
            problem = parse_problem(text, "p")
            template = quad_template(problem)
            residuals, _ = apply_template(problem.spec, template)
            system = extract_coefficient_system(residuals, {"x", "y"})
            for sol in solve_parameter_system(system, template.params):
                for eq in system:
                    assert eq.substitute(sol.assignment).is_zero() or not set(
                        eq.variables()
                    ) <= set(sol.assignment)

    def test_zero_system_leaves_all_free(self):
        solutions = solve_parameter_system([], ("a", "b", "c"))
        assert len(solutions) == 1
        assert solutions[0].assignment == {}

    def test_irrational_roots_are_too_hard(self):
        a = Poly.var("a")
        with pytest.raises(SystemTooHard):
            solve_parameter_system([a * a - Poly.const(2)], ("a",))

    def test_no_real_roots_prunes_branch(self):
        a = Poly.var("a")
        solutions = solve_parameter_system([a * a + ONE], ("a",))
        assert solutions == []

    def test_completeness_on_small_grid(self):
        # every parameter triple on the grid satisfying the system lies in
        # exactly one solved branch
        grid = [Q(-2), Q(-1), Q(-1, 2), Q(0), Q(1, 2), Q(1), Q(2)]
        for text in (EQ1, U6, INDIA):
            problem = parse_problem(text, "p")
            template = quad_template(problem)
            residuals, _ = apply_template(problem.spec, template)
            system = extract_coefficient_system(residuals, {"x", "y"})
            solutions = solve_parameter_system(system, template.params)
            for va in grid:
                for vb in grid:
                    for vc in grid:
                        point = dict(zip(template.params, (va, vb, vc)))
                        sat = all(
                            eq.substitute(
                                {k: Poly.const(v) for k, v in point.items()}
                            ).is_zero()
                            for eq in system
                        )
                        member = sum(
                            1
                            for s in solutions
                            if all(
                                s.assignment.get(k) is None
                                or s.assignment[k]
                                .substitute(
                                    {n: Poly.const(v) for n, v in point.items()}
                                )
                                .as_rational()
                                == v
                                for k, v in point.items()
                            )
                        )
                        assert (member >= 1) == sat
                        if sat:
                            assert member == 1


class TestLagrange:
    def test_u6_candidate(self):
        problem = parse_problem(U6, "u6")
        result = synthesize(problem, TemplateKind.QUADRATIC)
        assert result is not None and result.verified
        assert len(result.solved_form.branches) == 1
        br = result.solved_form.branches[0]
        x = Poly.var("x")
        assert br.gamma == TRUE
        assert br.rhs == (x * x).scale(Q(1, 4)) + Poly.fapp(ZERO)

    def test_positive_shift_candidate(self):
        problem = parse_problem(
            "forall x y. f(x+y) = f(x) + y; where f(0) > 0;", "shifted"
        )
        result = synthesize(problem, TemplateKind.LINEAR)
        assert result is not None and result.verified
        br = result.solved_form.branches[0]
        x = Poly.var("x")
        assert br.rhs == x + Poly.fapp(ZERO)
        assert br.gamma == simplify(Cmp(-Poly.fapp(ZERO), Rel.LT))

    def test_fixed_branch_stays_rational(self):
        problem = parse_problem(EQ1, "eq1")
        result = synthesize(problem, TemplateKind.QUADRATIC)
        br = result.solved_form.branches[0]
        assert br.rhs == ZERO
        assert br.gamma == TRUE

    def test_interpolation_identities(self):
        # evaluating the definition at 0, 1, -1 reproduces the defining
        # relations between the interpolation atoms
        problem = parse_problem(U6, "u6")
        result = synthesize(problem, TemplateKind.QUADRATIC)
        rhs = result.solved_form.branches[0].rhs
        at0 = rhs.substitute({"x": ZERO})
        assert at0 == Poly.fapp(ZERO)
        at1 = rhs.substitute({"x": ONE})
        assert at1 == Poly.const(Q(1, 4)) + Poly.fapp(ZERO)


class TestVerify:
    def test_eq1_zero_function(self):
        problem = parse_problem(EQ1, "eq1")
        result = synthesize(problem, TemplateKind.CONSTANT)
        assert result is not None and result.verified

    def test_bogus_candidate_rejected(self):
        from funeq.synthesis import Branch, SolvedForm

        problem = parse_problem(EQ1, "eq1")
        bogus = SolvedForm(branches=(Branch(gamma=TRUE, rhs=Poly.var("x")),))
        assert not verify_candidate(problem.spec, bogus)

    def test_u10_square(self):
        problem = parse_problem(U10, "u10")
        result = synthesize(problem, TemplateKind.QUAD_MONOMIAL)
        assert result is not None and result.verified
        x = Poly.var("x")
        assert result.solved_form.branches[0].rhs == x * x


class TestObligation:
    def test_eq1_single_disequation(self):
        problem = parse_problem(EQ1, "eq1")
        result = synthesize(problem, TemplateKind.CONSTANT)
        ob = build_obligation(problem.spec, result.solved_form)
        assert ob.skolems == ("c1",)
        assert len(ob.negation_constraints) == 1
        neg = ob.negation_constraints[0]
        assert neg == Cmp(Poly.fapp(Poly.var("c1")), Rel.NE)

    def test_india_two_disequations(self):
        problem = parse_problem(INDIA, "india")
        result = synthesize(problem, TemplateKind.QUADRATIC)
        ob = build_obligation(problem.spec, result.solved_form)
        assert len(ob.skolems) == 2
        assert len(ob.negation_constraints) == 2

    def test_gamma_branch_becomes_disjunction(self):
        problem = parse_problem(
            "forall x y. f(x+y) = f(x) + y; where f(0) > 0;", "shifted"
        )
        result = synthesize(problem, TemplateKind.LINEAR)
        ob = build_obligation(problem.spec, result.solved_form)
        from funeq.formula import Or

        assert isinstance(ob.negation_constraints[0], Or)

    def test_spec_passes_through_unchanged(self):
        problem = parse_problem(INDIA, "india")
        result = synthesize(problem, TemplateKind.QUADRATIC)
        ob = build_obligation(problem.spec, result.solved_form)
        assert ob.spec == problem.spec
