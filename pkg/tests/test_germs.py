"""Exact polynomial maps, the germ grammar, and Jacobian rank profiles."""

from fractions import Fraction

import numpy as np
import pytest

from fiberchi.germs import (
    GermError,
    GermParseError,
    MapGerm,
    Polynomial,
    PolyMap,
    numerical_rank,
    parse_germ,
    parse_polynomial,
    rank_profile,
    stage,
)

LINEAR = "source_dim: 3\nvariables: x y z\ncomponent: x\ncomponent: y\n"
ZW = (
    "source_dim: 4\n"
    "variables: x1 x2 x3 x4\n"
    "component: x1*x3 - x2*x4\n"
    "component: x1*x4 + x2*x3\n"
    "flag: isolated_critical_point\n"
)
RAMIFIED = (
    "source_dim: 3\n"
    "variables: x y z\n"
    "component: x^2 - y^2\n"
    "component: 2*x*y\n"
)


class TestPolynomialAlgebra:
    def test_square_of_sum(self):
        x = Polynomial.var(2, 0)
        y = Polynomial.var(2, 1)
        assert (x + y) ** 2 == x**2 + 2 * x * y + y**2

    def test_derivative(self):
        p = parse_polynomial("3*x^2*y + y^3 + z^4", ("x", "y", "z"))
        assert p.derivative(0) == parse_polynomial("6*x*y", ("x", "y", "z"))
        assert p.derivative(1) == parse_polynomial("3*x^2 + 3*y^2", ("x", "y", "z"))
        assert p.derivative(2) == parse_polynomial("4*z^3", ("x", "y", "z"))

    def test_exact_fraction_evaluation(self):
        p = parse_polynomial("x^2 - y^2", ("x", "y"))
        v = p.evaluate((Fraction(1, 3), Fraction(1, 3)))
        assert v == 0 and isinstance(v, Fraction)

    def test_fraction_coefficients(self):
        p = parse_polynomial("1/2*x + 3/4*y", ("x", "y"))
        assert p.evaluate((Fraction(2), Fraction(4))) == Fraction(4)

    def test_to_string_round_trip(self):
        vars3 = ("x", "y", "z")
        for text in ("x", "x^2 - y^2", "3*x^2*y + y^3 + z^4", "1/2*x*y - z"):
            p = parse_polynomial(text, vars3)
            assert parse_polynomial(p.to_string(vars3), vars3) == p

    def test_batch_matches_scalar(self):
        p = parse_polynomial("x1*x3 - x2*x4 + x2^3", ("x1", "x2", "x3", "x4"))
        rng = np.random.default_rng(5)
        X = rng.normal(size=(50, 4))
        got = p.evaluate_batch(X)
        want = np.array([p.evaluate(row) for row in X])
        assert np.allclose(got, want, rtol=1e-12, atol=1e-12)


class TestEvaluation:
    def test_linear_projection(self):
        f = parse_germ(LINEAR)
        assert f.evaluate((0.2, -0.1, 0.5)) == (0.2, -0.1)

    def test_zw_at_unit_point(self):
        f = parse_germ(ZW)
        assert f.evaluate((1.0, 0.0, 1.0, 0.0)) == (1.0, 0.0)

    def test_jacobian_linear(self):
        f = parse_germ(LINEAR)
        J = f.jacobian((0.3, 0.4, -0.2))
        assert np.array_equal(J, [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])

    def test_jacobian_zw_points(self):
        f = parse_germ(ZW)
        J = f.jacobian((1.0, 0.0, 0.0, 0.0))
        assert np.array_equal(J, [[0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0]])
        assert np.array_equal(f.jacobian((0.0,) * 4), np.zeros((2, 4)))

    def test_jacobian_against_finite_differences(self):
        rng = np.random.default_rng(99)
        h = 1e-5
        for text in (ZW, RAMIFIED):
            f = parse_germ(text)
            M = f.source_dim
            for _ in range(100):
                x = rng.uniform(-1, 1, size=M)
                J = f.jacobian(x)
                for j in range(M):
                    e = np.zeros(M)
                    e[j] = h
                    fd = (
                        np.array(f.evaluate_batch((x + e)[None, :])[0])
                        - np.array(f.evaluate_batch((x - e)[None, :])[0])
                    ) / (2 * h)
                    scale = max(1.0, float(np.abs(J[:, j]).max()))
                    assert np.abs(J[:, j] - fd).max() <= 1e-6 * scale

    def test_jacobian_batch_matches_scalar(self):
        f = parse_germ(RAMIFIED)
        rng = np.random.default_rng(12)
        X = rng.normal(size=(20, 3))
        JB = f.jacobian_batch(X)
        for i, x in enumerate(X):
            assert np.allclose(JB[i], f.jacobian(x), rtol=1e-12, atol=1e-12)


class TestStages:
    def test_split_counts(self):
        f = parse_germ(ZW)
        s1 = stage(f, 1)
        assert s1.first.target_dim == 1 and s1.rest.target_dim == 1
        s2 = stage(f, 2)
        assert s2.first.target_dim == 2
        assert s2.rest.target_dim == 0 and s2.rest.is_empty

    def test_split_values(self):
        f = parse_germ(ZW)
        x = (0.3, -0.2, 0.5, 0.7)
        whole = f.evaluate(x)
        s1 = stage(f, 1)
        assert s1.first.evaluate(x) == whole[:1]
        assert s1.rest.evaluate(x) == whole[1:]

    def test_stage_range_checked(self):
        f = parse_germ(ZW)
        with pytest.raises(GermError):
            stage(f, 0)
        with pytest.raises(GermError):
            stage(f, 3)


class TestRanks:
    def test_numerical_rank_basics(self):
        assert numerical_rank(np.zeros((3, 4))) == 0
        assert numerical_rank(np.eye(3)) == 3
        # nearly dependent rows collapse under the relative tolerance
        m = np.array([[1.0, 0.0], [1.0, 1e-12]])
        assert numerical_rank(m) == 1

    def test_zw_fiber_rank_generic(self):
        # fiber of zw over (c, 0): w = c * conj(z) / |z|^2
        f = parse_germ(ZW)
        c = 0.01
        rng = np.random.default_rng(7)
        for _ in range(10):
            a, b = rng.uniform(0.2, 1.0, size=2)
            den = a * a + b * b
            x = (a, b, c * a / den, -c * b / den)
            assert np.allclose(f.evaluate_batch(np.array([x]))[0], (c, 0.0), atol=1e-15)
            prof = rank_profile(f, x)
            assert prof.rank_df == 2
            assert prof.rank_df_with_g == 3
            assert prof.rank_A == (3, 3)

    def test_zw_fiber_rank_symmetric_point(self):
        # at (t, 0, t, 0) the distance gradient lands in the row span of df
        f = parse_germ(ZW)
        prof = rank_profile(f, (0.1, 0.0, 0.1, 0.0))
        assert prof.rank_df == 2
        assert prof.rank_df_with_g == 2
        assert prof.rank_A == (2, 2)

    def test_stage_stacks_agree_with_full_stack(self):
        f = parse_germ(RAMIFIED)
        rng = np.random.default_rng(3)
        for _ in range(25):
            x = rng.uniform(-1, 1, size=3)
            prof = rank_profile(f, x)
            assert all(r == prof.rank_df_with_g for r in prof.rank_A)

    def test_ramified_singular_axis(self):
        f = parse_germ(RAMIFIED)
        for z in (-0.5, 0.0, 0.8):
            assert rank_profile(f, (0.0, 0.0, z)).rank_df == 0
        assert rank_profile(f, (0.2, 0.1, 0.0)).rank_df == 2

    def test_point_shape_checked(self):
        f = parse_germ(LINEAR)
        with pytest.raises(GermError):
            rank_profile(f, (1.0, 2.0))


class TestGrammar:
    def test_minimal_germ(self):
        f = parse_germ(LINEAR)
        assert isinstance(f, MapGerm)
        assert f.source_dim == 3 and f.target_dim == 2
        assert f.variables == ("x", "y", "z")
        assert not f.flags.isolated_critical_point
        assert not f.flags.isolated_critical_value

    def test_flags_and_name(self):
        f = parse_germ("name: demo\n" + ZW + "flag: isolated_critical_value\n")
        assert f.name == "demo"
        assert f.flags.isolated_critical_point
        assert f.flags.isolated_critical_value

    def test_comments_and_blank_lines(self):
        text = "# heading\n\nsource_dim: 3  # trailing\nvariables: x y z\n\ncomponent: x\ncomponent: y\n"
        assert parse_germ(text).target_dim == 2

    def test_spaces_around_colon(self):
        f = parse_germ("source_dim: 3\nvariables: x y z\ncomponent : x\ncomponent: y\n")
        assert f.components[0].to_string(f.variables) == "x"

    def test_implicit_multiplication_rejected(self):
        with pytest.raises(GermParseError) as e:
            parse_germ("source_dim: 3\nvariables: x y z\ncomponent: 1/2 x\ncomponent: y")
        assert e.value.line == 3 and e.value.column == 16


class TestGrammarErrors:
    def freeze(self, text, line, column, fragment):
        with pytest.raises(GermParseError) as e:
            parse_germ(text)
        assert (e.value.line, e.value.column) == (line, column)
        assert fragment in str(e.value)

    def test_trailing_operator(self):
        self.freeze(
            "source_dim: 3\nvariables: x y z\ncomponent: x +\ncomponent: y",
            3, 15, "expected a number",
        )

    def test_error_column_with_spaced_key(self):
        self.freeze(
            "source_dim: 3\nvariables: x y z\ncomponent : x + * y\ncomponent: y",
            3, 17, "expected a number",
        )

    def test_unknown_key(self):
        self.freeze("source_dim: 3\nvariables: x y z\nbogus: 3", 3, 1, "unknown key")

    def test_missing_colon(self):
        self.freeze("source_dim: 3\nvariables: x y z\ncomponent x", 3, 1, "key: value")

    def test_nonzero_constant_term(self):
        self.freeze(
            "source_dim: 3\nvariables: x y z\ncomponent: x + 1\ncomponent: y",
            3, 12, "constant term",
        )

    def test_unknown_variable(self):
        self.freeze(
            "source_dim: 3\nvariables: x y z\ncomponent: x\ncomponent: y + w",
            4, 16, "unknown variable 'w'",
        )

    def test_dimension_hypothesis(self):
        self.freeze(
            "source_dim: 2\nvariables: x y\ncomponent: x\ncomponent: y",
            4, 1, "M > K >= 2 violated (M=2, K=2)",
        )

    def test_unknown_flag(self):
        self.freeze(
            "source_dim: 3\nvariables: x y z\ncomponent: x\ncomponent: y\nflag: shiny",
            5, 7, "unknown flag",
        )

    def test_missing_sections(self):
        with pytest.raises(GermParseError, match="missing 'source_dim'"):
            parse_germ("variables: x y\ncomponent: x")
        with pytest.raises(GermParseError, match="missing 'variables'"):
            parse_germ("source_dim: 3")
        with pytest.raises(GermParseError, match="no components"):
            parse_germ("source_dim: 3\nvariables: x y z")

    def test_variable_count_mismatch(self):
        with pytest.raises(GermParseError, match="source_dim"):
            parse_germ("source_dim: 4\nvariables: x y z\ncomponent: x\ncomponent: y")

    def test_duplicate_sections(self):
        with pytest.raises(GermParseError, match="duplicate"):
            parse_germ("source_dim: 3\nsource_dim: 3\nvariables: x y z\ncomponent: x\ncomponent: y")
        with pytest.raises(GermParseError, match="duplicate flag"):
            parse_germ(ZW + "flag: isolated_critical_point\n")


class TestPolyMapValidation:
    def test_component_arity_checked(self):
        p2 = parse_polynomial("x + y", ("x", "y"))
        with pytest.raises(GermError):
            PolyMap(3, [p2])
