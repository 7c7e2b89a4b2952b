"""Symbolic chi calculus: conventions, decompositions, semiring laws."""

import random

import pytest

from fiberchi import spaces
from fiberchi.spaces import (
    CHI_F,
    Atom,
    ChiValue,
    Disk,
    Double,
    Empty,
    Glue,
    MissingAtomChi,
    Point,
    SpaceAlgebraError,
    Sphere,
    chi,
    chi_sphere,
    pretty,
    prod,
    union,
)


def val(expr, env=None):
    return chi(expr, env).as_int()


class TestChiValue:
    def test_constant_arithmetic(self):
        a = ChiValue.const(3)
        b = ChiValue.const(-5)
        assert (a + b).as_int() == -2
        assert (a - b).as_int() == 8
        assert (a * b).as_int() == -15

    def test_affine_in_chif(self):
        v = 2 * CHI_F - 3
        assert v.specialize(0) == -3
        assert v.specialize(1) == -1
        assert v.specialize(-4) == -11
        assert str(v) == "-3 + 2*chiF"

    def test_as_int_rejects_symbolic(self):
        with pytest.raises(SpaceAlgebraError):
            (CHI_F + 1).as_int()

    def test_products_can_raise_degree(self):
        sq = CHI_F * CHI_F
        assert sq.specialize(3) == 9
        assert sq.degree == 2

    def test_bool_is_not_a_chi(self):
        with pytest.raises(SpaceAlgebraError):
            ChiValue.coerce(True)

    def test_trailing_zeros_normalized(self):
        assert (CHI_F - CHI_F) == 0
        assert (CHI_F - CHI_F).degree == 0


class TestBasicChi:
    def test_sphere_zero_is_two_points(self):
        assert val(Sphere(0)) == 2

    def test_sphere_minus_one_is_empty(self):
        assert val(Sphere(-1)) == 0

    def test_sphere_parity(self):
        for n in range(0, 12):
            assert val(Sphere(n)) == 1 + (-1) ** n == chi_sphere(n)

    def test_point_disk_empty(self):
        assert val(Point()) == 1
        assert val(Empty()) == 0
        for n in range(0, 8):
            assert val(Disk(n)) == 1

    def test_double_symbolic(self):
        # chi(double) = 2*chiF - chi(boundary), both symbolic
        dF = Atom("bF", 2 * CHI_F - 1)
        d = Double(Atom("F", CHI_F), dF)
        v = chi(d)
        assert v == 2 * CHI_F - (2 * CHI_F - 1)
        assert v.as_int() == 1

    def test_double_numeric_cases(self):
        assert val(Double(Atom("F", 1), Atom("bF", 2))) == 0
        assert val(Double(Atom("F", 5), Atom("bF", 0))) == 10

    def test_glue_inclusion_exclusion(self):
        g = Glue(Disk(2), Disk(2), Sphere(1))
        assert val(g) == 1 + 1 - 0 == val(Sphere(2))

    def test_atom_env_binding(self):
        a = Atom("L")
        assert val(a, {"L": 7}) == 7
        with pytest.raises(MissingAtomChi):
            chi(a)

    def test_env_overrides_builtin_chi(self):
        a = Atom("F", 3)
        assert val(a) == 3
        assert val(a, {"F": -2}) == -2

    def test_sphere_dim_validation(self):
        with pytest.raises(SpaceAlgebraError):
            Sphere(-2)
        with pytest.raises(SpaceAlgebraError):
            Disk(-1)


class TestLadders:
    def test_sphere_ladder(self):
        for n in range(0, 10):
            assert val(Sphere(n)) + val(Sphere(n + 1)) == 2

    def test_disk_gluing_makes_sphere(self):
        for n in range(1, 8):
            g = Glue(Disk(n), Disk(n), Sphere(n - 1))
            assert val(g) == val(Sphere(n))


def random_tree(rng, depth):
    """Random expression tree with known chi, for the semiring laws."""
    if depth == 0:
        choice = rng.randrange(4)
        if choice == 0:
            return Point()
        if choice == 1:
            return Sphere(rng.randrange(-1, 5))
        if choice == 2:
            return Disk(rng.randrange(0, 5))
        return Atom(f"a{rng.randrange(100)}", rng.randrange(-3, 4))
    kind = rng.randrange(3)
    if kind == 0:
        return prod(*(random_tree(rng, depth - 1) for _ in range(rng.randrange(1, 4))))
    if kind == 1:
        return union(*(random_tree(rng, depth - 1) for _ in range(rng.randrange(0, 4))))
    return Glue(
        random_tree(rng, depth - 1),
        random_tree(rng, depth - 1),
        random_tree(rng, depth - 1),
    )


class TestSemiringLaws:
    def test_product_and_union_morphisms(self):
        rng = random.Random(20240)
        for _ in range(200):
            a = random_tree(rng, rng.randrange(0, 6))
            b = random_tree(rng, rng.randrange(0, 6))
            assert val(prod(a, b)) == val(a) * val(b)
            assert val(union(a, b)) == val(a) + val(b)

    def test_glue_additivity(self):
        rng = random.Random(77)
        for _ in range(100):
            a = random_tree(rng, 3)
            b = random_tree(rng, 3)
            c = random_tree(rng, 3)
            assert val(Glue(a, b, c)) == val(a) + val(b) - val(c)


class TestBoundaryDecomposition:
    def test_3_2_1_by_hand(self):
        # boundary = glue(bF x D1, F x S0; bF x S0)
        expr = spaces.boundary_decomposition(3, 2, 1)
        v = chi(expr)
        # chi(bF) for M-K odd is 2*chiF, so: 2chiF + 2chiF - 2*2chiF = 0
        assert v.specialize(1) == 0
        assert v.specialize(5) == 0

    def test_5_3_1_sphere_one_kills_terms(self):
        # K-I = 2: disk D2, sphere S1 with chi 0; value is chi(bF) alone
        expr = spaces.boundary_decomposition(5, 3, 1)
        v = chi(expr)
        # M-K = 2 even so chi(bF) = 0
        assert v == 0

    def test_5_3_2_same_shape_as_two_2_1(self):
        expr = spaces.boundary_decomposition(5, 3, 2)
        # M-K even: bF has chi 0; K-I = 1 gives F x S^0 contribution 2chiF
        assert chi(expr) == 2 * CHI_F
        assert chi(expr).specialize(3) == 6

    def test_range_validation(self):
        with pytest.raises(SpaceAlgebraError):
            spaces.boundary_decomposition(3, 2, 2)  # needs I < K
        with pytest.raises(SpaceAlgebraError):
            spaces.boundary_decomposition(2, 2, 1)


class TestDoubleDecomposition:
    def test_evaluates_to_double_formula(self):
        for I in (1, 2, 5):
            expr = spaces.double_decomposition(I)
            for chif, chib in [(1, 2), (0, 0), (3, -2), (-1, 4)]:
                env = {f"F{I + 1}": chif, f"bF{I + 1}": chib}
                assert chi(expr, env).as_int() == 2 * chif - chib

    def test_boundaryless_case(self):
        expr = spaces.double_decomposition(2)
        assert chi(expr, {"F3": 5, "bF3": 0}).as_int() == 10

    def test_disk_sphere_arithmetic_case(self):
        # chiF = 1, chi(bF) = 2: the double closes up to chi 0
        expr = spaces.double_decomposition(1)
        assert chi(expr, {"F2": 1, "bF2": 2}).as_int() == 0

    def test_range(self):
        with pytest.raises(SpaceAlgebraError):
            spaces.double_decomposition(0)


class TestTubeSphereDecomposition:
    def test_symbolic_shape(self):
        expr = spaces.tube_sphere_decomposition(5, 2)
        env = {"F2": 7, "bF2": 3, "L2": 11}
        # chi = chiF*chi(S^1) + chiL - chi(bF)*chi(S^1); S^1 kills both
        assert chi(expr, env).as_int() == 11

    def test_stage_one_substitution(self):
        expr = spaces.tube_sphere_decomposition(4, 1)
        env = {"F1": 3, "bF1": 1, "L1": -5}
        assert chi(expr, env).as_int() == 2 * 3 + (-5) - 2 * 1

    def test_closure_on_lemma_values_odd_m_even_i(self):
        # M odd, I even: links 2, boundary 2chiF; closes to chi(S^{M-1}) = 2
        M, I, chif = 5, 2, 4
        env = {"F2": chif, "bF2": 2 * chif, "L2": 2}
        expr = spaces.tube_sphere_decomposition(M, I)
        assert chi(expr, env).as_int() == 2 == chi_sphere(M - 1)

    def test_range(self):
        with pytest.raises(SpaceAlgebraError):
            spaces.tube_sphere_decomposition(3, 3)  # needs I < M


class TestPretty:
    def test_boundary_decomposition_stable_text(self):
        expr = spaces.boundary_decomposition(3, 2, 1)
        assert pretty(expr) == "glue(prod(bF,D1), prod(F,S0); prod(bF,S0))"

    def test_primitive_forms(self):
        assert pretty(Empty()) == "empty"
        assert pretty(Point()) == "pt"
        assert pretty(Sphere(3)) == "S3"
        assert pretty(Disk(2)) == "D2"
        assert pretty(union(Point(), Sphere(0))) == "union(pt,S0)"
        d = Double(Atom("F"), Atom("bF"))
        assert pretty(d) == "double(F; bF)"
