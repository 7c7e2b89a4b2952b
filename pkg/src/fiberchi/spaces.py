"""Symbolic Euler-characteristic calculus over a small algebra of spaces.

The toolkit reasons about fibers of polynomial map-germs through a handful
of cut-and-paste operations: products with spheres and disks, disjoint
unions, gluings of two pieces along a common part, and doubles of a
manifold along its boundary.  Every question answered here reduces to
inclusion-exclusion for the Euler characteristic:

    chi(A u B)            = chi(A) + chi(B) - chi(A n B)
    chi(A x B)            = chi(A) * chi(B)
    chi(Double(F, bF))    = 2*chi(F) - chi(bF)
    chi(S^n)              = 1 + (-1)^n,   chi(S^-1) = chi(empty) = 0
    chi(D^n)              = 1

No homology is computed; the values are exact integers, or degree-one
integer polynomials in a single indeterminate ``chiF`` standing for the
Euler characteristic of the smallest fiber of the germ under study.

The three ``*_decomposition`` builders return the expression trees used by
the formula engine as an independent route to the closed-form stage
values: the boundary of a stage fiber glued from a disk-thickened binding
and a sphere-spread fiber, the double that relates consecutive stages, and
the decomposition of the ambient sphere into tube, link and overlap.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Union


class SpaceAlgebraError(ValueError):
    pass


class MissingAtomChi(SpaceAlgebraError):
    """An Atom without a chi value was evaluated with no binding for it."""


# ---------------------------------------------------------------------------
# ChiValue: integer polynomials in the single indeterminate chiF
# ---------------------------------------------------------------------------


class ChiValue:
    """Integer polynomial in one indeterminate (the fiber characteristic).

    Coefficients are arbitrary-precision ints, index = power.  All paper
    uses are affine (degree <= 1) but products of symbolic atoms are
    allowed to raise the degree; arithmetic stays exact either way.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs=(0,)):
        cs = list(int(c) for c in coeffs)
        while len(cs) > 1 and cs[-1] == 0:
            cs.pop()
        self.coeffs = tuple(cs)

    @classmethod
    def const(cls, c: int) -> "ChiValue":
        return cls((int(c),))

    @classmethod
    def variable(cls) -> "ChiValue":
        """The indeterminate chiF itself."""
        return cls((0, 1))

    @staticmethod
    def coerce(v: Union["ChiValue", int]) -> "ChiValue":
        if isinstance(v, ChiValue):
            return v
        if isinstance(v, bool) or not isinstance(v, int):
            raise SpaceAlgebraError(f"cannot use {v!r} as a chi value")
        return ChiValue.const(v)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_constant(self) -> bool:
        return len(self.coeffs) == 1

    def as_int(self) -> int:
        if not self.is_constant():
            raise SpaceAlgebraError(f"{self} is not constant")
        return self.coeffs[0]

    def specialize(self, chif: int) -> int:
        """Evaluate at chiF = chif (exact integer Horner)."""
        acc = 0
        for c in reversed(self.coeffs):
            acc = acc * int(chif) + c
        return acc

    def __add__(self, other):
        other = ChiValue.coerce(other)
        n = max(len(self.coeffs), len(other.coeffs))
        a = self.coeffs + (0,) * (n - len(self.coeffs))
        b = other.coeffs + (0,) * (n - len(other.coeffs))
        return ChiValue(x + y for x, y in zip(a, b))

    __radd__ = __add__

    def __neg__(self):
        return ChiValue(-c for c in self.coeffs)

    def __sub__(self, other):
        return self + (-ChiValue.coerce(other))

    def __rsub__(self, other):
        return ChiValue.coerce(other) + (-self)

    def __mul__(self, other):
        other = ChiValue.coerce(other)
        out = [0] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a == 0:
                continue
            for j, b in enumerate(other.coeffs):
                out[i + j] += a * b
        return ChiValue(out)

    __rmul__ = __mul__

    def __eq__(self, other):
        if isinstance(other, int) and not isinstance(other, bool):
            other = ChiValue.const(other)
        if not isinstance(other, ChiValue):
            return NotImplemented
        return self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def __repr__(self):
        return f"ChiValue({self})"

    def __str__(self):
        if self.is_constant():
            return str(self.coeffs[0])
        parts = []
        for p, c in enumerate(self.coeffs):
            if c == 0:
                continue
            if p == 0:
                parts.append(str(c))
            else:
                mono = "chiF" if p == 1 else f"chiF^{p}"
                if c == 1:
                    parts.append(mono)
                elif c == -1:
                    parts.append(f"-{mono}")
                else:
                    parts.append(f"{c}*{mono}")
        out = parts[0]
        for p in parts[1:]:
            out += f" - {p[1:]}" if p.startswith("-") else f" + {p}"
        return out


CHI_F = ChiValue.variable()


def chi_sphere(n: int) -> int:
    """chi(S^n) with the conventions S^-1 = empty set and S^0 = two points."""
    n = int(n)
    if n < -1:
        raise SpaceAlgebraError(f"sphere dimension {n} < -1")
    if n == -1:
        return 0
    return 1 + (-1) ** n


# ---------------------------------------------------------------------------
# Space expressions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpaceExpr:
    pass


@dataclass(frozen=True)
class Empty(SpaceExpr):
    pass


@dataclass(frozen=True)
class Point(SpaceExpr):
    pass


@dataclass(frozen=True)
class Sphere(SpaceExpr):
    n: int

    def __post_init__(self):
        if self.n < -1:
            raise SpaceAlgebraError(f"Sphere({self.n}): dimension must be >= -1")


@dataclass(frozen=True)
class Disk(SpaceExpr):
    n: int

    def __post_init__(self):
        if self.n < 0:
            raise SpaceAlgebraError(f"Disk({self.n}): dimension must be >= 0")


@dataclass(frozen=True)
class Atom(SpaceExpr):
    """An opaque space known only by name, optionally carrying its chi.

    ``chi`` may be an int, a ChiValue, or None; a None chi must be supplied
    through the environment passed to :func:`chi` at evaluation time.
    """

    name: str
    chi: Union[ChiValue, int, None] = field(default=None, compare=True)


@dataclass(frozen=True)
class Product(SpaceExpr):
    factors: tuple

    def __post_init__(self):
        if len(self.factors) < 1:
            raise SpaceAlgebraError("Product needs at least one factor")


@dataclass(frozen=True)
class DisjointUnion(SpaceExpr):
    parts: tuple


@dataclass(frozen=True)
class Glue(SpaceExpr):
    """A union of ``a`` and ``b`` whose intersection is ``along``."""

    a: SpaceExpr
    b: SpaceExpr
    along: SpaceExpr


@dataclass(frozen=True)
class Double(SpaceExpr):
    """Two copies of ``body`` glued along ``boundary``."""

    body: SpaceExpr
    boundary: SpaceExpr


def prod(*factors: SpaceExpr) -> Product:
    return Product(tuple(factors))


def union(*parts: SpaceExpr) -> DisjointUnion:
    return DisjointUnion(tuple(parts))


# ---------------------------------------------------------------------------
# Evaluation and printing
# ---------------------------------------------------------------------------


def chi(expr: SpaceExpr, env: Mapping[str, Union[ChiValue, int]] | None = None) -> ChiValue:
    """Euler characteristic of a space expression, by inclusion-exclusion.

    Parameters
    ----------
    expr : SpaceExpr
    env : mapping from atom name to ChiValue or int, optional
        Bindings for atoms constructed without a chi.  An env entry wins
        over a chi stored on the atom, which lets one expression be
        evaluated under several hypotheses.

    Returns
    -------
    ChiValue
        Exact; constant when no unresolved atoms occur.
    """
    if isinstance(expr, Empty):
        return ChiValue.const(0)
    if isinstance(expr, Point):
        return ChiValue.const(1)
    if isinstance(expr, Sphere):
        return ChiValue.const(chi_sphere(expr.n))
    if isinstance(expr, Disk):
        return ChiValue.const(1)
    if isinstance(expr, Atom):
        if env is not None and expr.name in env:
            return ChiValue.coerce(env[expr.name])
        if expr.chi is not None:
            return ChiValue.coerce(expr.chi)
        raise MissingAtomChi(f"atom {expr.name!r} has no chi and no binding")
    if isinstance(expr, Product):
        out = ChiValue.const(1)
        for f in expr.factors:
            out = out * chi(f, env)
        return out
    if isinstance(expr, DisjointUnion):
        out = ChiValue.const(0)
        for p in expr.parts:
            out = out + chi(p, env)
        return out
    if isinstance(expr, Glue):
        return chi(expr.a, env) + chi(expr.b, env) - chi(expr.along, env)
    if isinstance(expr, Double):
        return 2 * chi(expr.body, env) - chi(expr.boundary, env)
    raise SpaceAlgebraError(f"not a space expression: {expr!r}")


def pretty(expr: SpaceExpr) -> str:
    """Stable text rendering, e.g. glue(prod(bF,D1), prod(F,S0); prod(bF,S0))."""
    if isinstance(expr, Empty):
        return "empty"
    if isinstance(expr, Point):
        return "pt"
    if isinstance(expr, Sphere):
        return f"S{expr.n}"
    if isinstance(expr, Disk):
        return f"D{expr.n}"
    if isinstance(expr, Atom):
        return expr.name
    if isinstance(expr, Product):
        return "prod(" + ",".join(pretty(f) for f in expr.factors) + ")"
    if isinstance(expr, DisjointUnion):
        return "union(" + ",".join(pretty(p) for p in expr.parts) + ")"
    if isinstance(expr, Glue):
        return f"glue({pretty(expr.a)}, {pretty(expr.b)}; {pretty(expr.along)})"
    if isinstance(expr, Double):
        return f"double({pretty(expr.body)}; {pretty(expr.boundary)})"
    raise SpaceAlgebraError(f"not a space expression: {expr!r}")


# ---------------------------------------------------------------------------
# Decompositions used by the formula engine
# ---------------------------------------------------------------------------


def _check_stage(M: int, K: int, I: int, strict_upper: bool) -> None:
    if not (M > K >= 2):
        raise SpaceAlgebraError(f"require M > K >= 2, got M={M}, K={K}")
    hi_ok = I < K if strict_upper else I <= K
    if not (1 <= I and hi_ok):
        rel = "<" if strict_upper else "<="
        raise SpaceAlgebraError(f"require 1 <= I {rel} K, got I={I}, K={K}")


def boundary_decomposition(M: int, K: int, I: int) -> Glue:
    """Stage-I fiber boundary as a gluing of two product pieces.

    The boundary splits into the smallest-fiber boundary thickened by a
    (K-I)-disk and the smallest fiber spread over a (K-I-1)-sphere, glued
    along their common product piece.  The ``F`` atom carries the
    indeterminate chiF; the ``bF`` atom carries the value forced by the
    parity of M-K (zero for even M-K, twice chiF for odd), which is the
    only input this route takes from the stage formulas.

    Requires 1 <= I < K.
    """
    _check_stage(M, K, I, strict_upper=True)
    bchi = ChiValue.const(0) if (M - K) % 2 == 0 else 2 * CHI_F
    f_atom = Atom("F", CHI_F)
    b_atom = Atom("bF", bchi)
    return Glue(
        prod(b_atom, Disk(K - I)),
        prod(f_atom, Sphere(K - I - 1)),
        prod(b_atom, Sphere(K - I - 1)),
    )


def double_decomposition(I: int) -> Glue:
    """Stage-I boundary rebuilt from the next stage up.

    Two copies of the stage-(I+1) fiber are glued to its boundary
    thickened by an interval; the atoms are left free so the caller can
    bind chi(F_{I+1}) and chi(bF_{I+1}) as integers or polynomials.
    """
    if I < 1:
        raise SpaceAlgebraError(f"stage must be >= 1, got {I}")
    f_atom = Atom(f"F{I + 1}")
    b_atom = Atom(f"bF{I + 1}")
    return Glue(
        prod(b_atom, Disk(1)),
        prod(f_atom, Sphere(0)),
        prod(b_atom, Sphere(0)),
    )


def tube_sphere_decomposition(M: int, I: int) -> Glue:
    """The ambient (M-1)-sphere split into fiber tube and link.

    The tube retracts to the stage fiber times an (I-1)-sphere, the rest
    retracts to the stage link, and the overlap retracts to the stage
    boundary times the same sphere.  Atoms F{I}, bF{I}, L{I} are free;
    binding them to the closed-form stage values must return chi(S^{M-1}).
    """
    if not (1 <= I < M):
        raise SpaceAlgebraError(f"require 1 <= I < M, got I={I}, M={M}")
    return Glue(
        prod(Atom(f"F{I}"), Sphere(I - 1)),
        Atom(f"L{I}"),
        prod(Atom(f"bF{I}"), Sphere(I - 1)),
    )
