"""Exact polynomial map-germs and their stage maps.

A germ here is a polynomial map f from (R^M, 0) to (R^K, 0) with
M > K >= 2, stored with exact rational coefficients.  Germs are read
from a small line-oriented text format::

    # lines starting with '#' are comments; trailing comments allowed
    name: zw-4-2
    source_dim: 4
    variables: x1 x2 x3 x4
    component: x1*x3 - x2*x4
    component: x1*x4 + x2*x3
    flag: isolated_critical_value

Each ``component:`` line holds one polynomial over the declared
variables; the grammar supports ``+ - * ^``, parentheses, and rational
coefficients written ``3/2``.  Products need an explicit ``*`` and
powers an explicit ``^`` with a non-negative integer exponent.  Parse
errors report line and column.

Stage maps slice a germ into its first I components and the remaining
K - I; the latter may be empty (I = K).  Such slices are plain
polynomial maps, not germs, since germs require at least two components.

Evaluation is exact when fed exact inputs (ints, Fractions) and runs in
binary64 on numpy arrays of points, one row per point.  Jacobians come
from exact term-by-term differentiation, never finite differences.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np

RANK_REL_TOL = 1e-8


class GermError(ValueError):
    pass


class GermParseError(GermError):
    """Syntax or consistency error in germ text, with source position."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


# ---------------------------------------------------------------------------
# Polynomials
# ---------------------------------------------------------------------------


class Polynomial:
    """Polynomial in ``num_vars`` variables with Fraction coefficients.

    Terms live in a dict mapping exponent tuples to nonzero Fractions,
    so no two terms can share an exponent vector.  Instances are treated
    as immutable; arithmetic returns new objects.
    """

    __slots__ = ("num_vars", "terms", "_batch_cache")

    def __init__(self, num_vars: int, terms=None):
        if num_vars < 1:
            raise GermError(f"polynomial needs at least one variable, got {num_vars}")
        object.__setattr__(self, "num_vars", int(num_vars))
        clean = {}
        for expo, coeff in (terms or {}).items():
            expo = tuple(int(e) for e in expo)
            if len(expo) != num_vars:
                raise GermError(
                    f"exponent vector {expo} has length {len(expo)}, expected {num_vars}"
                )
            if any(e < 0 for e in expo):
                raise GermError(f"negative exponent in {expo}")
            coeff = Fraction(coeff)
            if coeff != 0:
                clean[expo] = clean.get(expo, Fraction(0)) + coeff
        clean = {e: c for e, c in clean.items() if c != 0}
        object.__setattr__(self, "terms", clean)
        object.__setattr__(self, "_batch_cache", None)

    def __setattr__(self, *_):
        raise AttributeError("Polynomial is immutable")

    # -- constructors -------------------------------------------------------

    @classmethod
    def constant(cls, num_vars: int, c) -> "Polynomial":
        return cls(num_vars, {(0,) * num_vars: Fraction(c)})

    @classmethod
    def var(cls, num_vars: int, j: int) -> "Polynomial":
        if not 0 <= j < num_vars:
            raise GermError(f"variable index {j} out of range for {num_vars} variables")
        expo = tuple(1 if i == j else 0 for i in range(num_vars))
        return cls(num_vars, {expo: Fraction(1)})

    # -- structure ----------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def constant_term(self) -> Fraction:
        return self.terms.get((0,) * self.num_vars, Fraction(0))

    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        if not self.terms:
            return -1
        return max(sum(e) for e in self.terms)

    def __eq__(self, other):
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.num_vars == other.num_vars and self.terms == other.terms

    def __hash__(self):
        return hash((self.num_vars, frozenset(self.terms.items())))

    # -- arithmetic ---------------------------------------------------------

    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            if other.num_vars != self.num_vars:
                raise GermError("variable-count mismatch in polynomial arithmetic")
            return other
        return Polynomial.constant(self.num_vars, other)

    def __add__(self, other):
        other = self._coerce(other)
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out.get(e, Fraction(0)) + c
        return Polynomial(self.num_vars, out)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(self.num_vars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) + (-self)

    def __mul__(self, other):
        other = self._coerce(other)
        out = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, Fraction(0)) + c1 * c2
        return Polynomial(self.num_vars, out)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise GermError(f"polynomial power must be a non-negative int, got {n!r}")
        out = Polynomial.constant(self.num_vars, 1)
        for _ in range(n):
            out = out * self
        return out

    def derivative(self, j: int) -> "Polynomial":
        """Exact partial derivative with respect to variable j."""
        if not 0 <= j < self.num_vars:
            raise GermError(f"variable index {j} out of range")
        out = {}
        for e, c in self.terms.items():
            if e[j] == 0:
                continue
            de = list(e)
            de[j] -= 1
            out[tuple(de)] = c * e[j]
        return Polynomial(self.num_vars, out)

    # -- evaluation ---------------------------------------------------------

    def evaluate(self, x: Sequence) -> Union[Fraction, float]:
        """Evaluate term by term; exact if every coordinate is exact."""
        if len(x) != self.num_vars:
            raise GermError(f"point has {len(x)} coordinates, expected {self.num_vars}")
        total = Fraction(0)
        for e, c in self.terms.items():
            m = c
            for xi, ei in zip(x, e):
                if ei:
                    m = m * xi**ei
            total = total + m
        return total

    def _batch_arrays(self):
        cache = self._batch_cache
        if cache is None:
            if self.terms:
                expos = np.array(sorted(self.terms), dtype=np.int64)
                coeffs = np.array(
                    [float(self.terms[tuple(e)]) for e in expos], dtype=np.float64
                )
            else:
                expos = np.zeros((0, self.num_vars), dtype=np.int64)
                coeffs = np.zeros(0, dtype=np.float64)
            cache = (expos, coeffs)
            object.__setattr__(self, "_batch_cache", cache)
        return cache

    def evaluate_batch(self, X: np.ndarray) -> np.ndarray:
        """Binary64 values at each row of X, shape (N, num_vars) -> (N,)."""
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.num_vars:
            raise GermError(f"expected (N, {self.num_vars}) array, got {X.shape}")
        expos, coeffs = self._batch_arrays()
        if coeffs.size == 0:
            return np.zeros(X.shape[0], dtype=np.float64)
        # (N, T, M) monomial factors; prod over variables, then dot with coeffs
        powers = X[:, None, :] ** expos[None, :, :]
        return powers.prod(axis=2) @ coeffs

    def to_string(self, variables: Sequence[str]) -> str:
        """Render with the given variable names, graded-lex term order."""
        if len(variables) != self.num_vars:
            raise GermError("variable-name count mismatch")
        if not self.terms:
            return "0"
        keyed = sorted(self.terms, key=lambda e: (-sum(e), tuple(-v for v in e)))
        parts = []
        for e in keyed:
            c = self.terms[e]
            factors = []
            for name, ei in zip(variables, e):
                if ei == 1:
                    factors.append(name)
                elif ei > 1:
                    factors.append(f"{name}^{ei}")
            body = "*".join(factors)
            mag = abs(c)
            if not body:
                piece = str(mag)
            elif mag == 1:
                piece = body
            else:
                piece = f"{mag}*{body}"
            if not parts:
                parts.append(piece if c > 0 else f"-{piece}")
            else:
                parts.append(f"+ {piece}" if c > 0 else f"- {piece}")
        return " ".join(parts)

    def __repr__(self):
        names = [f"x{i + 1}" for i in range(self.num_vars)]
        return f"Polynomial({self.to_string(names)})"


# ---------------------------------------------------------------------------
# Polynomial maps and germs
# ---------------------------------------------------------------------------


class PolyMap:
    """A list of polynomials read as a map R^M -> R^k; k = 0 is allowed."""

    def __init__(self, num_vars: int, components: Sequence[Polynomial]):
        self.num_vars = int(num_vars)
        comps = tuple(components)
        for p in comps:
            if p.num_vars != self.num_vars:
                raise GermError(
                    f"component over {p.num_vars} variables in a map over {self.num_vars}"
                )
        self.components = comps
        self._grad_polys = None

    @property
    def target_dim(self) -> int:
        return len(self.components)

    def is_empty(self) -> bool:
        return not self.components

    def evaluate(self, x: Sequence):
        """Value as a tuple, one entry per component; exact on exact input."""
        if len(x) != self.num_vars:
            raise GermError(f"point has {len(x)} coordinates, expected {self.num_vars}")
        return tuple(p.evaluate(x) for p in self.components)

    def evaluate_batch(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.num_vars:
            raise GermError(f"expected (N, {self.num_vars}) array, got {X.shape}")
        out = np.empty((X.shape[0], self.target_dim), dtype=np.float64)
        for i, p in enumerate(self.components):
            out[:, i] = p.evaluate_batch(X)
        return out

    def _gradients(self):
        if self._grad_polys is None:
            self._grad_polys = tuple(
                tuple(p.derivative(j) for j in range(self.num_vars))
                for p in self.components
            )
        return self._grad_polys

    def jacobian(self, x: Sequence) -> np.ndarray:
        """(k, M) matrix of exact partials evaluated at x, as binary64."""
        if len(x) != self.num_vars:
            raise GermError(f"point has {len(x)} coordinates, expected {self.num_vars}")
        grads = self._gradients()
        out = np.zeros((self.target_dim, self.num_vars), dtype=np.float64)
        for i, row in enumerate(grads):
            for j, p in enumerate(row):
                out[i, j] = float(p.evaluate(x))
        return out

    def jacobian_batch(self, X: np.ndarray) -> np.ndarray:
        """(N, k, M) stack of Jacobians at each row of X."""
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.num_vars:
            raise GermError(f"expected (N, {self.num_vars}) array, got {X.shape}")
        grads = self._gradients()
        out = np.zeros((X.shape[0], self.target_dim, self.num_vars), dtype=np.float64)
        for i, row in enumerate(grads):
            for j, p in enumerate(row):
                if not p.is_zero():
                    out[:, i, j] = p.evaluate_batch(X)
        return out


@dataclass(frozen=True)
class GermFlags:
    isolated_critical_point: bool = False
    isolated_critical_value: bool = False


_FLAG_NAMES = ("isolated_critical_point", "isolated_critical_value")


class MapGerm(PolyMap):
    """A polynomial map-germ (R^M, 0) -> (R^K, 0) with M > K >= 2.

    Beyond PolyMap this enforces the standing dimension hypothesis and
    that every component vanishes at the origin, and carries optional
    declared flags plus variable names for printing and parsing.
    """

    def __init__(
        self,
        num_vars: int,
        components: Sequence[Polynomial],
        variables: Optional[Sequence[str]] = None,
        flags: Optional[GermFlags] = None,
        name: Optional[str] = None,
    ):
        super().__init__(num_vars, components)
        M, K = self.num_vars, self.target_dim
        if not M > K >= 2:
            raise GermError(f"M > K >= 2 violated (M={M}, K={K})")
        for i, p in enumerate(self.components, start=1):
            if p.constant_term() != 0:
                raise GermError(
                    f"component {i} has nonzero constant term {p.constant_term()}; "
                    "germs must vanish at the origin"
                )
        if variables is None:
            variables = tuple(f"x{i + 1}" for i in range(M))
        else:
            variables = tuple(str(v) for v in variables)
            if len(variables) != M:
                raise GermError(
                    f"{len(variables)} variable names for source dimension {M}"
                )
        self.variables = variables
        self.flags = flags or GermFlags()
        self.name = name

    @property
    def source_dim(self) -> int:
        return self.num_vars

    def __repr__(self):
        label = self.name or "germ"
        return f"MapGerm({label}: M={self.source_dim}, K={self.target_dim})"


@dataclass(frozen=True)
class StageMaps:
    """Slice of a germ at stage I: components 1..I and the rest.

    ``first`` collects components 1..I, ``rest`` components I+1..K; at
    I = K the rest is the empty map by convention.
    """

    I: int
    first: PolyMap
    rest: PolyMap


def stage(f: MapGerm, I: int) -> StageMaps:
    """Split f into its first I components and the remaining K - I."""
    K = f.target_dim
    if not 1 <= I <= K:
        raise GermError(f"stage {I} out of range 1..{K}")
    return StageMaps(
        I=I,
        first=PolyMap(f.num_vars, f.components[:I]),
        rest=PolyMap(f.num_vars, f.components[I:]),
    )


def evaluate(f: PolyMap, x: Sequence):
    return f.evaluate(x)


def jacobian(f: PolyMap, x: Sequence) -> np.ndarray:
    return f.jacobian(x)


def numerical_rank(mat: np.ndarray, rel_tol: float = RANK_REL_TOL) -> int:
    """Count singular values above rel_tol times the largest one."""
    if rel_tol <= 0:
        raise GermError(f"rank tolerance must be positive, got {rel_tol}")
    mat = np.asarray(mat, dtype=np.float64)
    if mat.size == 0:
        return 0
    s = np.linalg.svd(mat, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > rel_tol * s[0]))


@dataclass(frozen=True)
class RankProfile:
    """Numerical ranks at one point: df, df stacked with dg, and per-stage A_I."""

    rank_df: int
    rank_df_with_g: int
    rank_A: tuple  # index I-1 holds rank of [df_I; df_{K-I}; dg]


def rank_profile(f: MapGerm, x: Sequence, rel_tol: float = RANK_REL_TOL) -> RankProfile:
    """Ranks of df(x), of [df; dg](x), and of each stage stack A_I(x).

    Here g(x) = |x|^2 is the fixed squared-distance function, so
    dg(x) = 2x.  A_I stacks the stage-I Jacobians over dg; since the
    rows of A_I are a permutation of [df; dg] the per-stage ranks must
    all agree with rank_df_with_g, but each is computed independently.
    """
    x_arr = np.asarray([float(v) for v in x], dtype=np.float64)
    if x_arr.shape != (f.num_vars,):
        raise GermError(f"point has shape {x_arr.shape}, expected ({f.num_vars},)")
    df = f.jacobian(x_arr)
    dg = (2.0 * x_arr)[None, :]
    ranks = []
    for I in range(1, f.target_dim + 1):
        st = stage(f, I)
        A = np.vstack([st.first.jacobian(x_arr), st.rest.jacobian(x_arr), dg])
        ranks.append(numerical_rank(A, rel_tol))
    return RankProfile(
        rank_df=numerical_rank(df, rel_tol),
        rank_df_with_g=numerical_rank(np.vstack([df, dg]), rel_tol),
        rank_A=tuple(ranks),
    )


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z_0-9]*\Z")
_TOKEN_RE = re.compile(
    r"(?P<num>\d+(?:\s*/\s*\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*^()])"
)


def _tokenize_poly(text: str, line: int, col0: int):
    """Yield (kind, value, column) triples; kinds: num, name, op, end."""
    pos = 0
    out = []
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise GermParseError(
                f"unexpected character {text[pos]!r} in polynomial", line, col0 + pos
            )
        kind = m.lastgroup
        val = m.group()
        if kind == "num":
            if "/" in val:
                p, q = (s.strip() for s in val.split("/"))
                if int(q) == 0:
                    raise GermParseError("zero denominator", line, col0 + pos)
                val = Fraction(int(p), int(q))
            else:
                val = Fraction(int(val))
        out.append((kind, val, col0 + pos))
        pos = m.end()
    out.append(("end", None, col0 + len(text)))
    return out


class _PolyParser:
    """Recursive descent over +, -, *, ^ and parentheses.

    expr   := ['+'|'-'] term (('+'|'-') term)*
    term   := factor ('*' factor)*
    factor := base ('^' integer)?
    base   := number | variable | '(' expr ')'
    """

    def __init__(self, tokens, var_index, num_vars, line):
        self.tokens = tokens
        self.idx = 0
        self.var_index = var_index
        self.num_vars = num_vars
        self.line = line

    def peek(self):
        return self.tokens[self.idx]

    def advance(self):
        tok = self.tokens[self.idx]
        self.idx += 1
        return tok

    def fail(self, msg, tok=None):
        tok = tok or self.peek()
        raise GermParseError(msg, self.line, tok[2])

    def parse(self) -> Polynomial:
        p = self.expr()
        kind, val, _ = self.peek()
        if kind != "end":
            self.fail(f"unexpected {val!r} after polynomial")
        return p

    def expr(self) -> Polynomial:
        kind, val, _ = self.peek()
        negate = False
        if kind == "op" and val in "+-":
            self.advance()
            negate = val == "-"
        p = self.term()
        if negate:
            p = -p
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "+-":
                self.advance()
                q = self.term()
                p = p - q if val == "-" else p + q
            else:
                return p

    def term(self) -> Polynomial:
        p = self.factor()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val == "*":
                self.advance()
                p = p * self.factor()
            else:
                return p

    def factor(self) -> Polynomial:
        p = self.base()
        kind, val, _ = self.peek()
        if kind == "op" and val == "^":
            self.advance()
            kind, val, col = self.peek()
            if kind != "num" or val.denominator != 1:
                self.fail("exponent must be a non-negative integer")
            self.advance()
            p = p ** int(val)
        return p

    def base(self) -> Polynomial:
        kind, val, col = self.advance()
        if kind == "num":
            return Polynomial.constant(self.num_vars, val)
        if kind == "name":
            j = self.var_index.get(val)
            if j is None:
                raise GermParseError(f"unknown variable {val!r}", self.line, col)
            return Polynomial.var(self.num_vars, j)
        if kind == "op" and val == "(":
            p = self.expr()
            kind, val, _ = self.peek()
            if not (kind == "op" and val == ")"):
                self.fail("expected ')'")
            self.advance()
            return p
        if kind == "op" and val == "-":
            return -self.factor()
        raise GermParseError(
            "expected a number, variable or '('", self.line, col
        )


def parse_polynomial(
    text: str, variables: Sequence[str], line: int = 1, col0: int = 1
) -> Polynomial:
    var_index = {v: j for j, v in enumerate(variables)}
    tokens = _tokenize_poly(text, line, col0)
    if tokens[0][0] == "end":
        raise GermParseError("empty polynomial", line, col0)
    return _PolyParser(tokens, var_index, len(variables), line).parse()


def _strip_comment(raw: str) -> str:
    cut = raw.find("#")
    return raw if cut < 0 else raw[:cut]


def parse_germ(text: str) -> MapGerm:
    """Parse germ-file text into a MapGerm; errors carry line and column."""
    name = None
    source_dim = None
    variables = None
    components = []  # (line_no, value_col, Polynomial)
    flag_values = {}
    seen = set()

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw)
        if not line.strip():
            continue
        stripped = line.lstrip()
        indent = len(line) - len(stripped)
        if ":" not in stripped:
            raise GermParseError("expected 'key: value'", line_no, indent + 1)
        key_raw, _, value = stripped.partition(":")
        key = key_raw.strip()
        # 1-based column of the first non-blank value character.
        value_col = indent + len(key_raw) + 2 + (len(value) - len(value.lstrip()))
        value = value.strip()

        if key == "name":
            if "name" in seen:
                raise GermParseError("duplicate 'name'", line_no, indent + 1)
            seen.add("name")
            name = value or None
        elif key == "source_dim":
            if "source_dim" in seen:
                raise GermParseError("duplicate 'source_dim'", line_no, indent + 1)
            seen.add("source_dim")
            try:
                source_dim = int(value)
            except ValueError:
                raise GermParseError(
                    f"source_dim must be an integer, got {value!r}", line_no, value_col
                ) from None
            if source_dim < 1:
                raise GermParseError("source_dim must be positive", line_no, value_col)
        elif key == "variables":
            if "variables" in seen:
                raise GermParseError("duplicate 'variables'", line_no, indent + 1)
            seen.add("variables")
            names = value.split()
            if not names:
                raise GermParseError("empty variable list", line_no, value_col)
            for v in names:
                if not _NAME_RE.match(v):
                    raise GermParseError(f"bad variable name {v!r}", line_no, value_col)
            if len(set(names)) != len(names):
                raise GermParseError("duplicate variable name", line_no, value_col)
            variables = tuple(names)
        elif key == "component":
            if variables is None:
                raise GermParseError(
                    "'variables' must be declared before components",
                    line_no,
                    indent + 1,
                )
            poly = parse_polynomial(value, variables, line_no, value_col)
            components.append((line_no, value_col, poly))
        elif key == "flag":
            if value not in _FLAG_NAMES:
                raise GermParseError(
                    f"unknown flag {value!r}; known flags: {', '.join(_FLAG_NAMES)}",
                    line_no,
                    value_col,
                )
            if value in flag_values:
                raise GermParseError(f"duplicate flag {value!r}", line_no, value_col)
            flag_values[value] = True
        else:
            raise GermParseError(f"unknown key {key!r}", line_no, indent + 1)

    if source_dim is None:
        raise GermParseError("missing 'source_dim'", 1, 1)
    if variables is None:
        raise GermParseError("missing 'variables'", 1, 1)
    if len(variables) != source_dim:
        raise GermParseError(
            f"{len(variables)} variables declared but source_dim is {source_dim}", 1, 1
        )
    if not components:
        raise GermParseError("no components declared", 1, 1)
    for line_no, col, poly in components:
        if poly.constant_term() != 0:
            raise GermParseError(
                f"component has nonzero constant term {poly.constant_term()}",
                line_no,
                col,
            )
    K = len(components)
    if not source_dim > K >= 2:
        raise GermParseError(
            f"M > K >= 2 violated (M={source_dim}, K={K})",
            components[-1][0] if components else 1,
            1,
        )
    return MapGerm(
        num_vars=source_dim,
        components=[p for _, _, p in components],
        variables=variables,
        flags=GermFlags(**flag_values),
        name=name,
    )


def load_germ(path) -> MapGerm:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_germ(fh.read())
