"""Exact scalar algebra: rationals, sparse multivariate polynomials, rational
functions, and a small expression parser.

Representation choices:

* coefficients are ``fractions.Fraction`` (arbitrary precision, always in
  lowest terms with positive denominator);
* a polynomial is a dict mapping exponent tuples (one nonnegative int per
  chart variable) to nonzero Fractions -- the zero polynomial is the empty
  dict, so structural equality is canonical equality;
* a rational function stores a numerator/denominator pair of polynomials.
  The pair is reduced by a multivariate gcd whenever both total degrees are
  at most GCD_DEGREE_CAP, otherwise it is kept unreduced and equality is
  decided by cross-multiplication (a/b == c/d  iff  a*d - c*b == 0).

The monomial order used for printing and sign normalization is graded
lexicographic by variable index.  No floating point is used anywhere in this
module; numeric evaluation for flows converts to floats at the boundary of
the ``flow`` module.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from math import gcd as _int_gcd
from typing import Iterable, Sequence

Rational = Fraction

#: Reduction of rational functions by a polynomial gcd is attempted only when
#: both numerator and denominator have total degree at most this cap.
GCD_DEGREE_CAP = 8

_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


class ExprError(Exception):
    """Base class for all errors raised by the scalar-algebra layer."""


class ParseError(ExprError):
    def __init__(self, message: str, pos: int):
        super().__init__(f"{message} (at position {pos})")
        self.pos = pos


class PoleError(ExprError):
    """Evaluation at a point where a denominator vanishes."""


class ChartMismatchError(ExprError):
    """Operands built over different charts."""


@dataclass(frozen=True)
class Chart:
    """An ordered coordinate chart: a tuple of distinct variable names."""

    var_names: tuple[str, ...]

    def __post_init__(self):
        if len(self.var_names) == 0:
            raise ExprError("chart needs at least one variable")
        if len(set(self.var_names)) != len(self.var_names):
            raise ExprError(f"chart variables not distinct: {self.var_names}")
        for name in self.var_names:
            if not _IDENT_RE.match(name):
                raise ExprError(f"invalid variable name {name!r}")

    @property
    def dim(self) -> int:
        return len(self.var_names)

    def index(self, name: str) -> int:
        try:
            return self.var_names.index(name)
        except ValueError:
            raise ExprError(f"unknown variable {name!r} in chart {self.var_names}")

    def __repr__(self):
        return f"Chart({', '.join(self.var_names)})"


def chart(*names: str) -> Chart:
    return Chart(tuple(names))


def _check_same_chart(a, b):
    if a.chart != b.chart:
        raise ChartMismatchError(f"chart mismatch: {a.chart} vs {b.chart}")


def _monomial_key(exps: tuple[int, ...]):
    # graded lexicographic by variable index
    return (sum(exps), exps)


class Poly:
    """Sparse multivariate polynomial with Fraction coefficients."""

    __slots__ = ("chart", "terms")

    def __init__(self, chart: Chart, terms: dict[tuple[int, ...], Fraction]):
        self.chart = chart
        self.terms = {e: c for e, c in terms.items() if c != 0}

    # -- constructors ------------------------------------------------------

    @staticmethod
    def zero(chart: Chart) -> "Poly":
        return Poly(chart, {})

    @staticmethod
    def const(chart: Chart, value) -> "Poly":
        c = Fraction(value)
        if c == 0:
            return Poly.zero(chart)
        return Poly(chart, {(0,) * chart.dim: c})

    @staticmethod
    def var(chart: Chart, index: int) -> "Poly":
        if not 0 <= index < chart.dim:
            raise ExprError(f"variable index {index} out of range")
        e = [0] * chart.dim
        e[index] = 1
        return Poly(chart, {tuple(e): Fraction(1)})

    # -- ring structure ----------------------------------------------------

    def __add__(self, other: "Poly") -> "Poly":
        _check_same_chart(self, other)
        out = dict(self.terms)
        for e, c in other.terms.items():
            s = out.get(e, Fraction(0)) + c
            if s == 0:
                out.pop(e, None)
            else:
                out[e] = s
        return Poly(self.chart, out)

    def __neg__(self) -> "Poly":
        return Poly(self.chart, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other: "Poly") -> "Poly":
        return self + (-other)

    def __mul__(self, other) -> "Poly":
        if isinstance(other, (int, Fraction)):
            return self.scale(Fraction(other))
        _check_same_chart(self, other)
        out: dict[tuple[int, ...], Fraction] = {}
        for ea, ca in self.terms.items():
            for eb, cb in other.terms.items():
                e = tuple(x + y for x, y in zip(ea, eb))
                s = out.get(e, Fraction(0)) + ca * cb
                if s == 0:
                    out.pop(e, None)
                else:
                    out[e] = s
        return Poly(self.chart, out)

    __rmul__ = __mul__

    def scale(self, c: Fraction) -> "Poly":
        if c == 0:
            return Poly.zero(self.chart)
        return Poly(self.chart, {e: c * v for e, v in self.terms.items()})

    def __pow__(self, n: int) -> "Poly":
        if n < 0:
            raise ExprError("negative exponent on a polynomial")
        out = Poly.const(self.chart, 1)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base if n > 1 else base
            n >>= 1
        return out

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Poly)
            and self.chart == other.chart
            and self.terms == other.terms
        )

    __hash__ = None  # mutable-dict-backed; not hashable

    # -- queries -----------------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def is_constant(self) -> bool:
        return all(sum(e) == 0 for e in self.terms)

    def constant_value(self) -> Fraction:
        if not self.is_constant:
            raise ExprError("not a constant polynomial")
        return next(iter(self.terms.values()), Fraction(0))

    def total_degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        return max((sum(e) for e in self.terms), default=-1)

    def degree_in(self, index: int) -> int:
        return max((e[index] for e in self.terms), default=-1)

    def leading(self) -> tuple[tuple[int, ...], Fraction]:
        e = max(self.terms, key=_monomial_key)
        return e, self.terms[e]

    def is_homogeneous(self) -> bool:
        degs = {sum(e) for e in self.terms}
        return len(degs) <= 1

    # -- calculus ----------------------------------------------------------

    def diff(self, index: int) -> "Poly":
        if not 0 <= index < self.chart.dim:
            raise ExprError(f"variable index {index} out of range")
        out: dict[tuple[int, ...], Fraction] = {}
        for e, c in self.terms.items():
            k = e[index]
            if k == 0:
                continue
            e2 = list(e)
            e2[index] = k - 1
            e2 = tuple(e2)
            s = out.get(e2, Fraction(0)) + c * k
            if s == 0:
                out.pop(e2, None)
            else:
                out[e2] = s
        return Poly(self.chart, out)

    def eval(self, point: Sequence[Fraction]) -> Fraction:
        if len(point) != self.chart.dim:
            raise ExprError("point/chart dimension mismatch")
        pt = [Fraction(v) for v in point]
        total = Fraction(0)
        for e, c in self.terms.items():
            v = c
            for x, k in zip(pt, e):
                if k:
                    v *= x**k
            total += v
        return total

    def subst(self, values: Sequence["RatFunc"]) -> "RatFunc":
        """Substitute a rational function for each chart variable."""
        if len(values) != self.chart.dim:
            raise ExprError("substitution arity mismatch")
        target = values[0].chart if values else self.chart
        out = RatFunc.const(target, 0)
        for e, c in self.terms.items():
            term = RatFunc.const(target, c)
            for rf, k in zip(values, e):
                if k:
                    term = term * rf**k
            out = out + term
        return out

    # -- printing ----------------------------------------------------------

    def _monomial_str(self, e: tuple[int, ...]) -> str:
        parts = []
        for name, k in zip(self.chart.var_names, e):
            if k == 1:
                parts.append(name)
            elif k > 1:
                parts.append(f"{name}^{k}")
        return "*".join(parts)

    def __str__(self) -> str:
        if self.is_zero:
            return "0"
        pieces = []
        for e in sorted(self.terms, key=_monomial_key, reverse=True):
            c = self.terms[e]
            mono = self._monomial_str(e)
            mag = abs(c)
            if mono and mag == 1:
                body = mono
            elif mono:
                body = f"{mag}*{mono}"
            else:
                body = str(mag)
            pieces.append(("-" if c < 0 else "+", body))
        sign, body = pieces[0]
        text = body if sign == "+" else f"-{body}"
        for sign, body in pieces[1:]:
            text += f" {sign} {body}"
        return text

    def __repr__(self):
        return f"Poly({self})"


# -- multivariate gcd -------------------------------------------------------
#
# Recursive primitive-PRS gcd over Q[x_1, ..., x_n].  Only called for total
# degree <= GCD_DEGREE_CAP, which keeps the pseudo-remainder growth harmless.


def _frac_gcd(a: Fraction, b: Fraction) -> Fraction:
    if a == 0:
        return abs(b)
    if b == 0:
        return abs(a)
    num = _int_gcd(a.numerator, b.numerator)
    den = abs(a.denominator * b.denominator) // _int_gcd(
        a.denominator, b.denominator
    )
    return Fraction(num, den)


def _as_univariate(p: Poly, index: int) -> dict[int, Poly]:
    """View p as a univariate polynomial in x_index with Poly coefficients."""
    coeffs: dict[int, dict] = {}
    for e, c in p.terms.items():
        k = e[index]
        e2 = list(e)
        e2[index] = 0
        coeffs.setdefault(k, {})[tuple(e2)] = c
    return {k: Poly(p.chart, t) for k, t in coeffs.items()}


def _from_univariate(chart: Chart, index: int, coeffs: dict[int, Poly]) -> Poly:
    terms: dict[tuple[int, ...], Fraction] = {}
    for k, q in coeffs.items():
        for e, c in q.terms.items():
            e2 = list(e)
            e2[index] = k
            terms[tuple(e2)] = c
    return Poly(chart, terms)


def poly_divexact(a: Poly, b: Poly) -> Poly:
    """Exact division a / b; raises ExprError if b does not divide a."""
    if b.is_zero:
        raise ExprError("division by the zero polynomial")
    q = Poly.zero(a.chart)
    r = a
    be, bc = b.leading()
    while not r.is_zero:
        re, rc = r.leading()
        diff = tuple(x - y for x, y in zip(re, be))
        if any(d < 0 for d in diff):
            raise ExprError("inexact polynomial division")
        t = Poly(a.chart, {diff: rc / bc})
        q = q + t
        r = r - t * b
    return q


def _try_divexact(a: Poly, b: Poly):
    try:
        return poly_divexact(a, b)
    except ExprError:
        return None


class _GcdTooExpensive(Exception):
    """Internal: abandon a gcd whose intermediates grow past the cheap range."""


def _pseudo_rem(a: dict[int, Poly], b: dict[int, Poly], chart: Chart, index: int):
    """Pseudo-remainder of a by b, both univariate views in x_index."""
    da, db = max(a), max(b)
    lc_b = b[db]
    r = dict(a)
    while r and max(r) >= db:
        dr = max(r)
        lc_r = r[dr]
        # r <- lc_b * r - lc_r * x^(dr-db) * b
        new: dict[int, Poly] = {}
        for k, c in r.items():
            new[k] = lc_b * c
        for k, c in b.items():
            kk = k + dr - db
            new[kk] = new.get(kk, Poly.zero(chart)) - lc_r * c
        r = {k: c for k, c in new.items() if not c.is_zero}
    return r


def _content_and_primitive(u: dict[int, Poly], chart: Chart):
    cont = Poly.zero(chart)
    for c in u.values():
        cont = poly_gcd(cont, c)
    prim = {k: poly_divexact(c, cont) for k, c in u.items()}
    return cont, prim


def _normalize_gcd(g: Poly) -> Poly:
    if g.is_zero:
        return g
    # primitive with positive leading coefficient
    cont = Fraction(0)
    for c in g.terms.values():
        cont = _frac_gcd(cont, c)
    _, lead = g.leading()
    if lead < 0:
        cont = -cont
    return g.scale(1 / cont)


def poly_gcd(a: Poly, b: Poly) -> Poly:
    """Gcd in Q[x...], normalized primitive with positive leading coefficient.

    Raises _GcdTooExpensive when intermediates leave the cheap range; callers
    that merely want opportunistic reduction catch that and keep the operands
    unreduced.
    """
    if a.is_zero:
        return _normalize_gcd(b)
    if b.is_zero:
        return _normalize_gcd(a)
    if a.is_constant or b.is_constant:
        return Poly.const(a.chart, 1)
    if (
        a.total_degree() > 2 * GCD_DEGREE_CAP
        or b.total_degree() > 2 * GCD_DEGREE_CAP
        or len(a.terms) > 200
        or len(b.terms) > 200
    ):
        raise _GcdTooExpensive
    q = _try_divexact(a, b)
    if q is not None:
        return _normalize_gcd(b)
    q = _try_divexact(b, a)
    if q is not None:
        return _normalize_gcd(a)
    # main variable: last index where either has positive degree
    index = max(
        i
        for i in range(a.chart.dim)
        if a.degree_in(i) > 0 or b.degree_in(i) > 0
    )
    ua, ub = _as_univariate(a, index), _as_univariate(b, index)
    ca, pa = _content_and_primitive(ua, a.chart)
    cb, pb = _content_and_primitive(ub, a.chart)
    cont = poly_gcd(ca, cb)
    # primitive PRS in x_index
    f, g = (pa, pb) if max(pa) >= max(pb) else (pb, pa)
    while g:
        r = _pseudo_rem(f, g, a.chart, index)
        f, g = g, _content_and_primitive(r, a.chart)[1] if r else {}
    result = cont * _from_univariate(a.chart, index, f)
    return _normalize_gcd(result)


# -- rational functions ------------------------------------------------------


class RatFunc:
    """Quotient of two polynomials over the same chart.

    The denominator is never the zero polynomial and its leading coefficient
    is kept positive.  Equality is exact, decided by cross-multiplication.
    """

    __slots__ = ("num", "den")

    def __init__(self, num: Poly, den: Poly):
        _check_same_chart(num, den)
        if den.is_zero:
            raise ExprError("zero denominator")
        num, den = self._reduce(num, den)
        self.num = num
        self.den = den

    @staticmethod
    def _reduce(num: Poly, den: Poly) -> tuple[Poly, Poly]:
        if num.is_zero:
            return num, Poly.const(num.chart, 1)
        if den.is_constant:
            c = den.constant_value()
            return num.scale(1 / c), Poly.const(num.chart, 1)
        q = _try_divexact(num, den)
        if q is not None:
            return q, Poly.const(num.chart, 1)
        if (
            num.total_degree() <= GCD_DEGREE_CAP
            and den.total_degree() <= GCD_DEGREE_CAP
        ):
            try:
                g = poly_gcd(num, den)
            except _GcdTooExpensive:
                g = None
            if g is not None and g.total_degree() > 0:
                num = poly_divexact(num, g)
                den = poly_divexact(den, g)
                if den.is_constant:
                    c = den.constant_value()
                    return num.scale(1 / c), Poly.const(num.chart, 1)
        _, lead = den.leading()
        if lead < 0:
            num, den = -num, -den
        return num, den

    # -- constructors ------------------------------------------------------

    @staticmethod
    def from_poly(p: Poly) -> "RatFunc":
        return RatFunc(p, Poly.const(p.chart, 1))

    @staticmethod
    def const(chart: Chart, value) -> "RatFunc":
        return RatFunc.from_poly(Poly.const(chart, value))

    @staticmethod
    def var(chart: Chart, index: int) -> "RatFunc":
        return RatFunc.from_poly(Poly.var(chart, index))

    @staticmethod
    def zero(chart: Chart) -> "RatFunc":
        return RatFunc.from_poly(Poly.zero(chart))

    # -- field structure ---------------------------------------------------

    @property
    def chart(self) -> Chart:
        return self.num.chart

    @property
    def is_zero(self) -> bool:
        return self.num.is_zero

    def __add__(self, other) -> "RatFunc":
        other = _coerce(other, self.chart)
        if self.den == other.den:
            return RatFunc(self.num + other.num, self.den)
        return RatFunc(
            self.num * other.den + other.num * self.den, self.den * other.den
        )

    __radd__ = __add__

    def __neg__(self) -> "RatFunc":
        return RatFunc(-self.num, self.den)

    def __sub__(self, other) -> "RatFunc":
        return self + (-_coerce(other, self.chart))

    def __rsub__(self, other) -> "RatFunc":
        return _coerce(other, self.chart) - self

    def __mul__(self, other) -> "RatFunc":
        other = _coerce(other, self.chart)
        return RatFunc(self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "RatFunc":
        other = _coerce(other, self.chart)
        if other.is_zero:
            raise ExprError("division by zero rational function")
        return RatFunc(self.num * other.den, self.den * other.num)

    def __rtruediv__(self, other) -> "RatFunc":
        return _coerce(other, self.chart) / self

    def __pow__(self, n: int) -> "RatFunc":
        if n < 0:
            if self.is_zero:
                raise ExprError("zero to a negative power")
            return RatFunc(self.den, self.num) ** (-n)
        return RatFunc(self.num**n, self.den**n)

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = RatFunc.const(self.chart, other)
        if not isinstance(other, RatFunc):
            return NotImplemented
        if self.chart != other.chart:
            return False
        return (self.num * other.den - other.num * self.den).is_zero

    __hash__ = None

    # -- calculus ----------------------------------------------------------

    def diff(self, index: int) -> "RatFunc":
        """Exact partial derivative (quotient rule)."""
        if not 0 <= index < self.chart.dim:
            raise ExprError(f"variable index {index} out of range")
        if self.den.is_constant:
            return RatFunc(self.num.diff(index), self.den)
        n, d = self.num, self.den
        g = n.diff(index) * d - n * d.diff(index)
        # cancel one denominator factor structurally when it divides the
        # bracket; keeps iterated derivatives from stacking d^2 factors
        q = _try_divexact(g, d)
        if q is not None:
            return RatFunc(q, d)
        return RatFunc(g, d * d)

    def eval(self, point: Sequence[Fraction]) -> Fraction:
        dv = self.den.eval(point)
        if dv == 0:
            raise PoleError(f"denominator vanishes at {tuple(point)}")
        return self.num.eval(point) / dv

    def subst(self, values: Sequence["RatFunc"]) -> "RatFunc":
        n = self.num.subst(values)
        d = self.den.subst(values)
        if d.is_zero:
            raise PoleError("substitution lands on a pole")
        return n / d

    @property
    def is_polynomial(self) -> bool:
        return self.den.is_constant

    def as_poly(self) -> Poly:
        if not self.is_polynomial:
            raise ExprError(f"not a polynomial: {self}")
        return self.num

    # -- printing ----------------------------------------------------------

    def __str__(self) -> str:
        if self.den.is_constant:
            return str(self.num)
        ns = str(self.num)
        if " " in ns or ns.startswith("-"):
            ns = f"({ns})"
        return f"{ns}/({self.den})"

    def __repr__(self):
        return f"RatFunc({self})"


def _coerce(value, chart: Chart) -> RatFunc:
    if isinstance(value, RatFunc):
        _check_same_chart(value.num, Poly.zero(chart))
        return value
    if isinstance(value, Poly):
        return RatFunc.from_poly(value)
    if isinstance(value, (int, Fraction)):
        return RatFunc.const(chart, value)
    raise ExprError(f"cannot coerce {value!r} to a rational function")


# -- operations in the shape required by the module contract ----------------


def diff(e: RatFunc, var_index: int) -> RatFunc:
    return e.diff(var_index)


def evaluate(e: RatFunc, point: Sequence[Fraction]) -> Fraction:
    return e.eval(point)


def is_zero(e: RatFunc) -> bool:
    return e.is_zero


# -- parser ------------------------------------------------------------------
#
# Grammar (exact):
#   expr   := term (('+'|'-') term)*
#   term   := factor (('*'|'/') factor)*
#   factor := '-' factor | atom ('^' uint)?
#   atom   := rational | ident | '(' expr ')'


class _Tokenizer:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.tokens: list[tuple[str, str, int]] = []
        self._scan()
        self.i = 0

    def _scan(self):
        text, n = self.text, len(self.text)
        pos = 0
        while pos < n:
            ch = text[pos]
            if ch.isspace():
                pos += 1
                continue
            if ch.isdigit():
                start = pos
                while pos < n and text[pos].isdigit():
                    pos += 1
                self.tokens.append(("num", text[start:pos], start))
                continue
            if ch.isalpha() or ch == "_":
                start = pos
                while pos < n and (text[pos].isalnum() or text[pos] == "_"):
                    pos += 1
                self.tokens.append(("ident", text[start:pos], start))
                continue
            if ch in "+-*/^()":
                self.tokens.append(("op", ch, pos))
                pos += 1
                continue
            raise ParseError(f"unexpected character {ch!r}", pos)

    def peek(self):
        if self.i < len(self.tokens):
            return self.tokens[self.i]
        return ("eof", "", len(self.text))

    def next(self):
        tok = self.peek()
        self.i += 1
        return tok


class _Parser:
    def __init__(self, text: str, chart: Chart):
        self.toks = _Tokenizer(text)
        self.chart = chart

    def parse(self) -> RatFunc:
        value = self._expr()
        kind, text, pos = self.toks.peek()
        if kind != "eof":
            raise ParseError(f"unexpected trailing input {text!r}", pos)
        return value

    def _expr(self) -> RatFunc:
        value = self._term()
        while True:
            kind, text, _ = self.toks.peek()
            if kind == "op" and text in "+-":
                self.toks.next()
                rhs = self._term()
                value = value + rhs if text == "+" else value - rhs
            else:
                return value

    def _term(self) -> RatFunc:
        value = self._factor()
        while True:
            kind, text, pos = self.toks.peek()
            if kind == "op" and text in "*/":
                self.toks.next()
                rhs = self._factor()
                if text == "*":
                    value = value * rhs
                else:
                    if rhs.is_zero:
                        raise ParseError("division by zero", pos)
                    value = value / rhs
            else:
                return value

    def _factor(self) -> RatFunc:
        kind, text, pos = self.toks.peek()
        if kind == "op" and text == "-":
            self.toks.next()
            return -self._factor()
        value = self._atom()
        kind, text, pos = self.toks.peek()
        if kind == "op" and text == "^":
            self.toks.next()
            kind, text, pos = self.toks.next()
            if kind != "num":
                raise ParseError("exponent must be a nonnegative integer", pos)
            value = value ** int(text)
        return value

    def _atom(self) -> RatFunc:
        kind, text, pos = self.toks.next()
        if kind == "num":
            return RatFunc.const(self.chart, int(text))
        if kind == "ident":
            if text not in self.chart.var_names:
                raise ParseError(f"unknown identifier {text!r}", pos)
            return RatFunc.var(self.chart, self.chart.index(text))
        if kind == "op" and text == "(":
            value = self._expr()
            kind, text, pos = self.toks.next()
            if not (kind == "op" and text == ")"):
                raise ParseError("expected ')'", pos)
            return value
        raise ParseError(f"unexpected token {text!r}", pos)


def parse_expr(text: str, chart: Chart) -> RatFunc:
    """Parse an expression in the chart's variables into a canonical RatFunc."""
    return _Parser(text, chart).parse()
