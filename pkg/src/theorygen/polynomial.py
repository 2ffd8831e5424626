"""Exact multivariate polynomials over a :class:`SymbolTable`.

Monomials are dense exponent tuples indexed by symbol id; the canonical
(display) order is lex with symbol id 0 greatest.  Coefficients are exact
rationals.
"""

from __future__ import annotations

import math
import re
from functools import reduce
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from ._rational import ONE, QQ, ZERO, as_fraction, to_qq
from .errors import ContextMismatch, MissingAssignment, OrderMismatch, ParseError
from .symbols import SymbolKind, SymbolTable
from .units import DIMENSIONLESS, Dimension, dim_mul, dim_pow

__all__ = [
    "Monomial",
    "Term",
    "Polynomial",
    "Equation",
    "BlockLexOrder",
    "parse_polynomial",
    "parse_equation",
    "support",
    "has_common_factor",
    "strip_constant",
    "vdc_signature",
    "dim_of_monomial",
    "degree_in",
    "substitute_all_but",
    "monomial_mul",
    "monomial_div",
    "monomial_lcm",
    "monomial_divides",
]

Monomial = tuple  # tuple[int, ...] of length len(table)


class Term(NamedTuple):
    coeff: object
    monomial: Monomial


def monomial_mul(a: Monomial, b: Monomial) -> Monomial:
    return tuple(x + y for x, y in zip(a, b))


def monomial_div(a: Monomial, b: Monomial) -> Monomial:
    return tuple(x - y for x, y in zip(a, b))


def monomial_lcm(a: Monomial, b: Monomial) -> Monomial:
    return tuple(x if x > y else y for x, y in zip(a, b))


def monomial_divides(a: Monomial, b: Monomial) -> bool:
    """True iff ``a`` divides ``b``."""
    return all(x <= y for x, y in zip(a, b))


class Polynomial:
    """Immutable polynomial; ``terms`` maps exponent tuples to nonzero rationals."""

    __slots__ = ("table", "terms", "_hash")

    def __init__(self, table: SymbolTable, terms: Mapping[Monomial, object] | None = None):
        self.table = table
        clean = {}
        if terms:
            n = len(table)
            for m, c in terms.items():
                if len(m) != n:
                    raise ValueError("monomial length does not match symbol table")
                c = to_qq(c)
                if c:
                    clean[tuple(m)] = c
        self.terms = clean
        self._hash = None

    @classmethod
    def _raw(cls, table, terms):
        p = cls.__new__(cls)
        p.table = table
        p.terms = terms
        p._hash = None
        return p

    # constructors -------------------------------------------------------
    @classmethod
    def zero(cls, table):
        return cls._raw(table, {})

    @classmethod
    def constant(cls, table, c):
        return cls(table, {(0,) * len(table): c})

    @classmethod
    def symbol(cls, table, name_or_id, power: int = 1):
        i = table.index(name_or_id) if isinstance(name_or_id, str) else name_or_id
        m = [0] * len(table)
        m[i] = power
        return cls._raw(table, {tuple(m): ONE})

    @classmethod
    def from_terms(cls, table, terms: Iterable[Term]):
        acc: dict = {}
        for c, m in terms:
            acc[m] = acc.get(m, ZERO) + to_qq(c)
        return cls._raw(table, {m: c for m, c in acc.items() if c})

    # queries -----------------------------------------------------------
    def __len__(self):
        return len(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return all(not any(m) for m in self.terms)

    def is_monomial(self) -> bool:
        return len(self.terms) == 1

    def sorted_terms(self) -> list[Term]:
        """Terms in descending canonical lex order."""
        return [Term(self.terms[m], m) for m in sorted(self.terms, reverse=True)]

    def leading_term(self) -> Term:
        m = max(self.terms)
        return Term(self.terms[m], m)

    def support(self) -> frozenset:
        return support(self)

    def total_degree(self) -> int:
        return max((sum(m) for m in self.terms), default=0)

    # arithmetic ------------------------------------------------------------
    def _check(self, other):
        if isinstance(other, Polynomial):
            if other.table is not self.table and other.table != self.table:
                raise ContextMismatch("polynomials live over different symbol tables")
            return other
        return Polynomial.constant(self.table, other)

    def __add__(self, other):
        other = self._check(other)
        acc = dict(self.terms)
        for m, c in other.terms.items():
            v = acc.get(m, ZERO) + c
            if v:
                acc[m] = v
            else:
                acc.pop(m, None)
        return Polynomial._raw(self.table, acc)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial._raw(self.table, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._check(other))

    def __rsub__(self, other):
        return self._check(other) - self

    def __mul__(self, other):
        if not isinstance(other, Polynomial):
            c = to_qq(other)
            if not c:
                return Polynomial.zero(self.table)
            return Polynomial._raw(self.table, {m: v * c for m, v in self.terms.items()})
        other = self._check(other)
        acc: dict = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = tuple(x + y for x, y in zip(m1, m2))
                acc[m] = acc.get(m, ZERO) + c1 * c2
        return Polynomial._raw(self.table, {m: c for m, c in acc.items() if c})

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative powers are not polynomials")
        result = Polynomial.constant(self.table, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def scale(self, c):
        return self * c

    def mul_term(self, c, m: Monomial):
        return Polynomial._raw(
            self.table, {monomial_mul(m, k): v * c for k, v in self.terms.items()}
        )

    def __eq__(self, other):
        if isinstance(other, Polynomial):
            return self.table == other.table and self.terms == other.terms
        if isinstance(other, (int, QQ)):
            return self == Polynomial.constant(self.table, other)
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self.terms.items()))
        return self._hash

    # normalisation -----------------------------------------------------
    def monic(self):
        if not self.terms:
            return self
        return self * (ONE / self.leading_term().coeff)

    def primitive(self):
        """Integer coefficients with gcd 1 and positive leading coefficient."""
        if not self.terms:
            return self
        coeffs = [as_fraction(c) for c in self.terms.values()]
        den = reduce(math.lcm, (c.denominator for c in coeffs), 1)
        nums = [int(c * den) for c in coeffs]
        g = reduce(math.gcd, nums, 0)
        factor = QQ(den, g)
        if self.leading_term().coeff < 0:
            factor = -factor
        return self * factor

    def is_proportional_to(self, other: "Polynomial") -> bool:
        if self.is_zero() or other.is_zero():
            return self.is_zero() and other.is_zero()
        return self.monic() == other.monic()

    # numeric -------------------------------------------------------------
    def evaluate(self, values: Mapping[int, float]) -> float:
        total = 0.0
        for m, c in self.terms.items():
            v = float(c)
            for i, e in enumerate(m):
                if e:
                    v *= values[i] ** e
            total += v
        return total

    def term_magnitudes(self, values: Mapping[int, float]) -> list[float]:
        out = []
        for m, c in self.terms.items():
            v = abs(float(c))
            for i, e in enumerate(m):
                if e:
                    v *= abs(values[i]) ** e
            out.append(v)
        return out

    def relative_residual(self, values: Mapping[int, float]) -> float:
        """``|p(x)| / (1 + max term magnitude)``."""
        mags = self.term_magnitudes(values)
        return abs(self.evaluate(values)) / (1.0 + max(mags, default=0.0))

    # text --------------------------------------------------------------
    def __str__(self):
        return format_polynomial(self)

    def __repr__(self):
        return f"Polynomial({format_polynomial(self)!r})"


def _format_monomial(table: SymbolTable, m: Monomial) -> str:
    parts = []
    for i, e in enumerate(m):
        if e == 1:
            parts.append(table[i].name)
        elif e:
            parts.append(f"{table[i].name}^{e}")
    return "*".join(parts)


def _format_coeff(c) -> str:
    f = as_fraction(c)
    return str(f.numerator) if f.denominator == 1 else f"{f.numerator}/{f.denominator}"


def format_polynomial(p: Polynomial) -> str:
    if p.is_zero():
        return "0"
    out = []
    for k, (c, m) in enumerate(p.sorted_terms()):
        sign = "-" if c < 0 else "+"
        mag = -c if c < 0 else c
        mono = _format_monomial(p.table, m)
        if not mono:
            body = _format_coeff(mag)
        elif mag == 1:
            body = mono
        else:
            body = f"{_format_coeff(mag)}*{mono}"
        if k == 0:
            out.append(body if sign == "+" else "-" + body)
        else:
            out.append(f" {sign} {body}")
    return "".join(out)


# ---------------------------------------------------------------------------
# parsing: a small recursive-descent parser for + - * / ^ and parentheses.
# Division is only allowed by numbers; exponents must be positive integers.

_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z0-9_]*)|(.))")


def _tokenize(text: str):
    pos = 0
    toks = []
    text = text.rstrip()
    while pos < len(text):
        mt = _TOKEN.match(text, pos)
        if mt is None:
            break
        num, name, op = mt.groups()
        if num is not None:
            toks.append(("num", int(num)))
        elif name is not None:
            toks.append(("name", name))
        elif op is not None:
            if op not in "+-*/^()":
                raise ParseError(f"unexpected character {op!r}")
            toks.append(("op", op))
        pos = mt.end()
    return toks


class _Parser:
    def __init__(self, text, table):
        self.toks = _tokenize(text)
        self.i = 0
        self.table = table

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else (None, None)

    def take(self):
        tok = self.peek()
        self.i += 1
        return tok

    def expect(self, op):
        kind, val = self.take()
        if kind != "op" or val != op:
            raise ParseError(f"expected {op!r}")

    def expr(self):
        kind, val = self.peek()
        neg = False
        if kind == "op" and val in "+-":
            self.take()
            neg = val == "-"
        p = self.term()
        if neg:
            p = -p
        while True:
            kind, val = self.peek()
            if kind == "op" and val in "+-":
                self.take()
                rhs = self.term()
                p = p + rhs if val == "+" else p - rhs
            else:
                return p

    def term(self):
        p = self.power()
        while True:
            kind, val = self.peek()
            if kind == "op" and val == "*":
                self.take()
                p = p * self.power()
            elif kind == "op" and val == "/":
                self.take()
                d = self.power()
                if not d.is_constant() or d.is_zero():
                    raise ParseError("division is only allowed by nonzero numbers")
                p = p * (ONE / d.terms[(0,) * len(self.table)])
            else:
                return p

    def power(self):
        p = self.atom()
        kind, val = self.peek()
        if kind == "op" and val == "^":
            self.take()
            kind, val = self.take()
            if kind != "num":
                raise ParseError("exponent must be a positive integer")
            if val == 0:
                raise ParseError("zero exponents are not allowed")
            p = p**val
        return p

    def atom(self):
        kind, val = self.take()
        if kind == "num":
            return Polynomial.constant(self.table, val)
        if kind == "name":
            if val not in self.table:
                raise ParseError(f"unknown symbol {val!r}")
            return Polynomial.symbol(self.table, val)
        if kind == "op" and val == "(":
            p = self.expr()
            self.expect(")")
            return p
        if kind == "op" and val == "-":
            return -self.power()
        raise ParseError("unexpected end of expression" if kind is None else f"unexpected {val!r}")

    def parse(self):
        p = self.expr()
        if self.i != len(self.toks):
            raise ParseError(f"trailing input at token {self.peek()[1]!r}")
        return p


def parse_polynomial(text: str, table: SymbolTable) -> Polynomial:
    if not text.strip():
        raise ParseError("empty expression")
    return _Parser(text, table).parse()


def parse_equation(text: str, table: SymbolTable) -> "Equation":
    """Parse ``lhs = rhs`` (or a bare expression meaning ``expr = 0``)."""
    if text.count("=") > 1:
        raise ParseError("more than one '='")
    lhs, eq, rhs = text.partition("=")
    p = parse_polynomial(lhs, table)
    if eq:
        p = p - parse_polynomial(rhs, table)
    if p.is_zero():
        raise ParseError("equation reduces to 0 = 0")
    return Equation(p)


class Equation:
    """Homogeneous-form equation ``p = 0`` with content-normalised ``p``."""

    __slots__ = ("poly",)

    def __init__(self, poly: Polynomial):
        if poly.is_zero():
            raise ValueError("an equation needs a nonzero polynomial")
        self.poly = poly.primitive()

    @property
    def table(self):
        return self.poly.table

    def support(self):
        return support(self.poly)

    def __eq__(self, other):
        return isinstance(other, Equation) and self.poly == other.poly

    def __hash__(self):
        return hash(self.poly)

    def __str__(self):
        return f"{format_polynomial(self.poly)} = 0"

    def __repr__(self):
        return f"Equation({str(self)!r})"


# ---------------------------------------------------------------------------
# structural queries


def support(p: Polynomial) -> frozenset:
    ids = set()
    for m in p.terms:
        ids.update(i for i, e in enumerate(m) if e)
    return frozenset(ids)


def has_common_factor(monomials: Sequence[Monomial]) -> bool:
    if not monomials:
        raise ValueError("need at least one monomial")
    return any(min(col) > 0 for col in zip(*monomials))


def strip_constant(t: Term) -> Monomial:
    return t.monomial


def _segment(powers) -> str:
    return "".join(str(e) for e in sorted(powers))


def vdc_signature(m: Monomial, table: SymbolTable) -> str:
    v, d, c = [], [], []
    for i, e in enumerate(m):
        if not e:
            continue
        kind = table[i].kind
        if kind is SymbolKind.DERIVATIF:
            d.append(e)
        elif kind in (SymbolKind.PHYSICAL_CONSTANT, SymbolKind.MATHEMATICAL_CONSTANT):
            c.append(e)
        else:
            v.append(e)
    return f"{_segment(v)}.{_segment(d)}.{_segment(c)}"


def dim_of_monomial(m: Monomial, table: SymbolTable) -> Dimension:
    cache = table._dims
    dim = cache.get(m)
    if dim is None:
        dim = DIMENSIONLESS
        for i, e in enumerate(m):
            if e:
                dim = dim_mul(dim, dim_pow(table[i].unit, e))
        if len(cache) < 500_000:
            cache[m] = dim
    return dim


def degree_in(p: Polynomial, s: int) -> int:
    return max((m[s] for m in p.terms), default=0)


def substitute_all_but(p: Polynomial, assignments: Mapping[int, float], free: int) -> np.ndarray:
    """Univariate coefficients in ``free`` (highest degree first), as floats."""
    needed = support(p) - {free}
    missing = [p.table[i].name for i in sorted(needed) if i not in assignments]
    if missing:
        raise MissingAssignment(f"no value for {', '.join(missing)}")
    deg = degree_in(p, free)
    coeffs = np.zeros(deg + 1)
    for m, c in p.terms.items():
        v = float(c)
        for i, e in enumerate(m):
            if e and i != free:
                v *= assignments[i] ** e
        coeffs[deg - m[free]] += v
    return coeffs


# ---------------------------------------------------------------------------


class BlockLexOrder:
    """Pure lex order over an explicit ranking of all symbol ids.

    ``ranking[0]`` is the greatest indeterminate.  ``measured`` (optional)
    records the block that must rank below every other symbol so that the
    order eliminates the rest.
    """

    __slots__ = ("table", "ranking", "measured")

    def __init__(self, table: SymbolTable, ranking: Sequence[int], measured=None):
        ranking = tuple(ranking)
        if sorted(ranking) != list(range(len(table))):
            raise OrderMismatch("ranking must be a permutation of the symbol ids")
        self.table = table
        self.ranking = ranking
        self.measured = None if measured is None else frozenset(measured)

    @classmethod
    def lex(cls, table, ranking=None):
        return cls(table, range(len(table)) if ranking is None else ranking)

    @classmethod
    def eliminating(cls, table, measured: Iterable[int], measured_order: Sequence[int] | None = None):
        """Non-measured symbols (greatest, canonical order) then the measured block."""
        measured = list(measured_order) if measured_order is not None else sorted(set(measured))
        mset = set(measured)
        rest = [i for i in range(len(table)) if i not in mset]
        return cls(table, rest + measured, measured=mset)

    def key(self, m: Monomial) -> tuple:
        return tuple(m[i] for i in self.ranking)

    def eliminates_to(self, measured: Iterable[int]) -> bool:
        """True iff ``measured`` is a tail block of the ranking."""
        mset = set(measured)
        k = len(self.ranking) - len(mset)
        return set(self.ranking[k:]) == mset

    def __eq__(self, other):
        return (
            isinstance(other, BlockLexOrder)
            and self.table == other.table
            and self.ranking == other.ranking
        )

    def __hash__(self):
        return hash(self.ranking)

    def __repr__(self):
        names = [self.table[i].name for i in self.ranking]
        return f"BlockLexOrder({' > '.join(names)})"
