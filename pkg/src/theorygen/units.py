"""Units of measure as rational exponent vectors over named base units."""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

from .errors import UnitParseError

__all__ = [
    "BaseUnit",
    "Dimension",
    "DIMENSIONLESS",
    "dim_mul",
    "dim_pow",
    "is_dimensionless",
    "parse_unit",
    "format_unit",
    "DERIVED_ALIASES",
    "alias_for",
]

_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


@dataclass(frozen=True)
class BaseUnit:
    name: str

    def __post_init__(self):
        if not self.name or not _NAME.match(self.name):
            raise UnitParseError(f"invalid base unit name {self.name!r}")


@dataclass(frozen=True)
class Dimension:
    """Canonical exponent map; zero entries are never stored.

    ``exponents`` is a sorted tuple of ``(base_name, Fraction)`` pairs so that
    dataclass equality and hashing coincide with map equality.
    """

    exponents: tuple = ()

    @classmethod
    def from_map(cls, mapping: Mapping[str, object]) -> "Dimension":
        items = []
        for name, exp in mapping.items():
            exp = Fraction(exp)
            if exp != 0:
                items.append((str(name), exp))
        return cls(tuple(sorted(items)))

    @classmethod
    def base(cls, name: str) -> "Dimension":
        return cls(((BaseUnit(name).name, Fraction(1)),))

    def as_dict(self) -> dict:
        return dict(self.exponents)

    def __mul__(self, other: "Dimension") -> "Dimension":
        return dim_mul(self, other)

    def __pow__(self, k: int) -> "Dimension":
        return dim_pow(self, k)

    def __str__(self):
        return format_unit(self)


DIMENSIONLESS = Dimension()


def dim_mul(a: Dimension, b: Dimension) -> Dimension:
    acc = dict(a.exponents)
    for name, exp in b.exponents:
        acc[name] = acc.get(name, 0) + exp
    return Dimension.from_map(acc)


def dim_pow(a: Dimension, k: int) -> Dimension:
    return Dimension.from_map({name: exp * k for name, exp in a.exponents})


def is_dimensionless(a: Dimension) -> bool:
    return not a.exponents


def _parse_factor(token: str) -> tuple[str, Fraction]:
    token = token.strip()
    if "^" in token:
        name, _, exp = token.partition("^")
        exp = exp.strip()
        if exp.startswith("(") and exp.endswith(")"):
            exp = exp[1:-1]
        try:
            value = Fraction(exp)
        except (ValueError, ZeroDivisionError):
            raise UnitParseError(f"bad exponent in unit factor {token!r}") from None
    else:
        name, value = token, Fraction(1)
    name = name.strip()
    if not _NAME.match(name):
        raise UnitParseError(f"bad unit factor {token!r}")
    return name, value


def _split_product(text: str) -> Iterable[str]:
    text = text.strip()
    if text in ("", "1"):
        return []
    return text.split("*")


def parse_unit(text: str) -> Dimension:
    """Parse ``kg*m/s^2``-style unit text; ``1`` means dimensionless.

    Rational exponents are written ``m^(1/2)``.  At most one top-level ``/``
    is allowed.
    """
    # protect slashes inside parenthesised exponents
    depth = 0
    cut = -1
    for i, ch in enumerate(text):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif ch == "/" and depth == 0:
            if cut >= 0:
                raise UnitParseError(f"more than one '/' in unit {text!r}")
            cut = i
    num, den = (text, "") if cut < 0 else (text[:cut], text[cut + 1 :])
    if cut >= 0 and not den.strip():
        raise UnitParseError(f"empty denominator in unit {text!r}")
    acc: dict[str, Fraction] = {}
    for sign, part in ((1, num), (-1, den)):
        for tok in _split_product(part):
            if not tok.strip():
                raise UnitParseError(f"empty factor in unit {text!r}")
            name, exp = _parse_factor(tok)
            acc[name] = acc.get(name, 0) + sign * exp
    return Dimension.from_map(acc)


def _fmt_exp(name: str, exp: Fraction) -> str:
    if exp == 1:
        return name
    if exp.denominator == 1:
        return f"{name}^{exp.numerator}"
    return f"{name}^({exp.numerator}/{exp.denominator})"


def format_unit(a: Dimension) -> str:
    """Inverse of :func:`parse_unit` on canonical dimensions."""
    if not a.exponents:
        return "1"
    num = [_fmt_exp(n, e) for n, e in a.exponents if e > 0]
    den = [_fmt_exp(n, -e) for n, e in a.exponents if e < 0]
    text = "*".join(num) if num else "1"
    if den:
        text += "/" + "*".join(den)
    return text


# Display-only aliases; comparisons always use the reduced vector.
DERIVED_ALIASES = {
    "N": parse_unit("kg*m/s^2"),
    "J": parse_unit("kg*m^2/s^2"),
    "W": parse_unit("kg*m^2/s^3"),
    "Pa": parse_unit("kg/m*s^2"),
    "Hz": parse_unit("1/s"),
}


def alias_for(a: Dimension) -> str | None:
    for name, dim in DERIVED_ALIASES.items():
        if dim == a:
            return name
    return None
