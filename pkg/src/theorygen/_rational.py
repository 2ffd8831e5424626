"""Exact rational coefficient type (gmpy2.mpq when available)."""

from fractions import Fraction

try:
    from gmpy2 import mpq as QQ
except ImportError:  # pragma: no cover - exercised only without gmpy2
    QQ = Fraction

ZERO = QQ(0)
ONE = QQ(1)


def to_qq(value) -> "QQ":
    if isinstance(value, Fraction):
        return QQ(value.numerator, value.denominator)
    if isinstance(value, float):
        return QQ(Fraction(value))
    return QQ(value)


def as_fraction(value) -> Fraction:
    return Fraction(int(value.numerator), int(value.denominator))
