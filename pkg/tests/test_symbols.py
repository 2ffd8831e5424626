import pytest

from theorygen.errors import BadDerivativeMeta, DuplicateName, InvalidSymbol, NonDimensionlessTheta, NotADerivative, ParseError
from theorygen.symbols import (
    DerivMeta,
    SymbolInfo,
    SymbolKind,
    ThetaKind,
    build_symbol_table,
    dependent_variable_of,
    format_symbol_specs,
    parse_symbol_specs,
)
from theorygen.units import parse_unit
from theorygen.pipeline import load_symbols

SPEC = """
# comment
G constant m^3/kg*s^2
d2x1dt2 derivative m/s^2 x1 t 2
dx1dt derivative m/s x1 t 1
m1 variable kg
pi mathconst 1 pi
sin_theta theta 1 sin
theta theta 1 theta
"""


def test_canonical_order():
    t = build_symbol_table(parse_symbol_specs(SPEC))
    assert t.names == ["m1", "sin_theta", "theta", "dx1dt", "d2x1dt2", "G", "pi"]
    assert t.variables() == [0, 1, 2]  # theta symbols count as variables
    assert dependent_variable_of(t, t.index("d2x1dt2")) == "x1"
    with pytest.raises(NotADerivative):
        dependent_variable_of(t, t.index("m1"))


def test_spec_round_trip():
    t = build_symbol_table(parse_symbol_specs(SPEC))
    again = build_symbol_table(parse_symbol_specs(format_symbol_specs(t)))
    assert again == t


def test_default_symbols_load():
    t = load_symbols(None)
    assert "theta" in t.names and "G" in t.names
    assert len(t.derivatives()) == 4


def test_duplicate_name():
    s = SymbolInfo("x", SymbolKind.VARIABLE)
    with pytest.raises(DuplicateName):
        build_symbol_table([s, s])


def test_bad_derivative_meta():
    with pytest.raises(BadDerivativeMeta):
        build_symbol_table([SymbolInfo("v", SymbolKind.DERIVATIF, deriv=DerivMeta("x", "t", 3))])
    with pytest.raises(BadDerivativeMeta):
        build_symbol_table([SymbolInfo("x", SymbolKind.VARIABLE, deriv=DerivMeta("x", "t", 1))])
    with pytest.raises(BadDerivativeMeta):
        build_symbol_table([
            SymbolInfo("v", SymbolKind.DERIVATIF, deriv=DerivMeta("x", "t", 1)),
            SymbolInfo("u", SymbolKind.DERIVATIF, deriv=DerivMeta("y", "s", 1)),
        ])


def test_theta_must_be_dimensionless():
    with pytest.raises(NonDimensionlessTheta):
        build_symbol_table([SymbolInfo("th", SymbolKind.THETA_AUX, parse_unit("m"), theta_kind=ThetaKind.SIN)])


def test_invalid_names_and_constants():
    with pytest.raises(InvalidSymbol):
        build_symbol_table([SymbolInfo("2x", SymbolKind.VARIABLE)])
    with pytest.raises(InvalidSymbol):
        build_symbol_table([SymbolInfo("k", SymbolKind.MATHEMATICAL_CONSTANT)])


def test_parse_error_has_line():
    with pytest.raises(ParseError) as info:
        parse_symbol_specs("x variable m\ny bogus m\n", "syms.txt")
    assert info.value.line == 2
