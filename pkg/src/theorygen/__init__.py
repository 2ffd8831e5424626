"""Synthetic polynomial theories with consequences, replacement axioms and data."""

__version__ = "0.1.0"

from .consequence import Consequence, ConsequenceConfig, MeasuredSet, derive_consequence, verify_consequence
from .generator import GeneratorConfig, TheorySystem, build_dictionaries, gen_system
from .groebner import GroebnerBasis, buchberger, eliminate, normal_form
from .polynomial import BlockLexOrder, Equation, Polynomial, parse_equation, parse_polynomial
from .symbols import SymbolKind, SymbolTable, build_symbol_table, parse_symbol_specs
from .units import Dimension, parse_unit

__all__ = [
    "BlockLexOrder",
    "Consequence",
    "ConsequenceConfig",
    "Dimension",
    "Equation",
    "GeneratorConfig",
    "GroebnerBasis",
    "MeasuredSet",
    "Polynomial",
    "SymbolKind",
    "SymbolTable",
    "TheorySystem",
    "build_dictionaries",
    "build_symbol_table",
    "buchberger",
    "derive_consequence",
    "eliminate",
    "gen_system",
    "normal_form",
    "parse_equation",
    "parse_polynomial",
    "parse_symbol_specs",
    "parse_unit",
    "verify_consequence",
]
