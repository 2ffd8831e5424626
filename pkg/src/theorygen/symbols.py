"""Typed symbol universe: variables, derivatives, named constants and theta."""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import (
    BadDerivativeMeta,
    DuplicateName,
    InvalidSymbol,
    NonDimensionlessTheta,
    NotADerivative,
    ParseError,
)
from .units import DIMENSIONLESS, Dimension, format_unit, is_dimensionless, parse_unit

__all__ = [
    "SymbolKind",
    "ThetaKind",
    "DerivMeta",
    "SymbolInfo",
    "SymbolTable",
    "build_symbol_table",
    "dependent_variable_of",
    "parse_symbol_specs",
    "format_symbol_specs",
]

_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


class SymbolKind(enum.Enum):
    VARIABLE = "variable"
    DERIVATIF = "derivative"
    PHYSICAL_CONSTANT = "constant"
    MATHEMATICAL_CONSTANT = "mathconst"
    THETA_AUX = "theta"


class ThetaKind(enum.Enum):
    THETA = "theta"
    SIN = "sin"
    COS = "cos"
    EXP = "exp"


@dataclass(frozen=True)
class DerivMeta:
    dependent: str
    independent: str
    order: int


@dataclass(frozen=True)
class SymbolInfo:
    name: str
    kind: SymbolKind
    unit: Dimension = DIMENSIONLESS
    deriv: DerivMeta | None = None
    value: float | None = None
    theta_kind: ThetaKind | None = None

    @property
    def is_constant(self) -> bool:
        return self.kind in (SymbolKind.PHYSICAL_CONSTANT, SymbolKind.MATHEMATICAL_CONSTANT)

    @property
    def is_variable_like(self) -> bool:
        """Variables and theta auxiliaries both count as variables."""
        return self.kind in (SymbolKind.VARIABLE, SymbolKind.THETA_AUX)


_GROUP = {
    SymbolKind.VARIABLE: 0,
    SymbolKind.THETA_AUX: 1,
    SymbolKind.DERIVATIF: 2,
    SymbolKind.PHYSICAL_CONSTANT: 3,
    SymbolKind.MATHEMATICAL_CONSTANT: 3,
}


@dataclass(frozen=True)
class SymbolTable:
    """Validated, canonically ordered symbol list.

    Symbol ids are dense indices into ``entries``.  Build through
    :func:`build_symbol_table`; the constructor does not re-validate.
    """

    entries: tuple[SymbolInfo, ...]
    _index: dict = field(default=None, compare=False, repr=False, hash=False)
    _dims: dict = field(default=None, compare=False, repr=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "_index", {s.name: i for i, s in enumerate(self.entries)})
        # memo for monomial dimensions, filled by polynomial.dim_of_monomial
        object.__setattr__(self, "_dims", {})

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, i: int) -> SymbolInfo:
        return self.entries[i]

    def __hash__(self):
        return hash(self.entries)

    @property
    def names(self) -> list[str]:
        return [s.name for s in self.entries]

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise KeyError(f"unknown symbol {name!r}") from None

    def __contains__(self, name) -> bool:
        return name in self._index

    def ids_of(self, *kinds: SymbolKind) -> list[int]:
        return [i for i, s in enumerate(self.entries) if s.kind in kinds]

    def variables(self) -> list[int]:
        return self.ids_of(SymbolKind.VARIABLE, SymbolKind.THETA_AUX)

    def derivatives(self) -> list[int]:
        return self.ids_of(SymbolKind.DERIVATIF)

    def constants(self) -> list[int]:
        return self.ids_of(SymbolKind.PHYSICAL_CONSTANT, SymbolKind.MATHEMATICAL_CONSTANT)

    def subtable(self, names: Iterable[str]) -> "SymbolTable":
        keep = set(names)
        return build_symbol_table([s for s in self.entries if s.name in keep])


def _validate(spec: SymbolInfo) -> None:
    if not spec.name or not _NAME.match(spec.name):
        raise InvalidSymbol(f"invalid symbol name {spec.name!r}")
    if spec.kind is SymbolKind.DERIVATIF:
        d = spec.deriv
        if d is None or not d.dependent or not d.independent or d.order not in (1, 2):
            raise BadDerivativeMeta(f"bad derivative metadata for {spec.name!r}: {d!r}")
    elif spec.deriv is not None:
        raise BadDerivativeMeta(f"{spec.name!r} is not a derivative but carries derivative metadata")
    if spec.kind is SymbolKind.THETA_AUX:
        if not is_dimensionless(spec.unit):
            raise NonDimensionlessTheta(f"theta symbol {spec.name!r} must be dimensionless")
        if spec.theta_kind is None:
            raise InvalidSymbol(f"theta symbol {spec.name!r} needs a theta kind")
    if spec.kind is SymbolKind.MATHEMATICAL_CONSTANT:
        if not is_dimensionless(spec.unit):
            raise InvalidSymbol(f"mathematical constant {spec.name!r} must be dimensionless")
        if spec.value is None or not math.isfinite(spec.value):
            raise InvalidSymbol(f"mathematical constant {spec.name!r} needs a finite value")


def build_symbol_table(specs: Sequence[SymbolInfo]) -> SymbolTable:
    if not specs:
        raise InvalidSymbol("symbol list is empty")
    seen = set()
    for s in specs:
        _validate(s)
        if s.name in seen:
            raise DuplicateName(f"duplicate symbol name {s.name!r}")
        seen.add(s.name)

    derivs = [s for s in specs if s.kind is SymbolKind.DERIVATIF]
    indeps = {s.deriv.independent for s in derivs}
    if len(indeps) > 1:
        raise BadDerivativeMeta(f"derivatives use several independent variables: {sorted(indeps)}")
    theta_kinds = [s.theta_kind for s in specs if s.kind is SymbolKind.THETA_AUX]
    if len(set(theta_kinds)) != len(theta_kinds):
        raise InvalidSymbol("each theta kind may appear at most once")

    # group derivatives by dependent variable (first-appearance order), order 1 before 2
    dep_rank: dict[str, int] = {}
    for s in derivs:
        dep_rank.setdefault(s.deriv.dependent, len(dep_rank))
    pos = {s.name: i for i, s in enumerate(specs)}

    def key(s: SymbolInfo):
        g = _GROUP[s.kind]
        if s.kind is SymbolKind.DERIVATIF:
            return (g, dep_rank[s.deriv.dependent], s.deriv.order, pos[s.name])
        return (g, 0, 0, pos[s.name])

    return SymbolTable(tuple(sorted(specs, key=key)))


def dependent_variable_of(table: SymbolTable, d: int) -> str:
    info = table[d]
    if info.kind is not SymbolKind.DERIVATIF:
        raise NotADerivative(f"{info.name!r} is not a derivative")
    return info.deriv.dependent


# ---------------------------------------------------------------------------
# symbol spec files: ``name kind unit [dep indep order] [value]``

_CONST_VALUES = {"pi": math.pi, "e": math.e, "tau": math.tau}


def _parse_value(tok: str) -> float:
    if tok in _CONST_VALUES:
        return _CONST_VALUES[tok]
    return float(tok)


def parse_symbol_specs(text: str, path=None) -> list[SymbolInfo]:
    specs = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        if len(toks) < 3:
            raise ParseError(f"expected 'name kind unit ...', got {raw!r}", path, lineno)
        name, kind_tok, unit_tok, rest = toks[0], toks[1], toks[2], toks[3:]
        try:
            kind = SymbolKind(kind_tok)
        except ValueError:
            raise ParseError(f"unknown symbol kind {kind_tok!r}", path, lineno) from None
        try:
            unit = parse_unit(unit_tok)
            if kind is SymbolKind.DERIVATIF:
                if len(rest) != 3:
                    raise ParseError("derivative needs 'dependent independent order'", path, lineno)
                spec = SymbolInfo(name, kind, unit, deriv=DerivMeta(rest[0], rest[1], int(rest[2])))
            elif kind is SymbolKind.MATHEMATICAL_CONSTANT:
                if len(rest) != 1:
                    raise ParseError("mathematical constant needs a value", path, lineno)
                spec = SymbolInfo(name, kind, unit, value=_parse_value(rest[0]))
            elif kind is SymbolKind.THETA_AUX:
                if len(rest) != 1:
                    raise ParseError("theta symbol needs one of theta|sin|cos|exp", path, lineno)
                spec = SymbolInfo(name, kind, unit, theta_kind=ThetaKind(rest[0]))
            else:
                if rest:
                    raise ParseError(f"unexpected trailing fields {rest}", path, lineno)
                spec = SymbolInfo(name, kind, unit)
        except ParseError:
            raise
        except ValueError as exc:
            raise ParseError(str(exc), path, lineno) from None
        specs.append(spec)
    return specs


def format_symbol_specs(table: SymbolTable | Sequence[SymbolInfo]) -> str:
    lines = []
    for s in table:
        parts = [s.name, s.kind.value, format_unit(s.unit)]
        if s.deriv is not None:
            parts += [s.deriv.dependent, s.deriv.independent, str(s.deriv.order)]
        if s.value is not None:
            parts.append(repr(float(s.value)))
        if s.theta_kind is not None:
            parts.append(s.theta_kind.value)
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"
