"""Consequences of an axiom system by elimination over a measured subset."""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass, field
from typing import Iterable

from .errors import BudgetExceeded, InconsistentSystem, Rejected
from .generator import TheorySystem
from .groebner import Budget, GroebnerBasis, buchberger, eliminate, normal_form
from .polynomial import BlockLexOrder, Equation, Polynomial, support
from .symbols import SymbolKind, SymbolTable, ThetaKind

__all__ = [
    "MeasuredSet",
    "Consequence",
    "ConsequenceConfig",
    "FilterReason",
    "FilterResult",
    "check_consequence_filters",
    "derive_consequence",
    "project",
    "verify_consequence",
    "is_data_viable",
    "solvable_symbols",
]


@dataclass(frozen=True)
class MeasuredSet:
    measured_vars: frozenset = frozenset()
    measured_derivs: frozenset = frozenset()
    observed_consts: frozenset = frozenset()

    @classmethod
    def from_ids(cls, table: SymbolTable, ids: Iterable[int]) -> "MeasuredSet":
        v, d, c = set(), set(), set()
        for i in ids:
            s = table[i]
            if s.kind is SymbolKind.DERIVATIF:
                d.add(i)
            elif s.is_constant:
                c.add(i)
            else:
                v.add(i)
        return cls(frozenset(v), frozenset(d), frozenset(c))

    @property
    def all(self) -> frozenset:
        return self.measured_vars | self.measured_derivs | self.observed_consts

    def names(self, table: SymbolTable) -> dict:
        def _n(ids):
            return sorted(table[i].name for i in ids)
        return {
            "measured_vars": _n(self.measured_vars),
            "measured_derivs": _n(self.measured_derivs),
            "observed_consts": _n(self.observed_consts),
        }


@dataclass(frozen=True)
class ConsequenceConfig:
    T: int = 8
    N_max: int = 10
    max_constants: int = 1
    gb_step_budget: int = 200_000

    def __post_init__(self):
        if self.T < 2 or self.N_max < 1:
            raise ValueError("need T >= 2 and N_max >= 1")


@dataclass(frozen=True)
class Consequence:
    polynomial: Equation
    measured: MeasuredSet
    provenance: tuple = field(default=(), compare=False)

    @property
    def poly(self) -> Polynomial:
        return self.polynomial.poly

    @property
    def table(self):
        return self.polynomial.table


class FilterReason(enum.Enum):
    EMPTY = "Empty"
    MONOMIAL = "Monomial"
    TOO_MANY_CONSTANTS = "TooManyConstants"
    TOO_MANY_TERMS = "TooManyTerms"
    MULTIPLE_DEPENDENT_VARIABLES = "MultipleDependentVariables"


@dataclass(frozen=True)
class FilterResult:
    reasons: tuple = ()

    @property
    def accepted(self) -> bool:
        return not self.reasons

    def __bool__(self):
        return self.accepted


def dependent_variables(p: Polynomial) -> set:
    table = p.table
    return {table[i].deriv.dependent for i in support(p) if table[i].kind is SymbolKind.DERIVATIF}


def check_consequence_filters(p: Polynomial, table: SymbolTable, cfg: ConsequenceConfig) -> FilterResult:
    """All failing filters, each evaluated independently."""
    if p.is_zero():
        return FilterResult((FilterReason.EMPTY,))
    reasons = []
    if p.is_monomial():
        reasons.append(FilterReason.MONOMIAL)
    consts = [i for i in support(p) if table[i].kind is SymbolKind.PHYSICAL_CONSTANT]
    if len(consts) > cfg.max_constants:
        reasons.append(FilterReason.TOO_MANY_CONSTANTS)
    if len(p) > cfg.T:
        reasons.append(FilterReason.TOO_MANY_TERMS)
    if len(dependent_variables(p)) > 1:
        reasons.append(FilterReason.MULTIPLE_DEPENDENT_VARIABLES)
    return FilterResult(tuple(reasons))


def solvable_symbols(p: Polynomial) -> list[int]:
    """Symbols data generation may solve for, most preferred kinds first.

    Plain variables, else derivatives, else theta itself when none of its
    auxiliaries occurs (they are computed from theta, never solved).
    """
    table = p.table
    supp = support(p)
    plain = [i for i in supp if table[i].kind is SymbolKind.VARIABLE]
    if plain:
        return sorted(plain)
    derivs = [i for i in supp if table[i].kind is SymbolKind.DERIVATIF]
    if derivs:
        return sorted(derivs)
    thetas = {table[i].theta_kind: i for i in supp if table[i].kind is SymbolKind.THETA_AUX}
    if list(thetas) == [ThetaKind.THETA]:
        return [thetas[ThetaKind.THETA]]
    return []


def is_data_viable(p: Polynomial) -> bool:
    return bool(solvable_symbols(p))


def project(system: TheorySystem, measured: Iterable[int], budget: Budget | int | None = None,
            measured_order=None) -> list[Polynomial]:
    """Reduced basis of the elimination ideal onto ``measured``."""
    mset = sorted(set(measured))
    order = BlockLexOrder.eliminating(system.table, mset, measured_order)
    G = buchberger(system.polys(), order, budget)
    if G.is_unit():
        raise InconsistentSystem("axioms generate the unit ideal")
    return eliminate(G, mset)


def derive_consequence(system: TheorySystem, cfg: ConsequenceConfig, rng: random.Random,
                       system_id=None) -> Consequence:
    """Search shuffled measured prefixes for an acceptable consequence.

    One lex basis per attempt serves every prefix: the shuffled symbols are
    ranked in reverse, so each prefix is a tail block of the order.
    """
    table = system.table
    used = sorted(system.symbols_used())
    unused = [i for i in range(len(table)) if i not in set(used)]
    axiom_supports = [a.support() for a in system.axioms]
    for attempt in range(cfg.N_max):
        shuffled = list(used)
        rng.shuffle(shuffled)
        ranking = unused + shuffled[::-1]
        order = BlockLexOrder(table, ranking)
        try:
            G = buchberger(system.polys(), order, Budget(cfg.gb_step_budget))
        except BudgetExceeded:
            continue
        if G.is_unit():
            raise InconsistentSystem("axioms generate the unit ideal")
        for j in range(1, len(shuffled) + 1):
            prefix = frozenset(shuffled[:j])
            if any(prefix <= s for s in axiom_supports):
                continue
            elim = [g for g in G.generators if support(g) <= prefix]
            if not elim:
                continue
            q = elim[0]
            if not check_consequence_filters(q, table, cfg) or not is_data_viable(q):
                continue
            measured = MeasuredSet.from_ids(table, prefix)
            prov = (system_id, attempt, tuple(table[i].name for i in ranking))
            return Consequence(Equation(q), measured, prov)
    raise Rejected(f"no acceptable consequence within {cfg.N_max} attempts")


def verify_consequence(system: TheorySystem, q, basis: GroebnerBasis | None = None) -> bool:
    """Exact ideal membership of ``q`` (Consequence, Equation or Polynomial)."""
    if isinstance(q, Consequence):
        q = q.poly
    elif isinstance(q, Equation):
        q = q.poly
    G = basis or system.certificate or buchberger(system.polys(), BlockLexOrder.lex(system.table))
    return normal_form(q, G).is_zero()
