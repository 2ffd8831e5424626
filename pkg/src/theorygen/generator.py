"""Random synthesis of terms, equations, axiom systems and replacement axioms."""

from __future__ import annotations

import bisect
import itertools
import math
import random
from collections import Counter
from dataclasses import dataclass, field, fields, replace
from fractions import Fraction
from functools import reduce
from typing import Iterable, Sequence

from .errors import BudgetExceeded, ExhaustedAttempts, Inconsistent
from .groebner import Budget, GroebnerBasis, buchberger, is_consistent, normal_form
from .polynomial import (
    BlockLexOrder,
    Equation,
    Monomial,
    Polynomial,
    Term,
    dim_of_monomial,
    has_common_factor,
    vdc_signature,
)
from .symbols import SymbolKind, SymbolTable, ThetaKind
from .units import Dimension

__all__ = [
    "GeneratorConfig",
    "TheorySystem",
    "Dictionaries",
    "gen_term",
    "make_term",
    "build_uom_term_dict",
    "build_vdc_dict",
    "build_dictionaries",
    "primitive_term_count",
    "enumeration_bound",
    "pick_weighted",
    "assign_signs",
    "forced_last_sign",
    "check_terms",
    "gen_equation_free",
    "gen_equation_dim",
    "gen_equation",
    "gen_system",
    "gen_replacement_axiom",
    "trig_identity",
    "admissible_replacement_indices",
    "uom_cache_info",
]


@dataclass(frozen=True)
class GeneratorConfig:
    max_power: int = 3
    max_factors: int = 4
    prob_factors_per_term: tuple = (0.246, 0.413, 0.225, 0.088, 0.025, 0.004)
    prob_num_terms: tuple = (0.0, 0.6, 0.29, 0.09, 0.03)
    prob_small_constants: tuple = (0.82, 0.07, 0.06, 0.05)
    small_constants: tuple = (1, 2, 3, 4)
    same_factor_variable_bias: float = 0.3
    same_factor_derivative_bias: float = 0.1
    prob_all_positive: float = 0.05
    dimensional_mode: bool = True
    seed: int = 0
    resample_budget: int = 1000
    uom_cap: int = 10**7
    vdc_samples: int = 10_000
    equation_attempts: int = 50
    gb_step_budget: int = 200_000

    def __post_init__(self):
        if self.max_power < 1 or self.max_factors < 1:
            raise ValueError("max_power and max_factors must be >= 1")
        if len(self.small_constants) != len(self.prob_small_constants):
            raise ValueError("small_constants and prob_small_constants differ in length")
        for name in ("prob_factors_per_term", "prob_num_terms", "prob_small_constants"):
            probs = getattr(self, name)
            if any(p < 0 for p in probs) or sum(probs) <= 0:
                raise ValueError(f"{name} must be non-negative with positive mass")

    def factor_probs(self, n_available: int | None = None) -> list[float]:
        """Factor-count probabilities truncated to ``max_factors`` and renormalised."""
        k = self.max_factors if n_available is None else min(self.max_factors, n_available)
        head = list(self.prob_factors_per_term[:k])
        total = sum(head)
        if total <= 0:
            raise ValueError("no probability mass on feasible factor counts")
        return [p / total for p in head]

    def num_terms_probs(self) -> list[float]:
        total = sum(self.prob_num_terms)
        return [p / total for p in self.prob_num_terms]

    def small_constant_probs(self) -> list[float]:
        total = sum(self.prob_small_constants)
        return [p / total for p in self.prob_small_constants]

    def as_items(self) -> list[tuple[str, object]]:
        return [(f.name, getattr(self, f.name)) for f in fields(self)]


def _cdf(weights: Sequence[float]) -> list[float]:
    """Normalised cumulative distribution of non-negative ``weights``."""
    total = sum(weights)
    out = [c / total for c in itertools.accumulate(weights)]
    out[-1] = 1.0
    return out


def _draw(rng: random.Random, cdf: Sequence[float]) -> int:
    """Index drawn from a cumulative distribution."""
    return bisect.bisect_right(cdf, rng.random() * cdf[-1])


def _power(rng: random.Random, bias: float, max_power: int) -> int:
    # truncated geometric: P(k) proportional to bias**(k-1)
    weights = [bias ** (k - 1) for k in range(1, max_power + 1)]
    return 1 + _draw(rng, _cdf(weights))


def make_term(table: SymbolTable, factors: Sequence[int], powers: Sequence[int], coeff: int = 1) -> Term:
    m = [0] * len(table)
    for i, e in zip(factors, powers):
        m[i] = e
    return Term(coeff, tuple(m))


def _is_derivative(table, i):
    return table[i].kind is SymbolKind.DERIVATIF


def gen_term(cfg: GeneratorConfig, table: SymbolTable, rng: random.Random,
             pool: Sequence[int] | None = None) -> Term:
    """Random term: distinct factors, biased powers, a small integer coefficient.

    At most one distinct derivative factor; offending factor draws are
    redrawn with the factor count kept, so the count distribution is exact.
    """
    pool = list(range(len(table))) if pool is None else list(pool)
    if not pool:
        raise ValueError("empty symbol pool")
    n_plain = sum(1 for i in pool if not _is_derivative(table, i))
    n_deriv = len(pool) - n_plain
    feasible = n_plain + (1 if n_deriv else 0)
    k = 1 + _draw(rng, _cdf(cfg.factor_probs(feasible)))
    while True:
        factors = rng.sample(pool, k)
        if sum(1 for i in factors if _is_derivative(table, i)) <= 1:
            break
    powers = []
    for i in factors:
        bias = cfg.same_factor_derivative_bias if _is_derivative(table, i) else cfg.same_factor_variable_bias
        powers.append(_power(rng, bias, cfg.max_power))
    c = cfg.small_constants[_draw(rng, _cdf(cfg.small_constant_probs()))]
    return make_term(table, factors, powers, c)


# ---------------------------------------------------------------------------
# dictionaries


def enumeration_bound(num_monomials: int, max_power: int, max_factors: int) -> int:
    return (max_power + 1) ** max_factors * math.comb(num_monomials, max_factors)


def primitive_term_count(n_plain: int, n_deriv: int, max_factors: int, max_power: int) -> int:
    """Number of primitive terms with at most one derivative factor."""
    total = 0
    for k in range(1, max_factors + 1):
        ways = math.comb(n_plain, k) + n_deriv * math.comb(n_plain, k - 1)
        total += ways * max_power**k
    return total


_UOM_CACHE: dict = {}
_UOM_STATS = {"hits": 0, "misses": 0}


def uom_cache_info() -> dict:
    return dict(_UOM_STATS, size=len(_UOM_CACHE))


def _base_names(table):
    names = set()
    for s in table:
        names.update(n for n, _ in s.unit.exponents)
    return sorted(names)


def build_uom_term_dict(cfg: GeneratorConfig, table: SymbolTable, use_cache: bool = True) -> dict:
    """Map every reachable dimension to its primitive monomials.

    Primitive terms have 1..max_factors distinct factors, powers in
    [1, max_power] and at most one derivative factor.
    """
    key = (table, cfg.max_power, cfg.max_factors)
    if use_cache and key in _UOM_CACHE:
        _UOM_STATS["hits"] += 1
        return _UOM_CACHE[key]
    _UOM_STATS["misses"] += 1
    n = len(table)
    derivs = {i for i in range(n) if _is_derivative(table, i)}
    count = primitive_term_count(n - len(derivs), len(derivs), cfg.max_factors, cfg.max_power)
    if count > cfg.uom_cap:
        raise BudgetExceeded(f"{count} primitive terms exceed the cap of {cfg.uom_cap}")

    bases = _base_names(table)
    # integer exponent vectors scaled by the common denominator
    scale = 1
    for s in table:
        for _, e in s.unit.exponents:
            scale = math.lcm(scale, e.denominator)
    vecs = []
    for s in table:
        d = s.unit.as_dict()
        vecs.append(tuple(int(d.get(b, 0) * scale) for b in bases))
    powers = range(1, cfg.max_power + 1)
    buckets: dict[tuple, list] = {}
    for k in range(1, min(cfg.max_factors, n) + 1):
        for combo in itertools.combinations(range(n), k):
            if sum(1 for i in combo if i in derivs) > 1:
                continue
            cvecs = [vecs[i] for i in combo]
            for pw in itertools.product(powers, repeat=k):
                dim = tuple(sum(e * v[b] for e, v in zip(pw, cvecs)) for b in range(len(bases)))
                m = [0] * n
                for i, e in zip(combo, pw):
                    m[i] = e
                buckets.setdefault(dim, []).append(tuple(m))
    out = {}
    for dim, monos in buckets.items():
        out[Dimension.from_map({b: Fraction(e, scale) for b, e in zip(bases, dim)})] = monos
    if use_cache:
        _UOM_CACHE[key] = out
    return out


def build_vdc_dict(cfg: GeneratorConfig, table: SymbolTable, rng: random.Random) -> Counter:
    counts = Counter()
    for _ in range(cfg.vdc_samples):
        counts[vdc_signature(gen_term(cfg, table, rng).monomial, table)] += 1
    return counts


@dataclass
class Dictionaries:
    """Unit-of-measure and vdc-signature dictionaries plus sampling caches."""

    uom: dict
    vdc: Counter
    _buckets: dict = field(default_factory=dict, repr=False)

    def bucket(self, table, dim):
        """(monomials, cumulative weights) for one dimension, positive weights only."""
        if dim not in self._buckets:
            monos = self.uom.get(dim, [])
            kept, weights = [], []
            for m in monos:
                w = self.vdc.get(vdc_signature(m, table), 0)
                if w > 0:
                    kept.append(m)
                    weights.append(w)
            cum = list(itertools.accumulate(weights))
            self._buckets[dim] = (kept, cum, len(monos))
        return self._buckets[dim]


def build_dictionaries(cfg: GeneratorConfig, table: SymbolTable, seed: int | None = None) -> Dictionaries:
    uom = build_uom_term_dict(cfg, table) if cfg.dimensional_mode else {}
    rng = random.Random(f"vdc:{cfg.seed if seed is None else seed}")
    return Dictionaries(uom, build_vdc_dict(cfg, table, rng))


def pick_weighted(items: Sequence, cum_weights: Sequence[float], n: int, rng: random.Random,
                  exclude: Iterable = ()) -> list:
    """``n`` distinct items, sequentially proportional to weight, skipping ``exclude``."""
    excluded = set(exclude)
    available = sum(1 for it in items if it not in excluded)
    if available < n:
        raise ValueError("not enough items to pick from")
    picked = []
    seen = set(excluded)
    total = cum_weights[-1] if cum_weights else 0
    while len(picked) < n:
        j = bisect.bisect_right(cum_weights, rng.random() * total)
        it = items[min(j, len(items) - 1)]
        if it in seen:
            continue
        seen.add(it)
        picked.append(it)
    return picked


# ---------------------------------------------------------------------------
# equations


def forced_last_sign(prior: Sequence[int]) -> int | None:
    """Opposite sign when all prior signs agree, otherwise ``None`` (random)."""
    if prior and all(s == prior[0] for s in prior):
        return -prior[0]
    return None


def assign_signs(k: int, rng: random.Random, prob_all_positive: float) -> list[int]:
    if rng.random() < prob_all_positive:
        return [1] * k
    signs = [rng.choice((1, -1)) for _ in range(k - 1)]
    last = forced_last_sign(signs)
    signs.append(last if last is not None else rng.choice((1, -1)))
    return signs


def check_terms(monomials: Sequence[Monomial]) -> str | None:
    """Reason a set of term monomials is unacceptable, or ``None``."""
    if len(set(monomials)) != len(monomials):
        return "equal modulo constants"
    if len(monomials) > 1 and has_common_factor(monomials):
        return "common factor"
    if len(monomials) == 2 and all(sum(1 for e in m if e) == 1 for m in monomials):
        return "two single-indeterminate terms"
    return None


def _finish(table, coeffs, monos, rng, cfg) -> Equation:
    g = reduce(math.gcd, coeffs, 0) or 1
    signs = assign_signs(len(monos), rng, cfg.prob_all_positive)
    terms = [Term(s * c // g, m) for s, c, m in zip(signs, coeffs, monos)]
    return Equation(Polynomial.from_terms(table, terms))


def gen_equation_free(cfg: GeneratorConfig, table: SymbolTable, rng: random.Random,
                      required: int | None = None) -> Equation:
    """Equation with no dimensional constraint; term count kept across resamples."""
    k = 1 + _draw(rng, _cdf(cfg.num_terms_probs()))
    for _ in range(cfg.resample_budget):
        terms = [gen_term(cfg, table, rng) for _ in range(k)]
        monos = [t.monomial for t in terms]
        if required is not None and not any(m[required] for m in monos):
            continue
        if check_terms(monos) is None:
            return _finish(table, [t.coeff for t in terms], monos, rng, cfg)
    raise ExhaustedAttempts("could not generate an acceptable equation")


def _first_term(cfg, table, rng, required):
    if required is None:
        return gen_term(cfg, table, rng)
    for _ in range(cfg.resample_budget):
        t = gen_term(cfg, table, rng)
        if t.monomial[required]:
            return t
    raise ExhaustedAttempts(f"no term containing {table[required].name!r}")


def gen_equation_dim(cfg: GeneratorConfig, table: SymbolTable, dicts: Dictionaries,
                     rng: random.Random, required: int | None = None) -> Equation:
    """Dimensionally homogeneous equation drawn through the unit dictionary."""
    probs = _cdf(cfg.num_terms_probs())
    consts = _cdf(cfg.small_constant_probs())
    for _ in range(cfg.resample_budget):
        k = 1 + _draw(rng, probs)
        first = _first_term(cfg, table, rng, required)
        dim = dim_of_monomial(first.monomial, table)
        monos, cum, size = dicts.bucket(table, dim)
        if size < k:
            continue
        usable = len(monos) - (1 if first.monomial in monos else 0)
        if usable < k - 1:
            continue
        extra = pick_weighted(monos, cum, k - 1, rng, exclude=(first.monomial,))
        all_monos = [first.monomial] + extra
        if check_terms(all_monos) is not None:
            continue
        coeffs = [first.coeff] + [cfg.small_constants[_draw(rng, consts)] for _ in extra]
        return _finish(table, coeffs, all_monos, rng, cfg)
    raise ExhaustedAttempts("could not generate a dimensionally consistent equation")


def gen_equation(cfg, table, dicts, rng, required=None) -> Equation:
    if cfg.dimensional_mode:
        return gen_equation_dim(cfg, table, dicts, rng, required)
    return gen_equation_free(cfg, table, rng, required)


def equation_dimension(eq: Equation) -> Dimension:
    return dim_of_monomial(next(iter(eq.poly.terms)), eq.table)


def is_homogeneous(eq: Equation) -> bool:
    dims = {dim_of_monomial(m, eq.table) for m in eq.poly.terms}
    return len(dims) == 1


# ---------------------------------------------------------------------------
# systems


@dataclass(frozen=True)
class TheorySystem:
    table: SymbolTable
    axioms: tuple
    includes_trig_identity: bool = False
    config: GeneratorConfig | None = field(default=None, compare=False)
    seed: int | None = field(default=None, compare=False)
    certificate: GroebnerBasis | None = field(default=None, compare=False, repr=False)

    def polys(self) -> list[Polynomial]:
        return [a.poly for a in self.axioms]

    def replaceable_indices(self) -> list[int]:
        n = len(self.axioms)
        return list(range(n - 1 if self.includes_trig_identity else n))

    def symbols_used(self) -> frozenset:
        out = set()
        for a in self.axioms:
            out |= a.support()
        return frozenset(out)


def admissible_replacement_indices(system: TheorySystem, consequence: Polynomial,
                                   budget: Budget | None = None) -> list[int]:
    """Replaceable axioms whose removal leaves ``consequence`` unprovable."""
    out = []
    for k in system.replaceable_indices():
        others = [a.poly for j, a in enumerate(system.axioms) if j != k]
        if not others:
            out.append(k)
            continue
        G = buchberger(others, BlockLexOrder.lex(system.table), budget)
        if not normal_form(consequence, G).is_zero():
            out.append(k)
    return out


def trig_identity(table: SymbolTable) -> Equation | None:
    kinds = {s.theta_kind: i for i, s in enumerate(table) if s.kind is SymbolKind.THETA_AUX}
    if ThetaKind.SIN in kinds and ThetaKind.COS in kinds:
        s = Polynomial.symbol(table, kinds[ThetaKind.SIN], 2)
        c = Polynomial.symbol(table, kinds[ThetaKind.COS], 2)
        return Equation(s + c - 1)
    return None


def _plain_support(eq: Equation) -> frozenset:
    return frozenset(i for i in eq.support() if not eq.table[i].is_constant)


def _clashes(eq: Equation, existing: Sequence[Equation], dimensional: bool) -> bool:
    if eq in existing:
        return True
    if dimensional:
        dim = equation_dimension(eq)
        mine = _plain_support(eq)
        for other in existing:
            if equation_dimension(other) == dim and mine & _plain_support(other):
                return True
    return False


def consistency_certificate(table, axioms, budget) -> GroebnerBasis:
    return buchberger([a.poly for a in axioms], BlockLexOrder.lex(table), budget)


def gen_system(cfg: GeneratorConfig, table: SymbolTable, num_eqns: int, dicts: Dictionaries,
               rng: random.Random, certify: bool = True) -> TheorySystem:
    """Axiom system trying to use every symbol at least once.

    Raises :class:`Inconsistent` when the axioms generate the unit ideal and
    :class:`BudgetExceeded` when the consistency check runs too long.
    """
    if num_eqns < 1:
        raise ValueError("num_eqns must be >= 1")
    eqns: list[Equation] = []
    to_use = set(range(len(table)))
    tries = 0
    limit = cfg.equation_attempts * max(num_eqns, 1) * 4
    target = None
    target_tries = 0
    while len(eqns) < num_eqns:
        tries += 1
        if tries > limit:
            raise ExhaustedAttempts("could not assemble an equation system")
        if eqns and to_use and target is None:
            target = rng.choice(sorted(to_use))
            target_tries = 0
        try:
            eq = gen_equation(cfg, table, dicts, rng, required=target if eqns else None)
        except ExhaustedAttempts:
            eq = None
        if eq is None or _clashes(eq, eqns, cfg.dimensional_mode):
            if target is not None:
                target_tries += 1
                if target_tries >= cfg.equation_attempts:
                    to_use.discard(target)
                    target = None
            continue
        eqns.append(eq)
        to_use -= eq.support()
        target = None

    ident = trig_identity(table)
    if ident is not None and ident not in eqns:
        eqns.append(ident)
    axioms = tuple(eqns)
    cert = None
    if certify:
        cert = consistency_certificate(table, axioms, Budget(cfg.gb_step_budget))
        if not is_consistent(cert):
            raise Inconsistent("generated axioms are inconsistent")
    return TheorySystem(table, axioms, ident is not None, cfg, cfg.seed, cert)


def gen_replacement_axiom(system: TheorySystem, index: int, cfg: GeneratorConfig,
                          dicts: Dictionaries, rng: random.Random,
                          consequence: Polynomial | None = None) -> tuple[Equation, TheorySystem]:
    """Replacement for axiom ``index`` that changes what the theory proves.

    The result contains every symbol used only by the replaced axiom, keeps
    the system consistent, is not implied by the remaining axioms nor by the
    original system, and (when given) leaves ``consequence`` unprovable.
    """
    if index not in system.replaceable_indices():
        raise IndexError(f"axiom index {index} cannot be replaced")
    table = system.table
    others = [a for k, a in enumerate(system.axioms) if k != index]
    required = set(system.axioms[index].support())
    for a in others:
        required -= a.support()
    required = sorted(required)
    order = BlockLexOrder.lex(table)
    budget = Budget(cfg.gb_step_budget * 4)
    gb_others = buchberger([a.poly for a in others], order, budget) if others else None
    gb_orig = system.certificate or consistency_certificate(table, system.axioms, budget)
    if consequence is not None and (gb_others is None or normal_form(consequence, gb_others).is_zero()):
        # the remaining axioms already prove it, whatever replaces axiom `index`
        raise ExhaustedAttempts(f"axiom {index} is not needed for the consequence")
    dim = equation_dimension(system.axioms[index]) if cfg.dimensional_mode else None

    for _ in range(cfg.resample_budget):
        seed_sym = rng.choice(required) if required else None
        try:
            eq = gen_equation(cfg, table, dicts, rng, required=seed_sym)
        except ExhaustedAttempts:
            continue
        supp = eq.support()
        if any(r not in supp for r in required):
            continue
        if eq in system.axioms:
            continue
        if dim is not None and not is_homogeneous(eq):
            continue
        try:
            if gb_others is not None and normal_form(eq.poly, gb_others, budget=budget).is_zero():
                continue
            if normal_form(eq.poly, gb_orig, budget=budget).is_zero():
                continue
            axioms = list(system.axioms)
            axioms[index] = eq
            cert = consistency_certificate(table, axioms, Budget(cfg.gb_step_budget))
        except BudgetExceeded:
            continue
        if not is_consistent(cert):
            continue
        if consequence is not None and normal_form(consequence, cert).is_zero():
            continue
        new_system = replace(system, axioms=tuple(axioms), certificate=cert)
        return eq, new_system
    raise ExhaustedAttempts(f"no admissible replacement for axiom {index}")
