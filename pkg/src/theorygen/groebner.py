"""Buchberger's algorithm over exact rationals with pure lex orders.

Internally every monomial is packed into one integer: the exponent of the
greatest indeterminate occupies the most significant field, so integer
comparison is lex comparison and monomial multiplication is addition.  Each
field carries a guard bit, which turns the divisibility test into a single
subtraction and mask.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from ._rational import ONE, ZERO
from .errors import BudgetExceeded, OrderInconsistentWithMeasuredSet, OrderMismatch
from .polynomial import BlockLexOrder, Polynomial, support

__all__ = [
    "GroebnerBasis",
    "Budget",
    "DEFAULT_STEP_BUDGET",
    "buchberger",
    "normal_form",
    "s_polynomial",
    "eliminate",
    "is_consistent",
    "is_member",
    "is_groebner",
]

DEFAULT_STEP_BUDGET = 1_000_000

_WIDTH = 16  # bits per exponent field, top bit is the guard


class Budget:
    """Counts reduction steps and raises once the limit is passed."""

    __slots__ = ("limit", "used")

    def __init__(self, limit: int | None = DEFAULT_STEP_BUDGET):
        self.limit = limit
        self.used = 0

    def spend(self, n: int = 1):
        self.used += n
        if self.limit is not None and self.used > self.limit:
            raise BudgetExceeded(f"Groebner step budget of {self.limit} exceeded")


class _Ring:
    """Packing/unpacking for one order."""

    def __init__(self, order: BlockLexOrder):
        self.order = order
        self.n = n = len(order.ranking)
        self.shifts = [_WIDTH * (n - 1 - k) for k in range(n)]
        self.guard = sum(1 << (s + _WIDTH - 1) for s in self.shifts)
        self.mask = (1 << (_WIDTH - 1)) - 1
        self.values = sum(self.mask << s for s in self.shifts)
        # position k in the ranking holds symbol id ranking[k]
        self.ranking = order.ranking

    def pack(self, m: tuple) -> int:
        v = 0
        for k, i in enumerate(self.ranking):
            e = m[i]
            if e:
                if e > self.mask:
                    raise OverflowError("exponent too large")
                v |= e << self.shifts[k]
        return v

    def unpack(self, v: int) -> tuple:
        out = [0] * self.n
        for k, i in enumerate(self.ranking):
            out[i] = (v >> self.shifts[k]) & self.mask
        return tuple(out)

    def divides(self, a: int, b: int) -> bool:
        """a | b."""
        return ((b | self.guard) - a) & self.guard == self.guard

    def lcm(self, a: int, b: int) -> int:
        # guard bit of a field survives (a|guard) - b exactly when a >= b there
        g = ((a | self.guard) - b) & self.guard
        sel = g - (g >> (_WIDTH - 1))
        return (a & sel) | (b & ~sel & self.values)

    def coprime(self, a: int, b: int) -> bool:
        return self.lcm(a, b) == a + b

    def to_internal(self, p: Polynomial) -> dict:
        return {self.pack(m): c for m, c in p.terms.items()}

    def to_poly(self, table, f: dict) -> Polynomial:
        return Polynomial._raw(table, {self.unpack(m): c for m, c in f.items()})


def _monic(f: dict) -> dict:
    lc = f[max(f)]
    if lc == ONE:
        return f
    inv = ONE / lc
    return {m: c * inv for m, c in f.items()}


def _reduce(ring: _Ring, f: dict, basis: Sequence[tuple], budget: Budget) -> dict:
    """Full normal form of ``f`` by monic polynomials ``basis`` = [(lm, poly)]."""
    f = dict(f)
    rem = {}
    divides = ring.divides
    while f:
        m = max(f)
        c = f[m]
        for lm, g in basis:
            if divides(lm, m):
                q = m - lm
                for gm, gc in g.items():
                    k = gm + q
                    v = f.get(k, ZERO) - c * gc
                    if v:
                        f[k] = v
                    else:
                        del f[k]
                budget.spend(len(g))
                break
        else:
            rem[m] = c
            del f[m]
            budget.spend(1)
    return rem


def _spoly(f: dict, lmf: int, g: dict, lmg: int, lcm: int) -> dict:
    qf = lcm - lmf
    qg = lcm - lmg
    out = {m + qf: c for m, c in f.items()}
    for m, c in g.items():
        k = m + qg
        v = out.get(k, ZERO) - c
        if v:
            out[k] = v
        else:
            del out[k]
    return out


def _update(ring: _Ring, lms: list, pairs: set, pair_lcm: dict, new: int):
    """Gebauer-Moeller installation of basis element ``new``."""
    lmh = lms[new]
    divides = ring.divides
    lcm = ring.lcm
    # old pairs whose lcm is strictly divisible by lm(h) along both sides are dropped
    keep = set()
    for p in pairs:
        i, j = p
        L = pair_lcm[p]
        if not divides(lmh, L) or L == lcm(lms[i], lmh) or L == lcm(lms[j], lmh):
            keep.add(p)
        else:
            del pair_lcm[p]
    groups: dict[int, list[int]] = {}
    for i in range(new):
        if lms[i] is None:
            continue
        groups.setdefault(lcm(lms[i], lmh), []).append(i)
    chosen = []
    for L in sorted(groups):
        if any(divides(L2, L) for L2 in chosen):
            continue
        chosen.append(L)
    for L in chosen:
        members = groups[L]
        if any(ring.coprime(lms[i], lmh) for i in members):
            continue
        p = (min(members), new)
        keep.add(p)
        pair_lcm[p] = L
    return keep


def _groebner(ring: _Ring, polys: list[dict], budget: Budget) -> list[dict]:
    basis: list[dict] = []
    lms: list = []
    pairs: set = set()
    pair_lcm: dict = {}

    def install(h: dict):
        nonlocal pairs
        h = _monic(h)
        lm = max(h)
        basis.append(h)
        lms.append(lm)
        budget.spend(len(basis) + len(pairs))
        pairs = _update(ring, lms, pairs, pair_lcm, len(basis) - 1)
        return lm

    # inter-reduce the input a little: reduce each by the ones already installed
    for f in sorted(polys, key=lambda f: max(f)):
        h = _reduce(ring, f, list(zip(lms, basis)), budget)
        if h:
            if max(h) == 0:
                return [{0: ONE}]
            install(h)

    while pairs:
        p = min(pairs, key=lambda q: (pair_lcm[q], q))
        pairs.discard(p)
        L = pair_lcm.pop(p)
        i, j = p
        s = _spoly(basis[i], lms[i], basis[j], lms[j], L)
        budget.spend(1)
        h = _reduce(ring, s, list(zip(lms, basis)), budget)
        if h:
            if max(h) == 0:
                return [{0: ONE}]
            install(h)

    # minimalise
    order = sorted(range(len(basis)), key=lambda k: lms[k])
    minimal = []
    for k in order:
        if not any(ring.divides(lms[t], lms[k]) for t in minimal):
            minimal.append(k)
    # inter-reduce (leading monomials stay fixed)
    reduced = []
    for k in minimal:
        others = [(lms[t], basis[t]) for t in minimal if t != k]
        g = basis[k]
        lm = lms[k]
        tail = {m: c for m, c in g.items() if m != lm}
        r = _reduce(ring, tail, others, budget)
        r[lm] = g[lm]
        reduced.append(_monic(r))
    return reduced


@dataclass(frozen=True)
class GroebnerBasis:
    generators: tuple
    order: BlockLexOrder
    reduced: bool = True
    _internal: list = field(default=None, compare=False, repr=False)

    def __len__(self):
        return len(self.generators)

    def __iter__(self):
        return iter(self.generators)

    def __getitem__(self, k):
        return self.generators[k]

    @property
    def table(self):
        return self.order.table

    def is_unit(self) -> bool:
        return len(self.generators) == 1 and self.generators[0].is_constant()


def _sort_key(ring: _Ring, item):
    f = item
    return (max(f), len(f))


def buchberger(
    gens: Iterable[Polynomial], order: BlockLexOrder, budget: Budget | int | None = None
) -> GroebnerBasis:
    """Reduced, monic Groebner basis of ``<gens>`` under ``order``.

    Generators come out sorted ascending by leading monomial, then by term
    count.  ``budget`` is a step limit (int) or a shared :class:`Budget`.
    """
    if not isinstance(budget, Budget):
        budget = Budget(DEFAULT_STEP_BUDGET if budget is None else budget)
    gens = list(gens)
    table = order.table
    for g in gens:
        if g.table != table:
            raise OrderMismatch("generator built over a different symbol table")
    ring = _Ring(order)
    polys = [ring.to_internal(g) for g in gens if not g.is_zero()]
    if not polys:
        return GroebnerBasis((), order, True, [])
    result = _groebner(ring, polys, budget)
    result.sort(key=lambda f: _sort_key(ring, f))
    gb = tuple(ring.to_poly(table, f) for f in result)
    return GroebnerBasis(gb, order, True, [(max(f), f) for f in result])


def _internal(G: GroebnerBasis, ring: _Ring):
    if G._internal is not None:
        return G._internal
    return [(max(f), f) for f in (ring.to_internal(g.monic()) for g in G.generators)]


def normal_form(p: Polynomial, G: GroebnerBasis, order: BlockLexOrder | None = None,
                budget: Budget | int | None = None) -> Polynomial:
    if order is not None and order != G.order:
        raise OrderMismatch("normal form requested under an order different from the basis")
    if p.table != G.order.table:
        raise OrderMismatch("polynomial and basis live over different symbol tables")
    if not isinstance(budget, Budget):
        budget = Budget(budget)
    ring = _Ring(G.order)
    r = _reduce(ring, ring.to_internal(p), _internal(G, ring), budget)
    return ring.to_poly(p.table, r)


def is_member(p: Polynomial, G: GroebnerBasis) -> bool:
    return normal_form(p, G).is_zero()


def s_polynomial(f: Polynomial, g: Polynomial, order: BlockLexOrder | None = None) -> Polynomial:
    if f.is_zero() or g.is_zero():
        raise ValueError("S-polynomial of a zero polynomial")
    order = order or BlockLexOrder.lex(f.table)
    ring = _Ring(order)
    fi, gi = _monic(ring.to_internal(f)), _monic(ring.to_internal(g))
    lf, lg = max(fi), max(gi)
    return ring.to_poly(f.table, _spoly(fi, lf, gi, lg, ring.lcm(lf, lg)))


def eliminate(G: GroebnerBasis, measured: Iterable[int]) -> list[Polynomial]:
    """Basis elements whose support lies inside ``measured`` (basis order kept)."""
    mset = frozenset(measured)
    if not G.order.eliminates_to(mset):
        raise OrderInconsistentWithMeasuredSet(
            "the basis order does not rank the measured symbols below all others"
        )
    return [g for g in G.generators if support(g) <= mset]


def is_consistent(G: GroebnerBasis) -> bool:
    return not G.is_unit()


def is_groebner(G: GroebnerBasis, gens: Iterable[Polynomial] = ()) -> bool:
    """Check that all S-polynomials (and ``gens``) reduce to zero modulo ``G``."""
    ring = _Ring(G.order)
    internal = _internal(G, ring)
    budget = Budget(None)
    for a in range(len(internal)):
        for b in range(a + 1, len(internal)):
            la, fa = internal[a]
            lb, fb = internal[b]
            s = _spoly(fa, la, fb, lb, ring.lcm(la, lb))
            if _reduce(ring, s, internal, budget):
                return False
    for g in gens:
        if _reduce(ring, ring.to_internal(g), internal, budget):
            return False
    return True
