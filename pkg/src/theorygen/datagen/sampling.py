"""Numeric datasets for consequences and for whole axiom systems."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import (
    DegenerateLeadingCoefficient,
    ExhaustedAttempts,
    NoRealSolutionInRegion,
)
from ..groebner import Budget, buchberger
from ..polynomial import BlockLexOrder, Equation, Polynomial, degree_in, support
from ..symbols import SymbolKind, SymbolTable, ThetaKind
from ..consequence import solvable_symbols
from .ode import integrate_batch
from .roots import preferred_root_batch, real_roots, solve_linear_batch

__all__ = [
    "SampleRange",
    "sample_range",
    "DataTable",
    "CompiledPoly",
    "InducedODE",
    "induced_ode",
    "gen_consequence_data",
    "gen_biased_system_data",
    "biased_data_order",
    "BOUND",
]

BOUND = 1e6
ROW_TOL = 1e-9
T_MIN = 0.1
ODE_MAX_STEPS = 500  # rows still running after this many steps are dropped
REGION_TRIES = 3  # fresh sample regions tried before a table is rejected

_PAIRS = [(n, m) for n in range(1, 11) for m in range(n + 1, 11)]


@dataclass(frozen=True)
class SampleRange:
    n: int
    m: int

    def __post_init__(self):
        if not 1 <= self.n < self.m <= 10:
            raise ValueError(f"invalid sample range [{self.n}, {self.m}]")

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.uniform(self.n, self.m, size)

    def __str__(self):
        return f"[{self.n},{self.m}]"


def sample_range(rng: np.random.Generator) -> SampleRange:
    return SampleRange(*_PAIRS[int(rng.integers(len(_PAIRS)))])


@dataclass
class DataTable:
    columns: tuple
    values: np.ndarray
    roles: tuple
    target: str | None = None
    ranges: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        self.columns = tuple(self.columns)
        self.roles = tuple(self.roles)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2 or self.values.shape[1] != len(self.columns):
            raise ValueError("values must be a rows x columns array")
        if len(self.roles) != len(self.columns):
            raise ValueError("one role per column")

    def __len__(self):
        return self.values.shape[0]

    def __eq__(self, other):
        return (
            isinstance(other, DataTable)
            and self.columns == other.columns
            and self.roles == other.roles
            and self.target == other.target
            and self.values.shape == other.values.shape
            and np.array_equal(self.values, other.values)
        )

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.columns.index(name)]

    def with_values(self, values) -> "DataTable":
        return DataTable(self.columns, values, self.roles, self.target, dict(self.ranges))

    def matrix_for(self, table: SymbolTable) -> np.ndarray:
        """Rows laid out by symbol id (NaN for symbols without a column)."""
        V = np.full((len(self), len(table)), np.nan)
        for j, name in enumerate(self.columns):
            if name in table:
                V[:, table.index(name)] = self.values[:, j]
        return V


class CompiledPoly:
    """Row-wise numeric evaluation of a polynomial over a value matrix.

    ``V`` has one column per symbol id; NaN marks unassigned symbols, which
    is harmless for symbols outside the support.
    """

    def __init__(self, poly: Polynomial, free: int | None = None):
        items = list(poly.terms.items())
        self.poly = poly
        self.free = free
        self.cols = sorted(support(poly))
        E = np.array([[m[i] for i in self.cols] for m, _ in items], dtype=float).reshape(len(items), len(self.cols))
        self.C = np.array([float(c) for _, c in items])
        if free is not None:
            k = self.cols.index(free)
            self.deg_of_term = E[:, k].astype(int)
            self.degree = int(self.deg_of_term.max())
            E = E.copy()
            E[:, k] = 0
        self.E = E

    def term_values(self, V: np.ndarray) -> np.ndarray:
        X = V[:, self.cols]
        with np.errstate(all="ignore"):
            return self.C * np.prod(X[:, None, :] ** self.E[None, :, :], axis=2)

    def evaluate(self, V):
        return self.term_values(V).sum(axis=1)

    def relative_residual(self, V):
        tv = self.term_values(V)
        return np.abs(tv.sum(axis=1)) / (1.0 + np.abs(tv).max(axis=1))

    def coeffs(self, V) -> np.ndarray:
        """Coefficients in ``free``, highest degree first, one row per data row."""
        tv = self.term_values(V)
        out = np.zeros((V.shape[0], self.degree + 1))
        for t, d in enumerate(self.deg_of_term):
            out[:, self.degree - d] += tv[:, t]
        return out


def _solve_rows(coeffs: np.ndarray) -> np.ndarray:
    """Preferred real root per row; NaN when none exists or it is degenerate."""
    if coeffs.shape[1] == 2:
        return solve_linear_batch(coeffs[:, 0], coeffs[:, 1])
    return preferred_root_batch(coeffs)


def _theta_family(table: SymbolTable) -> dict:
    return {s.theta_kind: i for i, s in enumerate(table) if s.kind is SymbolKind.THETA_AUX}


_THETA_FN = {ThetaKind.SIN: np.sin, ThetaKind.COS: np.cos, ThetaKind.EXP: np.exp}


def _constant_value(info) -> float:
    return 1.0 if info.kind is SymbolKind.PHYSICAL_CONSTANT else float(info.value)


def _role(table, i, solved: set) -> str:
    info = table[i]
    if info.is_constant:
        return "constant"
    if info.kind is SymbolKind.THETA_AUX and info.theta_kind is not ThetaKind.THETA:
        return "theta-derived"
    if info.kind is SymbolKind.DERIVATIF:
        return "derivative"
    return "solved" if i in solved else "sampled"


def _valid_rows(V: np.ndarray, cols) -> np.ndarray:
    X = V[:, cols]
    return np.isfinite(X).all(axis=1) & (np.abs(X) <= BOUND).all(axis=1)


class _Sampler:
    """Per-run sample ranges and the shared fill-in rules for constants and theta."""

    def __init__(self, table: SymbolTable, rng: np.random.Generator):
        self.table = table
        self.rng = rng
        self.ranges: dict[int, SampleRange] = {}
        self.theta = _theta_family(table)
        self._theta_range = None

    def range_for(self, key) -> SampleRange:
        if key not in self.ranges:
            self.ranges[key] = sample_range(self.rng)
        return self.ranges[key]

    def sample(self, V, i, rows):
        """Fill symbol ``i`` on ``rows`` (constants fixed, theta family from theta)."""
        info = self.table[i]
        if info.is_constant:
            V[rows, i] = _constant_value(info)
        elif info.kind is SymbolKind.THETA_AUX:
            self.sample_theta(V, rows)
        else:
            V[rows, i] = self.range_for(i).draw(self.rng, len(rows))

    def sample_theta(self, V, rows):
        key = self.theta.get(ThetaKind.THETA, "theta")
        theta = self.range_for(key).draw(self.rng, len(rows))
        if ThetaKind.THETA in self.theta:
            V[rows, self.theta[ThetaKind.THETA]] = theta
        for kind, fn in _THETA_FN.items():
            if kind in self.theta:
                V[rows, self.theta[kind]] = fn(theta)

    def range_names(self):
        out = {}
        for k, r in self.ranges.items():
            out[self.table[k].name if isinstance(k, int) else str(k)] = r
        return out


# ---------------------------------------------------------------------------
# induced ODE


@dataclass(frozen=True)
class InducedODE:
    """``D = f(state, others)`` for the highest-order derivative ``D`` of a polynomial.

    ``state`` lists the symbol ids carried by the integrator (lowest order
    first); ``None`` marks the internal first derivative when it has no
    column of its own.
    """

    poly: Polynomial
    derivative: int
    order: int
    state: tuple
    linear: bool

    def rhs_values(self, V: np.ndarray) -> np.ndarray:
        return _solve_rows(CompiledPoly(self.poly, self.derivative).coeffs(V))

    def closed_form(self) -> tuple[Polynomial, Polynomial] | None:
        """(numerator, denominator) with ``D = -numerator/denominator`` when linear."""
        if not self.linear:
            return None
        table = self.poly.table
        d = self.derivative
        num, den = {}, {}
        for m, c in self.poly.terms.items():
            if m[d]:
                mm = list(m)
                mm[d] = 0
                den[tuple(mm)] = c
            else:
                num[m] = c
        return Polynomial(table, num), Polynomial(table, den)


def _dependent_chain(table: SymbolTable, d: int):
    """(dependent-variable id or None, first-derivative id or None) for derivative ``d``."""
    dep = table[d].deriv.dependent
    x = table.index(dep) if dep in table and table[table.index(dep)].kind is SymbolKind.VARIABLE else None
    v = None
    for i in table.derivatives():
        info = table[i]
        if info.deriv.dependent == dep and info.deriv.order == 1:
            v = i
    return x, v


def induced_ode(q, table: SymbolTable | None = None) -> InducedODE | None:
    """ODE induced by the highest-order derivative of ``q``, or ``None``.

    ``None`` means the derivative is determined algebraically (no lower-order
    member of its chain occurs in ``q``) and the root path applies.
    """
    p = _as_poly(q)
    table = p.table
    supp = support(p)
    derivs = [i for i in supp if table[i].kind is SymbolKind.DERIVATIF]
    if not derivs:
        return None
    D = max(derivs, key=lambda i: (table[i].deriv.order, i))
    order = table[D].deriv.order
    x, v = _dependent_chain(table, D)
    if order == 1:
        state = (x,) if x in supp else ()
    else:
        has_x = x is not None and x in supp
        has_v = v is not None and v in supp
        if has_x:
            state = (x, v if has_v else None)
        elif has_v:
            state = (v,)
        else:
            state = ()
    if not state:
        return None
    return InducedODE(p, D, order, state, degree_in(p, D) == 1)


def _as_poly(q) -> Polynomial:
    if isinstance(q, Polynomial):
        return q
    if isinstance(q, Equation):
        return q.poly
    return q.polynomial.poly  # Consequence


def _integrate_chain(ode: InducedODE, V: np.ndarray, rows: np.ndarray, sampler: _Sampler):
    """Run the induced ODE on ``rows`` of ``V`` and store state and derivative.

    Other columns of ``V`` must already be filled.  Returns a boolean mask of
    rows that integrated successfully.
    """
    rng = sampler.rng
    k = len(ode.state)
    base = V[rows].copy()
    y0 = np.empty((len(rows), k))
    for j, sid in enumerate(ode.state):
        y0[:, j] = sampler.range_for(sid if sid is not None else ("state", ode.derivative, j)).draw(rng, len(rows))
    t_end = rng.uniform(T_MIN, 1.0, len(rows))
    comp = CompiledPoly(ode.poly, ode.derivative)
    # other columns ride along as constant state components

    def fill(Y):
        W = Y[:, k:]
        for j, sid in enumerate(ode.state):
            if sid is not None:
                W[:, sid] = Y[:, j]
        return W

    def f(_t, Y):
        W = fill(Y.copy())
        D = _solve_rows(comp.coeffs(W))
        out = np.zeros_like(Y)
        if ode.order == 1:
            out[:, 0] = D
        elif k == 2:
            out[:, 0] = Y[:, 1]
            out[:, 1] = D
        else:
            out[:, 0] = D
        return out

    Y0 = np.hstack([y0, np.nan_to_num(base, nan=0.0)])
    nan_mask = np.isnan(base)
    Y, ok = integrate_batch(f, Y0, t_end, bound=BOUND, max_steps=ODE_MAX_STEPS)
    W = Y[:, k:].copy()
    W[nan_mask] = np.nan
    for j, sid in enumerate(ode.state):
        if sid is not None:
            W[:, sid] = Y[:, j]
    W[:, ode.derivative] = _solve_rows(comp.coeffs(W))
    V[rows] = W
    return ok & np.isfinite(W[:, ode.derivative])


# ---------------------------------------------------------------------------
# consequence data


def _solve_target(p: Polynomial) -> int:
    """Variable solved on the root path: lowest degree, later symbols on ties."""
    cands = solvable_symbols(p)
    if not cands:
        raise NoRealSolutionInRegion("the consequence has no column that can be solved for")
    return min(cands, key=lambda i: (degree_in(p, i), -i))


def _columns_for(table, ids):
    ids = set(ids)
    theta = _theta_family(table)
    if ids & set(theta.values()) and ThetaKind.THETA in theta:
        ids.add(theta[ThetaKind.THETA])
    return sorted(ids)


def _collect(points, make_batch, rng):
    """Accumulate accepted rows from repeated batches until ``points`` rows exist."""
    chunks, have, tried = [], 0, 0
    limit = 20 * points + 200
    hopeless = 4 * points + 100
    while have < points:
        need = points - have
        batch = max(16, int(need * 1.25) + 8)
        V, ok = make_batch(batch)
        tried += batch
        got = V[ok]
        chunks.append(got[:need])
        have += len(chunks[-1])
        if have == 0 and tried >= hopeless:
            raise NoRealSolutionInRegion("no real solution in the sampled region")
        if have and have < points and have * limit < points * tried:
            # at the observed yield the row limit cannot be met
            raise ExhaustedAttempts(f"yield {have}/{tried} is too low for {points} rows")
        if have < points and tried >= limit:
            if have == 0:
                raise NoRealSolutionInRegion("no real solution in the sampled region")
            raise ExhaustedAttempts(f"only {have} of {points} rows after {tried} attempts")
    return np.vstack(chunks)


def gen_consequence_data(q, table: SymbolTable | None = None, points: int = 1000,
                         rng: np.random.Generator | None = None) -> DataTable:
    """Noise-free rows satisfying the consequence ``q``.

    Without derivatives (or when the highest derivative is algebraically
    determined) one column is solved by root finding; otherwise the
    induced ODE is integrated from a random initial state to a random time
    in [0.1, 1] and the state/derivative values there are recorded.
    """
    if points < 1:
        raise ValueError("points must be >= 1")
    rng = rng if rng is not None else np.random.default_rng()
    p = _as_poly(q)
    return _over_regions(lambda: _consequence_table(p, points, _Sampler(p.table, rng)))


def _over_regions(build):
    """Run ``build`` on up to REGION_TRIES fresh sample regions."""
    for k in range(REGION_TRIES):
        try:
            return build()
        except (ExhaustedAttempts, NoRealSolutionInRegion):
            if k == REGION_TRIES - 1:
                raise


def _consequence_table(p: Polynomial, points: int, sampler: "_Sampler") -> DataTable:
    table = p.table
    rng = sampler.rng
    cols = _columns_for(table, support(p))
    ode = induced_ode(p)
    if ode is not None:
        target = ode.derivative
        solved = {target} | {s for s in ode.state if s is not None}
    else:
        target = _solve_target(p)
        solved = {target}
    comp = CompiledPoly(p)
    comp_t = CompiledPoly(p, target)
    free_cols = [i for i in cols if i not in solved]

    def make_batch(size):
        V = np.full((size, len(table)), np.nan)
        rows = np.arange(size)
        theta_done = False
        for i in free_cols:
            info = table[i]
            if info.kind is SymbolKind.THETA_AUX:
                if not theta_done:
                    sampler.sample_theta(V, rows)
                    theta_done = True
            else:
                sampler.sample(V, i, rows)
        if ode is None:
            V[:, target] = _solve_rows(comp_t.coeffs(V))
            ok = np.ones(size, dtype=bool)
        else:
            ok = _integrate_chain(ode, V, rows, sampler)
        ok &= _valid_rows(V, cols)
        with np.errstate(all="ignore"):
            ok &= comp.relative_residual(V) < ROW_TOL
        return V, ok

    V = _collect(points, make_batch, rng)
    values = V[:, cols]
    roles = [_role(table, i, solved) for i in cols]
    return DataTable([table[i].name for i in cols], values, roles, table[target].name,
                     sampler.range_names())


# ---------------------------------------------------------------------------
# biased whole-system data


def biased_data_order(table: SymbolTable) -> BlockLexOrder:
    """Plain variables > derivatives (higher order first) > theta family > constants."""
    plain = table.ids_of(SymbolKind.VARIABLE)
    derivs = sorted(table.derivatives(), key=lambda i: (-table[i].deriv.order, i))
    theta = table.ids_of(SymbolKind.THETA_AUX)
    consts = table.constants()
    return BlockLexOrder(table, plain + derivs + theta + consts)


def _leading_var(g: Polynomial, order: BlockLexOrder) -> int:
    supp = support(g)
    for i in order.ranking:
        if i in supp:
            return i
    raise ValueError("constant polynomial has no leading variable")


def _pick_common_root(first: CompiledPoly, others, V, rows, target):
    """Per row, the preferred root of ``first`` that also satisfies ``others``."""
    coeffs = first.coeffs(V[rows])
    out = np.full(len(rows), np.nan)
    for r, c in enumerate(coeffs):
        try:
            roots = real_roots(c)
        except DegenerateLeadingCoefficient:
            continue
        row = V[rows[r]:rows[r] + 1].copy()
        for x in roots:
            row[0, target] = x
            if all(o.relative_residual(row)[0] < ROW_TOL for o in others):
                out[r] = x
                break
    return out


def gen_biased_system_data(system, points: int = 1000, rng: np.random.Generator | None = None,
                           budget: Budget | int | None = None) -> DataTable:
    """Rows satisfying every axiom, built by walking a lex basis upward.

    Basis elements are grouped by leading variable in increasing order.  The
    group's other unassigned symbols are sampled and its leading variable is
    solved; when it is a second derivative whose first derivative is still
    free, the pair comes from integrating the induced ODE.  Theta auxiliaries
    and constants are never solved for: groups led by them are only checked.
    """
    if points < 1:
        raise ValueError("points must be >= 1")
    rng = rng if rng is not None else np.random.default_rng()
    table = system.table
    order = biased_data_order(table)
    G = buchberger(system.polys(), order, budget)
    if G.is_unit():
        raise NoRealSolutionInRegion("the system is inconsistent")
    groups: list[tuple[int, list[Polynomial]]] = []
    for g in G.generators:
        lv = _leading_var(g, order)
        if groups and groups[-1][0] == lv:
            groups[-1][1].append(g)
        else:
            groups.append((lv, [g]))
    def build():
        sampler = _Sampler(table, rng)
        cols = list(range(len(table)))
        axioms = [CompiledPoly(a.poly) for a in system.axioms]
        solved: set[int] = set()
        theta_ids = set(sampler.theta.values())

        def fill(V, i, rows, assigned):
            if i in assigned:
                return
            if i in theta_ids:
                sampler.sample_theta(V, rows)
                assigned.update(theta_ids)
            else:
                sampler.sample(V, i, rows)
                assigned.add(i)

        def make_batch(size):
            V = np.full((size, len(table)), np.nan)
            rows = np.arange(size)
            ok = np.ones(size, dtype=bool)
            assigned: set[int] = set()
            for lv, polys in groups:
                comps = [CompiledPoly(g) for g in polys]
                others = set()
                for g in polys:
                    others |= support(g)
                others.discard(lv)
                info = table[lv]
                if info.is_constant or lv in theta_ids:
                    for i in sorted(others | {lv}):
                        fill(V, i, rows, assigned)
                else:
                    chain = None
                    if info.kind is SymbolKind.DERIVATIF and info.deriv.order == 2:
                        _, v = _dependent_chain(table, lv)
                        if v is not None and v in others and v not in assigned:
                            chain = v
                    for i in sorted(others - {chain} if chain is not None else others):
                        fill(V, i, rows, assigned)
                    if chain is not None:
                        ode = InducedODE(polys[0], lv, 2, (chain,), degree_in(polys[0], lv) == 1)
                        ok &= _integrate_chain(ode, V, rows, sampler)
                        assigned.update((chain, lv))
                        solved.update((chain, lv))
                    else:
                        first = CompiledPoly(polys[0], lv)
                        if len(polys) == 1:
                            V[:, lv] = _solve_rows(first.coeffs(V))
                        else:
                            V[:, lv] = _pick_common_root(first, comps[1:], V, rows, lv)
                        assigned.add(lv)
                        solved.add(lv)
                with np.errstate(all="ignore"):
                    for c in comps:
                        ok &= c.relative_residual(V) < ROW_TOL
            for i in cols:
                fill(V, i, rows, assigned)
            ok &= _valid_rows(V, cols)
            with np.errstate(all="ignore"):
                for a in axioms:
                    ok &= a.relative_residual(V) < ROW_TOL
            return V, ok

        V = _collect(points, make_batch, rng)
        roles = [_role(table, i, solved) for i in cols]
        return DataTable([table[i].name for i in cols], V[:, cols], roles, None, sampler.range_names())

    return _over_regions(build)
