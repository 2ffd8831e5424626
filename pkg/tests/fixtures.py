"""Hand-written theories used across the tests."""

import random

import numpy as np

from theorygen.consequence import Consequence, MeasuredSet
from theorygen.datagen import CONSEQUENCE_LEVELS, DataTable, NoiseSpec
from theorygen.dataset_io import TheoryBundle
from theorygen.generator import GeneratorConfig, TheorySystem, gen_equation_free, trig_identity
from theorygen.pipeline import Cell, cell_table, load_symbols
from theorygen.polynomial import Equation, support
from theorygen.polynomial import parse_equation, parse_polynomial
from theorygen.symbols import DerivMeta, SymbolInfo, SymbolKind, build_symbol_table
from theorygen.units import parse_unit

V, D, C = SymbolKind.VARIABLE, SymbolKind.DERIVATIF, SymbolKind.PHYSICAL_CONSTANT


def _var(name, unit):
    return SymbolInfo(name, V, parse_unit(unit))


def _deriv(name, unit, dep, order):
    return SymbolInfo(name, D, parse_unit(unit), deriv=DerivMeta(dep, "t", order))


def orbit_table():
    """Two bodies in orbit, with positions tracked through derivatives."""
    return build_symbol_table([
        _var("Fg", "kg*m/s^2"),
        _var("m1", "kg"),
        _var("m2", "kg"),
        _var("d1", "m"),
        _var("d2", "m"),
        _var("w", "1/s"),
        _deriv("dx1dt", "m/s", "x1", 1),
        _deriv("d2x1dt2", "m/s^2", "x1", 2),
        _deriv("dx2dt", "m/s", "x2", 1),
        _deriv("d2x2dt2", "m/s^2", "x2", 2),
        SymbolInfo("G", C, parse_unit("m^3/kg*s^2")),
    ])


ORBIT_AXIOMS = (
    "d2x1dt2 + dx1dt*w = 2*d2x2dt2 - 2*dx2dt*w",
    "m2*w*(Fg*d2 - 2*dx1dt^2) = dx2dt*Fg*m1",
    "G*(m1 - m2) + d1*d2*(d2x1dt2 + d2*w^2) = 0",
    "dx1dt*(d1 + d2) = dx2dt*d1",
)
ORBIT_MEASURED = ("d1", "d2", "w", "G", "d2x2dt2", "m2")
# m2 = d1^2*d2*(d2x2dt2 + w*d2^2) / (G*(d1 + d2)), cleared of its denominator
ORBIT_CONSEQUENCE = "m2*G*(d1 + d2) - d1^2*d2*(d2x2dt2 + w*d2^2)"


def orbit_system():
    t = orbit_table()
    return TheorySystem(t, tuple(parse_equation(e, t) for e in ORBIT_AXIOMS))


def orbit_combination(t):
    """d1/2*e1 - 1/2*e2 + 1/2*e3*e4 + d1*(d1+d2)/2*e4 with e_k the axiom polynomials."""
    # raw left-minus-right forms (parse_equation normalises content)
    raw = [
        parse_polynomial("d2x1dt2 + dx1dt*w - 2*d2x2dt2 + 2*dx2dt*w", t),
        parse_polynomial("m2*w*(Fg*d2 - 2*dx1dt^2) - dx2dt*Fg*m1", t),
        parse_polynomial("G*(m1 - m2) + d1*d2*(d2x1dt2 + d2*w^2)", t),
        parse_polynomial("dx1dt*(d1 + d2) - dx2dt*d1", t),
    ]
    d1 = parse_polynomial("d1", t)
    d2 = parse_polynomial("d2", t)
    half = parse_polynomial("1/2", t)
    r1, r2, r3, r4 = raw
    return half * d1 * r1 - half * r2 + half * r3 * r4 + half * d1 * (d1 + d2) * r4


def kepler_table():
    return build_symbol_table([
        _var("Fg", "kg*m/s^2"),
        _var("m1", "kg"),
        _var("m2", "kg"),
        _var("d1", "m"),
        _var("d2", "m"),
        _var("w", "1/s"),
        SymbolInfo("G", C, parse_unit("m^3/kg*s^2")),
    ])


KEPLER_AXIOMS = (
    "d1*m1 = d2*m2",
    "Fg*d1^2 + 2*Fg*d1*d2 + Fg*d2^2 = G*m1*m2",
    "Fg = m2*d2*w^2",
)
KEPLER_LAW = "G*m1 - w^2*d2*(d1 + d2)^2"


def kepler_system():
    t = kepler_table()
    return TheorySystem(t, tuple(parse_equation(e, t) for e in KEPLER_AXIOMS))


# random but well-formed bundles for serialisation tests
FULL = load_symbols(None)


def _values(rng, rows, cols):
    v = rng.lognormal(0, 3, (rows, cols)) * rng.choice([-1, 1], (rows, cols))
    v[rng.random((rows, cols)) < 0.05] = 0.0
    v[0, 0] = 5e-324  # subnormal
    v[-1, -1] = 1.7976931348623157e308
    return v


def _table_for(rng, table, ids, roles_from, target=True):
    cols = sorted(ids)
    names = [table[i].name for i in cols]
    roles = [roles_from[rng.randrange(len(roles_from))] for _ in cols]
    return DataTable(names, _values(np.random.default_rng(rng.randrange(2**32)), rng.randint(1, 12), len(cols)),
                     roles, names[-1] if target else None)


def random_bundle(seed):
    rng = random.Random(seed)
    family = rng.choice(["plain", "trig"])
    cell = Cell(rng.randint(6, 9), rng.randint(2, 4), 2, rng.randint(4, 6))
    table = cell_table(FULL, cell, family)
    cfg = GeneratorConfig(dimensional_mode=False)
    axioms = [gen_equation_free(cfg, table, rng) for _ in range(cell.num_eqns)]
    # exact rational content survives normalisation
    axioms[0] = Equation(axioms[0].poly * rng.choice([3, 7, -5]))
    trig = trig_identity(table) if family == "trig" else None
    if trig is not None:
        axioms.append(trig)
    system = TheorySystem(table, tuple(axioms), trig is not None)
    q = gen_equation_free(cfg, table, rng)
    measured = MeasuredSet.from_ids(table, support(q.poly) | {rng.randrange(len(table))})
    cons = Consequence(q, measured)
    reps = []
    for _ in range(rng.randint(0, 5)):
        idx = rng.choice(system.replaceable_indices())
        new_eq = gen_equation_free(cfg, table, rng)
        new_axioms = list(system.axioms)
        new_axioms[idx] = new_eq
        reps.append((idx, new_eq, TheorySystem(table, tuple(new_axioms), system.includes_trig_identity)))
    roles = ["sampled", "solved", "derivative", "constant", "theta-derived"]
    cdata = {None: _table_for(rng, table, support(q.poly), roles)}
    clean = cdata[None]
    for eps in rng.sample(list(CONSEQUENCE_LEVELS) + [0.5, 1.0, 2.5e-4], 3):
        fam = rng.choice(["gaussian", "exponential", "lognormal"])
        cdata[NoiseSpec(fam, eps)] = clean.with_values(_values(np.random.default_rng(seed), len(clean), len(clean.columns)))
    sdata = {}
    if rng.random() < 0.7:
        sdata[None] = _table_for(rng, table, range(len(table)), roles, target=False)
        sdata[NoiseSpec("gaussian", 1e-4)] = sdata[None].with_values(sdata[None].values * 0.5)
    meta = {"seed": str(seed), "generator_version": "x", "points": str(rng.randint(1, 2000))}
    return TheoryBundle(system, cons, reps, cdata, sdata, meta)
