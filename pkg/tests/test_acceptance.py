"""Acceptance criteria, one test each; every test prints a PASS/FAIL line."""

import itertools
import math
import random
import time
from collections import Counter
from pathlib import Path

import numpy as np
import pytest

from fixtures import (
    KEPLER_LAW,
    ORBIT_CONSEQUENCE,
    ORBIT_MEASURED,
    kepler_system,
    orbit_combination,
    orbit_system,
    random_bundle,
)
from theorygen.consequence import project, verify_consequence
from theorygen.datagen import (
    CONSEQUENCE_LEVELS,
    CompiledPoly,
    NoiseSpec,
    apply_noise,
    exponential_rate,
    induced_ode,
    lognormal_shape,
    noise_draws,
)
from theorygen.dataset_io import read_bundle, write_bundle
from theorygen.generator import (
    GeneratorConfig,
    build_dictionaries,
    build_uom_term_dict,
    enumeration_bound,
    gen_equation_dim,
    gen_equation_free,
    gen_term,
    is_homogeneous,
    primitive_term_count,
)
from theorygen.groebner import buchberger, is_consistent, normal_form
from theorygen.pipeline import (
    CLEAN_BOUND,
    MISMATCH_FACTOR,
    ODE_BOUND,
    Cell,
    RunConfig,
    cell_table,
    generate_cell_system,
    generate_run,
    load_symbols,
)
from theorygen.polynomial import BlockLexOrder, Polynomial, parse_polynomial, vdc_signature
from theorygen.symbols import DerivMeta, SymbolInfo, SymbolKind, ThetaKind, build_symbol_table
from theorygen.units import parse_unit

FULL = load_symbols(None)
CFG = GeneratorConfig()


def same_up_to_scale(a: Polynomial, b: Polynomial) -> bool:
    return not a.is_zero() and a.monic() == b.monic()


# 1 -------------------------------------------------------------------------

def test_ac1_two_body_elimination(verdict):
    start = time.perf_counter()
    s = orbit_system()
    t = s.table
    cleared = parse_polynomial(ORBIT_CONSEQUENCE, t)
    elim = project(s, [t.index(n) for n in ORBIT_MEASURED])
    derived = bool(elim) and same_up_to_scale(elim[0], cleared)
    combination = verify_consequence(s, orbit_combination(t))
    elapsed = time.perf_counter() - start
    ok = derived and combination and elapsed < 10
    verdict(1, ok, f"elimination yields the consequence: {derived} ({len(elim)} eliminated generators, "
                   f"consequence in ideal: {verify_consequence(s, cleared)}); "
                   f"combination reduces to 0: {combination}; {elapsed:.2f}s")
    assert ok


# 2 -------------------------------------------------------------------------

def test_ac2_kepler(verdict):
    start = time.perf_counter()
    s = kepler_system()
    t = s.table
    keep = [t.index(n) for n in ("G", "m1", "w", "d1", "d2")]
    elim = project(s, keep)
    law = parse_polynomial(KEPLER_LAW, t)
    # hand substitution: m2 = d1*m1/d2 and Fg = m2*d2*w^2 into the gravity axiom, then
    # divide by d1*m1, which the substitution assumes nonzero
    factor = parse_polynomial("d1*m1", t)
    hit = [g for g in elim if same_up_to_scale(g, law * factor)]
    elapsed = time.perf_counter() - start
    ok = bool(hit) and elapsed < 5
    verdict(2, ok, f"G*m1 - w^2*d2*(d1+d2)^2 found up to the factor d1*m1: {bool(hit)}; {elapsed:.2f}s")
    assert ok


# 3 -------------------------------------------------------------------------

def test_ac3_consistency(verdict):
    t = build_symbol_table([SymbolInfo(n, SymbolKind.VARIABLE) for n in "xy"])
    lex = BlockLexOrder.lex(t)
    one = buchberger([parse_polynomial("x - 1", t), parse_polynomial("x - 2", t)], lex)
    two = buchberger([parse_polynomial("x*y - 1", t), parse_polynomial("x", t)], lex)
    s = orbit_system()
    orbit = buchberger(s.polys(), BlockLexOrder.lex(s.table))
    ok = one.is_unit() and two.is_unit() and is_consistent(orbit)
    verdict(3, ok, f"unit: {one.is_unit()}, {two.is_unit()}; two-body system consistent: {is_consistent(orbit)}")
    assert ok


# 4 -------------------------------------------------------------------------

def test_ac4_vdc_signatures(verdict):
    t = build_symbol_table([
        SymbolInfo("x", SymbolKind.VARIABLE, parse_unit("m")),
        SymbolInfo("y", SymbolKind.VARIABLE, parse_unit("m")),
        SymbolInfo("z", SymbolKind.VARIABLE, parse_unit("s")),
        SymbolInfo("dxdt", SymbolKind.DERIVATIF, parse_unit("m/s"), deriv=DerivMeta("x", "t", 1)),
        SymbolInfo("dydt", SymbolKind.DERIVATIF, parse_unit("m/s"), deriv=DerivMeta("y", "t", 1)),
        SymbolInfo("c", SymbolKind.PHYSICAL_CONSTANT, parse_unit("m/s")),
        SymbolInfo("G", SymbolKind.PHYSICAL_CONSTANT, parse_unit("m^3/kg*s^2")),
    ])
    a = vdc_signature(next(iter(parse_polynomial("c*x*y^2*z", t).terms)), t)
    b = vdc_signature(next(iter(parse_polynomial("G^2*dxdt^2*dydt", t).terms)), t)
    ok = a == "112..1" and b == ".12.2"
    verdict(4, ok, f"{a!r}, {b!r}")
    assert ok


# 5 -------------------------------------------------------------------------

def _brute_force_count(n_plain, n_deriv, max_factors, max_power):
    n = n_plain + n_deriv
    total = 0
    for m in itertools.product(range(max_power + 1), repeat=n):
        used = [i for i in range(n) if m[i]]
        if 1 <= len(used) <= max_factors and sum(1 for i in used if i >= n_plain) <= 1:
            total += 1
    return total


def test_ac5_dictionary_cost(verdict):
    bound = enumeration_bound(20, 3, 4)
    table = build_symbol_table(list(FULL.entries) + [SymbolInfo("T", SymbolKind.VARIABLE, parse_unit("s"))])
    start = time.perf_counter()
    uom = build_uom_term_dict(CFG, table, use_cache=False)
    elapsed = time.perf_counter() - start
    n_deriv = len(table.derivatives())
    entries = sum(len(v) for v in uom.values())
    expected = primitive_term_count(len(table) - n_deriv, n_deriv, 4, 3)
    mismatches = [
        (p, d, f, w)
        for p in range(0, 7) for d in range(0, 7 - p) if 1 <= p + d <= 6
        for f, w in ((4, 3), (2, 2), (3, 1))
        if primitive_term_count(p, d, f, w) != _brute_force_count(p, d, f, w)
    ]
    ok = bound == 1_240_320 and elapsed < 60 and entries == expected and not mismatches
    verdict(5, ok, f"bound {bound}; 20-symbol build {elapsed:.1f}s with {entries} terms "
                   f"(formula {expected}); brute-force mismatches {len(mismatches)}")
    assert ok


# 6 -------------------------------------------------------------------------

def test_ac6_distributions(verdict):
    table = cell_table(FULL, Cell(6, 4, 2, 4), "plain")
    rng = random.Random(2024)
    n = 100_000
    factors, consts = Counter(), Counter()
    for _ in range(n):
        t = gen_term(CFG, table, rng)
        factors[sum(1 for e in t.monomial if e)] += 1
        consts[t.coeff] += 1
    f_err = max(abs(factors[k] / n - p) for k, p in enumerate(CFG.factor_probs(), 1))
    c_err = max(abs(consts[c] / n - p) for c, p in zip(CFG.small_constants, CFG.small_constant_probs()))

    free = GeneratorConfig(dimensional_mode=False)
    sizes, positive = Counter(), 0
    for _ in range(n):
        eq = gen_equation_free(free, table, rng)
        sizes[len(eq.poly)] += 1
        positive += len({c > 0 for c in eq.poly.terms.values()}) == 1
    t_err = max(abs(sizes[k] / n - p) for k, p in enumerate(free.num_terms_probs(), 1))
    pos_rate = positive / n
    ok = f_err < 0.01 and c_err < 0.01 and t_err < 0.02 and abs(pos_rate - 0.05) < 0.01
    verdict(6, ok, f"max errors: factors {f_err:.4f}, constants {c_err:.4f}, terms {t_err:.4f}; "
                   f"all-positive rate {pos_rate:.4f}")
    assert ok


# 7 -------------------------------------------------------------------------

def test_ac7_homogeneity(verdict):
    table = cell_table(FULL, Cell(9, 4, 2, 4), "trig")
    dicts = build_dictionaries(CFG, table, seed=7)
    rng = random.Random(7)
    derivs = set(table.derivatives())
    inhomogeneous = two_derivs = 0
    for _ in range(1000):
        eq = gen_equation_dim(CFG, table, dicts, rng)
        inhomogeneous += not is_homogeneous(eq)
        two_derivs += sum(sum(1 for i, e in enumerate(m) if e and i in derivs) > 1 for m in eq.poly.terms)
    ok = inhomogeneous == 0 and two_derivs == 0
    verdict(7, ok, f"1000 equations: {inhomogeneous} inhomogeneous, {two_derivs} terms with two derivatives")
    assert ok


# 8 and 10 share twenty generated bundles -----------------------------------

@pytest.fixture(scope="module")
def bundles():
    cfg = RunConfig(seed=31, systems_per_config=5)
    out = []
    for family in ("plain", "trig"):
        for cell in (Cell(6, 2, 2, 4), Cell(7, 3, 2, 5)):
            for index in range(5):
                outcome, b = generate_cell_system(FULL, cfg, family, cell, index, write=False)
                if b is not None:
                    out.append(b)
    return out


def _theta_error(data, table):
    names = {table[i].theta_kind: table[i].name for i in range(len(table))
             if table[i].kind is SymbolKind.THETA_AUX}
    if not all(k in names and names[k] in data.columns for k in (ThetaKind.SIN, ThetaKind.COS)):
        return None
    s, c = data.column(names[ThetaKind.SIN]), data.column(names[ThetaKind.COS])
    return float(np.abs(s**2 + c**2 - 1).max())


def test_ac8_data_soundness(verdict, bundles):
    worst_root = worst_ode = worst_sys = worst_theta = 0.0
    ode_count = theta_count = 0
    for b in bundles:
        table = b.system.table
        clean = b.consequence_data[None]
        res = float(CompiledPoly(b.consequence.poly).relative_residual(clean.matrix_for(table)).max())
        if induced_ode(b.consequence) is None:
            worst_root = max(worst_root, res)
        else:
            worst_ode = max(worst_ode, res)
            ode_count += 1
        V = b.system_data[None].matrix_for(table)
        for a in b.system.axioms:
            worst_sys = max(worst_sys, float(CompiledPoly(a.poly).relative_residual(V).max()))
        for data in (clean, b.system_data[None]):
            e = _theta_error(data, table)
            if e is not None:
                theta_count += 1
                worst_theta = max(worst_theta, e)
    ok = (len(bundles) == 20 and worst_root < CLEAN_BOUND and worst_ode < ODE_BOUND
          and worst_sys < CLEAN_BOUND and worst_theta <= 1e-12 and theta_count > 0)
    verdict(8, ok, f"{len(bundles)} bundles ({ode_count} via ODE); max residuals: root {worst_root:.1e}, "
                   f"ODE {worst_ode:.1e}, system {worst_sys:.1e}; theta {worst_theta:.1e} over {theta_count} tables")
    assert ok


def test_ac10_mismatch(verdict, bundles):
    proved = violated_low = total = 0
    worst_fraction = 1.0
    for b in bundles:
        table = b.system.table
        V = b.system_data[None].matrix_for(table)
        for idx, eq, new in b.replacements:
            total += 1
            G = buchberger(new.polys(), BlockLexOrder.lex(table))
            proved += normal_form(b.consequence.poly, G).is_zero()
            res = CompiledPoly(eq.poly).relative_residual(V)
            frac = float(np.mean(res > MISMATCH_FACTOR * CLEAN_BOUND))
            worst_fraction = min(worst_fraction, frac)
            violated_low += frac < 0.99
    ok = total > 0 and proved == 0 and violated_low == 0
    verdict(10, ok, f"{total} replacement systems: {proved} still prove the consequence; "
                    f"lowest violating-row fraction {worst_fraction:.3f}")
    assert ok


# 9 -------------------------------------------------------------------------

def test_ac9_noise_calibration(verdict, bundles):
    b = next(x for x in bundles if len(x.consequence_data[None]) == 1000)
    clean_tables = [b.consequence_data[None], b.system_data[None]]
    worst = {}
    rng = np.random.default_rng(99)
    for family in ("gaussian", "exponential", "lognormal"):
        err = 0.0
        for clean in clean_tables:
            for eps in CONSEQUENCE_LEVELS:
                noisy = apply_noise(clean, NoiseSpec(family, eps), "all-columns", rng)
                for j, role in enumerate(clean.roles):
                    if role in ("constant", "theta-derived"):
                        continue
                    want = eps * abs(float(clean.values[:, j].mean()))
                    got = float(np.std(noisy.values[:, j] - clean.values[:, j]))
                    err = max(err, abs(got / want - 1))
        worst[family] = err
    sigma = 0.1
    u = (1 + math.sqrt(1 + 8 * sigma**2)) / 2
    scalings = exponential_rate(sigma) == pytest.approx(1 / sigma) and \
        lognormal_shape(sigma) == pytest.approx(math.sqrt(math.log(u)), rel=1e-12)
    symmetric = True
    for family in ("exponential", "lognormal"):
        x = noise_draws(family, sigma, 10**6, np.random.default_rng(5))
        symmetric &= abs(x.mean()) < 3 * x.std() / 1e3
    calibrated = all(e <= 0.1 for e in worst.values())
    ok = calibrated and scalings and symmetric
    verdict(9, ok, "sd(noisy-clean)/(eps*|mean|) worst relative error: "
                   + ", ".join(f"{k} {v:.3f}" for k, v in worst.items())
                   + f"; scalings {scalings}; sign symmetry {symmetric}")
    assert ok


# 11 ------------------------------------------------------------------------

def _tree(root):
    root = Path(root)
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_ac11_determinism_and_scale(verdict, tmp_path):
    def run(out, jobs):
        cfg = RunConfig(seed=2718, cells=(Cell(6, 2, 2, 4),), families=("plain",), systems_per_config=3,
                        jobs=jobs, out=str(out))
        start = time.perf_counter()
        outcomes = generate_run(cfg)
        return time.perf_counter() - start, outcomes

    elapsed, outcomes = run(tmp_path / "a", 1)
    emitted = sum(o.status == "ok" for o in outcomes)
    _, _ = run(tmp_path / "b", 1)
    _, _ = run(tmp_path / "c", 8)
    a, b, c = _tree(tmp_path / "a"), _tree(tmp_path / "b"), _tree(tmp_path / "c")
    one = read_bundle(tmp_path / "a" / "plain" / "vars6_derivs2_eqns4" / "system_1")
    complete = (len(one.consequence_data[None]) == 1000 and len(one.replacements) == 5
                and len(one.consequence_data) == 5 and len(one.system_data) == 5)
    ok = emitted == 3 and complete and elapsed < 15 * 60 and a == b and a == c
    verdict(11, ok, f"{emitted}/3 systems in {elapsed:.1f}s single-threaded; full bundle contents {complete}; "
                    f"repeat identical {a == b}; 1 vs 8 workers identical {a == c} ({len(a)} files)")
    assert ok


# 12 ------------------------------------------------------------------------

def test_ac12_round_trip(verdict, tmp_path):
    equal = 0
    for seed in range(100):
        b = random_bundle(1000 + seed)
        write_bundle(b, tmp_path / str(seed))
        equal += read_bundle(tmp_path / str(seed)) == b
    ok = equal == 100
    verdict(12, ok, f"{equal}/100 bundles equal after write and read")
    assert ok
