import math
from collections import Counter

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from fixtures import ORBIT_CONSEQUENCE, kepler_system, orbit_table
from theorygen.datagen import (
    CompiledPoly,
    NoiseSpec,
    SampleRange,
    apply_noise,
    exponential_rate,
    gen_biased_system_data,
    gen_consequence_data,
    induced_ode,
    integrate_rk45,
    lognormal_shape,
    noise_draws,
    real_roots,
    sample_range,
    solve_last_variable,
)
from theorygen.datagen.roots import preferred_root_batch
from theorygen.datagen.ode import integrate_batch
from theorygen.errors import DegenerateLeadingCoefficient, NoRealSolutionInRegion
from theorygen.polynomial import parse_equation, parse_polynomial
from theorygen.symbols import DerivMeta, SymbolInfo, SymbolKind, ThetaKind, build_symbol_table


def ode_table():
    return build_symbol_table([
        SymbolInfo("x", SymbolKind.VARIABLE),
        SymbolInfo("w", SymbolKind.VARIABLE),
        SymbolInfo("dxdt", SymbolKind.DERIVATIF, deriv=DerivMeta("x", "t", 1)),
        SymbolInfo("d2xdt2", SymbolKind.DERIVATIF, deriv=DerivMeta("x", "t", 2)),
    ])


def theta_table():
    from theorygen.pipeline import load_symbols
    full = load_symbols(None)
    return full


# roots

def test_root_examples():
    assert solve_last_variable([1, 0, -4]) == 2.0
    assert solve_last_variable([1, 0, 1]) is None
    assert solve_last_variable([1, -6, 11, -6]) == pytest.approx(3.0, abs=1e-12)
    # double root at -1 must not beat the simple root at +1
    assert solve_last_variable([1, 1, -1, -1]) == pytest.approx(1.0, abs=1e-12)
    assert real_roots([1, -6, 11, -6]) == pytest.approx([3.0, 2.0, 1.0], abs=1e-12)
    with pytest.raises(DegenerateLeadingCoefficient):
        real_roots([1e-14, 1, 1])


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(-5, 5), min_size=1, max_size=4, unique=True))
def test_roots_match_factoring_oracle(roots):
    # distinct roots only: a repeated root may split into a complex pair
    # slightly beyond the imaginary-part threshold
    x = sp.Symbol("x")
    coeffs = [float(c) for c in sp.Poly(sp.prod([x - r for r in roots]), x).all_coeffs()]
    want = max(roots, key=lambda r: (abs(r), r))
    got = solve_last_variable(coeffs)
    assert got == pytest.approx(want, abs=1e-4)


def test_batched_roots_agree_with_single():
    rng = np.random.default_rng(3)
    for deg in (2, 3, 4):
        C = rng.normal(size=(2000, deg + 1))
        C[::7, -1] = 0  # a zero root
        C[::11] = np.round(C[::11])  # exact ties such as x^2 - 4
        batch = preferred_root_batch(C)
        for c, b in zip(C, batch):
            try:
                r = real_roots(c)
            except DegenerateLeadingCoefficient:
                r = []
            if r:
                # repeated roots are only resolved to about 1e-8
                assert b == pytest.approx(r[0], rel=1e-6, abs=1e-9)
            else:
                assert np.isnan(b)


# ODE

def test_ode_analytic_solutions():
    tr = integrate_rk45(lambda t, y: np.ones_like(y), [0.0])
    assert abs(tr.at_end()[0] - 1.0) < 1e-9
    tr = integrate_rk45(lambda t, y: y, [1.0])
    assert abs(tr.at_end()[0] - math.e) < 1e-6 * math.e
    tr = integrate_rk45(lambda t, y: np.array([y[1], -y[0]]), [1.0, 0.0])
    assert abs(tr.at_end()[0] - math.cos(1.0)) < 1e-6
    assert tr.t[-1] == 1.0 and np.all(np.diff(tr.t) > 0)


def test_batch_integration_rows_are_independent():
    # the second state column carries each row's rate
    y0 = np.array([[1.0, 0.5], [1.0, 1.0], [1.0, -2.0]])
    ends = np.array([1.0, 0.3, 0.7])

    def f(t, Y):
        return np.column_stack([Y[:, 1] * Y[:, 0], np.zeros(len(Y))])

    y, ok = integrate_batch(f, y0, ends)
    assert ok.all()
    assert y[:, 0] == pytest.approx(np.exp(y0[:, 1] * ends), rel=1e-6)


def test_blowup_is_flagged():
    y, ok = integrate_batch(lambda t, Y: Y**2, np.array([[10.0], [0.1]]), 1.0)
    assert list(ok) == [False, True]


def test_induced_ode_examples():
    t = ode_table()
    ode = induced_ode(parse_polynomial("dxdt - x", t))
    assert ode.linear and ode.order == 1 and ode.state == (t.index("x"),)
    num, den = ode.closed_form()
    assert num == parse_polynomial("-x", t) and den == parse_polynomial("1", t)

    ode = induced_ode(parse_polynomial("d2xdt2 + w*x", t))
    assert ode.order == 2 and ode.linear and ode.state == (t.index("x"), None)

    ode = induced_ode(parse_polynomial("dxdt^2 - x", t))
    assert not ode.linear and ode.closed_form() is None
    V = np.full((3, len(t)), np.nan)
    V[:, t.index("x")] = [1.0, 4.0, 9.0]
    assert ode.rhs_values(V) == pytest.approx([1.0, 2.0, 3.0])

    # derivative alone: determined algebraically, no ODE
    assert induced_ode(parse_polynomial("dxdt*w - 1", t)) is None
    assert induced_ode(parse_polynomial("x*w - 1", t)) is None


def test_ode_data_matches_analytic_flow():
    t = ode_table()
    data = gen_consequence_data(parse_polynomial("dxdt - x", t), points=200, rng=np.random.default_rng(1))
    assert set(data.columns) == {"x", "dxdt"}
    assert np.allclose(data.column("dxdt"), data.column("x"), rtol=1e-9)


# sampling ranges

def test_sample_range_is_uniform_over_pairs():
    rng = np.random.default_rng(0)
    n = 10**6
    counts = Counter()
    # draw indices in bulk through the same generator path
    for _ in range(n):
        r = sample_range(rng)
        counts[(r.n, r.m)] += 1
    assert len(counts) == 45
    assert all(1 <= a < b <= 10 for a, b in counts)
    assert max(abs(c / n - 1 / 45) for c in counts.values()) < 0.005


def test_sample_range_streams_repeat():
    a = [sample_range(np.random.default_rng(9)) for _ in range(3)]
    b = [sample_range(np.random.default_rng(9)) for _ in range(3)]
    assert a == b
    with pytest.raises(ValueError):
        SampleRange(5, 5)


# consequence data

def test_orbit_consequence_data():
    t = orbit_table()
    q = parse_polynomial(ORBIT_CONSEQUENCE, t)
    data = gen_consequence_data(q, points=1000, rng=np.random.default_rng(4))
    assert len(data) == 1000
    assert set(data.columns) == {"m2", "G", "d1", "d2", "d2x2dt2", "w"}
    assert np.all(data.column("G") == 1.0)
    res = CompiledPoly(q).relative_residual(data.matrix_for(t))
    assert res.max() < 1e-6
    # sampled columns stay inside their ranges
    for name, role in zip(data.columns, data.roles):
        if role == "sampled":
            r = data.ranges[name]
            col = data.column(name)
            assert col.min() >= r.n and col.max() <= r.m


def test_consequence_data_is_deterministic():
    t = orbit_table()
    q = parse_polynomial(ORBIT_CONSEQUENCE, t)
    a = gen_consequence_data(q, points=50, rng=np.random.default_rng(8))
    b = gen_consequence_data(q, points=50, rng=np.random.default_rng(8))
    assert a == b


def test_no_real_solution_is_rejected():
    t = ode_table()
    with pytest.raises(NoRealSolutionInRegion):
        gen_consequence_data(parse_polynomial("x^2 + w^2 + 1", t), points=10, rng=np.random.default_rng(0))


def test_theta_columns_are_consistent():
    full = theta_table()
    names = {s.theta_kind: s.name for s in full if s.kind is SymbolKind.THETA_AUX}
    x = next(s.name for s in full if s.kind is SymbolKind.VARIABLE)
    q = parse_polynomial(f"{x}*{names[ThetaKind.COS]} - {names[ThetaKind.SIN]} - 2*{names[ThetaKind.EXP]}", full)
    data = gen_consequence_data(q, points=300, rng=np.random.default_rng(2))
    th = data.column(names[ThetaKind.THETA])
    s, c = data.column(names[ThetaKind.SIN]), data.column(names[ThetaKind.COS])
    assert np.abs(s**2 + c**2 - 1).max() < 1e-12
    assert np.array_equal(s, np.sin(th)) and np.array_equal(data.column(names[ThetaKind.EXP]), np.exp(th))
    assert data.target == x


# biased system data

def test_kepler_biased_data():
    s = kepler_system()
    data = gen_biased_system_data(s, points=1000, rng=np.random.default_rng(6))
    assert set(data.columns) == {"Fg", "m1", "m2", "d1", "d2", "w", "G"}
    assert len(data) == 1000
    assert np.all(data.column("G") == 1.0)
    V = data.matrix_for(s.table)
    for a in s.axioms:
        assert CompiledPoly(a.poly).relative_residual(V).max() < 1e-6


def test_original_data_violates_replacement():
    s = kepler_system()
    t = s.table
    data = gen_biased_system_data(s, points=1000, rng=np.random.default_rng(6))
    replacement = parse_equation("Fg*d2 = m1*d1*w^2", t)
    res = CompiledPoly(replacement.poly).relative_residual(data.matrix_for(t))
    assert np.mean(res > 1e-5) >= 0.99


# noise

def test_noise_scalings():
    assert exponential_rate(0.1) == pytest.approx(10.0)
    s = lognormal_shape(0.1)
    assert s**2 == pytest.approx(math.log((1 + math.sqrt(1.08)) / 2), rel=1e-12)
    assert s == pytest.approx(0.1394, abs=1e-4)
    u = math.exp(s**2)
    assert (u - 1) * u == pytest.approx(2 * 0.01, rel=1e-12)


@pytest.mark.parametrize("family", ["exponential", "lognormal"])
def test_sign_symmetry(family):
    sigma = 0.1
    x = noise_draws(family, sigma, 10**6, np.random.default_rng(11))
    assert abs(x.mean()) < 3 * x.std() / 1e3
    assert abs(np.mean(x > 0) - 0.5) < 0.003


def test_gaussian_noise_calibration():
    t = orbit_table()
    data = gen_consequence_data(parse_polynomial(ORBIT_CONSEQUENCE, t), points=1000, rng=np.random.default_rng(4))
    for eps in (1e-3, 1e-2, 5e-2, 1e-1):
        noisy = apply_noise(data, NoiseSpec("gaussian", eps), "all-columns", np.random.default_rng(5))
        for j, role in enumerate(data.roles):
            diff = noisy.values[:, j] - data.values[:, j]
            if role == "constant":
                assert not diff.any()
                continue
            want = eps * abs(data.values[:, j].mean())
            assert abs(diff.std() / want - 1) < 0.1


def test_last_column_mode_touches_only_target():
    t = orbit_table()
    data = gen_consequence_data(parse_polynomial(ORBIT_CONSEQUENCE, t), points=100, rng=np.random.default_rng(4))
    noisy = apply_noise(data, NoiseSpec("gaussian", 0.1), "last-column", np.random.default_rng(5))
    changed = [c for j, c in enumerate(data.columns) if not np.array_equal(noisy.values[:, j], data.values[:, j])]
    assert changed == [data.target]


def test_noise_spec_validation():
    with pytest.raises(ValueError):
        NoiseSpec("uniform", 0.1)
    with pytest.raises(ValueError):
        NoiseSpec("gaussian", 0.0)
