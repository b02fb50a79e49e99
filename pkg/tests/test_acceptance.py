"""Acceptance criteria, one marked group per criterion.

The terminal summary (see conftest) prints a PASS/FAIL line per criterion.
"""
import math
import time

import numpy as np
import pytest

from cubic_ist import cubicexp, invscatter as iv, jost, scatter as sc
from cubic_ist.cubicexp import SQRT3, ZETA
from cubic_ist.harness import builtin_potential

X50 = np.linspace(-2.0, 2.0, 50)


def _v(pot, lam, k, xs):
    return jost.reduced_v(pot, lam, k, xs)[0] * np.exp(1j * lam * ZETA[k] * xs)


def _u(pot, lam, k, xs):
    return jost.reduced_u(pot, lam, k, xs)[0] * np.exp(1j * lam * ZETA[k] * xs)


# --- 1 ---------------------------------------------------------------------

@pytest.mark.criterion(1)
def test_identity_suite(note):
    rng = np.random.default_rng(20240601)
    r = 5.0 * np.sqrt(rng.random((2, 1000)))
    zs = r * np.exp(2j * np.pi * rng.random((2, 1000)))
    start = time.perf_counter()
    worst = dict.fromkeys(cubicexp.IDENTITY_FAMILIES, 0.0)
    for z, w in zip(*zs):
        for fam, v in cubicexp.identity_residuals(z, w).items():
            worst[fam] = max(worst[fam], v)
    elapsed = time.perf_counter() - start
    top = max(worst.values())
    note(f"max residual {top:.2e}, {elapsed:.2f} s")
    assert top <= 1e-11, worst
    assert elapsed < 5.0


# --- 2 ---------------------------------------------------------------------

FREE_LAMBDAS = [0.4, 0.3 + 0.2j, 0.5 * ZETA[2], -0.6j, 1.5j]


@pytest.mark.criterion(2)
@pytest.mark.parametrize("lam", FREE_LAMBDAS)
def test_free_jost_solutions(lam, note):
    pot = jost.zero_potential()
    xs = np.linspace(-3, 3, 13)
    err = 0.0
    for k in range(3):
        exact = np.exp(1j * lam * ZETA[k] * xs)
        err = max(err, np.max(np.abs(_v(pot, lam, k, xs) - exact)),
                  np.max(np.abs(_u(pot, lam, k, xs) - exact)))
    if lam == FREE_LAMBDAS[1]:
        note(f"Jost error at lam={lam}: {err:.1e}")
    assert err <= 1e-12


@pytest.mark.criterion(2)
@pytest.mark.parametrize("lam", FREE_LAMBDAS[:4])
def test_free_transition_identity(lam):
    T = sc.transition_full(jost.zero_potential(), lam)
    assert np.max(np.abs(T.t - np.eye(3))) <= 1e-10


@pytest.mark.criterion(2)
@pytest.mark.parametrize("lam", FREE_LAMBDAS)
@pytest.mark.parametrize("x", [-1.0, 0.0, 0.7])
def test_free_fundamental_determinant(lam, x):
    pot = jost.zero_potential()
    V = np.column_stack([sc.v_triple(pot, lam, k, x) for k in range(3)])
    expected = -3 * SQRT3 * lam**3
    assert abs(np.linalg.det(V) - expected) <= 1e-10 * abs(expected)


# --- 3 ---------------------------------------------------------------------

def _structure_samples():
    real = np.linspace(0.05, 0.95, 12)
    ray = np.linspace(0.1, 0.9, 4)
    return list(real) + list(ray * ZETA[2]) + list(-ray * ZETA[1])


@pytest.mark.criterion(3)
def test_transition_structure(gaussian, note):
    lams = _structure_samples()
    assert len(lams) == 20
    start = time.perf_counter()
    recs = [sc.forward_record(gaussian, lam) for lam in lams]
    elapsed = time.perf_counter() - start
    det = max(r.det_residual for r in recs)
    ju = max(r.j_unitarity_residual for r in recs)
    cof = max(r.cofactor_residual for r in recs)
    unit = max(r.coeffs.unitarity_residual for r in recs if r.lam.imag == 0)
    note(f"det {det:.1e}, J {ju:.1e}, unitarity {unit:.1e}, cofactor {cof:.1e}, {elapsed:.1f} s")
    assert det <= 1e-6
    assert ju <= 1e-6
    assert unit <= 1e-6
    assert cof <= 1e-6
    assert elapsed < 60.0


# --- 4 ---------------------------------------------------------------------

@pytest.mark.criterion(4)
@pytest.mark.parametrize("lam", [0.5, 0.3 + 0.4j, 0.6 * ZETA[2]])
@pytest.mark.parametrize("k", [0, 1, 2])
def test_rotation_covariance(gaussian, lam, k, note):
    dv = np.max(np.abs(_v(gaussian, lam * ZETA[1], k, X50) - _v(gaussian, lam, (k + 1) % 3, X50)))
    du = np.max(np.abs(_u(gaussian, lam * ZETA[1], k, X50) - _u(gaussian, lam, (k + 1) % 3, X50)))
    if k == 0 and lam == 0.5:
        note(f"v {dv:.1e}, u {du:.1e}")
    assert dv <= 1e-8
    assert du <= 1e-8


# --- 5 ---------------------------------------------------------------------

@pytest.mark.criterion(5)
@pytest.mark.parametrize("lam", [0.2, 0.5, 0.8])
@pytest.mark.parametrize("x", [-0.5, 0.0, 0.5])
def test_wronskian_duality(gaussian, lam, x):
    f0 = jost.solve_v(gaussian, lam, 0, [x])[0]
    f1 = jost.solve_v(gaussian, lam, 1, [x])[0]
    v1_star = np.conj(jost.solve_v(gaussian, np.conj(lam), 1, [x])[0].value)
    assert abs(sc.wronskian(f0, f1) - SQRT3 * lam * ZETA[2] * v1_star) <= 1e-6


@pytest.mark.criterion(5)
@pytest.mark.parametrize("lam", [0.2, 0.5, 0.8])
def test_t00_independent_of_x(gaussian, lam, note):
    vals = [sc.transition_row0(gaussian, lam, x)[0] for x in (-0.5, 0.0, 0.5)]
    spread = max(abs(v - vals[1]) for v in vals)
    if lam == 0.5:
        note(f"t00 spread over x at lam={lam}: {spread:.1e}")
    assert spread <= 1e-6


# --- 6 ---------------------------------------------------------------------

@pytest.mark.criterion(6)
@pytest.mark.parametrize("x", [-1.0, 0.0, 1.0])
def test_asymptotic_moment(gaussian, x, note):
    exact = float(gaussian.integral_from(x))
    errs = [abs(jost.moment_estimate(gaussian, w, x) - exact) / abs(exact) for w in (5, 10, 20, 40)]
    note(f"x={x:g}: " + ", ".join(f"{e:.2%}" for e in errs))
    assert all(b < a for a, b in zip(errs, errs[1:])), errs
    assert errs[-1] <= 0.05


# --- 7 ---------------------------------------------------------------------

@pytest.mark.criterion(7)
@pytest.mark.parametrize("kappas", [(1.0,), (0.5, 2.0)])
def test_solve_then_apply(kappas, note):
    data = iv.SpectralData(bound=tuple((k, 1.0) for k in kappas))
    grid = iv.QuadratureGrid.for_data(data)
    M = iv.m_matrix(grid)
    err = 0.0
    for rhs in iv.build_A(data, grid.nodes)[0]:
        g = iv.solve_fredholm(grid, rhs)
        err = max(err, np.max(np.abs(g - M @ g - rhs)))
    note(f"solve-then-apply kappa={kappas}: {err:.1e}")
    assert err <= 1e-10


@pytest.mark.criterion(7)
def test_nystrom_self_convergence(note):
    data = iv.SpectralData(bound=((1.0, 1.0),))
    x = np.arange(-5.0, 5.0 + 1e-9, 0.0025)
    q100 = iv.solve_reflectionless(data, x, iv.QuadratureGrid.mapped(100, 1.0)).q
    q200 = iv.solve_reflectionless(data, x, iv.QuadratureGrid.mapped(200, 1.0)).q
    change = np.max(np.abs(q100 - q200))
    note(f"N=100->200 change {change:.1e}")
    assert change <= 1e-7


# --- 8 ---------------------------------------------------------------------

@pytest.mark.criterion(8)
def test_soliton_reconstruction(note):
    start = time.perf_counter()
    data = iv.SpectralData(bound=((1.0, 1.0),))
    x = np.arange(-5.0, 5.0 + 1e-9, 0.0025)
    sol = iv.solve_reflectionless(data, x)
    elapsed = time.perf_counter() - start
    exact = iv.closed_form_soliton(1.0, 1.0)(x)
    rel = np.max(np.abs(sol.q - exact)) / np.max(np.abs(exact))
    note(f"relative sup error {rel:.1e}, {elapsed:.2f} s")
    assert rel <= 1e-6
    assert elapsed < 30.0


# --- 9 ---------------------------------------------------------------------

@pytest.mark.criterion(9)
@pytest.mark.parametrize("bound,bound_hat", [(((1.0, 1.0),), ()), (((0.7, 0.5 + 0.2j),), ((1.3, 0.8),))])
def test_sc2zero_reduces_to_reflectionless(bound, bound_hat, note):
    data = iv.SpectralData(bound=bound, bound_hat=bound_hat)
    x = np.arange(-4.0, 4.0 + 1e-9, 0.01)
    a = iv.solve_reflectionless(data, x)
    b = iv.solve_sc2zero(data, x)
    dq = np.max(np.abs(a.q - b.q))
    dF = np.max(np.abs(a.F - b.F))
    note(f"m+m_hat={data.n_bound}: q {dq:.1e}, F {dF:.1e}")
    assert dq <= 1e-8
    assert dF <= 1e-8


@pytest.mark.criterion(9)
def test_empty_data_gives_zero():
    x = np.linspace(-3, 3, 61)
    data = iv.SpectralData()
    for sol in (iv.solve_reflectionless(data, x), iv.solve_sc2zero(data, x)):
        assert np.all(sol.q == 0)
        assert np.all(sol.F == 0)


# --- 10, 11 ------------------------------------------------------------------

@pytest.fixture(scope="module")
def small_scan(small_gaussian):
    return sc.find_bound_states(small_gaussian)


@pytest.mark.criterion(10)
def test_jump_relations(small_gaussian, small_scan, note):
    assert small_scan.states == []
    worst = 0.0
    for t in (0.25, 0.5, 1.0, 1.5, 2.0):
        res = sc.jump_residual(small_gaussian, t, 0.0, bound_report=small_scan)
        worst = max(worst, res.max_jump)
    note(f"max residual {worst:.1e}")
    assert worst <= 1e-4


@pytest.mark.criterion(11)
def test_scan_empty_for_zero_potential(note):
    rep = sc.find_bound_states(jost.zero_potential())
    assert rep.states == []
    assert math.isfinite(rep.condition_lhs) and isinstance(rep.condition_holds, bool)


@pytest.mark.criterion(11)
@pytest.mark.parametrize("name,params", [("bump", {"q0": 0.05})])
def test_scan_empty_for_small_potentials(small_scan, name, params, note):
    other = sc.find_bound_states(builtin_potential(name, params))
    for rep in (small_scan, other):
        assert rep.states == []
        assert math.isfinite(rep.condition_lhs) and isinstance(rep.condition_holds, bool)
    note(f"condition lhs {small_scan.condition_lhs:g} vs a = {small_scan.decay_rate:g}, "
         f"holds={small_scan.condition_holds}")
