import numpy as np
import pytest

from cubic_ist import jost, scatter as sc
from cubic_ist.cubicexp import SQRT3, ZETA
from cubic_ist.harness import builtin_potential

REAL_LAMBDAS = [0.15, 0.45, 0.85]


@pytest.fixture(scope="module")
def compact():
    # compactly supported, so any decay rate is admissible and large |lambda| is reachable
    return builtin_potential("bump", {"q0": 0.5, "decay_rate": 60.0})


def test_wronskian_antisymmetry(gaussian):
    f, g = (jost.solve_v(gaussian, 0.5, k, [0.2])[0] for k in (0, 1))
    assert sc.wronskian(f, f) == 0
    assert sc.wronskian(f, g) == -sc.wronskian(g, f)
    other = jost.solve_v(gaussian, 0.5, 0, [0.3])[0]
    with pytest.raises(ValueError):
        sc.wronskian(f, other)


@pytest.mark.parametrize("lam", [0.5, 0.2 + 0.3j])
@pytest.mark.parametrize("x", [-1.0, 0.4])
def test_free_wronskian(lam, x):
    pot = jost.zero_potential()
    f0, f1 = (jost.solve_v(pot, lam, k, [x])[0] for k in (0, 1))
    expected = SQRT3 * lam * ZETA[2] * np.exp(-1j * lam * ZETA[2] * x)
    assert abs(sc.wronskian(f0, f1) - expected) <= 1e-13 * abs(expected)


def test_free_transition_row():
    assert np.allclose(sc.transition_row0(jost.zero_potential(), 0.6), [1, 0, 0], atol=1e-14)
    with pytest.raises(sc.SingularParameterError):
        sc.transition_row0(jost.zero_potential(), 0.0)


@pytest.mark.parametrize("lam", REAL_LAMBDAS)
def test_row_matches_direct_decomposition(gaussian, lam):
    row = sc.transition_row0(gaussian, lam)
    assert np.max(np.abs(row - sc.decomposition_by_solve(gaussian, lam, 0))) <= 1e-6
    xs = np.linspace(-1.5, 1.5, 7)
    for x in xs:
        lhs = sc.u_triple(gaussian, lam, 0, x)
        rhs = sum(row[l] * sc.v_triple(gaussian, lam, l, x) for l in range(3))
        assert np.max(np.abs(lhs - rhs)) <= 1e-6


@pytest.mark.parametrize("lam", [0.45, 0.3 * ZETA[2]])
def test_rotated_rows_match_direct_decomposition(gaussian, lam):
    T = sc.transition_full(gaussian, lam)
    for j in (1, 2):
        assert np.max(np.abs(T.t[j] - sc.decomposition_by_solve(gaussian, lam, j))) <= 1e-6


def test_free_scattering_coefficients():
    T = sc.transition_full(jost.zero_potential(), 0.5)
    co = sc.scattering_coefficients(T)
    assert abs(co.r0 - 1) < 1e-14 and abs(co.sc1) < 1e-14 and abs(co.sc2) < 1e-14


def test_scattering_at_bound_state_raises():
    T = sc.TransitionMatrix(0.5, np.diag([0.0, 1.0, 1.0]).astype(complex))
    with pytest.raises(sc.BoundStateError):
        sc.scattering_coefficients(T)


@pytest.mark.parametrize("lam", REAL_LAMBDAS)
def test_unitarity_on_real_axis(gaussian, lam):
    assert sc.scattering_at(gaussian, lam).unitarity_residual <= 1e-6


def test_transmission_tends_to_one_in_lower_sector(compact):
    err = [abs(sc.scattering_at(compact, -1j * w).r0 - 1) for w in (2, 4, 8, 16)]
    assert all(b < a for a, b in zip(err, err[1:]))
    assert err[-1] < 1e-3


def test_f02_tends_to_one_on_its_ray(compact):
    err = []
    for t in (2, 4, 8, 16):
        lam = 1j * ZETA[1] * t
        u0 = sc.u_triple(compact, lam, 0, 0.0)
        v2 = sc.v_triple(compact, lam, 2, 0.0)
        f02 = -ZETA[2] / (SQRT3 * lam) * sc._wr(u0, v2)
        err.append(abs(f02 - 1))
    assert all(b < a for a, b in zip(err, err[1:]))
    assert err[-1] < 1e-3


def test_forward_record_fields(gaussian):
    rec = sc.forward_record(gaussian, 0.5)
    assert rec.det_residual <= 1e-6 and rec.coeffs is not None
    assert np.isclose(rec.T.det, 1, atol=1e-6)


def test_zero_region_condition(gaussian):
    lhs, holds = sc.zero_region_condition(gaussian)
    assert lhs == 27.0 and holds is False
    big_a = builtin_potential("gaussian", {"q0": 0.1, "decay_rate": 30.0})
    assert sc.zero_region_condition(big_a) == (27.0, True)


def test_ray_derivative_of_cubic():
    direction = ZETA[2]
    kap = 0.7
    d = sc.ray_derivative(lambda k: (k * direction) ** 3, kap, direction)
    assert abs(d - 3 * (kap * direction) ** 2) < 1e-9


def test_scan_rejects_nonzero_minima():
    strong = builtin_potential("gaussian", {"q0": 30.0, "decay_rate": 20.0})
    rep = sc.find_bound_states(strong, sc.BoundSearchConfig(n_scan=40))
    kap, vals = rep.scanned["l2"]
    assert 0 < vals.min() < 0.5  # a dip below the bracketing threshold ...
    assert rep.states == []      # ... that golden-section refinement does not drive to zero


def test_sign_of_q_swaps_the_rays():
    cfg = sc.BoundSearchConfig(n_scan=20)
    a = sc.find_bound_states(builtin_potential("gaussian", {"q0": 2.0, "decay_rate": 6.0}), cfg)
    b = sc.find_bound_states(builtin_potential("gaussian", {"q0": -2.0, "decay_rate": 6.0}), cfg)
    assert np.allclose(a.scanned["l2"][1], b.scanned["hat_l1"][1], rtol=1e-10)
    assert np.allclose(a.scanned["hat_l1"][1], b.scanned["l2"][1], rtol=1e-10)


def test_jump_residual_vanishes_for_free_operator():
    res = sc.jump_residual(jost.zero_potential(), 1.0, 0.3)
    assert res.on_zeta1_ray == 0 and res.on_zeta2_ray == 0


@pytest.mark.parametrize("t", [0.5, 1.0, 2.0])
def test_jump_residual_small_gaussian(small_gaussian, t):
    assert sc.jump_residual(small_gaussian, t, 0.5).max_jump <= 1e-4


def test_jump_residual_refuses_bound_states(small_gaussian):
    state = sc.BoundState("l2", 0.5 * ZETA[2], 0.5, 1.0, 0.0, 1.0, 1.0, 0.0)
    report = sc.BoundStateReport([state], 27.0, 3.0, False, {})
    with pytest.raises(sc.UnsupportedRegimeError):
        sc.jump_residual(small_gaussian, 1.0, bound_report=report)


def test_boundary_system_is_diagnostic_only(small_gaussian):
    r2, r1 = sc.boundary_system_residual(small_gaussian, 1.0, 0.0)
    assert np.isfinite(r1) and np.isfinite(r2)
    with pytest.raises(ValueError):
        sc.boundary_system_residual(small_gaussian, 7.0, 0.0)
