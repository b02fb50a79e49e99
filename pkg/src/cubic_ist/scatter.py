"""Forward scattering data built from the Jost solutions.

The transition matrix T(lambda) expresses the left Jost solutions in the basis
of the right ones, u_k = sum_l t_{k,l} v_l. Row 0 is obtained from Wronskian
type bilinear forms with the conjugate solutions v*(lambda) =
conj(v(conj lambda)); rows 1 and 2 follow by rotating lambda.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import optimize

from .cubicexp import SQRT3, ZETA, ZETA1, ZETA2
from .jost import JostConfig, JostFrame, Potential, reduced_u, reduced_v

# signature matrix of the J-unitarity relation
J = np.array([[1, 0, 0], [0, 0, ZETA2], [0, ZETA1, 0]], dtype=complex)

# which conjugate solution pairs with u_0 to extract t_{0,k}
_PARTNER = (0, 2, 1)


class SingularParameterError(ValueError):
    pass


class BoundStateError(ArithmeticError):
    """t_{0,0} vanishes (or nearly so) where a ratio by it is required."""


class UnsupportedRegimeError(ValueError):
    pass


class MultiplicityWarning(RuntimeWarning):
    pass


# ---------------------------------------------------------------------------
# pointwise Jost data


def _derivs(solver, pot, lam, k, x, cfg) -> np.ndarray:
    """(y, y', y'') of a Jost solution at x, undoing the reduction phase."""
    r = solver(pot, lam, k, [x], cfg)[:, 0]
    return r * np.exp(1j * lam * ZETA[k] * x)


def v_triple(pot: Potential, lam: complex, k: int, x: float = 0.0,
             cfg: Optional[JostConfig] = None) -> np.ndarray:
    return _derivs(reduced_v, pot, complex(lam), k, x, cfg)


def u_triple(pot: Potential, lam: complex, k: int, x: float = 0.0,
             cfg: Optional[JostConfig] = None) -> np.ndarray:
    return _derivs(reduced_u, pot, complex(lam), k, x, cfg)


def v_star_triple(pot: Potential, lam: complex, k: int, x: float = 0.0,
                  cfg: Optional[JostConfig] = None) -> np.ndarray:
    """Derivatives of v_k^*(lambda, x) = conj(v_k(conj lambda, x)); q is real."""
    return np.conj(v_triple(pot, np.conj(complex(lam)), k, x, cfg))


def psi_star(pot: Potential, lam: complex, k: int, x: float,
             cfg: Optional[JostConfig] = None) -> complex:
    """conj(psi_k(conj lambda, x)) with psi_k the reduced right Jost solution."""
    return complex(np.conj(reduced_v(pot, np.conj(complex(lam)), k, [x], cfg)[0, 0]))


def wronskian(f: JostFrame, g: JostFrame) -> complex:
    """f g' - f' g for two frames at the same (lambda, x)."""
    if f.lam != g.lam or f.x != g.x:
        raise ValueError("Wronskian needs frames at the same lambda and x")
    return f.value * g.d1 - f.d1 * g.value


def _wr(a: np.ndarray, b: np.ndarray) -> complex:
    return complex(a[0] * b[1] - a[1] * b[0])


def _trilinear(u: np.ndarray, w: np.ndarray) -> complex:
    return complex(u[0] * w[2] - u[1] * w[1] + u[2] * w[0])


# ---------------------------------------------------------------------------
# transition matrix


def transition_row0(pot: Potential, lam: complex, x: float = 0.0,
                    cfg: Optional[JostConfig] = None) -> np.ndarray:
    """(t00, t01, t02) at lambda from the bilinear pairing of u_0 with v*.

    The pairing is x-independent; x = 0 is the default evaluation point.
    """
    lam = complex(lam)
    if lam == 0:
        raise SingularParameterError("transition coefficients are undefined at lambda = 0")
    u0 = u_triple(pot, lam, 0, x, cfg)
    row = np.empty(3, dtype=complex)
    for k in range(3):
        w = v_star_triple(pot, lam, _PARTNER[k], x, cfg)
        row[k] = -ZETA[k] / (3 * lam * lam) * _trilinear(u0, w)
    return row


def t00(pot: Potential, lam: complex, x: float = 0.0, cfg: Optional[JostConfig] = None) -> complex:
    lam = complex(lam)
    if lam == 0:
        raise SingularParameterError("transition coefficients are undefined at lambda = 0")
    u0 = u_triple(pot, lam, 0, x, cfg)
    w = v_star_triple(pot, lam, 0, x, cfg)
    return -1.0 / (3 * lam * lam) * _trilinear(u0, w)


def decomposition_by_solve(pot: Potential, lam: complex, k: int, x: float = 0.0,
                           cfg: Optional[JostConfig] = None) -> np.ndarray:
    """Coefficients c with u_k = sum_l c_l v_l, from the 3x3 system in (y, y', y'')."""
    lam = complex(lam)
    V = np.column_stack([v_triple(pot, lam, l, x, cfg) for l in range(3)])
    return np.linalg.solve(V, u_triple(pot, lam, k, x, cfg))


@dataclass(frozen=True)
class TransitionMatrix:
    lam: complex
    t: np.ndarray
    J: np.ndarray = field(default_factory=lambda: J.copy())

    def __getitem__(self, idx):
        return self.t[idx]

    @property
    def det(self) -> complex:
        return complex(np.linalg.det(self.t))

    def det_residual(self) -> float:
        return abs(self.det - 1.0)

    def j_unitarity_residual(self, conj_partner: "TransitionMatrix") -> float:
        """max |J - T(lambda) J T(conj lambda)^dagger|."""
        prod = self.t @ self.J @ conj_partner.t.conj().T
        return float(np.max(np.abs(self.J - prod)))

    def cofactor_residual(self, conj_partner: "TransitionMatrix") -> float:
        """|t00*(lambda) - (t11 t22 - t12 t21)(lambda)|."""
        t = self.t
        cof = t[1, 1] * t[2, 2] - t[1, 2] * t[2, 1]
        return abs(np.conj(conj_partner.t[0, 0]) - cof)


def transition_full(pot: Potential, lam: complex, cfg: Optional[JostConfig] = None) -> TransitionMatrix:
    """All three rows; row j is row 0 evaluated at lambda zeta_j with indices shifted by j."""
    lam = complex(lam)
    t = np.empty((3, 3), dtype=complex)
    for j in range(3):
        row = transition_row0(pot, lam * ZETA[j], 0.0, cfg)
        for k in range(3):
            t[j, (k + j) % 3] = row[k]
    return TransitionMatrix(lam, t)


# ---------------------------------------------------------------------------
# scattering coefficients


@dataclass(frozen=True)
class ScatteringCoefficients:
    lam: complex
    r0: complex
    sc1: complex
    sc2: complex
    unitarity_residual: float = float("nan")


def _ratios(row: np.ndarray, floor: float) -> tuple[complex, complex, complex]:
    if abs(row[0]) <= floor:
        raise BoundStateError(f"|t00| = {abs(row[0]):.3e} is below the degeneracy floor")
    return 1.0 / row[0], row[1] / row[0], row[2] / row[0]


def unitarity_residual(row: np.ndarray, row_conj: np.ndarray, floor: float = 1e-12) -> float:
    """|r0 r0* - 1 - zeta1 sc2 sc1* - zeta2 sc1 sc2*| from rows at lambda and conj(lambda)."""
    r0, s1, s2 = _ratios(row, floor)
    r0c, s1c, s2c = (np.conj(v) for v in _ratios(row_conj, floor))
    return float(abs(r0 * r0c - 1.0 - ZETA1 * s2 * s1c - ZETA2 * s1 * s2c))


def scattering_coefficients(T: TransitionMatrix, T_conj: Optional[TransitionMatrix] = None,
                            floor: float = 1e-12) -> ScatteringCoefficients:
    r0, s1, s2 = _ratios(T.t[0], floor)
    res = unitarity_residual(T.t[0], T_conj.t[0], floor) if T_conj is not None else float("nan")
    return ScatteringCoefficients(T.lam, complex(r0), complex(s1), complex(s2), res)


def scattering_at(pot: Potential, lam: complex, cfg: Optional[JostConfig] = None) -> ScatteringCoefficients:
    lam = complex(lam)
    row = transition_row0(pot, lam, 0.0, cfg)
    row_c = row if lam.imag == 0 else transition_row0(pot, lam.conjugate(), 0.0, cfg)
    r0, s1, s2 = _ratios(row, 1e-12)
    return ScatteringCoefficients(lam, complex(r0), complex(s1), complex(s2),
                                  unitarity_residual(row, row_c))


@dataclass(frozen=True)
class ForwardRecord:
    """Everything the forward sweep reports at one lambda."""
    lam: complex
    T: TransitionMatrix
    coeffs: Optional[ScatteringCoefficients]
    det_residual: float
    j_unitarity_residual: float
    cofactor_residual: float


def forward_record(pot: Potential, lam: complex, cfg: Optional[JostConfig] = None) -> ForwardRecord:
    lam = complex(lam)
    T = transition_full(pot, lam, cfg)
    Tc = T if lam.imag == 0 else transition_full(pot, lam.conjugate(), cfg)
    try:
        coeffs = scattering_coefficients(T, Tc)
    except BoundStateError:
        coeffs = None
    return ForwardRecord(lam, T, coeffs, T.det_residual(), T.j_unitarity_residual(Tc),
                         T.cofactor_residual(Tc))


# ---------------------------------------------------------------------------
# bound states

RAY_DIRECTIONS = {"l2": ZETA2, "hat_l1": -ZETA1}


@dataclass(frozen=True)
class BoundSearchConfig:
    n_scan: int = 400
    kappa_min: Optional[float] = None   # default: 1e-3 of the upper end
    kappa_max: Optional[float] = None   # default: a/3
    scan_threshold: float = 0.5
    zero_tol: float = 1e-10
    simplicity_floor: float = 1e-6
    step_rel: float = 1e-5
    jost: JostConfig = field(default_factory=JostConfig)


@dataclass(frozen=True)
class BoundState:
    ray: str
    z: complex
    kappa: float
    b: complex
    t00_abs: float
    t00p_abs: float
    t01_abs: float
    t02_abs: float
    simple: bool = True

    @property
    def eigenvalue(self) -> complex:
        return self.z ** 3


@dataclass(frozen=True)
class BoundStateReport:
    states: list
    condition_lhs: float
    decay_rate: float
    condition_holds: bool
    scanned: dict


def zero_region_condition(pot: Potential) -> tuple[float, bool]:
    """3 max{2 sqrt(q1), 2 sqrt(q2), 9} and whether it is below the decay rate a."""
    lhs = 3 * max(2 * math.sqrt(pot.q1), 2 * math.sqrt(pot.q2), 9.0)
    return lhs, lhs < pot.decay_rate


def ray_derivative(f, kappa: float, direction: complex, step_rel: float = 1e-5) -> complex:
    """df/dlambda along lambda = kappa * direction, central difference plus one Richardson step."""
    h = step_rel * kappa

    def central(hh):
        return (f(kappa + hh) - f(kappa - hh)) / (2 * hh)

    d1, d2 = central(h), central(h / 2)
    return (4 * d2 - d1) / 3 / direction


def _refine(g, lo: float, hi: float, mid: float) -> float:
    res = optimize.minimize_scalar(g, bracket=(lo, mid, hi), method="golden",
                                   options={"xtol": 1e-13, "maxiter": 500})
    return float(res.x)


def find_bound_states(pot: Potential, cfg: Optional[BoundSearchConfig] = None) -> BoundStateReport:
    """Scan |t00| on the rays kappa zeta2 and -kappa zeta1, kappa in (0, a/3)."""
    cfg = cfg or BoundSearchConfig()
    lhs, holds = zero_region_condition(pot)
    top = cfg.kappa_max if cfg.kappa_max is not None else pot.decay_rate / 3
    bottom = cfg.kappa_min if cfg.kappa_min is not None else 1e-3 * top
    kappas = np.geomspace(bottom, top, cfg.n_scan + 1)[:-1]  # open at a/3
    states: list[BoundState] = []
    scanned = {}
    for ray, direction in RAY_DIRECTIONS.items():
        if pot.is_zero:
            vals = np.ones_like(kappas)
        else:
            vals = np.array([abs(t00(pot, kap * direction, 0.0, cfg.jost)) for kap in kappas])
        scanned[ray] = (kappas, vals)
        for i in range(1, len(kappas) - 1):
            if not (vals[i] <= vals[i - 1] and vals[i] <= vals[i + 1] and vals[i] < cfg.scan_threshold):
                continue
            g = lambda kap: abs(t00(pot, kap * direction, 0.0, cfg.jost))
            kap = _refine(g, kappas[i - 1], kappas[i + 1], kappas[i])
            if g(kap) >= cfg.zero_tol:
                continue
            states.append(_make_state(pot, ray, direction, kap, cfg))
    states.sort(key=lambda s: (s.kappa, s.ray))
    return BoundStateReport(states, lhs, pot.decay_rate, holds, scanned)


def _make_state(pot: Potential, ray: str, direction: complex, kap: float,
                cfg: BoundSearchConfig) -> BoundState:
    z = kap * direction
    row = transition_row0(pot, z, 0.0, cfg.jost)
    dt = ray_derivative(lambda k: t00(pot, k * direction, 0.0, cfg.jost), kap, direction, cfg.step_rel)
    simple = abs(dt) > cfg.simplicity_floor
    if not simple:
        warnings.warn(f"zero of t00 at {z:.6g} has |t00'| = {abs(dt):.2e}; multiplicity suspected",
                      MultiplicityWarning, stacklevel=3)
    # the norming constant divides by the coefficient that survives on this ray
    if ray == "l2":
        num, den = -ZETA1 * dt, row[1]
    else:
        num, den = -ZETA2 * dt, row[2]
    b = num / den if abs(den) > 1e-300 else complex("nan")
    return BoundState(ray, complex(z), float(kap), complex(b), abs(row[0]), abs(dt),
                      abs(row[1]), abs(row[2]), simple)


# ---------------------------------------------------------------------------
# jump relations


@dataclass(frozen=True)
class JumpResidual:
    t: float
    x: float
    on_zeta1_ray: float
    on_zeta2_ray: float
    boundary_system: Optional[tuple] = None

    @property
    def max_jump(self) -> float:
        return max(self.on_zeta1_ray, self.on_zeta2_ray)


def _jump_terms(pot: Potential, lam: complex, x: float, which: int, cfg) -> tuple[complex, complex]:
    """Both sides of the jump relation on i l_{zeta_which} (which = 1 or 2)."""
    row = transition_row0(pot, lam, 0.0, cfg)
    r0 = 1.0 / row[0]
    u0 = u_triple(pot, lam, 0, x, cfg)
    p0 = psi_star(pot, lam, 0, x, cfg)
    if which == 1:
        v2 = v_triple(pot, lam, 2, x, cfg)
        f02 = -ZETA2 / (SQRT3 * lam) * np.exp(1j * lam * ZETA1 * x) * _wr(u0, v2)
        s1 = ZETA2 * np.exp(1j * lam * (ZETA1 - 1) * x) * row[1] / row[0]
        return psi_star(pot, lam, 2, x, cfg) - r0 * f02, s1 * p0
    v1 = v_triple(pot, lam, 1, x, cfg)
    f01 = ZETA1 / (SQRT3 * lam) * np.exp(1j * lam * ZETA2 * x) * _wr(u0, v1)
    s2 = ZETA1 * np.exp(1j * lam * (ZETA2 - 1) * x) * row[2] / row[0]
    return psi_star(pot, lam, 1, x, cfg) - r0 * f01, s2 * p0


def jump_sides(pot: Potential, t: float, x: float, cfg: Optional[JostConfig] = None) -> dict:
    """Left and right sides of both jump relations at lambda = i zeta_1 t and i zeta_2 t."""
    out = {}
    for which in (1, 2):
        lam = 1j * ZETA[which] * t
        out[which] = _jump_terms(pot, lam, x, which, cfg)
    return out


def _boundary_data(pot: Potential, tau: np.ndarray, x: float, cfg) -> tuple:
    """psi_1*(i tau), psi_2*(i tau), s_1(i zeta1 tau) psi_2*, s_2(i zeta2 tau) psi_1* on nodes."""
    p1 = np.empty(tau.size, dtype=complex)
    p2 = np.empty_like(p1)
    P = np.empty_like(p1)
    S = np.empty_like(p1)
    for j, tj in enumerate(tau):
        p1[j] = psi_star(pot, 1j * tj, 1, x, cfg)
        p2[j] = psi_star(pot, 1j * tj, 2, x, cfg)
        lam1 = 1j * ZETA1 * tj
        row1 = transition_row0(pot, lam1, 0.0, cfg)
        s1 = ZETA2 * np.exp(1j * lam1 * (ZETA1 - 1) * x) * row1[1] / row1[0]
        lam2 = 1j * ZETA2 * tj
        row2 = transition_row0(pot, lam2, 0.0, cfg)
        s2 = ZETA1 * np.exp(1j * lam2 * (ZETA2 - 1) * x) * row2[2] / row2[0]
        P[j] = s1 * p2[j]
        S[j] = s2 * p1[j]
    return p1, p2, P, S


def _tail(w: complex, T: float) -> complex:
    """int_T^inf dtau / (tau^2 (tau - w))."""
    return -1.0 / (w * T) - np.log(1 - w / T) / (w * w)


def boundary_system_residual(pot: Potential, t: float, x: float, n_nodes: int = 32,
                             cutoff: float = 6.0, cfg: Optional[JostConfig] = None) -> tuple[float, float]:
    """Residuals of the boundary-value representation of psi_2*(it), psi_1*(it) with no bound states.

    Both equations come from the Cauchy representation of the sectionally
    holomorphic function evaluated on the rays i l_{zeta_1}, i l_{zeta_2}; the
    singular integrals are principal values plus half the density. Integrals
    are taken over (0, cutoff); beyond it Delta is replaced by its leading term
    F(x) / (sqrt3 tau^2) and the reflection terms are dropped.
    """
    from .invscatter import QuadratureGrid, pv_integral

    t = float(t)
    if not 0 < t < cutoff:
        raise ValueError("t must lie inside (0, cutoff)")
    grid = QuadratureGrid.interval(n_nodes, cutoff)
    tau = grid.nodes
    p1, p2, P, S = _boundary_data(pot, tau, x, cfg)
    D = p2 - p1
    p1t, p2t, Pt, St = (v[0] for v in _boundary_data(pot, np.array([t]), x, cfg))
    alpha = float(pot.integral_from(x)) / SQRT3
    c = 1.0 / (2j * math.pi)

    def integ(f, pole):
        return np.sum(grid.weights * f / (tau - pole))

    def delta_int(pole):
        return integ(D, pole) + alpha * _tail(pole, cutoff)

    rhs2 = (1 + 0.5 * St + c * pv_integral(grid, S, t) - c * integ(P, ZETA2 * t)
            + c * (integ(P - S, ZETA1 * t) - delta_int(ZETA1 * t)))
    rhs1 = (1 + c * integ(S, ZETA1 * t) + 0.5 * Pt - c * pv_integral(grid, P, t)
            + c * (integ(P - S, ZETA2 * t) - delta_int(ZETA2 * t)))
    return float(abs(p2t - rhs2)), float(abs(p1t - rhs1))


def jump_residual(pot: Potential, t: float, x: float = 0.0, cfg: Optional[JostConfig] = None,
                  with_boundary_system: bool = False,
                  bound_report: Optional[BoundStateReport] = None,
                  boundary_nodes: int = 32) -> JumpResidual:
    if bound_report is not None and bound_report.states:
        raise UnsupportedRegimeError("jump diagnostics assume an empty discrete spectrum")
    if pot.is_zero:  # psi* = r0 = f0k = 1 and s1 = s2 = 0 identically
        return JumpResidual(float(t), float(x), 0.0, 0.0, (0.0, 0.0) if with_boundary_system else None)
    sides = jump_sides(pot, t, x, cfg)
    r1 = float(abs(sides[1][0] - sides[1][1]))
    r2 = float(abs(sides[2][0] - sides[2][1]))
    bs = None
    if with_boundary_system:
        bs = boundary_system_residual(pot, t, x, boundary_nodes, cfg=cfg)
    return JumpResidual(float(t), float(x), r1, r2, bs)
