"""Inverse problem: reconstruct q from bound-state data and the sc_1 coefficient.

All unknowns live on the positive half-line t > 0 (the parameter of the rays
i l_{zeta_k}). Integral operators are discretised by the Nystrom method on a
mapped Gauss-Legendre grid tau = L ((1 + u) / (1 - u))^2.

Recovery of int_x^inf q uses double integrals int_0^inf dtau int_0^tau f dt.
For the densities that occur here these integrals do not converge (the
resolvent of M produces a t^{-3/2} log t tail, and densities with non-zero
mean give a linear divergence). They are assigned their Mellin finite part,
-Mf(2), where Mf(s) = int t^{s-1} f dt is continued analytically. For a
rapidly decaying f this is -int t f dt. For f = (I - M)^{-1} h it follows from
the Mellin symbol of M,

    m(s) = -sin(pi s / 3) / sin(pi s),

and equals (2 pi / sqrt 3) times the t^{-2} coefficient of h at infinity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy import interpolate, linalg

from .cubicexp import SQRT3, ZETA1, ZETA2

_C = 1.0 / (2j * math.pi)


class IllConditionedError(ArithmeticError):
    def __init__(self, message: str, condition: float):
        super().__init__(message)
        self.condition = condition


class SingularSystemError(ArithmeticError):
    def __init__(self, message: str, x: float):
        super().__init__(message)
        self.x = x


class DomainTooSmallError(ValueError):
    pass


class PoleOnGridError(ArithmeticError):
    pass


# ---------------------------------------------------------------------------
# kernels


def kernel_a(t, lam):
    """a(t, lambda) = 1 / ((t - lambda)(t + zeta1 lambda))."""
    return 1.0 / ((t - lam) * (t + ZETA1 * lam))


def kernel_b(t, lam):
    """b(t, lambda) = 1 / ((t + lambda)(t + zeta1 lambda))."""
    return 1.0 / ((t + lam) * (t + ZETA1 * lam))


def mellin_symbol(s):
    """Multiplier of M on t^{-s}: M[t^{-s}] = m(s) t^{-s}."""
    s = np.asarray(s, dtype=complex)
    return -np.sin(np.pi * s / 3) / np.sin(np.pi * s)


def resolvent_finite_part(beta2: complex) -> complex:
    """Finite part of int_0^inf dtau int_0^tau (I - M)^{-1} h, given h ~ beta2 / t^2."""
    return 2 * math.pi / SQRT3 * beta2


# ---------------------------------------------------------------------------
# quadrature


@dataclass(frozen=True)
class QuadratureGrid:
    """Gauss-Legendre nodes mapped to (0, inf) by tau = L ((1 + u) / (1 - u))^power.

    power = 1 is the plain Mobius map. The default power = 2 clusters nodes at
    both ends, which the algebraic end behaviour of the resolvent needs.
    """
    nodes: np.ndarray
    weights: np.ndarray
    u: np.ndarray
    u_weights: np.ndarray
    scale: float
    power: int = 2
    finite: bool = False

    @classmethod
    def mapped(cls, n: int = 200, scale: float = 1.0, power: int = 2) -> "QuadratureGrid":
        if n < 2 or scale <= 0 or power < 1:
            raise ValueError("need n >= 2, a positive scale and power >= 1")
        u, w = np.polynomial.legendre.leggauss(n)
        r = (1 + u) / (1 - u)
        tau = scale * r ** power
        jac = scale * power * r ** (power - 1) * 2 / (1 - u) ** 2
        return cls(tau, w * jac, u, w, float(scale), int(power))

    @classmethod
    def for_data(cls, data: "SpectralData", n: int = 200, power: int = 2) -> "QuadratureGrid":
        kmax = max([1.0, *data.kappas, *data.kappas_hat])
        return cls.mapped(n, kmax, power)

    @classmethod
    def interval(cls, n: int, length: float) -> "QuadratureGrid":
        """Plain Gauss-Legendre on (0, length), tau = length (1 + u) / 2."""
        u, w = np.polynomial.legendre.leggauss(n)
        return cls(length * (1 + u) / 2, w * length / 2, u, w, float(length), 1, True)

    @property
    def size(self) -> int:
        return self.nodes.size

    def integrate(self, f: np.ndarray) -> complex:
        return complex(np.sum(self.weights * f))

    def to_u(self, t):
        if self.finite:
            return 2 * np.asarray(t, dtype=float) / self.scale - 1
        r = (np.asarray(t, dtype=float) / self.scale) ** (1.0 / self.power)
        return (r - 1) / (r + 1)

    def jacobian_ratio(self) -> np.ndarray:
        """tau''(u) / (2 tau'(u)) at the nodes."""
        u = self.u
        if self.finite:
            return np.zeros_like(u)
        return (self.power - 1) / ((1 - u) * (1 + u)) + 1.0 / (1 - u)

    @property
    def _bary(self) -> np.ndarray:
        lam = np.sqrt((1 - self.u ** 2) * self.u_weights)
        lam[1::2] *= -1
        return lam

    def interpolation_row(self, t: float) -> np.ndarray:
        """Barycentric Lagrange weights (in u) giving f(t) from nodal values."""
        ut = float(self.to_u(t))
        d = ut - self.u
        hit = np.flatnonzero(np.abs(d) < 1e-15)
        row = np.zeros(self.size)
        if hit.size:
            row[hit[0]] = 1.0
            return row
        c = self._bary / d
        return c / np.sum(c)

    def differentiation_matrix(self) -> np.ndarray:
        """Spectral d/du on the Legendre nodes."""
        lam = self._bary
        diff = self.u[:, None] - self.u[None, :]
        np.fill_diagonal(diff, 1.0)
        D = (lam[None, :] / lam[:, None]) / diff
        np.fill_diagonal(D, 0.0)
        np.fill_diagonal(D, -D.sum(axis=1))
        return D


def pv_matrix(grid: QuadratureGrid) -> np.ndarray:
    """Q with (Q f)_i ~ PV int_0^inf f(tau) / (tau - tau_i) dtau.

    Singularity subtraction in the u variable: the smooth remainder is
    integrated by the same Gauss rule (its diagonal term needs f'), the
    subtracted Cauchy kernel is integrated exactly.
    """
    n = grid.size
    u, wu = grid.u, grid.u_weights
    du = u[None, :] - u[:, None]
    dt = grid.nodes[None, :] - grid.nodes[:, None]
    np.fill_diagonal(du, 1.0)
    np.fill_diagonal(dt, 1.0)
    Q = grid.weights[None, :] / dt
    np.fill_diagonal(Q, 0.0)
    off = wu[None, :] / du
    np.fill_diagonal(off, 0.0)
    diag = -off.sum(axis=1) + np.log((1 - u) / (1 + u)) + wu * grid.jacobian_ratio()
    Q += np.diag(diag)
    Q += wu[:, None] * grid.differentiation_matrix()
    return Q


def pv_integral(grid: QuadratureGrid, f: np.ndarray, t: float) -> complex:
    """PV integral of f(tau) / (tau - t) over the grid's range, from nodal values f."""
    ut = float(grid.to_u(t))
    d = grid.u - ut
    i = int(np.argmin(np.abs(d)))
    if abs(d[i]) < 1e-14:
        return complex(pv_matrix(grid)[i] @ f)
    ft = grid.interpolation_row(t) @ f
    main = np.sum(grid.weights * f / (grid.nodes - t))
    corr = np.sum(grid.u_weights / d) - math.log((1 - ut) / (1 + ut))
    return complex(main - ft * corr)


# ---------------------------------------------------------------------------
# the operator M


def m_matrix(grid: QuadratureGrid) -> np.ndarray:
    """Nystrom matrix of (M f)(t) = ((zeta2 - zeta1) t / 2 pi i) int f(tau) b(tau, -zeta1 t) dtau."""
    t = grid.nodes[:, None]
    return (ZETA2 - ZETA1) * t * _C * kernel_b(grid.nodes[None, :], -ZETA1 * t) * grid.weights[None, :]


def apply_M(grid: QuadratureGrid, f: np.ndarray, t) -> np.ndarray:
    t = np.atleast_1d(np.asarray(t, dtype=float))[:, None]
    vals = (ZETA2 - ZETA1) * t * _C * (kernel_b(grid.nodes[None, :], -ZETA1 * t) * grid.weights[None, :]) @ f
    return vals if vals.size > 1 else complex(vals[0])


def operator_norm_estimate(grid: QuadratureGrid, n_iter: int = 200, seed: int = 0) -> float:
    """Power iteration for the L^2 norm of the discretised M."""
    sw = np.sqrt(grid.weights)
    A = sw[:, None] * m_matrix(grid) / sw[None, :]
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(grid.size) + 0j
    est = 0.0
    for _ in range(n_iter):
        y = A.conj().T @ (A @ x)
        est = float(np.linalg.norm(y))
        x = y / est
    return math.sqrt(est)


@dataclass
class FredholmSolver:
    """LU factorisation of I - K for a Nystrom matrix K, with a conditioning check."""
    matrix: np.ndarray
    cond_limit: float = 1e12
    condition: float = field(init=False)

    def __post_init__(self):
        n = self.matrix.shape[0]
        self._op = np.eye(n) - self.matrix
        self._lu = linalg.lu_factor(self._op, check_finite=True)
        # LAPACK 1-norm estimate; an SVD would dominate the cost of the solve
        gecon, = linalg.get_lapack_funcs(("gecon",), (self._op,))
        rcond, info = gecon(self._lu[0], np.linalg.norm(self._op, 1), norm="1")
        self.condition = float(1.0 / rcond) if rcond > 0 else math.inf
        if not np.isfinite(self.condition) or self.condition > self.cond_limit:
            raise IllConditionedError(f"Nystrom system condition number {self.condition:.3e}",
                                      self.condition)

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return linalg.lu_solve(self._lu, np.asarray(rhs, dtype=complex))

    def apply(self, f: np.ndarray) -> np.ndarray:
        return self._op @ f


def solve_fredholm(grid: QuadratureGrid, rhs: np.ndarray, cond_limit: float = 1e12) -> np.ndarray:
    """(I - M)^{-1} rhs on the grid nodes."""
    return FredholmSolver(m_matrix(grid), cond_limit).solve(rhs)


def nystrom_extend(grid: QuadratureGrid, sol: np.ndarray, rhs: Callable, t) -> np.ndarray:
    """Natural interpolant g(t) = h(t) + (M g)(t) of a Nystrom solution."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    return rhs(t) + np.atleast_1d(apply_M(grid, sol, t))


# ---------------------------------------------------------------------------
# spectral data


@dataclass(frozen=True)
class SampledRayFunction:
    """A coefficient sampled at ray parameters t > 0, zero beyond the last sample."""
    t: np.ndarray
    values: np.ndarray
    decay_tol: float = 1e-8

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        v = np.asarray(self.values, dtype=complex)
        if t.ndim != 1 or t.size < 4 or t.size != v.size:
            raise ValueError("need at least four (t, value) samples")
        if np.any(np.diff(t) <= 0) or t[0] < 0:
            raise ValueError("sample parameters must be non-negative and increasing")
        peak = float(np.max(np.abs(v)))
        if peak > 0 and abs(v[-1]) > self.decay_tol * peak:
            raise ValueError(f"samples have not decayed: |last| / max = {abs(v[-1]) / peak:.2e}")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "values", v)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        re = interpolate.CubicSpline(self.t, self.values.real)
        im = interpolate.CubicSpline(self.t, self.values.imag)
        tc = np.clip(t, self.t[0], self.t[-1])
        out = re(tc) + 1j * im(tc)
        return np.where(t > self.t[-1], 0.0, out)


RayFunction = Union[Callable[[np.ndarray], np.ndarray], SampledRayFunction, None]


@dataclass(frozen=True)
class SpectralData:
    """Bound states (kappa_l, b_l) on l_{zeta2}, (kappa_hat_s, b_hat_s) on the hatted ray, and sc_1, sc_2.

    sc1 is a function of t giving sc_1(i zeta1 t); sc2 likewise on i l_{zeta2}.
    None means identically zero.
    """
    bound: tuple = ()
    bound_hat: tuple = ()
    sc1: RayFunction = None
    sc2: RayFunction = None

    def __post_init__(self):
        for fam in (self.bound, self.bound_hat):
            ks = [float(k) for k, _ in fam]
            if any(k <= 0 for k in ks):
                raise ValueError("kappa values must be positive")
            if len(set(ks)) != len(ks):
                raise ValueError("kappa values must be distinct within a family")
        object.__setattr__(self, "bound", tuple((float(k), complex(b)) for k, b in self.bound))
        object.__setattr__(self, "bound_hat", tuple((float(k), complex(b)) for k, b in self.bound_hat))

    @property
    def kappas(self) -> list:
        return [k for k, _ in self.bound]

    @property
    def kappas_hat(self) -> list:
        return [k for k, _ in self.bound_hat]

    @property
    def c(self) -> list:
        return [b / k for k, b in self.bound]

    @property
    def c_hat(self) -> list:
        return [b / k for k, b in self.bound_hat]

    @property
    def reflectionless(self) -> bool:
        return self.sc1 is None and self.sc2 is None

    @property
    def n_bound(self) -> int:
        return len(self.bound) + len(self.bound_hat)


# ---------------------------------------------------------------------------
# reflectionless case


def build_A(data: SpectralData, t) -> tuple[list, list]:
    """Right-hand sides A_l(t), A_hat_s(t) of the Fredholm equations."""
    t = np.asarray(t, dtype=float)
    A = [ZETA2 * kernel_a(t, 1j * ZETA1 * k) - kernel_a(t, 1j * k) for k in data.kappas]
    Ah = [ZETA1 * kernel_a(t, 1j * ZETA1 * k) - kernel_a(t, 1j * ZETA2 * k) for k in data.kappas_hat]
    return A, Ah


def tail_coefficients(data: SpectralData) -> tuple[list, list]:
    """lim t^2 A_l(t) and lim t^2 A_hat_s(t)."""
    return [ZETA2 - 1.0] * len(data.bound), [ZETA1 - 1.0] * len(data.bound_hat)


def _pole_coefficients(data: SpectralData) -> np.ndarray:
    """Matrix G with the algebraic (residue) couplings of the bound-state equations."""
    ks, kh = data.kappas, data.kappas_hat
    m, mh = len(ks), len(kh)
    G = np.zeros((m + mh, m + mh), dtype=complex)
    for l, kl in enumerate(ks):
        for p, kp in enumerate(ks):
            G[l, p] = ZETA2 * kernel_a(kp, ZETA2 * kl)
        for s, ks_ in enumerate(kh):
            G[l, m + s] = -ZETA1 * kernel_a(ks_, ZETA1 * kl)
    for s, kss in enumerate(kh):
        for l, kl in enumerate(ks):
            G[m + s, l] = ZETA2 * kernel_a(kl, -ZETA1 * kss)
        for p, kp in enumerate(kh):
            G[m + s, m + p] = -ZETA1 * kernel_a(kp, -kss)
    return G


def _cauchy_poles(data: SpectralData) -> np.ndarray:
    """Points w_n with the Delta-integral of equation n equal to int Delta / (tau - w_n)."""
    return np.array([-1j * ZETA2 * k for k in data.kappas] + [1j * ZETA1 * k for k in data.kappas_hat],
                    dtype=complex)


def _phases(data: SpectralData, x: float) -> np.ndarray:
    e = [c * np.exp(1j * k * (ZETA2 - 1) * x) for (k, _), c in zip(data.bound, data.c)]
    e += [c * np.exp(-1j * k * (ZETA1 - 1) * x) for (k, _), c in zip(data.bound_hat, data.c_hat)]
    return np.array(e, dtype=complex)


@dataclass(frozen=True)
class ReflectionlessCoefficients:
    """x-independent pieces: the couplings of the bound-state system and the recovery weights."""
    data: SpectralData
    grid: QuadratureGrid
    resolvents: np.ndarray       # (n, N) values of (I - M)^{-1} A on nodes
    coupling: np.ndarray         # (n, n): equation l gets sum_p y_p coupling[l, p]
    recovery: np.ndarray         # (n,): F = sum_p y_p recovery[p]
    condition: float


def reflectionless_coefficients(data: SpectralData, grid: Optional[QuadratureGrid] = None,
                                cond_limit: float = 1e12) -> ReflectionlessCoefficients:
    grid = grid or QuadratureGrid.for_data(data)
    A, Ah = build_A(data, grid.nodes)
    rhs = np.array(A + Ah, dtype=complex).reshape(-1, grid.size)
    solver = FredholmSolver(m_matrix(grid), cond_limit)
    res = np.array([solver.solve(r) for r in rhs]).reshape(-1, grid.size)
    n = data.n_bound
    coupling = _pole_coefficients(data)
    poles = _cauchy_poles(data)
    for l in range(n):
        for p in range(n):
            coupling[l, p] -= _C * grid.integrate(res[p] / (grid.nodes - poles[l]))
    beta = np.array(sum(tail_coefficients(data), []), dtype=complex)
    base = np.array([-ZETA1] * len(data.bound) + [ZETA2] * len(data.bound_hat), dtype=complex)
    recovery = 3j * (base - _C * resolvent_finite_part(1.0) * beta)
    return ReflectionlessCoefficients(data, grid, res, coupling, recovery, solver.condition)


@dataclass(frozen=True)
class ReflectionlessSolution:
    x: np.ndarray
    kappa_R: np.ndarray          # (len(x), m)
    kappa_R_hat: np.ndarray      # (len(x), m_hat)
    F: np.ndarray
    q: np.ndarray
    max_imag_q: float
    right_edge_F: float
    condition: float = float("nan")


def _solve_bound_system(phases: np.ndarray, coupling: np.ndarray, rhs: np.ndarray, x: float) -> np.ndarray:
    mat = np.diag(phases) - coupling
    try:
        y = np.linalg.solve(mat, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(f"bound-state system is singular at x = {x}", x) from exc
    if not np.all(np.isfinite(y)) or np.linalg.cond(mat) > 1e14:
        raise SingularSystemError(f"bound-state system is singular at x = {x}", x)
    return y


def solve_reflectionless(data: SpectralData, x_grid, grid: Optional[QuadratureGrid] = None,
                         coeffs: Optional[ReflectionlessCoefficients] = None) -> ReflectionlessSolution:
    x = np.asarray(x_grid, dtype=float)
    m = len(data.bound)
    if data.n_bound == 0:
        z = np.zeros(x.size, dtype=complex)
        return ReflectionlessSolution(x, np.zeros((x.size, 0), complex), np.zeros((x.size, 0), complex),
                                      z, z.copy(), 0.0, 0.0)
    co = coeffs or reflectionless_coefficients(data, grid)
    ys = np.empty((x.size, data.n_bound), dtype=complex)
    ones = np.ones(data.n_bound, dtype=complex)
    for i, xi in enumerate(x):
        ys[i] = _solve_bound_system(_phases(data, xi), co.coupling, ones, xi)
    F = ys @ co.recovery
    q = recover_q(x, F, check_decay=False)
    return ReflectionlessSolution(x, ys[:, :m], ys[:, m:], F, q, float(np.max(np.abs(q.imag))),
                                  float(abs(F[-1])), co.condition)


@dataclass(frozen=True)
class SolitonParameters:
    """The constants of the one-bound-state formula q = i kappa (zeta2 - 1) a b / (b e^{th/2} + c e^{-th/2})^2."""
    kappa: float
    b: complex
    c: complex
    a: complex


def soliton_parameters(kappa: float, b1: complex, grid: Optional[QuadratureGrid] = None) -> SolitonParameters:
    kappa = float(kappa)
    grid = grid or QuadratureGrid.mapped(200, max(1.0, kappa))
    A1 = ZETA2 * kernel_a(grid.nodes, 1j * ZETA1 * kappa) - kernel_a(grid.nodes, 1j * kappa)
    g = solve_fredholm(grid, A1)
    c = -ZETA2 / (2 * (1 - ZETA2) * kappa ** 2) + _C * grid.integrate(g / (grid.nodes + 1j * ZETA2 * kappa))
    a = -3j * ZETA1 - 3 / (2 * math.pi) * resolvent_finite_part(ZETA2 - 1.0)
    return SolitonParameters(kappa, complex(b1) / kappa, complex(c), complex(a))


def closed_form_soliton(kappa: float, b1: complex, grid: Optional[QuadratureGrid] = None):
    """The one-bound-state potential as a callable x -> q(x)."""
    par = soliton_parameters(kappa, b1, grid)
    nu = 1j * par.kappa * (ZETA2 - 1)

    def q(x):
        x = np.asarray(x, dtype=float)
        half = np.exp(nu * x / 2)
        den = par.b * half + par.c / half
        if np.any(np.abs(den) < 1e-300 * np.maximum(1.0, np.abs(par.b * half))):
            raise PoleOnGridError("denominator of the soliton formula vanishes on the grid")
        return nu * par.a * par.b / den ** 2

    q.parameters = par
    return q


# ---------------------------------------------------------------------------
# sc_2 = 0


def _ray_values(f: RayFunction, t: np.ndarray) -> np.ndarray:
    if f is None:
        return np.zeros(t.size, dtype=complex)
    return np.asarray(f(t), dtype=complex)


def transform_matrix(s1: np.ndarray) -> np.ndarray:
    """Pointwise inverse of [[1/s1, 0], [1/2, 1]] as an array (..., 2, 2)."""
    s1 = np.asarray(s1, dtype=complex)
    out = np.zeros(s1.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = s1
    out[..., 1, 0] = -0.5 * s1
    out[..., 1, 1] = 1.0
    return out


@dataclass(frozen=True)
class BlockKernel:
    """x-independent pieces of the 2x2 block operator acting on (s1 psi_2*, Delta)."""
    grid: QuadratureGrid
    k11: np.ndarray
    k12: np.ndarray
    k21: np.ndarray
    k22: np.ndarray


def block_kernel(grid: QuadratureGrid) -> BlockKernel:
    t = grid.nodes[:, None]
    tau = grid.nodes[None, :]
    w = grid.weights[None, :]
    r1 = 1.0 / (tau - ZETA1 * t)
    r2 = 1.0 / (tau - ZETA2 * t)
    k11 = _C * (r1 - r2) * w
    k12 = -_C * r1 * w
    k21 = _C * ((r1 - 2 * r2) * w + pv_matrix(grid))
    k22 = _C * (r2 - r1) * w
    return BlockKernel(grid, k11, k12, k21, k22)


@dataclass(frozen=True)
class Sc2ZeroSolution(ReflectionlessSolution):
    pass


def _block_solve(bk: BlockKernel, s1: np.ndarray, rhs1: np.ndarray, rhs2: np.ndarray,
                 cond_limit: float) -> tuple[np.ndarray, float]:
    """Solve Phi = T~ h + T~ K Phi for several right-hand sides; returns (n_rhs, 2N)."""
    s1 = np.asarray(s1, dtype=complex)
    # T~ only rescales rows, so T~ K and T~ h are formed without a matrix product
    top = np.hstack([bk.k11, bk.k12])
    TK = np.vstack([s1[:, None] * top, -0.5 * s1[:, None] * top + np.hstack([bk.k21, bk.k22])])
    solver = FredholmSolver(TK, cond_limit)
    Th = np.concatenate([s1 * rhs1, rhs2 - 0.5 * s1 * rhs1], axis=1)
    sol = solver.solve(Th.T).T
    # re-substitute the first block so it is exactly proportional to s1; roundoff left in
    # it would otherwise be amplified by the first moment taken at large tau
    N = s1.size
    sol[:, :N] = s1 * (rhs1 + sol @ top.T)
    return sol, solver.condition


def solve_sc2zero(data: SpectralData, x_grid, grid: Optional[QuadratureGrid] = None,
                  cond_limit: float = 1e12) -> Sc2ZeroSolution:
    """Reconstruction when sc_2 vanishes identically and sc_1 is given on its ray."""
    if data.sc2 is not None:
        raise ValueError("solve_sc2zero requires sc2 to be identically zero")
    x = np.asarray(x_grid, dtype=float)
    grid = grid or QuadratureGrid.for_data(data)
    tau = grid.nodes
    N = grid.size
    m, n = len(data.bound), data.n_bound
    bk = block_kernel(grid)
    sc1 = _ray_values(data.sc1, tau)
    A, Ah = build_A(data, tau)
    # right-hand sides: constant part, then one per bound state
    first = [np.ones(N, complex)]
    first += [ZETA2 * kernel_a(tau, 1j * ZETA1 * k) for k in data.kappas]
    first += [-kernel_a(tau, 1j * ZETA2 * k) for k in data.kappas_hat]
    second = [np.zeros(N, complex)] + A + Ah
    rhs1, rhs2 = np.array(first), np.array(second)

    G = _pole_coefficients(data)
    poles = _cauchy_poles(data)
    # weights of s1 psi_2* in the bound-state equations
    pw = [_C * (1 / (tau + 1j * ZETA2 * k) - 1 / (tau + 1j * k)) for k in data.kappas]
    pw += [_C * (1 / (tau - 1j * ZETA1 * k) - 1 / (tau - 1j * ZETA2 * k)) for k in data.kappas_hat]
    base = np.array([-ZETA1] * m + [ZETA2] * (n - m), dtype=complex)
    beta = np.array(sum(tail_coefficients(data), []), dtype=complex)
    tail_p = -_C * (ZETA1 - 2 * ZETA2 + 1)

    ys = np.zeros((x.size, n), dtype=complex)
    F = np.empty(x.size, dtype=complex)
    cond = 0.0
    frozen = None if np.any(sc1) else _block_solve(bk, np.zeros(N, complex), rhs1, rhs2, cond_limit)
    for i, xi in enumerate(x):
        if frozen is None:
            s1 = ZETA2 * np.exp(1j * SQRT3 * tau * xi) * sc1
            sol, c_i = _block_solve(bk, s1, rhs1, rhs2, cond_limit)
        else:
            sol, c_i = frozen
        cond = max(cond, c_i)
        P, D = sol[:, :N], sol[:, N:]

        def functional(j):
            return np.array([grid.integrate(pw[l] * P[j] - _C * D[j] / (tau - poles[l])) for l in range(n)])

        if n:
            coupling = G + np.column_stack([functional(j + 1) for j in range(n)])
            y = _solve_bound_system(_phases(data, xi), coupling, 1.0 + functional(0), xi)
        else:
            y = np.zeros(0, complex)
        ys[i] = y
        coef = np.concatenate([[1.0], y])
        Pt, Dt = coef @ P, coef @ D
        mu1 = grid.integrate(tau * Pt)
        fp_P = -mu1
        beta2 = (y @ beta if n else 0.0) + tail_p * mu1
        fp_D = resolvent_finite_part(beta2)
        F[i] = 3j * ((y @ base if n else 0.0) + _C * ((ZETA1 - 1) * fp_P - fp_D))
    q = recover_q(x, F, check_decay=False)
    return Sc2ZeroSolution(x, ys[:, :m], ys[:, m:], F, q, float(np.max(np.abs(q.imag))),
                           float(abs(F[-1])), cond)


# ---------------------------------------------------------------------------
# differentiation


_CENTRAL = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_EDGE0 = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0
_EDGE1 = np.array([-3.0, -10.0, 18.0, -6.0, 1.0]) / 12.0


def derivative4(x: np.ndarray, f: np.ndarray) -> np.ndarray:
    """Fourth-order finite-difference derivative on a uniform grid."""
    x = np.asarray(x, dtype=float)
    f = np.asarray(f)
    if x.size < 5:
        raise ValueError("need at least five grid points")
    h = (x[-1] - x[0]) / (x.size - 1)
    if not np.allclose(np.diff(x), h, rtol=1e-9, atol=0):
        raise ValueError("grid must be uniform")
    d = np.empty_like(f, dtype=np.result_type(f, float))
    d[2:-2] = (_CENTRAL[0] * f[:-4] + _CENTRAL[1] * f[1:-3] + _CENTRAL[3] * f[3:-1] + _CENTRAL[4] * f[4:])
    d[0] = _EDGE0 @ f[:5]
    d[1] = _EDGE1 @ f[:5]
    d[-1] = -(_EDGE0 @ f[::-1][:5])
    d[-2] = -(_EDGE1 @ f[::-1][:5])
    return d / h


def recover_q(x, F, check_decay: bool = True, decay_tol: float = 1e-10) -> np.ndarray:
    """q = -dF/dx from samples of F(x) = int_x^inf q."""
    F = np.asarray(F)
    if check_decay and abs(F[-1]) >= decay_tol:
        raise DomainTooSmallError(f"|F| = {abs(F[-1]):.3e} at the right edge; extend the grid")
    return -derivative4(x, F)
