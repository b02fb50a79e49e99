"""Jost solutions of i y''' + q y = lambda^3 y.

v_k(lambda, x) behaves like exp(i lambda zeta_k x) at +infinity and u_k at
-infinity. Both are computed in reduced form

    psi_k(x) = v_k(x) exp(-i lambda zeta_k x),

which solves a Volterra equation whose kernel depends only on s = t - x:

    psi_k(x) = 1 - i int_x^inf K(s) q(t) psi_k(t) dt,
    K(s) = exp(i lambda zeta_k s) s_2(-i lambda s) / (i lambda)^2.

On a uniform grid the integral is a discrete correlation of the kernel samples
with q psi; endpoint corrections of Gregory type make the rule fourth order.
Picard iteration is run to a fixed point. The first and second derivatives use
the kernels obtained by lowering the s_p index, evaluated from the same
converged psi, so no numerical differentiation of v is involved.

The u family is obtained by reflection: if w(x) = u_k(lambda, -x; q) then w is
the +infinity Jost solution for the potential -q(-x) at spectral parameter
-lambda.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate, signal

from .cubicexp import SQRT3, ZETA, gen_exp_divided, gen_exp_divided_scaled, in_omega


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (last residual {residual:.3e})")
        self.residual = residual


class OutOfRegimeError(ValueError):
    """Spectral parameter outside the range where an estimate applies."""


class AdmissibilityError(ValueError):
    """Potential fails the weighted square-integrability check."""


# ---------------------------------------------------------------------------
# potentials


@dataclass(frozen=True)
class Potential:
    """Real potential q with exponential decay rate a.

    ``q`` must accept numpy arrays. ``extent`` bounds the region where q is
    sampled for norms; beyond it q is treated as zero.
    """

    q: Callable[[np.ndarray], np.ndarray]
    decay_rate: float
    name: str = "custom"
    extent: float = 40.0
    params: dict = field(default_factory=dict, compare=False)
    n_samples: int = 40001

    def __post_init__(self):
        if not self.decay_rate > 0:
            raise AdmissibilityError("decay rate must be positive")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.asarray(self.q(x), dtype=float)
        return np.where(np.abs(x) <= self.extent, out, 0.0)

    @cached_property
    def _samples(self) -> tuple[np.ndarray, np.ndarray]:
        x = np.linspace(-self.extent, self.extent, self.n_samples)
        vals = self(x)
        if np.any(~np.isfinite(vals)):
            raise AdmissibilityError("potential is not finite on its sampling grid")
        return x, vals

    @cached_property
    def q1(self) -> float:
        x, v = self._samples
        return float(integrate.simpson(np.abs(v), x=x))

    @cached_property
    def q2(self) -> float:
        x, v = self._samples
        return float(math.sqrt(integrate.simpson(v * v, x=x)))

    @cached_property
    def _sigma_table(self) -> np.ndarray:
        x, v = self._samples
        return integrate.cumulative_simpson(np.abs(v), x=x, initial=0.0)

    def sigma(self, t):
        """Cumulative absolute mass from -infinity to t."""
        x, _ = self._samples
        return np.interp(t, x, self._sigma_table, left=0.0, right=self._sigma_table[-1])

    @cached_property
    def is_zero(self) -> bool:
        return bool(np.all(self._samples[1] == 0.0))

    def admissibility(self) -> float:
        """Weighted norm int q^2 exp(2 a |x|) dx; raises if the integrand has not decayed."""
        x, v = self._samples
        with np.errstate(divide="ignore", over="ignore"):
            w = np.exp(2 * np.log(np.abs(v)) + 2 * self.decay_rate * np.abs(x))
        peak = float(np.max(w)) if w.size else 0.0
        edge = float(max(w[0], w[-1]))
        if not np.all(np.isfinite(w)) or (peak > 0 and edge > 1e-10 * peak):
            raise AdmissibilityError(
                f"q^2 exp(2a|x|) has not decayed at |x| = {self.extent} "
                f"(edge/peak = {edge / peak if peak else float('inf'):.3e})"
            )
        return float(integrate.simpson(w, x=x))

    def x_cut(self, lam_abs: float = 0.0, eps: float = 1e-14) -> float:
        """Smallest X with |q(x)| exp(3 |lambda| |x|) < eps whenever |x| >= X."""
        x, v = self._samples
        r = np.abs(x)
        with np.errstate(divide="ignore"):
            env = np.log(np.abs(v)) + 3 * lam_abs * r
        eps = math.log(eps)
        order = np.argsort(-r)
        tail_max = np.maximum.accumulate(env[order])
        bad = tail_max >= eps
        if not np.any(bad):
            return 1.0
        # first position (from outside in) where the envelope reaches eps
        j = int(np.argmax(bad))
        return float(max(r[order][j], 1.0))

    def reflected(self) -> "Potential":
        """The potential -q(-x), which carries u-solutions onto v-solutions."""
        base = self.q
        return Potential(
            q=lambda x: -np.asarray(base(-np.asarray(x, dtype=float)), dtype=float),
            decay_rate=self.decay_rate,
            name=f"reflected({self.name})",
            extent=self.extent,
            params=self.params,
            n_samples=self.n_samples,
        )

    @cached_property
    def reflection(self) -> "Potential":
        if self.is_zero:
            return zero_potential(self.decay_rate)
        return self.reflected()

    def integral_from(self, x) -> np.ndarray:
        """int_x^inf q(t) dt by adaptive quadrature."""
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        out = []
        for x0 in xs:
            if x0 >= self.extent:
                out.append(0.0)
                continue
            lo = max(x0, -self.extent)
            pts = [p for p in (-1.0, 0.0, 1.0) if lo < p < self.extent]
            val, _ = integrate.quad(
                lambda t: float(self(np.array(t))), lo, self.extent,
                points=pts or None, limit=400, epsabs=1e-15, epsrel=1e-13,
            )
            out.append(val)
        out = np.array(out)
        return out if np.ndim(x) else out[0]


def zero_potential(decay_rate: float = 3.0) -> Potential:
    return Potential(q=lambda x: np.zeros_like(np.asarray(x, dtype=float)), decay_rate=decay_rate, name="zero")


# ---------------------------------------------------------------------------
# solver configuration and results


@dataclass(frozen=True)
class JostConfig:
    n_points: int = 2000
    tol: float = 1e-12
    min_iter: int = 4
    max_iter: int = 60
    tail_eps: float = 1e-14
    fft_kernel_limit: float = 1e3


@dataclass(frozen=True)
class JostFrame:
    k: int
    lam: complex
    x: float
    value: complex
    d1: complex
    d2: complex
    reduced: complex
    side: str  # "+inf" for v, "-inf" for u

    @property
    def triple(self) -> np.ndarray:
        return np.array([self.value, self.d1, self.d2])


# Gregory lower-end weights for a fourth-order rule on uniform nodes
_GREGORY = np.array([3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0])
_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


def reduced_kernels(lam: complex, k: int, s: np.ndarray) -> np.ndarray:
    """Kernels for m = 0, 1, 2 as functions of s = t - x >= 0.

    K_m(s) = exp(i lam zeta_k s) * d^m/dx^m [ s_2(i lam (x - t)) / (i lam)^2 ].
    Returns an array of shape (3,) + s.shape; finite at lam = 0.
    """
    s = np.asarray(s, dtype=float)
    z = -1j * lam * s
    d = gen_exp_divided_scaled(z, 1j * lam * ZETA[k] * s)
    return np.stack([s * s * d[2], -s * d[1], d[0]])


def volterra_kernel(lam: complex, x, t) -> np.ndarray:
    """K_1(lam, x, t) = s_2(i lam (x - t)) / (i lam)^2, with value (t - x)^2 / 2 at lam = 0."""
    s = np.asarray(t, dtype=float) - np.asarray(x, dtype=float)
    d = gen_exp_divided(-1j * lam * s)
    return s * s * d[2]


def kernel_bound(lam: complex, x, t) -> np.ndarray:
    """d(lam (t - x)) / |lam|^2 with d(alpha + i beta) = exp|beta| cosh(alpha sqrt3 / 2)."""
    s = np.asarray(t, dtype=float) - np.asarray(x, dtype=float)
    mu = lam * s
    return np.exp(np.abs(mu.imag)) * np.cosh(mu.real * SQRT3 / 2) / abs(lam) ** 2


def truncation_bound(pot: Optional[Potential], lam: complex, n: int, span: float = 1.0,
                     sigma: Optional[float] = None) -> float:
    """Majorant for the n-th iterated kernel over an interval of length ``span``.

    lam != 0:  d(lam span) / |lam|^{2n} * sigma^{n-1} / (n-1)!
    lam == 0:  (span^2 / 2)^n * sigma^{n-1} / (n^{2n} (n-1)!)
    ``sigma`` defaults to the total absolute mass of the potential.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if sigma is None:
        sigma = pot.q1 if pot is not None else 0.0
    lam = complex(lam)
    log_fact = math.lgamma(n)
    if sigma == 0.0:
        power = 0.0 if n == 1 else -math.inf
    else:
        power = (n - 1) * math.log(sigma)
    if lam == 0:
        if span == 0:
            return 0.0
        log_b = n * math.log(span * span / 2) + power - 2 * n * math.log(n) - log_fact
    else:
        mu = lam * span
        # log of e^{|Im mu|} cosh(sqrt3 Re mu / 2), kept in log form to avoid overflow
        a = abs(mu.real) * SQRT3 / 2
        log_d = abs(mu.imag) + a + math.log1p(math.exp(-2 * a)) - math.log(2)
        log_b = log_d - 2 * n * math.log(abs(lam)) + power - log_fact
    if log_b > 700:
        return math.inf
    return math.exp(log_b) if log_b > -math.inf else 0.0


def iteration_cap(pot: Potential, lam: complex, span: float, cfg: JostConfig) -> int:
    for n in range(1, cfg.max_iter + 1):
        if truncation_bound(pot, lam, n, span) < 1e-15:
            return int(min(max(n, cfg.min_iter), cfg.max_iter))
    return cfg.max_iter


def _lagrange_rows(theta: np.ndarray, offset: np.ndarray) -> np.ndarray:
    """Cubic Lagrange basis on nodes offset..offset+3 (panel units) evaluated at theta."""
    nodes = offset[:, None] + np.arange(4)[None, :]
    out = np.ones((theta.size, 4))
    for m in range(4):
        for r in range(4):
            if r != m:
                out[:, m] *= (theta - nodes[:, r]) / (nodes[:, m] - nodes[:, r])
    return out


@dataclass
class _Grid:
    t: np.ndarray
    h: float
    q: np.ndarray


def _build_grid(pot: Potential, lam: complex, xs: np.ndarray, cfg: JostConfig) -> _Grid:
    top = pot.x_cut(abs(lam), cfg.tail_eps)
    h = 2 * top / (cfg.n_points - 1)
    top = max(top, float(np.max(xs)) + 4 * h)
    lo = min(float(np.min(xs)) - 4 * h, top - 8 * h)
    m = int(math.ceil((top - lo) / h)) + 1
    t = top - h * np.arange(m)[::-1]
    return _Grid(t=t, h=h, q=pot(t))


def _correlate(kern: np.ndarray, f: np.ndarray, use_fft: bool) -> np.ndarray:
    """c_i = sum_{n>=0} kern[n] f[i+n]."""
    m = f.size
    if use_fft:
        full = signal.fftconvolve(f, kern[::-1], mode="full")
    else:
        full = np.convolve(f, kern[::-1], mode="full")
    return full[m - 1: 2 * m - 1]


def _integrate_grid(kern: np.ndarray, f: np.ndarray, h: float, use_fft: bool) -> np.ndarray:
    """Fourth-order approximation of int_{t_i}^{top} K(t - t_i) f(t) dt at every node."""
    out = _correlate(kern, f, use_fft)
    m = f.size
    for j, w in enumerate(_GREGORY):
        corr = np.zeros(m, dtype=complex)
        corr[: m - j] = (w - 1.0) * kern[j] * f[j:]
        out = out + corr
    return h * out


def _solve_reduced_v(pot: Potential, lam: complex, k: int, xs: np.ndarray,
                     cfg: JostConfig) -> tuple[np.ndarray, int, float]:
    """Reduced v-derivatives R[m, i] = v_k^{(m)}(xs_i) exp(-i lam zeta_k xs_i)."""
    lam = complex(lam)
    free = (1j * lam * ZETA[k]) ** np.arange(3)
    out = np.empty((3, xs.size), dtype=complex)
    out[:] = free[:, None]
    if pot.is_zero:
        return out, 0, 0.0

    g = _build_grid(pot, lam, xs, cfg)
    m = g.t.size
    s = g.h * np.arange(m)
    kern = reduced_kernels(lam, k, s)
    use_fft = bool(np.max(np.abs(kern[0])) <= cfg.fft_kernel_limit)

    cap = iteration_cap(pot, lam, g.t[-1] - g.t[0], cfg)
    psi = np.ones(m, dtype=complex)
    resid = np.inf
    n_iter = 0
    for n_iter in range(1, cap + 1):
        new = 1.0 - 1j * _integrate_grid(kern[0], g.q * psi, g.h, use_fft)
        resid = float(np.max(np.abs(new - psi)) / max(1.0, float(np.max(np.abs(new)))))
        psi = new
        if resid <= cfg.tol and n_iter >= cfg.min_iter:
            break
    else:
        raise ConvergenceError(
            f"Picard iteration for lambda={lam:.6g}, k={k} did not converge in {cap} steps", resid
        )

    f = g.q * psi
    # Nystrom evaluation at requested points: partial panel + Gregory tail
    for idx, x in enumerate(xs):
        i = int(np.clip(np.floor((x - g.t[0]) / g.h), 0, m - 2))
        left = g.t[i]
        theta0 = (x - left) / g.h
        if x >= g.t[-1]:
            continue
        # partial panel [x, t_{i+1}] via Gauss-Legendre, f by cubic interpolation
        off = np.clip(i - 1, 0, m - 4) - i
        u = theta0 + (1.0 - theta0) * (_GL_X + 1) / 2
        basis = _lagrange_rows(u, np.full(u.size, float(off)))
        fvals = basis @ f[i + off: i + off + 4]
        kp = reduced_kernels(lam, k, (u - theta0) * g.h)
        wts = _GL_W * (1.0 - theta0) * g.h / 2
        part = kp @ (wts * fvals)
        # tail [t_{i+1}, top]
        tail_nodes = g.t[i + 1:]
        ktail = reduced_kernels(lam, k, tail_nodes - x)
        w = np.ones(tail_nodes.size)
        n_c = min(3, tail_nodes.size)
        w[:n_c] = _GREGORY[:n_c]
        tail = ktail @ (w * f[i + 1:]) * g.h
        out[:, idx] = free - 1j * (part + tail)
    return out, n_iter, resid


def _validate_k(k: int):
    if k not in (0, 1, 2):
        raise IndexError("wave index k must be 0, 1 or 2")


def reduced_v(pot: Potential, lam: complex, k: int, xs, cfg: Optional[JostConfig] = None) -> np.ndarray:
    """Array (3, n): e^{-i lam zeta_k x} d^m v_k / dx^m at each x."""
    _validate_k(k)
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    r, _, _ = _solve_reduced_v(pot, lam, k, xs, cfg or JostConfig())
    return r


def reduced_u(pot: Potential, lam: complex, k: int, xs, cfg: Optional[JostConfig] = None) -> np.ndarray:
    """Array (3, n): e^{-i lam zeta_k x} d^m u_k / dx^m at each x, via reflection."""
    _validate_k(k)
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    r, _, _ = _solve_reduced_v(pot.reflection, -complex(lam), k, -xs, cfg or JostConfig())
    r[1] = -r[1]
    return r


def _frames(r: np.ndarray, lam: complex, k: int, xs: np.ndarray, side: str) -> list[JostFrame]:
    phase = np.exp(1j * lam * ZETA[k] * xs)
    vals = r * phase[None, :]
    return [
        JostFrame(k, complex(lam), float(x), complex(vals[0, i]), complex(vals[1, i]),
                  complex(vals[2, i]), complex(r[0, i]), side)
        for i, x in enumerate(xs)
    ]


def solve_v(pot: Potential, lam: complex, k: int, grid: Sequence[float],
            cfg: Optional[JostConfig] = None) -> list[JostFrame]:
    xs = np.atleast_1d(np.asarray(grid, dtype=float))
    r = reduced_v(pot, lam, k, xs, cfg)
    return _frames(r, complex(lam), k, xs, "+inf")


def solve_u(pot: Potential, lam: complex, k: int, grid: Sequence[float],
            cfg: Optional[JostConfig] = None) -> list[JostFrame]:
    xs = np.atleast_1d(np.asarray(grid, dtype=float))
    r = reduced_u(pot, lam, k, xs, cfg)
    return _frames(r, complex(lam), k, xs, "-inf")


def jost_matrix(pot: Potential, lam: complex, x: float, side: str = "+inf",
                cfg: Optional[JostConfig] = None) -> np.ndarray:
    """3x3 matrix with columns (y_k, y_k', y_k'') for k = 0, 1, 2 at one point."""
    solver = reduced_v if side == "+inf" else reduced_u
    cols = []
    for k in range(3):
        r = solver(pot, lam, k, [x], cfg)[:, 0]
        cols.append(r * np.exp(1j * lam * ZETA[k] * x))
    return np.array(cols).T


# ---------------------------------------------------------------------------
# large-lambda asymptotics


@dataclass(frozen=True)
class AsymptoticReport:
    lam: complex
    x: float
    psi0: complex
    leading: complex
    remainder: complex
    bound: float
    r: float
    delta: float

    @property
    def within_bound(self) -> bool:
        return abs(self.remainder) <= self.bound


def asymptotic_decomposition(pot: Potential, lam: complex, x: float,
                             cfg: Optional[JostConfig] = None) -> AsymptoticReport:
    """Split psi_0 - 1 into the 1/lambda^2 moment term and a remainder, with its a-priori bound.

    The bound is r^2 / (1 - r) + q2 |lam|^{-2} delta where r = q1 / |lam|^2 and
    delta = (beta sqrt3 - |alpha|)^{-1/2}.
    """
    lam = complex(lam)
    if not in_omega(lam, 0):
        raise OutOfRegimeError(f"lambda = {lam} is not interior to the upper sector")
    r = pot.q1 / abs(lam) ** 2
    if r >= 1:
        raise OutOfRegimeError(f"r(lambda) = {r:.3g} >= 1; |lambda| too small")
    delta = (lam.imag * SQRT3 - abs(lam.real)) ** -0.5
    psi0 = complex(reduced_v(pot, lam, 0, [x], cfg)[0, 0])
    leading = 1j / (3 * lam * lam) * complex(pot.integral_from(x))
    remainder = psi0 - 1 - leading
    bound = r * r / (1 - r) + pot.q2 * delta / abs(lam) ** 2
    return AsymptoticReport(lam, float(x), psi0, leading, remainder, bound, r, delta)


def moment_estimate(pot: Potential, omega: float, x: float, cfg: Optional[JostConfig] = None) -> complex:
    """3 i omega^2 (psi_0(i omega, x) - 1), which tends to int_x^inf q as omega grows."""
    psi0 = complex(reduced_v(pot, 1j * omega, 0, [x], cfg)[0, 0])
    return 3j * omega**2 * (psi0 - 1)
