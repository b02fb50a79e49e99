"""Cube roots of unity, generalized exponentials and the free third-order problem.

The three generalized exponentials

    s_p(z) = (1/3) * sum_k zeta_k^{-p} exp(zeta_k z),   p = 0, 1, 2

form the fundamental system of y''' = y normalised by s_p^{(j)}(0) = delta_{pj}.
They play the role that cosh/sinh play for second-order operators.

Evaluation
----------
Near the origin the direct three-term sum loses relative accuracy in s_1 and
s_2 (they vanish like z and z^2/2). Inside ``TAYLOR_RADIUS`` the power series
is summed instead; outside, the exponential sum is used. Both branches agree to
a few ulps at the switch-over radius.

Sector geometry
---------------
The lines through 0 and zeta_k cut the plane into six open 60-degree sectors.
Each of them lies inside exactly one of the 120-degree holomorphy domains
Omega_k (rotated copies of the upper wedge around i) or their reflections
Omega_k^- = -Omega_k. ``classify_sector`` returns that
label, or an explicit ray label when lambda sits on one of the dividing lines.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import integrate

SQRT3 = math.sqrt(3.0)
ZETA = np.array([1.0 + 0.0j, complex(-0.5, SQRT3 / 2), complex(-0.5, -SQRT3 / 2)])
ZETA0, ZETA1, ZETA2 = (complex(z) for z in ZETA)

Z_MAX = 200.0
TAYLOR_RADIUS = 2.0
_TAYLOR_TERMS = 48


class RangeError(ValueError):
    """Argument outside the overflow guard."""


class DegenerateInputError(ValueError):
    """Input at a point where the requested object is undefined."""


@dataclass(frozen=True)
class CubeRoots:
    zeta0: complex = ZETA0
    zeta1: complex = ZETA1
    zeta2: complex = ZETA2

    def as_array(self) -> np.ndarray:
        return np.array([self.zeta0, self.zeta1, self.zeta2])


@dataclass(frozen=True)
class GenExpTriple:
    z: complex
    s0: complex
    s1: complex
    s2: complex

    def __getitem__(self, p: int) -> complex:
        return (self.s0, self.s1, self.s2)[p]

    def as_tuple(self) -> tuple[complex, complex, complex]:
        return (self.s0, self.s1, self.s2)


def _taylor(z: np.ndarray, shift: tuple[int, int, int] = (0, 0, 0)) -> np.ndarray:
    """Series sums S_p = sum_m z^{3m} / (3m + p + shift_p)! * z^{p - shift_p}.

    With shift = (0,0,0) this is s_p(z); with shift = (0,1,2) it is s_p(z)/z^p.
    """
    z = np.asarray(z, dtype=complex)
    out = np.zeros((3,) + z.shape, dtype=complex)
    z3 = z**3
    for p in range(3):
        lead = z ** (p - shift[p]) / math.factorial(p)
        term = np.ones_like(z)
        acc = np.zeros_like(z)
        for m in range(_TAYLOR_TERMS // 3):
            acc = acc + term
            n = 3 * m + p
            term = term * z3 / ((n + 1) * (n + 2) * (n + 3))
        out[p] = lead * acc
    return out


def _direct(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    e = np.exp(np.multiply.outer(ZETA, z))
    out = np.empty((3,) + z.shape, dtype=complex)
    for p in range(3):
        w = ZETA ** (-p) / 3.0
        out[p] = np.tensordot(w, e, axes=1)
    return out


def gen_exp_array(z) -> np.ndarray:
    """Vectorised (s0, s1, s2); the result has shape (3,) + shape(z)."""
    z = np.asarray(z, dtype=complex)
    r = np.abs(z)
    if np.any(r > Z_MAX):
        raise RangeError(f"|z| = {r.max():.6g} exceeds the overflow guard {Z_MAX}")
    out = np.empty((3,) + z.shape, dtype=complex)
    small = r <= TAYLOR_RADIUS
    if np.any(small):
        out[:, small] = _taylor(z[small])
    if np.any(~small):
        out[:, ~small] = _direct(z[~small])
    return out


def gen_exp_divided(z) -> np.ndarray:
    """(s0(z), s1(z)/z, s2(z)/z^2), finite at z = 0 (values 1, 1, 1/2)."""
    z = np.asarray(z, dtype=complex)
    r = np.abs(z)
    if np.any(r > Z_MAX):
        raise RangeError(f"|z| = {r.max():.6g} exceeds the overflow guard {Z_MAX}")
    out = np.empty((3,) + z.shape, dtype=complex)
    small = r <= TAYLOR_RADIUS
    if np.any(small):
        out[:, small] = _taylor(z[small], shift=(0, 1, 2))
    if np.any(~small):
        zz = z[~small]
        d = _direct(zz)
        out[0, ~small] = d[0]
        out[1, ~small] = d[1] / zz
        out[2, ~small] = d[2] / zz**2
    return out


def gen_exp_divided_scaled(z, shift) -> np.ndarray:
    """exp(shift) * gen_exp_divided(z), with the factor folded into each exponential.

    The individual s_p(z) may overflow while the product stays moderate, as
    happens for Jost kernels deep inside a sector.
    """
    z = np.asarray(z, dtype=complex)
    shift = np.broadcast_to(np.asarray(shift, dtype=complex), z.shape)
    expo = np.multiply.outer(ZETA, z) + shift
    if np.any(expo.real > 700):
        raise RangeError(f"scaled exponent {expo.real.max():.6g} overflows")
    out = np.empty((3,) + z.shape, dtype=complex)
    small = np.abs(z) <= TAYLOR_RADIUS
    if np.any(small):
        out[:, small] = _taylor(z[small], shift=(0, 1, 2)) * np.exp(shift[small])
    if np.any(~small):
        zz = z[~small]
        e = np.exp(expo[:, ~small])
        for p in range(3):
            out[p, ~small] = np.tensordot(ZETA ** (-p) / 3.0, e, axes=1) / zz**p
    return out


def gen_exp(z: complex) -> GenExpTriple:
    z = complex(z)
    s = gen_exp_array(np.array(z))
    return GenExpTriple(z, complex(s[0]), complex(s[1]), complex(s[2]))


def gen_exp_shifted(p: int, k: int, z: complex) -> complex:
    """Euler recombination s0 + zeta_k s1 + zeta_k^2 s2, which equals exp(zeta_k z).

    ``p`` is validated but does not enter the result.
    """
    if p not in (0, 1, 2) or k not in (0, 1, 2):
        raise IndexError("indices must be 0, 1 or 2")
    s = gen_exp(z)
    zk = ZETA[k]
    return complex(s.s0 + zk * s.s1 + zk * zk * s.s2)


def _rel(lhs, rhs, *scale) -> float:
    lhs = np.asarray(lhs)
    rhs = np.asarray(rhs)
    ref = np.abs(lhs) + np.abs(rhs)
    for s in scale:
        ref = ref + np.abs(np.asarray(s))
    ref = np.maximum(ref, 1.0)
    return float(np.max(np.abs(lhs - rhs) / ref))


def _cauchy_derivative(z: complex, radius: float = 0.5, nodes: int = 48) -> np.ndarray:
    theta = 2 * np.pi * np.arange(nodes) / nodes
    circle = radius * np.exp(1j * theta)
    vals = gen_exp_array(z + circle)
    return (vals * np.exp(-1j * theta)).mean(axis=1) / radius


def taylor_reference(z: complex) -> np.ndarray:
    """Power-series values summed with math.fsum on real and imaginary parts."""
    z = complex(z)
    out = []
    for p in range(3):
        terms = []
        n = p
        term = z**p / math.factorial(p)
        while True:
            terms.append(term)
            term = term * z**3 / ((n + 1) * (n + 2) * (n + 3))
            n += 3
            if abs(term) < 1e-18 * max(1.0, abs(terms[0])) and n > 20:
                break
        out.append(complex(math.fsum(t.real for t in terms), math.fsum(t.imag for t in terms)))
    return np.array(out)


IDENTITY_FAMILIES = (
    "derivative_shift",
    "conjugation",
    "rotation",
    "euler",
    "main_identity",
    "addition",
    "product",
    "squaring",
    "reflection",
    "taylor",
)


def identity_residuals(z: complex, w: complex) -> dict[str, float]:
    """Relative residuals of the generalized-exponential algebra at (z, w).

    Each entry is max |lhs - rhs| / max(1, |lhs| + |rhs| + |terms|) over the
    members of the family. The Taylor family compares against a compensated
    series sum at z when |z| <= 1 and at z / |z| otherwise.
    """
    z = complex(z)
    w = complex(w)
    if abs(z) > 20 or abs(w) > 20:
        raise RangeError("identity checks are defined for |z|, |w| <= 20")
    s = gen_exp_array(np.array(z))
    sw = gen_exp_array(np.array(w))
    res: dict[str, float] = {}

    # Cauchy-integral derivative: accuracy limited by max|s| on the circle
    ds = _cauchy_derivative(z)
    scale = np.abs(gen_exp_array(z + 0.5 * np.exp(2j * np.pi * np.arange(8) / 8))).max()
    res["derivative_shift"] = max(
        abs(ds[p] - s[(p + 2) % 3]) / max(1.0, scale) for p in range(3)
    )

    sc = gen_exp_array(np.array(z.conjugate()))
    res["conjugation"] = _rel(np.conj(s), sc)

    sr = gen_exp_array(np.array(z * ZETA1))
    res["rotation"] = _rel(sr, ZETA1 ** np.arange(3) * s)

    euler = [s[0] + ZETA[k] * s[1] + ZETA[k] ** 2 * s[2] for k in range(3)]
    res["euler"] = max(_rel(euler[k], np.exp(ZETA[k] * z), s) for k in range(3))

    s0, s1, s2 = s
    main = s0**3 + s1**3 + s2**3 - 3 * s0 * s1 * s2
    res["main_identity"] = _rel(main, 1.0, s0**3, s1**3, s2**3, 3 * s0 * s1 * s2)

    szw = gen_exp_array(np.array(z + w))
    add = []
    for p in range(3):
        terms = [s[a] * sw[(p - a) % 3] for a in range(3)]
        add.append(_rel(szw[p], sum(terms), *terms))
    res["addition"] = max(add)

    # 3 s_a(z) s_b(w) = sum_j zeta_j^{-b} s_{a+b}(z + zeta_j w)
    shifted = gen_exp_array(z + ZETA * w)
    prod = []
    for a in range(3):
        for b in range(3):
            if (a, b) not in ((0, 0), (0, 2), (1, 0), (2, 2), (2, 0), (1, 1)):
                continue
            terms = [ZETA[j] ** (-b) * shifted[(a + b) % 3, j] for j in range(3)]
            prod.append(_rel(3 * s[a] * sw[b], sum(terms), *terms))
    res["product"] = max(prod)

    s2z = gen_exp_array(np.array(2 * z))
    smz = gen_exp_array(np.array(-z))
    sq = [
        _rel(3 * s0**2, s2z[0] + 2 * smz[0], s2z[0], 2 * smz[0]),
        _rel(3 * s1**2, s2z[2] + 2 * smz[2], s2z[2], 2 * smz[2]),
        _rel(3 * s2**2, s2z[1] + 2 * smz[1], s2z[1], 2 * smz[1]),
    ]
    res["squaring"] = max(sq)

    refl = [
        _rel(s0**2 - s1 * s2, smz[0], s0**2, s1 * s2),
        _rel(s1**2 - s0 * s2, smz[2], s1**2, s0 * s2),
        _rel(s2**2 - s0 * s1, smz[1], s2**2, s0 * s1),
    ]
    res["reflection"] = max(refl)

    zt = z if abs(z) <= 1 else z / abs(z)
    st = gen_exp_array(np.array(zt))
    ref = taylor_reference(zt)
    # relative to each component, so the z^2/2 leading behaviour of s2 is probed
    res["taylor"] = float(
        max(abs(st[p] - ref[p]) / max(abs(ref[p]), 1e-300) if ref[p] != 0 else abs(st[p]) for p in range(3))
    )
    return res


# ---------------------------------------------------------------------------
# sector geometry

RAY_LABELS = ("l0", "hat_l2", "l1", "hat_l0", "l2", "hat_l1")
SECTOR_LABELS = ("Omega2-", "Omega0", "Omega1-", "Omega2", "Omega0-", "Omega1")


@dataclass(frozen=True)
class SectorLabel:
    label: str
    sector: str
    on_ray: bool


def classify_sector(lam: complex, angle_tol: float = 1e-12) -> SectorLabel:
    """Label the 60-degree sector containing lam, or the dividing ray it lies on.

    ``label`` is the exact answer (a ray label for points on a dividing line);
    ``sector`` always names a sector, using the half-open convention that a ray
    belongs to the sector counter-clockwise from it.
    """
    lam = complex(lam)
    if lam == 0:
        raise DegenerateInputError("the sector of lambda = 0 is undefined")
    theta = cmath.phase(lam) % (2 * math.pi)
    pos = theta / (math.pi / 3)
    j = int(round(pos))
    if abs(pos - j) * (math.pi / 3) < angle_tol:
        j %= 6
        return SectorLabel(RAY_LABELS[j], SECTOR_LABELS[j], True)
    idx = int(math.floor(pos)) % 6
    return SectorLabel(SECTOR_LABELS[idx], SECTOR_LABELS[idx], False)


def in_omega(lam: complex, k: int, mirrored: bool = False) -> bool:
    """Membership in the open 120-degree domain Omega_k (or Omega_k^- if mirrored).

    Omega_0 is alpha < beta*sqrt(3), -alpha < beta*sqrt(3); Omega_k is obtained by
    multiplying by zeta_k^{-1}, so lam is in Omega_k iff lam*zeta_k is in Omega_0.
    """
    lam = complex(lam)
    if mirrored:
        lam = -lam
    mu = lam * ZETA[k]
    a, b = mu.real, mu.imag
    return a < b * SQRT3 and -a < b * SQRT3


# ---------------------------------------------------------------------------
# free Cauchy problem


@dataclass(frozen=True)
class FreeCauchyProblem:
    y0: complex
    y1: complex
    y2: complex
    lam: complex
    f: Optional[Callable[[float], complex]] = None


def _free_kernels(lam: complex, x) -> np.ndarray:
    """(s0(i lam x), s1(i lam x)/(i lam), s2(i lam x)/(i lam)^2) with the lam -> 0 limits."""
    x = np.asarray(x, dtype=float)
    d = gen_exp_divided(1j * lam * x)
    return np.stack([d[0], x * d[1], x * x * d[2]])


def free_solution(prob: FreeCauchyProblem, x: float, quad_opts: Optional[dict] = None) -> complex:
    lam = complex(prob.lam)
    k = _free_kernels(lam, np.array(float(x)))
    y = prob.y0 * k[0] + prob.y1 * k[1] + prob.y2 * k[2]
    if prob.f is not None and x != 0:
        def integrand(t):
            return complex(_free_kernels(lam, np.array(x - t))[2]) * prob.f(t)

        opts = {"epsabs": 1e-13, "epsrel": 1e-12, "limit": 200}
        opts.update(quad_opts or {})
        try:
            val, _ = integrate.quad(integrand, 0.0, float(x), complex_func=True, **opts)
        except Exception as exc:  # pragma: no cover - scipy raises rarely
            raise ArithmeticError(f"forcing quadrature failed: {exc}") from exc
        y = y - 1j * val
    return complex(y)
