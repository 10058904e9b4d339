"""Special functions for orientational expansions.

Associated Legendre functions, complex spherical harmonics, Wigner d/D
matrices and Clebsch-Gordan coefficients. The Condon-Shortley phase is used
everywhere. Angular-momentum matrices are indexed with descending projection
(row 0 is m = j, the last row is m = -j).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np


@dataclass(frozen=True, order=True)
class HalfInteger:
    """Non-negative-or-signed half-integer stored as twice its value."""

    twice: int

    def __post_init__(self):
        if not isinstance(self.twice, (int, np.integer)):
            raise TypeError(f"twice must be an integer, got {self.twice!r}")
        object.__setattr__(self, "twice", int(self.twice))

    @classmethod
    def of(cls, value) -> "HalfInteger":
        """Coerce ``value`` (int, float, Fraction, '3/2', HalfInteger) exactly."""
        if isinstance(value, HalfInteger):
            return value
        if isinstance(value, str):
            value = Fraction(value.strip())
        if isinstance(value, (int, np.integer)):
            return cls(2 * int(value))
        if isinstance(value, float):
            doubled = 2.0 * value
            if not math.isfinite(doubled) or doubled != round(doubled):
                raise ValueError(f"{value!r} is not a half-integer")
            return cls(int(round(doubled)))
        if isinstance(value, Fraction):
            doubled = 2 * value
            if doubled.denominator != 1:
                raise ValueError(f"{value} is not a half-integer")
            return cls(int(doubled))
        raise TypeError(f"cannot interpret {value!r} as a half-integer")

    @property
    def value(self) -> float:
        return self.twice / 2

    @property
    def fraction(self) -> Fraction:
        return Fraction(self.twice, 2)

    @property
    def is_integer(self) -> bool:
        return self.twice % 2 == 0

    def projections(self) -> list["HalfInteger"]:
        """All m = j, j-1, ..., -j (descending)."""
        if self.twice < 0:
            raise ValueError("projections need j >= 0")
        return [HalfInteger(t) for t in range(self.twice, -self.twice - 1, -2)]

    def __float__(self):
        return self.value

    def __str__(self):
        return str(self.twice // 2) if self.is_integer else f"{self.twice}/2"


def _twice(value) -> int:
    return HalfInteger.of(value).twice


def _check_projection(tj: int, tm: int) -> None:
    if tj < 0:
        raise ValueError("angular momentum must be non-negative")
    if abs(tm) > tj or (tj - tm) % 2:
        raise ValueError(f"invalid projection m={tm}/2 for j={tj}/2")


# ---------------------------------------------------------------------------
# Legendre functions and spherical harmonics


def assoc_legendre(l: int, m: int, x):
    """Associated Legendre function P_l^m(x) with the Condon-Shortley phase.

    Evaluated by upward recurrence in l starting from P_m^m. ``x`` may be a
    scalar or an array.
    """
    if m < 0 or m > l:
        raise ValueError(f"need 0 <= m <= l, got l={l}, m={m}")
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1.0):
        raise ValueError("assoc_legendre: |x| > 1")
    somx2 = np.sqrt(np.clip(1.0 - x * x, 0.0, None))
    pmm = np.ones_like(x)
    fact = 1.0
    for _ in range(m):
        pmm = -pmm * fact * somx2
        fact += 2.0
    if l == m:
        return pmm if pmm.ndim else float(pmm)
    pmmp1 = x * (2 * m + 1) * pmm
    if l == m + 1:
        return pmmp1 if pmmp1.ndim else float(pmmp1)
    pll = pmmp1
    for ll in range(m + 2, l + 1):
        pll = ((2 * ll - 1) * x * pmmp1 - (ll + m - 1) * pmm) / (ll - m)
        pmm, pmmp1 = pmmp1, pll
    return pll if pll.ndim else float(pll)


def _ylm_norm(l: int, m: int) -> float:
    # m >= 0
    return math.sqrt((2 * l + 1) / (4 * math.pi) * math.factorial(l - m) / math.factorial(l + m))


def spherical_harmonic(l: int, m: int, theta, phi):
    """Orthonormal complex spherical harmonic Y_lm(theta, phi)."""
    if l < 0 or abs(m) > l:
        raise IndexError(f"invalid (l, m) = ({l}, {m})")
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    am = abs(m)
    y = _ylm_norm(l, am) * assoc_legendre(l, am, np.cos(theta)) * np.exp(1j * am * phi)
    if m < 0:
        y = (-1) ** am * np.conj(y)
    return y if np.ndim(y) else complex(y)


def lm_index(l: int, m: int) -> int:
    """Flat position of (l, m) in arrays ordered l = 0, 1, ... and m = -l..l."""
    return l * l + l + m


def sph_harm_table(L: int, theta, phi) -> np.ndarray:
    """All Y_lm for l <= L at the given points, shape (npoints, (L+1)**2)."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    out = np.empty(theta.shape + ((L + 1) ** 2,), dtype=complex)
    ct = np.cos(theta)
    for m in range(L + 1):
        eimp = np.exp(1j * m * phi)
        for l in range(m, L + 1):
            y = _ylm_norm(l, m) * assoc_legendre(l, m, ct) * eimp
            out[..., lm_index(l, m)] = y
            if m:
                out[..., lm_index(l, -m)] = (-1) ** m * np.conj(y)
    return out


# ---------------------------------------------------------------------------
# Clebsch-Gordan coefficients (Racah's formula, exact rational arithmetic)


@lru_cache(maxsize=None)
def _fact(n: int) -> int:
    return math.factorial(n)


@lru_cache(maxsize=65536)
def _cg_twice(tj1: int, tm1: int, tj2: int, tm2: int, tJ: int, tM: int) -> float:
    if tm1 + tm2 != tM:
        return 0.0
    if tJ < abs(tj1 - tj2) or tJ > tj1 + tj2 or (tj1 + tj2 + tJ) % 2:
        return 0.0
    if abs(tm1) > tj1 or abs(tm2) > tj2 or abs(tM) > tJ:
        return 0.0
    a = (tj1 + tj2 - tJ) // 2
    b = (tj1 - tm1) // 2
    c = (tj2 + tm2) // 2
    d = (tJ - tj2 + tm1) // 2
    e = (tJ - tj1 - tm2) // 2
    total = Fraction(0)
    for k in range(max(0, -d, -e), min(a, b, c) + 1):
        term = Fraction(1, _fact(k) * _fact(a - k) * _fact(b - k) * _fact(c - k) * _fact(d + k) * _fact(e + k))
        total += -term if k % 2 else term
    if total == 0:
        return 0.0
    squared = Fraction(
        (tJ + 1)
        * _fact((tJ + tj1 - tj2) // 2)
        * _fact((tJ - tj1 + tj2) // 2)
        * _fact(a)
        * _fact((tJ + tM) // 2)
        * _fact((tJ - tM) // 2)
        * _fact((tj1 - tm1) // 2)
        * _fact((tj1 + tm1) // 2)
        * _fact((tj2 - tm2) // 2)
        * _fact((tj2 + tm2) // 2),
        _fact((tj1 + tj2 + tJ) // 2 + 1),
    ) * total * total
    # sqrt of an exact rational: scale to keep ~30 significant digits before rounding
    num, den = squared.numerator, squared.denominator
    shift = max(0, 120 - (num.bit_length() - den.bit_length()))
    root = math.isqrt((num << (2 * shift)) // den)
    value = math.ldexp(float(root), -shift)
    return value if total > 0 else -value


def clebsch_gordan(j1, m1, j2, m2, J, M) -> float:
    """<j1 m1; j2 m2 | J M> in the Condon-Shortley convention.

    Arguments may be ints, floats, Fractions, strings like ``'3/2'`` or
    HalfInteger. Selection-rule failures return 0; inputs that are not
    half-integers, or projections of the wrong parity, raise ValueError.
    """
    tj1, tm1, tj2, tm2, tJ, tM = (_twice(v) for v in (j1, m1, j2, m2, J, M))
    for tj, tm in ((tj1, tm1), (tj2, tm2), (tJ, tM)):
        if tj < 0:
            raise ValueError("angular momentum must be non-negative")
        if (tj - tm) % 2:
            raise ValueError(f"j - m must be an integer (j={tj}/2, m={tm}/2)")
    return _cg_twice(tj1, tm1, tj2, tm2, tJ, tM)


# ---------------------------------------------------------------------------
# Rotations


@dataclass(frozen=True)
class EulerAngles:
    """z-y-z Euler angles of the active rotation Rz(alpha) Ry(beta) Rz(gamma)."""

    alpha: float
    beta: float
    gamma: float

    def __post_init__(self):
        two_pi = 2 * math.pi
        if not (0.0 <= self.alpha < two_pi and 0.0 <= self.gamma < two_pi):
            raise ValueError("alpha and gamma must lie in [0, 2*pi)")
        if not 0.0 <= self.beta <= math.pi:
            raise ValueError("beta must lie in [0, pi]")

    @classmethod
    def wrapped(cls, alpha: float, beta: float, gamma: float) -> "EulerAngles":
        two_pi = 2 * math.pi

        def wrap(x):
            x = float(x) % two_pi
            return 0.0 if x >= two_pi else x  # -tiny % 2pi rounds up to 2pi

        return cls(wrap(alpha), float(beta), wrap(gamma))

    @classmethod
    def random(cls, rng: np.random.Generator) -> "EulerAngles":
        """Haar-distributed random rotation."""
        return cls(
            rng.uniform(0, 2 * math.pi), math.acos(rng.uniform(-1, 1)), rng.uniform(0, 2 * math.pi)
        )

    def matrix(self) -> np.ndarray:
        return euler_to_matrix(self.alpha, self.beta, self.gamma)

    @classmethod
    def from_matrix(cls, R: np.ndarray) -> "EulerAngles":
        R = np.asarray(R, dtype=float)
        sin_beta = math.hypot(R[0, 2], R[1, 2])
        beta = math.atan2(sin_beta, R[2, 2])
        if sin_beta > 1e-12:
            alpha = math.atan2(R[1, 2], R[0, 2])
            gamma = math.atan2(R[2, 1], -R[2, 0])
        else:
            # gimbal lock: only alpha +/- gamma is defined
            gamma = 0.0
            if R[2, 2] > 0:
                alpha = math.atan2(R[1, 0], R[0, 0])
            else:
                alpha = math.atan2(-R[1, 0], -R[0, 0])
        return cls.wrapped(alpha, beta, gamma)


def euler_to_matrix(alpha, beta, gamma) -> np.ndarray:
    """Rotation matrices Rz(alpha) Ry(beta) Rz(gamma); broadcasts over arrays."""
    alpha, beta, gamma = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (alpha, beta, gamma)))
    ca, sa = np.cos(alpha), np.sin(alpha)
    cb, sb = np.cos(beta), np.sin(beta)
    cg, sg = np.cos(gamma), np.sin(gamma)
    R = np.empty(alpha.shape + (3, 3))
    R[..., 0, 0] = ca * cb * cg - sa * sg
    R[..., 0, 1] = -ca * cb * sg - sa * cg
    R[..., 0, 2] = ca * sb
    R[..., 1, 0] = sa * cb * cg + ca * sg
    R[..., 1, 1] = -sa * cb * sg + ca * cg
    R[..., 1, 2] = sa * sb
    R[..., 2, 0] = -sb * cg
    R[..., 2, 1] = sb * sg
    R[..., 2, 2] = cb
    return R


def wigner_small_d(j, m, n, beta):
    """d^j_{mn}(beta) = <j m| exp(-i beta J_y) |j n> by Wigner's explicit sum."""
    tj, tm, tn = _twice(j), _twice(m), _twice(n)
    _check_projection(tj, tm)
    _check_projection(tj, tn)
    beta = np.asarray(beta, dtype=float)
    jpm, jmm = (tj + tm) // 2, (tj - tm) // 2
    jpn, jmn = (tj + tn) // 2, (tj - tn) // 2
    mmn = (tm - tn) // 2
    pref = math.sqrt(_fact(jpm) * _fact(jmm) * _fact(jpn) * _fact(jmn))
    c, s = np.cos(beta / 2), np.sin(beta / 2)
    out = np.zeros_like(beta)
    for k in range(max(0, -mmn), min(jpn, jmm) + 1):
        coef = (-1) ** (mmn + k) * pref / (
            _fact(jpn - k) * _fact(k) * _fact(mmn + k) * _fact(jmm - k)
        )
        out = out + coef * c ** (tj - mmn - 2 * k) * s ** (mmn + 2 * k)
    return out if out.ndim else float(out)


def wigner_D(j, m, n, angles: EulerAngles) -> complex:
    """D^j_{mn}(alpha, beta, gamma) = exp(-i m alpha) d^j_{mn}(beta) exp(-i n gamma)."""
    mv, nv = HalfInteger.of(m).value, HalfInteger.of(n).value
    d = wigner_small_d(j, m, n, angles.beta)
    return complex(np.exp(-1j * mv * angles.alpha) * d * np.exp(-1j * nv * angles.gamma))


def wigner_D_matrix(j, angles: EulerAngles) -> np.ndarray:
    """Full (2j+1)x(2j+1) D-matrix, rows/columns ordered m = j, ..., -j."""
    proj = HalfInteger.of(j).projections()
    return np.array([[wigner_D(j, m, n, angles) for n in proj] for m in proj])
