"""Independent reference computations.

Each function here reaches its answer by a different route from the
production code it is used to check, and shares none of its internals.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np
from scipy.linalg import null_space


def _jminus(j: float) -> np.ndarray:
    m = j - np.arange(int(round(2 * j)) + 1)
    return np.diag(np.sqrt(j * (j + 1) - m[:-1] * (m[:-1] - 1)), k=-1)


def cg_ladder(j1: float, j2: float) -> dict[tuple[float, float, float, float], float]:
    """All <j1 m1; j2 m2 | J M> by lowering from stretched states.

    Highest-weight states for each J are fixed as the null space of J_+ in
    the M = J sector, with the phase chosen so <j1 j1; j2 J-j1 | J J> > 0;
    the multiplet is then filled by repeated application of J_-.
    """
    n1, n2 = int(round(2 * j1)) + 1, int(round(2 * j2)) + 1
    m1s = j1 - np.arange(n1)
    m2s = j2 - np.arange(n2)
    Jm = np.kron(_jminus(j1), np.eye(n2)) + np.kron(np.eye(n1), _jminus(j2))
    Jp = Jm.T
    Mtot = (m1s[:, None] + m2s[None, :]).ravel()
    out = {}
    J = j1 + j2
    while J >= abs(j1 - j2) - 1e-9:
        sector = np.where(np.abs(Mtot - J) < 1e-9)[0]
        A = Jp[:, sector]
        ns = null_space(A)
        # the null space has one vector per J' >= J present; keep the one orthogonal to higher J
        higher = [
            np.array([out.get((Jh, J, m1s[k // n2], m2s[k % n2]), 0.0) for k in sector])
            for Jh in np.arange(J + 1, j1 + j2 + 0.5)
        ]
        v = ns[:, 0] if not higher else None
        if higher:
            H = np.array(higher).T
            proj = ns - H @ (H.T @ ns)
            u, s, _ = np.linalg.svd(proj)
            v = u[:, 0]
        state = np.zeros(n1 * n2)
        state[sector] = v
        # phase: coefficient with m1 = j1 positive
        lead = [k for k in sector if abs(m1s[k // n2] - j1) < 1e-9]
        if state[lead[0]] < 0:
            state = -state
        state /= np.linalg.norm(state)
        M = J
        while M >= -J - 1e-9:
            for k in np.nonzero(np.abs(state) > 0)[0]:
                out[(J, M, m1s[k // n2], m2s[k % n2])] = float(state[k])
            state = Jm @ state
            nrm = np.linalg.norm(state)
            if nrm < 1e-12:
                break
            state /= nrm
            M -= 1
        J -= 1
    return out


def legendre_closed_form(l: int, m: int, x):
    """P_l^m(x) with Condon-Shortley phase via Rodrigues' formula (numpy polynomials)."""
    x = np.asarray(x, float)
    base = np.polynomial.Polynomial([-1, 0, 1]) ** l  # (x^2 - 1)^l
    deriv = base.deriv(l + m) if l + m > 0 else base
    return (-1) ** m / (2**l * math.factorial(l)) * (1 - x * x) ** (m / 2) * deriv(x)


def fermi_cartesian_oracle(
    func: Callable, p_max: float, n: int, mode: str = "exact", p_F: float | None = None
) -> np.ndarray:
    """Rank-2 Fermi expectation by brute-force midpoint summation on an n x n box.

    Components are written out explicitly: (2pi)^2 (p_x^2 - p_y^2, 2 p_x p_y)
    divided by p^2 (exact) or p_F^2 (Fermi-surface approximation), averaged
    over the occupation.
    """
    h = 2 * p_max / n
    c = -p_max + h * (np.arange(n) + 0.5)
    PX, PY = np.meshgrid(c, c, indexing="ij")
    occ = func(PX, PY)
    denom = PX**2 + PY**2 if mode == "exact" else np.full(PX.shape, p_F**2)
    xx = (2 * math.pi) ** 2 * (PX**2 - PY**2) / denom
    xy = (2 * math.pi) ** 2 * 2 * PX * PY / denom
    total = occ.sum()
    Qxx = float((occ * xx).sum() / total)
    Qxy = float((occ * xy).sum() / total)
    return np.array([[Qxx, Qxy], [Qxy, -Qxx]])


def spin_rotation_expm(s: float, alpha: float, beta: float, gamma: float) -> np.ndarray:
    """exp(-i alpha Sz) exp(-i beta Sy) exp(-i gamma Sz) by matrix exponentials."""
    from scipy.linalg import expm

    n = int(round(2 * s)) + 1
    m = s - np.arange(n)
    splus = np.diag(np.sqrt(s * (s + 1) - m[1:] * (m[1:] + 1)), k=1)
    sy = (splus - splus.T) / 2j
    sz = np.diag(m)
    return expm(-1j * alpha * sz) @ expm(-1j * beta * sy) @ expm(-1j * gamma * sz)
