"""Spin-s systems: spin matrices, irreducible tensor operators, the
Stratonovich-Weyl spin kernel and closed-form polarization/nematic operators.

Basis order is |s, s>, |s, s-1>, ..., |s, -s>.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from qorient.angular import EulerAngles, HalfInteger, clebsch_gordan, lm_index, sph_harm_table, wigner_D_matrix
from qorient.expansion import QuadratureGrid, build_grid
from qorient.quantum import KernelField, OperatorTensor

NO_NEMATIC_NOTE = "spin-1/2: the kernel expansion stops at rank 1, so the nematic tensor vanishes identically"


@dataclass(frozen=True)
class SpinSystem:
    s: HalfInteger

    def __post_init__(self):
        object.__setattr__(self, "s", HalfInteger.of(self.s))
        if self.s.twice < 0:
            raise ValueError("spin must be non-negative")

    @property
    def dim(self) -> int:
        return self.s.twice + 1

    @property
    def casimir(self) -> float:
        s = self.s.value
        return s * (s + 1)


def _spin(s) -> SpinSystem:
    return s if isinstance(s, SpinSystem) else SpinSystem(HalfInteger.of(s))


@lru_cache(maxsize=None)
def _spin_ops(twice_s: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    s = twice_s / 2
    m = s - np.arange(twice_s + 1)
    # <m+1|S+|m> sits one row above the diagonal in descending order
    splus = np.diag(np.sqrt(s * (s + 1) - m[1:] * (m[1:] + 1)), k=1).astype(complex)
    sx = (splus + splus.conj().T) / 2
    sy = (splus - splus.conj().T) / 2j
    sz = np.diag(m).astype(complex)
    for a in (sx, sy, sz):
        a.setflags(write=False)
    return sx, sy, sz


def spin_operators(s) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(Sx, Sy, Sz) for spin s with hbar = 1."""
    return _spin_ops(_spin(s).s.twice)


@lru_cache(maxsize=None)
def _tensor_op(twice_s: int, l: int, m: int) -> np.ndarray:
    s = HalfInteger(twice_s)
    n = twice_s + 1
    out = np.zeros((n, n), dtype=complex)
    if l > twice_s or abs(m) > l:
        return out
    proj = s.projections()
    pref = math.sqrt((2 * l + 1) / (twice_s + 1))
    for col, nn in enumerate(proj):
        for row, np_ in enumerate(proj):
            out[row, col] = pref * clebsch_gordan(s, nn, l, m, s, np_)
    out.setflags(write=False)
    return out


def tensor_operator(s, l: int, m: int) -> np.ndarray:
    """T^(s)_lm = sqrt((2l+1)/(2s+1)) sum C^{s n'}_{s n, l m} |s n'><s n|.

    Zero for l > 2s.
    """
    if l < 0 or abs(m) > l:
        raise ValueError(f"invalid (l, m) = ({l}, {m})")
    return _tensor_op(_spin(s).s.twice, l, m)


def spin_kernel(s, grid: QuadratureGrid | None = None) -> KernelField:
    """Spin kernel sqrt(4pi/(2s+1)) sum_{l<=2s, m} Y*_lm(theta, phi) T_lm on an S2 grid.

    ``mu = (2s+1)/(4 pi)`` normalizes the kernel. Without a grid, the
    smallest grid supporting the Wigner/state round trip (band 4s) is used.
    """
    sys = _spin(s)
    L = sys.s.twice
    if grid is None:
        grid = build_grid("S2", 2 * L)
    if grid.domain != "S2":
        raise ValueError("the spin kernel lives on S2")
    grid.require(2 * L, "spin_kernel")
    n = sys.dim
    Y = sph_harm_table(L, grid.nodes[:, 0], grid.nodes[:, 1])
    Ts = np.zeros(((L + 1) ** 2, n, n), dtype=complex)
    for l in range(L + 1):
        for m in range(-l, l + 1):
            Ts[lm_index(l, m)] = tensor_operator(sys.s, l, m)
    mats = math.sqrt(4 * math.pi / n) * np.tensordot(Y.conj(), Ts, axes=([1], [0]))
    return KernelField(grid, mats, mu=n / (4 * math.pi), angular_band=L, label=f"spin-{sys.s}")


def spin_rotation(s, rotation) -> np.ndarray:
    """Unitary U(R) = exp(-i a Sz) exp(-i b Sy) exp(-i g Sz) for a rotation.

    ``rotation`` is EulerAngles or a 3x3 rotation matrix. For half-integer s
    the sign of U for a matrix input is that of the principal Euler angles.
    """
    if not isinstance(rotation, EulerAngles):
        rotation = EulerAngles.from_matrix(rotation)
    return wigner_D_matrix(_spin(s).s, rotation)


def polarization_operator_closed(s) -> OperatorTensor:
    """P_i = 3 / sqrt(s(s+1)(2s+1)^2) S_i."""
    sys = _spin(s)
    ops = np.array(spin_operators(sys.s))
    if sys.s.twice == 0:
        return OperatorTensor(3, 1, np.zeros_like(ops), "spin-0 has no polarization")
    pref = 3.0 / math.sqrt(sys.casimir * sys.dim**2)
    return OperatorTensor(3, 1, pref * ops)


def nematic_prefactor(s) -> float:
    sys = _spin(s)
    sv = sys.s.value
    radicand = sv * (sv + 1) * (2 * sv - 1) * (2 * sv + 1) ** 2 * (2 * sv + 3)
    if radicand <= 0:
        return 0.0
    return 7.5 / math.sqrt(radicand)


def nematic_operator_closed(s) -> OperatorTensor:
    """Q_ij = (15/2)/sqrt(s(s+1)(2s-1)(2s+1)^2(2s+3)) (S_i S_j + S_j S_i - 2/3 s(s+1) delta_ij).

    For s < 1 the prefactor vanishes and a zero tensor carrying an explanatory
    ``note`` is returned.
    """
    sys = _spin(s)
    n = sys.dim
    if sys.s.twice < 2:
        return OperatorTensor(3, 2, np.zeros((3, 3, n, n)), NO_NEMATIC_NOTE)
    S = spin_operators(sys.s)
    comps = np.empty((3, 3, n, n), dtype=complex)
    for i in range(3):
        for j in range(3):
            comps[i, j] = S[i] @ S[j] + S[j] @ S[i]
            if i == j:
                comps[i, j] -= (2.0 / 3.0) * sys.casimir * np.eye(n)
    return OperatorTensor(3, 2, nematic_prefactor(sys.s) * comps)
