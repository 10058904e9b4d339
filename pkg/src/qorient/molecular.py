"""Order parameters on SO(3) for low-symmetry (molecular) orientations.

P_ij   = 3/(8 pi^2)  int dR R_ij f(R)
Q_ijkl = 5/(16 pi^2) int dR (R_ij R_kl + R_il R_kj - 2/3 delta_ik delta_jl) f(R)

f is either a classical density (scalar per node) or a sampled kernel
(Hermitian matrix per node). The first index of R_ij refers to the
laboratory frame and the second to the body frame, so P is not symmetric and
nothing here symmetrizes across that split.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from qorient.expansion import GridError, QuadratureGrid, build_grid
from qorient.quantum import hermiticity_defect

POLARIZATION_PREFACTOR = 3.0 / (8.0 * math.pi**2)
NEMATIC_PREFACTOR = 5.0 / (16.0 * math.pi**2)


@dataclass(frozen=True)
class RotationField:
    """Scalar or Hermitian-matrix values on an SO(3) quadrature grid."""

    grid: QuadratureGrid
    values: np.ndarray = field(repr=False)
    is_density: bool = False
    label: str = ""

    def __post_init__(self):
        if self.grid.domain != "SO3":
            raise GridError("RotationField needs an SO3 grid")
        v = np.array(self.values)
        if v.shape[0] != len(self.grid) or v.ndim not in (1, 3):
            raise ValueError("values must be (n,) scalars or (n, k, k) matrices")
        if v.ndim == 3:
            v = v.astype(complex)
            if v.shape[1] != v.shape[2] or hermiticity_defect(v) > 1e-12:
                raise ValueError("matrix-valued fields must be Hermitian at every node")
        else:
            v = v.astype(float)
            if self.is_density and np.any(v < 0):
                raise ValueError("a probability density must be non-negative")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def is_matrix(self) -> bool:
        return self.values.ndim == 3

    def integrate_against(self, weights_per_node: np.ndarray) -> np.ndarray:
        """sum_k w_k g_k[...] f_k with g of shape (n, *index) -> (*index, [k, k])."""
        g = weights_per_node * self.grid.weights.reshape((-1,) + (1,) * (weights_per_node.ndim - 1))
        flat_g = g.reshape(len(self.grid), -1)
        flat_v = self.values.reshape(len(self.grid), -1)
        out = flat_g.T @ flat_v
        return out.reshape(weights_per_node.shape[1:] + self.values.shape[1:])


def uniform_density(grid: QuadratureGrid | None = None) -> RotationField:
    grid = grid or build_grid("SO3", 4)
    return RotationField(grid, np.full(len(grid), 1.0 / (8 * math.pi**2)), True, "uniform")


def von_mises_density(kappa: float, R0: np.ndarray, grid: QuadratureGrid) -> RotationField:
    """f(R) proportional to exp(kappa tr(R0^T R)), normalized by the grid quadrature."""
    R = grid.rotations()
    expo = kappa * (np.einsum("ij,nij->n", np.asarray(R0, float), R) - 3.0)
    f = np.exp(expo)
    f /= grid.integrate(f)
    return RotationField(grid, f, True, f"vmf-so3:{kappa}")


def axial_density(g, grid: QuadratureGrid) -> RotationField:
    """f(R) = g(cos of the angle between body z and lab z) = g(R_33), normalized."""
    R = grid.rotations()
    f = np.asarray(g(R[:, 2, 2]), float)
    f /= grid.integrate(f)
    return RotationField(grid, f, True, "axial")


def molecular_polarization(field_: RotationField) -> np.ndarray:
    """3x3 array P_ij (entries are matrices for kernel input)."""
    field_.grid.require(2, "molecular_polarization")
    R = field_.grid.rotations()
    return POLARIZATION_PREFACTOR * field_.integrate_against(R)


def nematic_weight(R: np.ndarray) -> np.ndarray:
    """R_ij R_kl + R_il R_kj - 2/3 delta_ik delta_jl per node, shape (n, 3, 3, 3, 3)."""
    eye = np.eye(3)
    term = np.einsum("nij,nkl->nijkl", R, R)
    term = term + np.einsum("nil,nkj->nijkl", R, R)
    return term - (2.0 / 3.0) * np.einsum("ik,jl->ijkl", eye, eye)[None]


def molecular_nematic(field_: RotationField) -> np.ndarray:
    """Rank-4 array Q_ijkl (entries are matrices for kernel input)."""
    field_.grid.require(4, "molecular_nematic")
    return NEMATIC_PREFACTOR * field_.integrate_against(nematic_weight(field_.grid.rotations()))


def lab_axis_nematic(Q: np.ndarray, body_axis: int = 2) -> np.ndarray:
    """Contract Q_ijkl to the lab-frame 3x3 block with j = l = body_axis."""
    return Q[:, body_axis, :, body_axis]


def rotate_polarization(P: np.ndarray, left=None, right=None) -> np.ndarray:
    """Polarization of f(left^T R right^T) given that of f(R): left P right."""
    g = np.eye(3) if left is None else np.asarray(left)
    h = np.eye(3) if right is None else np.asarray(right)
    return np.einsum("ia,ab...,bj->ij...", g, P, h)


def rotate_nematic(Q: np.ndarray, left=None, right=None) -> np.ndarray:
    """Nematic tensor of f(left^T R right^T) given that of f(R).

    Lab indices (i, k) transform with ``left``, body indices (j, l) with
    ``right``: Q'_ijkl = g_ia g_kc h_bj h_dl Q_abcd.
    """
    g = np.eye(3) if left is None else np.asarray(left)
    h = np.eye(3) if right is None else np.asarray(right)
    return np.einsum("ia,kc,bj,dl,abcd...->ijkl...", g, g, h, h, Q)
