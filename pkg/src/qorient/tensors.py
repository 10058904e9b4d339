"""Symmetric traceless Cartesian tensors.

Rank-l tensors in d = 2 or 3 dimensions are stored densely as arrays of shape
``(d,) * l``, optionally followed by extra trailing axes (for example the two
matrix axes of an operator-valued tensor). The projector onto the symmetric
traceless subspace is built numerically once per (d, l) and cached.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from qorient.angular import lm_index, sph_harm_table

MAX_RANK = 6
TOL = 1e-12


def _check_dl(d: int, l: int) -> None:
    if d not in (2, 3):
        raise ValueError(f"dimension must be 2 or 3, got {d}")
    if l < 0 or l > MAX_RANK:
        raise ValueError(f"rank must be in 0..{MAX_RANK}, got {l}")


@lru_cache(maxsize=None)
def _basis(d: int, l: int) -> np.ndarray:
    """Orthonormal basis of rank-l symmetric traceless tensors, shape (d**l, dim)."""
    n = d**l
    if l == 0:
        return np.ones((1, 1))
    idx = np.arange(n).reshape((d,) * l)
    sym = np.zeros((n, n))
    perms = list(itertools.permutations(range(l)))
    for p in perms:
        sym[idx.ravel(), np.transpose(idx, p).ravel()] += 1.0
    sym /= len(perms)
    w, v = np.linalg.eigh(sym)
    B = v[:, w > 0.5]
    if l == 1:
        return B
    # contraction of the first index pair; for symmetric tensors this is every pair
    trace = np.zeros((d ** (l - 2), n))
    rest = np.arange(d ** (l - 2)).reshape((d,) * (l - 2))
    for k in range(d):
        full = idx[k, k]
        trace[rest.ravel(), full.ravel()] += 1.0
    _, s, vt = np.linalg.svd(trace @ B)
    rank = int(np.sum(s > 1e-10))
    N = vt[rank:].T
    E = B @ N
    expected = 2 * l + 1 if d == 3 else 2
    assert E.shape[1] == expected, (d, l, E.shape)
    E.setflags(write=False)
    return E


def harmonic_dimension(d: int, l: int) -> int:
    _check_dl(d, l)
    return _basis(d, l).shape[1]


@lru_cache(maxsize=None)
def projector(d: int, l: int) -> np.ndarray:
    """Orthogonal projector onto symmetric traceless rank-l tensors, (d**l, d**l)."""
    _check_dl(d, l)
    E = _basis(d, l)
    P = E @ E.T
    P.setflags(write=False)
    return P


def normalization(d: int, l: int) -> float:
    """Expansion normalization A_l so that f = sum_l F_l . u^l with F_l = A_l int f T_l.

    Closed forms: 2**l / (2 pi) in two dimensions and (2l+1)!! / (4 pi l!)
    in three. Both are checked against quadrature in the test suite.
    """
    if l < 0:
        raise ValueError("rank must be non-negative")
    if d == 2:
        return 2.0**l / (2 * math.pi)
    if d == 3:
        double_fact = math.prod(range(2 * l + 1, 0, -2))
        return double_fact / (4 * math.pi * math.factorial(l))
    raise ValueError(f"dimension must be 2 or 3, got {d}")


def symmetric_traceless_project(t, d: int | None = None) -> np.ndarray:
    """Project a rank-l tensor (shape (d,)*l) onto its symmetric traceless part."""
    t = np.asarray(t)
    l = t.ndim
    if d is None:
        d = t.shape[0] if l else 3
    if t.shape != (d,) * l:
        raise ValueError(f"expected shape {(d,) * l}, got {t.shape}")
    _check_dl(d, l)
    return (projector(d, l) @ t.reshape(-1)).reshape((d,) * l)


def project_leading(t: np.ndarray, d: int, l: int) -> np.ndarray:
    """Apply the projector to the leading l tensor axes of ``t``, leaving the rest."""
    t = np.asarray(t)
    extra = t.shape[l:]
    flat = t.reshape((d**l, -1))
    return (projector(d, l) @ flat).reshape((d,) * l + extra)


def monomials(u: np.ndarray, l: int) -> np.ndarray:
    """Outer powers u^(x)l for a batch of vectors, shape (npoints, d**l)."""
    u = np.atleast_2d(np.asarray(u, dtype=float))
    out = np.ones((u.shape[0], 1))
    for _ in range(l):
        out = np.einsum("na,nb->nab", out, u).reshape(u.shape[0], -1)
    return out


def tensor_polynomial_batch(d: int, l: int, u: np.ndarray) -> np.ndarray:
    """T_l(u) for many unit vectors at once, shape (npoints, d**l)."""
    _check_dl(d, l)
    return monomials(u, l) @ projector(d, l)


def tensor_polynomial(d: int, l: int, u) -> "SymmetricTracelessTensor":
    """The symmetric traceless polynomial T_l(u), e.g. u_i u_j - delta_ij/d for l=2."""
    _check_dl(d, l)
    u = np.asarray(u, dtype=float)
    if u.shape != (d,):
        raise ValueError(f"expected a {d}-vector, got shape {u.shape}")
    if abs(np.linalg.norm(u) - 1.0) > 1e-12:
        raise ValueError("tensor_polynomial needs a unit vector")
    data = tensor_polynomial_batch(d, l, u[None, :])[0].reshape((d,) * l)
    return SymmetricTracelessTensor(d, l, data)


def trace_pair(t: np.ndarray, i: int = 0, j: int = 1) -> np.ndarray:
    return np.trace(t, axis1=i, axis2=j)


@dataclass(frozen=True)
class SymmetricTracelessTensor:
    """Rank-l, dimension-d symmetric traceless tensor (dense storage)."""

    d: int
    l: int
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        _check_dl(self.d, self.l)
        data = np.array(self.data)
        if data.shape != (self.d,) * self.l:
            raise ValueError(f"data shape {data.shape} does not match d={self.d}, l={self.l}")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    def asymmetry(self) -> float:
        """Largest deviation from index-permutation symmetry."""
        worst = 0.0
        for p in itertools.permutations(range(self.l)):
            worst = max(worst, float(np.max(np.abs(self.data - np.transpose(self.data, p)), initial=0.0)))
        return worst

    def max_trace(self) -> float:
        """Largest component of any delta-contraction."""
        if self.l < 2:
            return 0.0
        worst = 0.0
        for i, j in itertools.combinations(range(self.l), 2):
            worst = max(worst, float(np.max(np.abs(trace_pair(self.data, i, j)))))
        return worst

    def check(self, tol: float = TOL) -> None:
        scale = max(1.0, float(np.max(np.abs(self.data), initial=0.0)))
        if self.asymmetry() > tol * scale:
            raise ValueError("tensor is not symmetric")
        if self.max_trace() > tol * scale:
            raise ValueError("tensor is not traceless")

    def contract(self, u) -> complex | float:
        """Full contraction F . u^l."""
        u = np.asarray(u, dtype=float)
        return (monomials(u[None, :], self.l)[0] @ self.data.reshape(-1)).item()

    def rotated(self, R: np.ndarray) -> "SymmetricTracelessTensor":
        """Apply R to every index: F'_{i..} = R_ia ... F_{a..}."""
        t = self.data
        for axis in range(self.l):
            t = np.moveaxis(np.tensordot(R, t, axes=([1], [axis])), 0, axis)
        return SymmetricTracelessTensor(self.d, self.l, t)

    def norm(self) -> float:
        return float(np.linalg.norm(self.data))


@dataclass(frozen=True)
class TurziCoefficient:
    """Rank-l coefficient of the rotation-matrix expansion f(R) = sum C . R^l.

    ``data`` has shape (3**l, 3**l): rows index (i_1..i_l), columns
    (j_1..j_l). Symmetric traceless in both index groups separately.
    """

    l: int
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        data = np.array(self.data)
        if data.shape != (3**self.l, 3**self.l):
            raise ValueError(f"expected shape {(3**self.l,) * 2}, got {data.shape}")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    def as_tensor(self) -> np.ndarray:
        """Interleaved index order (i1, j1, i2, j2, ...) matching R_{i1 j1} R_{i2 j2}."""
        t = self.data.reshape((3,) * (2 * self.l))
        order = [a for k in range(self.l) for a in (k, self.l + k)]
        return np.transpose(t, order)

    def defect(self) -> float:
        """Distance from the doubly symmetric traceless subspace."""
        P = projector(3, self.l)
        return float(np.max(np.abs(P @ self.data @ P - self.data), initial=0.0))


# ---------------------------------------------------------------------------
# angular <-> Cartesian conversion


def _gl_sphere(band: int):
    from qorient.expansion import build_grid

    return build_grid("S2", band)


@lru_cache(maxsize=None)
def _conversion_matrix(d: int, l: int) -> np.ndarray:
    """Matrix M (d**l, nm) with F = M @ f_lm for a complete rank-l multiplet.

    Entries are A_l * int T_l(u) B_m(u) dOmega, evaluated by quadrature that is
    exact for the degree-2l integrand. B_m is Y_lm in 3D and the orthonormal
    Fourier mode exp(i m phi)/sqrt(2 pi), m in {-l, l}, in 2D.
    """
    from qorient.expansion import build_grid

    if d == 3:
        grid = build_grid("S2", 2 * l)
        Y = sph_harm_table(l, grid.nodes[:, 0], grid.nodes[:, 1])
        basis = Y[:, [lm_index(l, m) for m in range(-l, l + 1)]]
    else:
        grid = build_grid("S1", 2 * l)
        ms = angular_orders(2, l)
        basis = np.exp(1j * np.outer(grid.nodes[:, 0], ms)) / math.sqrt(2 * math.pi)
    T = tensor_polynomial_batch(d, l, grid.unit_vectors())
    M = normalization(d, l) * (T * grid.weights[:, None]).T @ basis
    M.setflags(write=False)
    return M


def angular_orders(d: int, l: int) -> list[int]:
    """Projection labels of a rank-l multiplet: -l..l in 3D, (-l, l) or (0,) in 2D."""
    if d == 3:
        return list(range(-l, l + 1))
    return [0] if l == 0 else [-l, l]


def angular_to_cartesian(coeffs, l: int, d: int = 3) -> SymmetricTracelessTensor | np.ndarray:
    """Cartesian tensor F with F . u^l equal to the rank-l angular contribution.

    ``coeffs`` is a sequence ordered as :func:`angular_orders` or a mapping
    m -> f_lm. Real-valued contributions (reality condition satisfied) return
    a SymmetricTracelessTensor; otherwise the complex array is returned.
    """
    _check_dl(d, l)
    ms = angular_orders(d, l)
    if isinstance(coeffs, dict):
        missing = [m for m in ms if m not in coeffs]
        if missing:
            raise ValueError(f"incomplete multiplet, missing m={missing}")
        vec = np.array([coeffs[m] for m in ms], dtype=complex)
    else:
        vec = np.asarray(coeffs, dtype=complex).reshape(-1)
        if vec.size != len(ms):
            raise ValueError(f"incomplete multiplet: need {len(ms)} coefficients, got {vec.size}")
    F = (_conversion_matrix(d, l) @ vec).reshape((d,) * l)
    scale = max(1.0, float(np.max(np.abs(F), initial=0.0)))
    if np.max(np.abs(F.imag), initial=0.0) <= 1e-12 * scale:
        return SymmetricTracelessTensor(d, l, F.real)
    return F


def cartesian_to_angular(F, l: int | None = None, d: int | None = None) -> np.ndarray:
    """Inverse of :func:`angular_to_cartesian`: the multiplet f_lm, ordered by m."""
    if isinstance(F, SymmetricTracelessTensor):
        d, l, F = F.d, F.l, F.data
    F = np.asarray(F)
    l = F.ndim if l is None else l
    d = (F.shape[0] if l else 3) if d is None else d
    _check_dl(d, l)
    M = _conversion_matrix(d, l)
    # columns of M are orthogonal with norm^2 = A_l (see conversion docstring)
    return (M.conj().T @ F.reshape(-1)) / normalization(d, l)
