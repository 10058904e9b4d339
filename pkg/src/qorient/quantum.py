"""Density matrices, Stratonovich-Weyl kernels and quantum order parameters.

Two measures appear. A :class:`KernelField` carries a factor ``mu`` such
that ``mu * sum_k w_k Delta_k`` is the identity; the Wigner/state round trip
and :func:`quantize` use that normalized measure. Order-parameter operators
are integrated against the plain invariant measure dOmega (the quadrature
weights), which is the convention under which the closed-form spin
operators hold with no s-dependent rescaling. The two differ by ``mu``::

    order_parameter_operator(k, d, l) == quantize(A_l * T_l, k) / k.mu
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from qorient.expansion import GridError, QuadratureGrid
from qorient.tensors import SymmetricTracelessTensor, normalization, tensor_polynomial_batch

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-10
MAX_LIFT_DIM = 4096


class DimensionError(ValueError):
    pass


def hermiticity_defect(a: np.ndarray) -> float:
    a = np.asarray(a)
    return float(np.max(np.abs(a - np.conj(np.swapaxes(a, -1, -2))), initial=0.0))


@dataclass(frozen=True)
class DensityMatrix:
    """Finite-dimensional quantum state.

    With ``check=True`` (the default) the matrix must be Hermitian, unit
    trace and positive semidefinite. Reconstructions from arbitrary Wigner
    data are built with ``check=False`` and report :attr:`is_physical`.
    """

    data: np.ndarray = field(repr=False)
    check: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        data = np.array(self.data, dtype=complex)
        if data.ndim != 2 or data.shape[0] != data.shape[1]:
            raise DimensionError(f"density matrix must be square, got {data.shape}")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        if self.check:
            problem = self.violation()
            if problem:
                raise ValueError(f"not a density matrix: {problem}")

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    def violation(self) -> str | None:
        """Name of the first violated invariant, or None."""
        if hermiticity_defect(self.data) > HERMITIAN_TOL:
            return "hermiticity"
        if abs(np.trace(self.data) - 1.0) > TRACE_TOL:
            return "unit trace"
        herm = (self.data + self.data.conj().T) / 2
        if np.min(np.linalg.eigvalsh(herm)) < -PSD_TOL:
            return "positive semidefiniteness"
        return None

    @property
    def is_physical(self) -> bool:
        return self.violation() is None

    @classmethod
    def maximally_mixed(cls, n: int) -> "DensityMatrix":
        return cls(np.eye(n) / n)

    @classmethod
    def pure(cls, psi) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()))

    @classmethod
    def random(cls, n: int, rng: np.random.Generator, rank: int | None = None) -> "DensityMatrix":
        """Random state from a Ginibre matrix G: rho = G G^dag / Tr."""
        k = n if rank is None else rank
        G = rng.normal(size=(n, k)) + 1j * rng.normal(size=(n, k))
        rho = G @ G.conj().T
        rho = (rho + rho.conj().T) / 2
        return cls(rho / np.trace(rho).real)

    def expect(self, op: np.ndarray) -> complex:
        return complex(np.trace(self.data @ op))


@dataclass(frozen=True)
class KernelField:
    """Hermitian matrix field Delta sampled on a quadrature grid.

    ``mu`` multiplies the grid weights to form dGamma with int dGamma Delta = 1.
    ``angular_band`` is the highest angular rank present in Delta (2s for
    spins); it determines how fine a grid the kernel operations need.
    """

    grid: QuadratureGrid
    matrices: np.ndarray = field(repr=False)
    mu: float
    angular_band: int
    label: str = ""

    def __post_init__(self):
        m = np.array(self.matrices, dtype=complex)
        if m.ndim != 3 or m.shape[0] != len(self.grid) or m.shape[1] != m.shape[2]:
            raise DimensionError(f"kernel matrices must have shape ({len(self.grid)}, n, n), got {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "matrices", m)

    @property
    def dim(self) -> int:
        return self.matrices.shape[1]

    def hermiticity_defect(self) -> float:
        return hermiticity_defect(self.matrices)

    def normalization_defect(self) -> float:
        total = self.mu * self.grid.integrate(self.matrices)
        return float(np.max(np.abs(total - np.eye(self.dim))))

    def _check_samples(self, values) -> np.ndarray:
        values = np.asarray(values)
        if values.shape[0] != len(self.grid):
            raise GridError(f"samples ({values.shape[0]}) do not match the kernel grid ({len(self.grid)})")
        return values


@dataclass(frozen=True)
class OperatorTensor:
    """Rank-l tensor of n x n matrices, stored with shape (d,)*l + (n, n)."""

    d: int
    l: int
    components: np.ndarray = field(repr=False)
    note: str = ""

    def __post_init__(self):
        c = np.array(self.components, dtype=complex)
        if c.shape[: self.l] != (self.d,) * self.l or c.ndim != self.l + 2 or c.shape[-1] != c.shape[-2]:
            raise DimensionError(f"bad component shape {c.shape} for d={self.d}, l={self.l}")
        c.setflags(write=False)
        object.__setattr__(self, "components", c)

    @property
    def dim(self) -> int:
        return self.components.shape[-1]

    def __getitem__(self, index) -> np.ndarray:
        return self.components[index]

    def norm(self) -> float:
        return float(np.linalg.norm(self.components))

    def hermiticity_defect(self) -> float:
        return hermiticity_defect(self.components)

    def symmetry_defect(self) -> float:
        worst = 0.0
        for p in itertools.permutations(range(self.l)):
            perm = tuple(p) + (self.l, self.l + 1)
            worst = max(worst, float(np.max(np.abs(self.components - np.transpose(self.components, perm)))))
        return worst

    def trace_defect(self) -> float:
        """Largest entry of any index-pair contraction sum_i T_{..i..i..}."""
        if self.l < 2:
            return 0.0
        worst = 0.0
        for i, j in itertools.combinations(range(self.l), 2):
            worst = max(worst, float(np.max(np.abs(np.trace(self.components, axis1=i, axis2=j)))))
        return worst

    def check(self, herm_tol: float = 1e-12, trace_tol: float = 1e-10) -> None:
        if self.hermiticity_defect() > herm_tol:
            raise ValueError("operator tensor entries are not Hermitian")
        if self.symmetry_defect() > trace_tol:
            raise ValueError("operator tensor is not symmetric in its indices")
        if self.trace_defect() > trace_tol:
            raise ValueError("operator tensor is not traceless in its indices")

    def scaled(self, factor: float) -> "OperatorTensor":
        return OperatorTensor(self.d, self.l, self.components * factor, self.note)


# ---------------------------------------------------------------------------
# Stratonovich-Weyl correspondence


def wigner_from_state(rho: DensityMatrix, kernel: KernelField) -> np.ndarray:
    """W(Gamma_k) = Tr(rho Delta_k) at every grid node (real)."""
    if rho.dim != kernel.dim:
        raise DimensionError(f"state dimension {rho.dim} != kernel dimension {kernel.dim}")
    W = np.einsum("ij,kji->k", rho.data, kernel.matrices)
    scale = max(1.0, float(np.max(np.abs(W))))
    if np.max(np.abs(W.imag)) > 1e-12 * scale:
        raise ValueError("Wigner function has a non-negligible imaginary part; kernel not Hermitian?")
    return W.real


def state_from_wigner(W, kernel: KernelField) -> DensityMatrix:
    """rho = int dGamma W Delta. The result is unchecked; see ``is_physical``."""
    W = kernel._check_samples(W)
    rho = kernel.mu * kernel.grid.integrate(W[:, None, None] * kernel.matrices)
    return DensityMatrix(rho, check=False)


def quantize(symbol, kernel: KernelField) -> np.ndarray:
    """A_hat = int dGamma A(Gamma) Delta(Gamma) for samples of a scalar symbol."""
    A = kernel._check_samples(symbol)
    return kernel.mu * kernel.grid.integrate(A[:, None, None] * kernel.matrices)


def order_parameter_operator(kernel: KernelField, d: int, l: int, measure_constant: float = 1.0) -> OperatorTensor:
    """T_hat = A_l int dOmega T_l(u) Delta(u) over the kernel's grid.

    ``measure_constant`` multiplies the invariant measure (1 by default).
    Ranks above the kernel's angular band vanish up to quadrature error.
    """
    grid = kernel.grid
    if grid.domain not in ("S1", "S2") or grid.dimension != d:
        raise GridError(f"rank tensors in d={d} need an {'S1' if d == 2 else 'S2'} kernel grid")
    grid.require(l + kernel.angular_band, "order_parameter_operator")
    T = tensor_polynomial_batch(d, l, grid.unit_vectors())
    weighted = (T * grid.weights[:, None]).T
    n = kernel.dim
    comps = weighted @ kernel.matrices.reshape(len(grid), n * n)
    comps *= normalization(d, l) * measure_constant
    return OperatorTensor(d, l, comps.reshape((d,) * l + (n, n)))


def expectation(rho: DensityMatrix, op: OperatorTensor) -> SymmetricTracelessTensor:
    """<T_hat> = Tr(rho T_hat) per component."""
    if rho.dim != op.dim:
        raise DimensionError(f"state dimension {rho.dim} != operator dimension {op.dim}")
    vals = np.einsum("ij,...ji->...", rho.data, op.components)
    scale = max(1.0, float(np.max(np.abs(vals), initial=0.0)))
    if np.max(np.abs(vals.imag), initial=0.0) > 1e-10 * scale:
        raise ValueError("expectation value is not real; operator not Hermitian?")
    return SymmetricTracelessTensor(op.d, op.l, vals.real)


# ---------------------------------------------------------------------------
# many particles


def embed(op: np.ndarray, slot: int, N: int) -> np.ndarray:
    """1 x ... x op x ... x 1 with ``op`` in position ``slot`` of N factors."""
    n = op.shape[0]
    left = np.eye(n**slot)
    right = np.eye(n ** (N - slot - 1))
    return np.kron(np.kron(left, op), right)


def many_particle_lift(op: OperatorTensor, N: int) -> OperatorTensor:
    """(1/N) sum_i 1 x ... x op_i x ... x 1 on the N-particle space."""
    if N < 1:
        raise ValueError("particle count must be at least 1")
    n = op.dim
    if n**N > MAX_LIFT_DIM:
        raise ValueError(f"lifted dimension {n}**{N} exceeds the guard {MAX_LIFT_DIM}")
    if N == 1:
        return op
    flat = op.components.reshape(-1, n, n)
    big = np.zeros((flat.shape[0], n**N, n**N), dtype=complex)
    for c, block in enumerate(flat):
        for slot in range(N):
            big[c] += embed(block, slot, N)
    big /= N
    return OperatorTensor(op.d, op.l, big.reshape((op.d,) * op.l + (n**N, n**N)), op.note)


def partial_trace(rho: np.ndarray, dims: list[int], keep: int) -> np.ndarray:
    """Reduced matrix of subsystem ``keep`` for a state on the product of ``dims``."""
    rho = np.asarray(rho)
    k = len(dims)
    t = rho.reshape(tuple(dims) * 2)
    letters = "abcdefghijklmnopqrstuvwxyz"
    row = list(letters[:k])
    col = list(letters[k : 2 * k])
    for i in range(k):
        if i != keep:
            col[i] = row[i]
    subscripts = "".join(row) + "".join(col) + "->" + row[keep] + col[keep]
    return np.einsum(subscripts, t)


def tensor_product_state(*states: DensityMatrix) -> DensityMatrix:
    out = np.ones((1, 1))
    for s in states:
        out = np.kron(out, s.data)
    return DensityMatrix(out)
