"""Quadrature grids and orientational expansions on S1, S2 and SO(3).

Grids are product rules: uniform in azimuthal angles and Gauss-Legendre in
cos(theta) (or cos(beta)). A grid built for band limit L integrates every
basis function (Fourier mode, Y_lm, D^l_mn) with l <= L exactly, so an
expansion to rank L needs a grid of band limit at least 2L.

Sample values may carry trailing axes (for instance n x n matrices); the
expansions then act entrywise and the coefficient arrays carry the same
trailing axes after the tensor indices.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from qorient.angular import euler_to_matrix, lm_index, sph_harm_table
from qorient.tensors import (
    SymmetricTracelessTensor,
    TurziCoefficient,
    _basis,
    angular_orders,
    monomials,
    normalization,
    tensor_polynomial_batch,
)

DOMAINS = ("S1", "S2", "SO3")
VOLUME = {"S1": 2 * math.pi, "S2": 4 * math.pi, "SO3": 8 * math.pi**2}
ANGLE_COLUMNS = {"S1": ("phi",), "S2": ("theta", "phi"), "SO3": ("alpha", "beta", "gamma")}
CSV_SCHEMA_VERSION = 1


class GridError(ValueError):
    """Grid cannot support the requested operation."""


@dataclass(frozen=True)
class QuadratureGrid:
    """Quadrature nodes and weights on S1, S2 or SO(3).

    ``nodes`` holds angles, one row per node: (phi,) on S1, (theta, phi) on
    S2, z-y-z Euler angles (alpha, beta, gamma) on SO(3).
    """

    domain: str
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    band_limit: int

    def __post_init__(self):
        if self.domain not in DOMAINS:
            raise ValueError(f"unknown domain {self.domain!r}")
        nodes = np.array(self.nodes, dtype=float).reshape(len(self.weights), -1)
        weights = np.array(self.weights, dtype=float)
        if nodes.shape[1] != len(ANGLE_COLUMNS[self.domain]):
            raise ValueError(f"{self.domain} nodes need {len(ANGLE_COLUMNS[self.domain])} angles")
        if np.any(weights <= 0):
            raise ValueError("quadrature weights must be positive")
        for a in (nodes, weights):
            a.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    def __len__(self):
        return len(self.weights)

    @property
    def dimension(self) -> int:
        return {"S1": 2, "S2": 3, "SO3": 3}[self.domain]

    def unit_vectors(self) -> np.ndarray:
        if self.domain == "S1":
            phi = self.nodes[:, 0]
            return np.stack([np.cos(phi), np.sin(phi)], axis=1)
        if self.domain == "S2":
            theta, phi = self.nodes[:, 0], self.nodes[:, 1]
            st = np.sin(theta)
            return np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta)], axis=1)
        raise GridError("SO3 nodes are rotations, not unit vectors")

    def rotations(self) -> np.ndarray:
        if self.domain != "SO3":
            raise GridError(f"{self.domain} nodes are not rotations")
        return euler_to_matrix(self.nodes[:, 0], self.nodes[:, 1], self.nodes[:, 2])

    def integrate(self, values) -> np.ndarray:
        """sum_k w_k values[k]; fixed (pairwise) summation order."""
        values = np.asarray(values)
        if values.shape[0] != len(self):
            raise GridError(f"expected {len(self)} samples, got {values.shape[0]}")
        w = self.weights.reshape((-1,) + (1,) * (values.ndim - 1))
        return np.sum(w * values, axis=0)

    def require(self, band: int, what: str = "operation") -> None:
        if self.band_limit < band:
            raise GridError(f"{what} needs a grid of band limit >= {band}, got {self.band_limit}")


def build_grid(domain: str, band_limit: int) -> QuadratureGrid:
    """Product quadrature exact for all basis functions of degree <= band_limit."""
    L = int(band_limit)
    if L < 0:
        raise ValueError("band limit must be non-negative")
    if domain == "S1":
        n = 2 * L + 1
        phi = 2 * math.pi * np.arange(n) / n
        return QuadratureGrid("S1", phi[:, None], np.full(n, 2 * math.pi / n), L)
    if domain not in ("S2", "SO3"):
        raise ValueError(f"unknown domain {domain!r}")
    x, wx = np.polynomial.legendre.leggauss(L // 2 + 1)
    polar = np.arccos(x)
    n_az = L + 1
    az = 2 * math.pi * np.arange(n_az) / n_az
    w_az = 2 * math.pi / n_az
    if domain == "S2":
        T, P = np.meshgrid(polar, az, indexing="ij")
        W = np.repeat(wx * w_az, n_az)
        return QuadratureGrid("S2", np.stack([T.ravel(), P.ravel()], axis=1), W, L)
    A, B, G = np.meshgrid(az, polar, az, indexing="ij")
    W = np.broadcast_to((wx * w_az * w_az)[None, :, None], A.shape).ravel()
    return QuadratureGrid("SO3", np.stack([A.ravel(), B.ravel(), G.ravel()], axis=1), W, L)


# ---------------------------------------------------------------------------
# expansions


def _as_samples(values, grid: QuadratureGrid) -> np.ndarray:
    values = np.asarray(values)
    if values.shape[0] != len(grid):
        raise GridError(f"expected {len(grid)} samples, got {values.shape[0]}")
    return values


def _basis_table(grid: QuadratureGrid, L: int) -> np.ndarray:
    """Orthonormal angular basis at the nodes, columns grouped by rank."""
    if grid.domain == "S2":
        return sph_harm_table(L, grid.nodes[:, 0], grid.nodes[:, 1])
    ms = [m for l in range(L + 1) for m in angular_orders(2, l)]
    return np.exp(1j * np.outer(grid.nodes[:, 0], ms)) / math.sqrt(2 * math.pi)


def _rank_slices(domain: str, L: int) -> list[slice]:
    if domain == "S2":
        return [slice(lm_index(l, -l), lm_index(l, l) + 1) for l in range(L + 1)]
    out, start = [], 0
    for l in range(L + 1):
        n = len(angular_orders(2, l))
        out.append(slice(start, start + n))
        start += n
    return out


def expand_angular(values, grid: QuadratureGrid, L: int) -> dict[int, np.ndarray]:
    """Angular coefficients f_lm = int f B_lm* for l <= L.

    B_lm is Y_lm on S2 and exp(i m phi)/sqrt(2 pi) on S1 (m = +-l). Returns a
    dict rank -> array over m (ordered as ``angular_orders``) with any trailing
    sample axes appended.
    """
    if grid.domain == "SO3":
        raise GridError("use expand_rotation on SO3")
    grid.require(2 * L, "expand_angular")
    f = _as_samples(values, grid)
    B = _basis_table(grid, L)
    flat = f.reshape(len(grid), -1)
    coeffs = (B.conj() * grid.weights[:, None]).T @ flat
    coeffs = coeffs.reshape((B.shape[1],) + f.shape[1:])
    return {l: coeffs[s] for l, s in enumerate(_rank_slices(grid.domain, L))}


def reconstruct_angular(multiplets: dict[int, np.ndarray], domain: str, angles) -> np.ndarray:
    """Evaluate sum_lm f_lm B_lm at angle rows (theta, phi) on S2 or (phi,) on S1."""
    angles = np.asarray(angles, dtype=float)
    angles = angles.reshape(-1, 1) if domain == "S1" else np.atleast_2d(angles)
    L = max(multiplets)
    if domain == "S2":
        B = sph_harm_table(L, angles[:, 0], angles[:, 1])
    else:
        ms = [m for l in range(L + 1) for m in angular_orders(2, l)]
        B = np.exp(1j * np.outer(angles[:, 0], ms)) / math.sqrt(2 * math.pi)
    total = 0
    for l, s in enumerate(_rank_slices(domain, L)):
        if l in multiplets:
            c = np.asarray(multiplets[l])
            total = total + np.tensordot(B[:, s], c, axes=([1], [0]))
    return total


@dataclass
class ExpansionResult:
    """Coefficients of a truncated orientational expansion.

    ``tensors[l]`` is the rank-l Cartesian coefficient (shape (d,)*l plus any
    trailing sample axes) for S1/S2 input; ``turzi[l]`` is the rank-l
    rotation-matrix coefficient for SO(3) input. ``residual`` is the
    quadrature L2 norm of f minus its truncated reconstruction on the grid.
    """

    domain: str
    band_limit: int
    residual: float
    tensors: list[np.ndarray] = field(default_factory=list)
    multiplets: dict[int, np.ndarray] | None = None
    turzi: list[TurziCoefficient] | None = None
    _reduced: list[np.ndarray] | None = field(default=None, repr=False)
    sample_shape: tuple = ()

    def tensor(self, l: int) -> SymmetricTracelessTensor:
        t = self.tensors[l]
        if np.iscomplexobj(t):
            t = t.real
        return SymmetricTracelessTensor(t.shape[0] if l else (2 if self.domain == "S1" else 3), l, t)


def expand_cartesian(values, grid: QuadratureGrid, L: int) -> ExpansionResult:
    """Cartesian expansion F_l = A_l int f T_l(u) for ranks 0..L on S1 or S2."""
    if grid.domain == "SO3":
        raise GridError("use expand_rotation on SO3")
    grid.require(2 * L, "expand_cartesian")
    f = _as_samples(values, grid)
    d = grid.dimension
    u = grid.unit_vectors()
    flat = f.reshape(len(grid), -1)
    weighted = flat * grid.weights[:, None]
    tensors = []
    for l in range(L + 1):
        T = tensor_polynomial_batch(d, l, u)
        F = normalization(d, l) * (T.T @ weighted)
        tensors.append(F.reshape((d,) * l + f.shape[1:]))
    result = ExpansionResult(grid.domain, L, 0.0, tensors=tensors, sample_shape=f.shape[1:])
    diff = f - reconstruct(result, u)
    result.residual = _l2(diff, grid)
    return result


def _l2(diff: np.ndarray, grid: QuadratureGrid) -> float:
    sq = np.abs(diff.reshape(len(grid), -1)) ** 2
    return float(math.sqrt(max(0.0, float(np.sum(grid.integrate(sq))))))


def _rotation_irrep(R: np.ndarray, l: int) -> np.ndarray:
    """Real orthogonal rank-l representation E^T R^(x)l E, shape (n, k, k)."""
    E = _basis(3, l)
    k = E.shape[1]
    n = R.shape[0]
    if l == 0:
        return np.ones((n, 1, 1))
    # X[n, q, ...] = R^(x)l applied to column q of E viewed as a rank-l tensor
    X = np.broadcast_to(E.T.reshape((1, k) + (3,) * l), (n, k) + (3,) * l)
    for axis in range(l):
        X = _apply_axis(R, X, axis)
    X = X.reshape(n, k, -1)
    return np.einsum("ip,nqi->npq", E, X)


def _apply_axis(R: np.ndarray, X: np.ndarray, axis: int) -> np.ndarray:
    # contract R[n, a, b] with tensor axis `axis` (offset by the (n, q) batch axes)
    pos = axis + 2
    Xm = np.moveaxis(X, pos, -1)
    Y = np.einsum("nab,n...b->n...a", R, Xm)
    return np.moveaxis(Y, -1, pos)


def expand_rotation(values, grid: QuadratureGrid, L: int) -> ExpansionResult:
    """Rotation-matrix expansion f(R) = sum_l C_l . R^(x)l on SO(3).

    Each rank is fitted by least squares against the monomials projected onto
    the doubly symmetric traceless subspace, using the Haar quadrature as the
    inner product. The Gram matrix is formed explicitly rather than assumed.
    """
    if grid.domain != "SO3":
        raise GridError("expand_rotation needs an SO3 grid")
    grid.require(2 * L, "expand_rotation")
    f = _as_samples(values, grid)
    flat = f.reshape(len(grid), -1)
    R = grid.rotations()
    turzi, reduced = [], []
    for l in range(L + 1):
        m = _rotation_irrep(R, l)
        k = m.shape[1]
        phi = m.reshape(len(grid), k * k)
        wphi = phi * grid.weights[:, None]
        gram = wphi.T @ phi
        if np.linalg.cond(gram) > 1e8:
            raise GridError(f"singular Gram matrix at rank {l}; grid is defective")
        c = np.linalg.solve(gram, wphi.T @ flat)
        c = c.reshape((k, k, -1))
        reduced.append(c)
        if flat.shape[1] == 1:
            E = _basis(3, l)
            turzi.append(TurziCoefficient(l, E @ c[..., 0] @ E.T))
    result = ExpansionResult(
        "SO3", L, 0.0, turzi=turzi if flat.shape[1] == 1 else None, _reduced=reduced, sample_shape=f.shape[1:]
    )
    diff = f - reconstruct(result, R)
    result.residual = _l2(diff, grid)
    return result


def reconstruct(result: ExpansionResult, points) -> np.ndarray:
    """Evaluate a truncated expansion.

    ``points`` are unit vectors (or angle rows) for S1/S2 results and rotation
    matrices (or Euler-angle rows) for SO(3) results; a single point is
    accepted too.
    """
    pts = np.asarray(points, dtype=float)
    if result.domain == "SO3":
        if pts.shape[-2:] == (3, 3):
            R = pts.reshape(-1, 3, 3)
        elif pts.shape[-1] == 3:
            a = pts.reshape(-1, 3)
            R = euler_to_matrix(a[:, 0], a[:, 1], a[:, 2])
        else:
            raise GridError("SO3 reconstruction needs rotation matrices or Euler angles")
        total = 0
        for l, c in enumerate(result._reduced):
            m = _rotation_irrep(R, l).reshape(len(R), -1)
            total = total + m @ c.reshape(m.shape[1], -1)
        return total.reshape((len(R),) + tuple(result.sample_shape))
    d = 2 if result.domain == "S1" else 3
    u = _points_to_unit(pts, result.domain)
    total = 0
    for l, F in enumerate(result.tensors):
        extra = F.shape[l:]
        mono = monomials(u, l)
        total = total + (mono @ F.reshape(d**l, -1)).reshape((len(u),) + extra)
    return total


def _points_to_unit(pts: np.ndarray, domain: str) -> np.ndarray:
    d = 2 if domain == "S1" else 3
    if pts.ndim == 1 and pts.shape[0] == d:
        pts = pts[None, :]
    if pts.ndim == 2 and pts.shape[1] == d:
        norms = np.linalg.norm(pts, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-10):
            raise GridError("points must be unit vectors")
        return pts
    angles = np.atleast_2d(pts)
    if domain == "S1":
        phi = angles.reshape(-1)
        return np.stack([np.cos(phi), np.sin(phi)], axis=1)
    if angles.shape[1] != 2:
        raise GridError("S2 points need (theta, phi) or 3-vectors")
    th, ph = angles[:, 0], angles[:, 1]
    return np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], axis=1)


# ---------------------------------------------------------------------------
# CSV exchange


def write_grid_csv(path, grid: QuadratureGrid, values, value_names=None) -> None:
    """Write one row per node: angles, weight, value columns.

    Column order: S1 ``phi,weight,...``; S2 ``theta,phi,weight,...``;
    SO3 ``alpha,beta,gamma,weight,...``. A leading ``#`` line records the
    domain, band limit and schema version.
    """
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    values = values.reshape(len(grid), -1)
    if value_names is None:
        value_names = ["value"] if values.shape[1] == 1 else [f"value_{k}" for k in range(values.shape[1])]
    with open(path, "w", newline="") as fh:
        fh.write(f"# qorient-grid domain={grid.domain} band_limit={grid.band_limit} schema_version={CSV_SCHEMA_VERSION}\n")
        w = csv.writer(fh)
        w.writerow(list(ANGLE_COLUMNS[grid.domain]) + ["weight"] + list(value_names))
        for node, weight, row in zip(grid.nodes, grid.weights, values):
            w.writerow([repr(float(a)) for a in node] + [repr(float(weight))] + [repr(float(v)) for v in row])


def read_grid_csv(path, band_limit: int | None = None) -> tuple[QuadratureGrid, np.ndarray]:
    """Read a grid CSV written by :func:`write_grid_csv` (or by hand).

    The domain is taken from the header comment if present, otherwise from
    the angle column names. ``band_limit`` overrides the recorded one and is
    required when the file carries none.
    """
    meta = {}
    rows = []
    with open(Path(path), newline="") as fh:
        lines = [ln for ln in fh if ln.strip()]
    for ln in lines:
        if ln.startswith("#"):
            for tok in ln[1:].split():
                if "=" in tok:
                    k, v = tok.split("=", 1)
                    meta[k] = v
    body = [ln for ln in lines if not ln.startswith("#")]
    reader = csv.reader(body)
    header = [h.strip() for h in next(reader)]
    for r in reader:
        rows.append([float(x) for x in r])
    domain = meta.get("domain")
    if domain is None:
        for dom, cols in ANGLE_COLUMNS.items():
            if tuple(header[: len(cols)]) == cols and header[len(cols)] == "weight":
                domain = dom
        if domain is None:
            raise ValueError(f"cannot infer domain from columns {header}")
    ncols = len(ANGLE_COLUMNS[domain])
    if tuple(header[:ncols]) != ANGLE_COLUMNS[domain] or header[ncols] != "weight":
        raise ValueError(f"columns {header} do not match domain {domain}")
    if band_limit is None:
        if "band_limit" not in meta:
            raise ValueError("band limit not recorded in file; pass band_limit")
        band_limit = int(meta["band_limit"])
    data = np.array(rows, dtype=float)
    if data.ndim != 2 or data.shape[1] < ncols + 2:
        raise ValueError("grid CSV needs at least one value column")
    grid = QuadratureGrid(domain, data[:, :ncols], data[:, ncols], int(band_limit))
    values = data[:, ncols + 1 :]
    return grid, values[:, 0] if values.shape[1] == 1 else values
