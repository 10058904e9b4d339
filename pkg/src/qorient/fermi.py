"""Two-dimensional Fermi-liquid order parameters.

Expectation values are computed at symbol level on a polar momentum grid:
the rank-l symbol is (2 pi)^2 c_l T_l(u) with c_0 = 1 and c_l = 2**(l-1),
which gives (2 pi)^2 (2 u_i u_j - delta_ij) at rank 2. ``mode="exact"``
uses it as is (the 1/p^2 of p_i p_j / p^2 cancels the radial dependence);
``mode="fermi_surface"`` replaces 1/p^l by 1/p_F^l, i.e. multiplies the
symbol by (p/p_F)**l. Expectations are normalized by the particle number
int d^2p/(2 pi)^2 n(p), with hbar = 1.

The operator itself is represented by its finite-difference form
Q_xx = -(2pi)^2/p_F^2 (d_x^2 - d_y^2), Q_xy = -(2pi)^2/p_F^2 2 d_x d_y.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from qorient.expansion import QuadratureGrid, expand_cartesian
from qorient.tensors import SymmetricTracelessTensor, normalization

MODES = ("exact", "fermi_surface")
PF_THRESHOLD = 0.5


class FermiSurfaceError(ValueError):
    pass


def symbol_coefficient(l: int) -> float:
    return 1.0 if l == 0 else 2.0 ** (l - 1)


@dataclass(frozen=True)
class Profile:
    """Analytic occupation: elliptical Fermi sea, optionally Fermi-Dirac smeared.

    Semi-axis ``a`` points along angle ``chi``, ``b`` perpendicular to it.
    With ``smearing`` tau > 0, n = 1/(1 + exp((rho - 1)/tau)) where rho is
    the elliptical radius; tau = 0 gives a sharp step.
    """

    a: float = 1.0
    b: float = 1.0
    chi: float = 0.0
    smearing: float = 0.0
    name: str = "ellipse"

    def __post_init__(self):
        if self.a <= 0 or self.b <= 0:
            raise ValueError("semi-axes must be positive")
        if self.smearing < 0:
            raise ValueError("smearing must be non-negative")

    def elliptical_radius(self, px, py):
        c, s = math.cos(self.chi), math.sin(self.chi)
        along = c * px + s * py
        across = -s * px + c * py
        return np.sqrt((along / self.a) ** 2 + (across / self.b) ** 2)

    def __call__(self, px, py):
        rho = self.elliptical_radius(np.asarray(px, float), np.asarray(py, float))
        if self.smearing == 0:
            return np.where(rho < 1.0, 1.0, np.where(rho == 1.0, 0.5, 0.0))
        x = np.clip((rho - 1.0) / self.smearing, -700, 700)
        return 1.0 / (1.0 + np.exp(x))

    def p_max(self) -> float:
        """Radius beyond which the occupation is negligible (< ~1e-17)."""
        return max(self.a, self.b) * (1.0 + 40.0 * self.smearing) * (1.5 if self.smearing == 0 else 1.05)

    def label(self) -> str:
        if self.name == "disk":
            base = f"disk:{self.a!r}"
        else:
            base = f"ellipse:{self.a!r},{self.b!r},{self.chi!r}"
        return base + (f",{self.smearing!r}" if self.smearing else "")


def parse_profile(text: str) -> Profile:
    """Parse ``disk``, ``disk:pF[,tau]`` or ``ellipse:a,b,chi[,tau]``."""
    kind, _, args = text.partition(":")
    kind = kind.strip().lower()
    vals = [float(v) for v in args.split(",") if v.strip()] if args else []
    if kind == "disk":
        if len(vals) > 2:
            raise ValueError("disk takes at most p_F and smearing")
        pf = vals[0] if vals else 1.0
        tau = vals[1] if len(vals) > 1 else 0.0
        return Profile(pf, pf, 0.0, tau, name="disk")
    if kind == "ellipse":
        if len(vals) not in (3, 4):
            raise ValueError("ellipse needs a,b,chi[,smearing]")
        return Profile(vals[0], vals[1], vals[2], vals[3] if len(vals) == 4 else 0.0)
    raise ValueError(f"unknown profile {text!r}")


@dataclass(frozen=True)
class MomentumOccupation:
    """Occupation n(p, phi) on a polar tensor grid.

    ``radial_weights`` integrate f(p) p dp; angles are uniform on [0, 2 pi).
    """

    radii: np.ndarray = field(repr=False)
    radial_weights: np.ndarray = field(repr=False)
    angles: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    source: str = ""

    def __post_init__(self):
        r = np.array(self.radii, float)
        w = np.array(self.radial_weights, float)
        a = np.array(self.angles, float)
        v = np.clip(np.array(self.values, float), 0.0, 1.0)
        if v.shape != (len(r), len(a)) or w.shape != r.shape:
            raise ValueError("occupation values must have shape (n_radial, n_angle)")
        spacing = np.diff(np.concatenate([a, [a[0] + 2 * math.pi]]))
        if not np.allclose(spacing, 2 * math.pi / len(a), atol=1e-9):
            raise ValueError("angles must be uniform on [0, 2 pi)")
        for x in (r, w, a, v):
            x.setflags(write=False)
        object.__setattr__(self, "radii", r)
        object.__setattr__(self, "radial_weights", w)
        object.__setattr__(self, "angles", a)
        object.__setattr__(self, "values", v)

    @property
    def angle_grid(self) -> QuadratureGrid:
        n = len(self.angles)
        return QuadratureGrid("S1", self.angles[:, None], np.full(n, 2 * math.pi / n), n - 1)

    def particle_number(self) -> float:
        """int d^2p / (2 pi)^2 n(p)."""
        dphi = 2 * math.pi / len(self.angles)
        return float(self.radial_weights @ self.values.sum(axis=1) * dphi / (2 * math.pi) ** 2)

    def angular_mean(self) -> np.ndarray:
        return self.values.mean(axis=1)

    @classmethod
    def from_function(
        cls, func: Callable, p_max: float, n_radial: int = 256, n_angle: int = 256, source: str = ""
    ) -> "MomentumOccupation":
        """Sample ``func(px, py)`` on Gauss-Legendre radii in [0, p_max] x uniform angles."""
        x, w = np.polynomial.legendre.leggauss(n_radial)
        r = 0.5 * p_max * (x + 1.0)
        wr = 0.5 * p_max * w * r
        phi = 2 * math.pi * np.arange(n_angle) / n_angle
        P, F = np.meshgrid(r, phi, indexing="ij")
        return cls(r, wr, phi, func(P * np.cos(F), P * np.sin(F)), source)

    @classmethod
    def from_profile(cls, profile: Profile, n_radial: int = 256, n_angle: int = 256) -> "MomentumOccupation":
        return cls.from_function(profile, profile.p_max(), n_radial, n_angle, source=profile.label())

    @classmethod
    def from_csv(cls, path) -> "MomentumOccupation":
        """Read rows ``p,phi,n`` on a tensor grid; radial weights by the trapezoid rule."""
        with open(path, newline="") as fh:
            rows = [r for r in csv.DictReader(ln for ln in fh if not ln.startswith("#"))]
        if not rows or not {"p", "phi", "n"} <= set(rows[0]):
            raise ValueError("occupation CSV needs columns p, phi, n")
        data = np.array([[float(r["p"]), float(r["phi"]), float(r["n"])] for r in rows])
        radii = np.unique(data[:, 0])
        angles = np.unique(data[:, 1])
        if len(data) != len(radii) * len(angles):
            raise ValueError("occupation CSV must cover a full (p, phi) tensor grid")
        values = np.full((len(radii), len(angles)), np.nan)
        values[np.searchsorted(radii, data[:, 0]), np.searchsorted(angles, data[:, 1])] = data[:, 2]
        if np.isnan(values).any():
            raise ValueError("duplicate or missing (p, phi) rows")
        # trapezoid in p for f(p) p, including the segment from 0 to the first radius
        knots = np.concatenate([[0.0], radii]) if radii[0] > 0 else radii
        h = np.diff(knots)
        wk = np.zeros(len(knots))
        wk[:-1] += h / 2
        wk[1:] += h / 2
        wk *= knots
        weights = wk[-len(radii) :]
        return cls(radii, weights, angles, values, source=str(path))


def estimate_pF(occ: MomentumOccupation, threshold: float = PF_THRESHOLD) -> float:
    """Radius where the angle-averaged occupation first drops below ``threshold``."""
    mean = occ.angular_mean()
    r = occ.radii
    for k in range(len(r) - 1):
        if mean[k] >= threshold > mean[k + 1]:
            t = (mean[k] - threshold) / (mean[k] - mean[k + 1])
            return float(r[k] + t * (r[k + 1] - r[k]))
    raise FermiSurfaceError("no crossing: occupation never drops through the threshold")


def fermi_order_parameters(
    occ: MomentumOccupation,
    L: int,
    mode: str = "exact",
    p_F: float | None = None,
    threshold: float = PF_THRESHOLD,
) -> list[SymmetricTracelessTensor]:
    """Rank-0..L expectation values per particle of the momentum-space symbols."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    grid = occ.angle_grid
    if len(occ.angles) < 2 * L + 1:
        raise ValueError(f"angular resolution {len(occ.angles)} < 2L+1 = {2 * L + 1}")
    if mode == "fermi_surface" and p_F is None:
        p_F = estimate_pF(occ, threshold)
    ls = np.arange(L + 1)
    if mode == "exact":
        radial = np.ones((len(occ.radii), L + 1))
    else:
        radial = (occ.radii[:, None] / p_F) ** ls[None, :]
    # g[phi, l] = int p dp n(p, phi) (radial factor)_l
    g = np.einsum("r,rf,rl->fl", occ.radial_weights, occ.values, radial)
    result = expand_cartesian(g, grid, L)
    n_particles = occ.particle_number()
    if not n_particles > 0:
        raise FermiSurfaceError("occupation has no particles")
    out = []
    for l in range(L + 1):
        F = result.tensors[l][..., l]
        # int dphi g T_l = F / A_l ; (2pi)^2 from the symbol cancels the 1/(2pi)^2 of the measure
        value = symbol_coefficient(l) * F / normalization(2, l) / n_particles
        out.append(SymmetricTracelessTensor(2, l, value))
    return out


def nematic_symbol(px, py, p_F: float) -> tuple[np.ndarray, np.ndarray]:
    """Weyl symbols (Q_xx, Q_xy) = (2pi)^2/p_F^2 (p_x^2 - p_y^2, 2 p_x p_y)."""
    pref = (2 * math.pi) ** 2 / p_F**2
    px, py = np.asarray(px, float), np.asarray(py, float)
    return pref * (px**2 - py**2), pref * 2 * px * py


def apply_nematic_stencil(psi, spacing, p_F: float) -> tuple[np.ndarray, np.ndarray]:
    """Central-difference Q_xx psi and Q_xy psi on a periodic grid.

    ``psi[ix, iy]``; ``spacing`` is h or (h_x, h_y).
    """
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim != 2 or min(psi.shape) < 4:
        raise ValueError("stencil needs a 2D grid with at least 4 points per dimension")
    hx, hy = (spacing, spacing) if np.isscalar(spacing) else spacing
    r = lambda dx, dy: np.roll(psi, (-dx, -dy), axis=(0, 1))  # noqa: E731  psi(x + dx h)
    dxx = (r(1, 0) - 2 * psi + r(-1, 0)) / hx**2
    dyy = (r(0, 1) - 2 * psi + r(0, -1)) / hy**2
    dxy = (r(1, 1) - r(1, -1) - r(-1, 1) + r(-1, -1)) / (4 * hx * hy)
    pref = -((2 * math.pi) ** 2) / p_F**2
    return pref * (dxx - dyy), pref * 2 * dxy
