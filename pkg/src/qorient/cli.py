"""Command-line front end.

Exit codes: 0 success, 1 malformed input or usage, 2 physics-invariant
violation, 3 verification failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from qorient import __version__
from qorient.angular import HalfInteger, clebsch_gordan, euler_to_matrix
from qorient.expansion import (
    GridError,
    build_grid,
    expand_angular,
    expand_cartesian,
    expand_rotation,
    read_grid_csv,
    write_grid_csv,
)
from qorient.fermi import MODES, FermiSurfaceError, MomentumOccupation, estimate_pF, fermi_order_parameters, parse_profile
from qorient.io import SCHEMA_VERSION, SchemaError, dumps, load_state, matrix_to_json
from qorient.molecular import (
    RotationField,
    lab_axis_nematic,
    molecular_nematic,
    molecular_polarization,
    uniform_density,
    von_mises_density,
)
from qorient.quantum import DensityMatrix, DimensionError, expectation, order_parameter_operator, wigner_from_state
from qorient.spin import NO_NEMATIC_NOTE, SpinSystem, nematic_operator_closed, polarization_operator_closed, spin_kernel
from qorient.verification import CRITERIA, format_table, run_criteria

SYSTEMS = ("spin", "fermi", "molecular", "classical")
FORMATS = ("json", "csv")
PROVENANCE_KEYS = ("package", "version", "grid", "measure", "tolerances")
TOLERANCES = {"hermiticity": 1e-12, "trace": 1e-12, "positivity": 1e-10}


class UsageError(ValueError):
    """Malformed input: exit code 1."""


class InvariantError(ValueError):
    """Physics-invariant violation: exit code 2."""


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    system: str | None = None
    spin: str | None = None
    profile: str | None = None
    profile_csv: str | None = None
    mode: str = "exact"
    field: str | None = None
    samples: str | None = None
    state: str | None = None
    ranks: tuple[int, ...] = (1, 2)
    band_limit: int | None = None
    tolerance: float | None = None
    only: tuple[str, ...] = ()
    output: str | None = None
    format: str = "json"
    j1: str | None = None
    j2: str | None = None

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["ranks"] = list(self.ranks)
        d["only"] = list(self.only)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        d = dict(d)
        d["ranks"] = tuple(d.get("ranks", (1, 2)))
        d["only"] = tuple(d.get("only", ()))
        return cls(**d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        return cls.from_dict(json.loads(text))


def _parse_ranks(text: str) -> tuple[int, ...]:
    try:
        ranks = tuple(int(r) for r in text.split(",") if r.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"ranks must be comma-separated integers: {text!r}") from exc
    if not ranks or any(r < 0 for r in ranks):
        raise argparse.ArgumentTypeError("ranks must be non-negative and non-empty")
    return ranks


def _parse_only(text: str) -> tuple[str, ...]:
    return tuple(x.strip() for x in text.split(",") if x.strip())


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="qorient", description="Orientational order parameters for classical and quantum systems.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    def common(sp, formats=("json",)):
        sp.add_argument("--output", help="write the report here instead of stdout")
        sp.add_argument("--format", choices=formats, default="json")

    op = sub.add_parser("order-params", help="order-parameter tensors of a state or distribution")
    op.add_argument("--system", choices=SYSTEMS, required=True)
    op.add_argument("--spin", help="spin quantum number, e.g. 1 or 3/2")
    op.add_argument("--state", help="density-matrix JSON, or builtin:mixed / builtin:up")
    op.add_argument("--profile", help="fermi occupation: disk[:pF[,tau]] or ellipse:a,b,chi[,tau]")
    op.add_argument("--profile-csv", help="fermi occupation CSV with columns p,phi,n")
    op.add_argument("--mode", choices=MODES, default="exact")
    op.add_argument("--field", help="molecular density: uniform, vmf-so3:kappa,a,b,g, or an SO3 grid CSV")
    op.add_argument("--samples", help="classical samples: grid CSV on S1 or S2")
    op.add_argument("--ranks", type=_parse_ranks, default=(1, 2))
    op.add_argument("--band-limit", type=int)
    common(op)

    ex = sub.add_parser("expand", help="angular and Cartesian coefficients of sampled data")
    ex.add_argument("samples", help="grid CSV (S1, S2 or SO3)")
    ex.add_argument("--band-limit", type=int, required=True, help="highest rank to extract")
    common(ex)

    ve = sub.add_parser("verify", help="run the acceptance criteria")
    ve.add_argument("--tolerance", type=float)
    ve.add_argument("--only", type=_parse_only, default=(), help=f"comma list of: {', '.join(CRITERIA)}")
    common(ve)

    wi = sub.add_parser("wigner", help="Wigner-function samples of a spin state")
    wi.add_argument("--spin", required=True)
    wi.add_argument("--state", required=True)
    wi.add_argument("--band-limit", type=int)
    common(wi, FORMATS)

    cg = sub.add_parser("clebsch", help="tabulate Clebsch-Gordan coefficients")
    cg.add_argument("--j1", required=True)
    cg.add_argument("--j2", required=True)
    common(cg)
    return p


def config_from_args(args: argparse.Namespace) -> RunConfig:
    fields = {f.name for f in dataclasses.fields(RunConfig)}
    kw = {k: v for k, v in vars(args).items() if k in fields and v is not None}
    for key in ("ranks", "only"):
        if key in kw:
            kw[key] = tuple(kw[key])
    return RunConfig(**kw)


# ---------------------------------------------------------------------------
# helpers


def _spin(text: str | None) -> SpinSystem:
    if text is None:
        raise UsageError("--spin is required for this system")
    try:
        return SpinSystem(HalfInteger.of(text))
    except (ValueError, TypeError) as exc:
        raise UsageError(f"bad spin value {text!r}: {exc}") from exc


def _state(source: str | None, n: int) -> DensityMatrix:
    if source is None:
        raise UsageError("--state is required")
    if source == "builtin:mixed":
        return DensityMatrix.maximally_mixed(n)
    if source == "builtin:up":
        psi = np.zeros(n)
        psi[0] = 1.0
        return DensityMatrix.pure(psi)
    try:
        rho = load_state(source)
    except SchemaError as exc:
        raise UsageError(str(exc)) from exc
    if rho.dim != n:
        raise UsageError(f"state dimension {rho.dim} does not match spin dimension {n}")
    problem = rho.violation()
    if problem is not None:
        raise InvariantError(f"state violates {problem}")
    return rho


def eigen_summary(t: np.ndarray) -> dict:
    """Eigen-decomposition of a symmetric rank-2 tensor, largest eigenvalue first.

    Each eigenvector's sign is fixed so its largest-magnitude entry is positive.
    """
    t = 0.5 * (t + t.T)
    vals, vecs = np.linalg.eigh(t)
    order = np.argsort(-vals, kind="stable")
    vals, vecs = vals[order], vecs[:, order]
    for k in range(vecs.shape[1]):
        v = vecs[:, k]
        if v[np.argmax(np.abs(v))] < 0:
            vecs[:, k] = -v
    return {
        "eigenvalues": vals.tolist(),
        "eigenvectors": vecs.T.tolist(),
        "director": vecs[:, 0].tolist(),
        "strength": float(vals[0]),
    }


def _rank_entry(l: int, d: int, data, note: str = "", **extra) -> dict:
    data = np.asarray(data, dtype=float)
    entry = {"rank": l, "d": d, "tensor": data.tolist(), "note": note, **extra}
    if l == 2 and data.shape == (d, d):
        entry["eigen"] = eigen_summary(data)
    return entry


def _grid_info(grid) -> dict:
    return {"domain": grid.domain, "band_limit": grid.band_limit, "nodes": len(grid)}


def _provenance(grid_info: dict, measure: str, **extra) -> dict:
    return {
        "package": "qorient",
        "version": __version__,
        "grid": grid_info,
        "measure": measure,
        "tolerances": dict(TOLERANCES),
        **extra,
    }


def validate_report(report: dict) -> None:
    """Self-check: every report carries a schema version and a full provenance block."""
    if report.get("schema_version") != SCHEMA_VERSION:
        raise ValueError("report lacks schema_version")
    prov = report.get("provenance")
    if not isinstance(prov, dict):
        raise ValueError("report lacks a provenance block")
    missing = [k for k in PROVENANCE_KEYS if k not in prov]
    if missing:
        raise ValueError(f"provenance block is missing {missing}")


def _report(kind: str, cfg: RunConfig, body: dict, provenance: dict) -> dict:
    rep = {"schema_version": SCHEMA_VERSION, "type": kind, "config": cfg.to_dict(), **body, "provenance": provenance}
    validate_report(rep)
    return rep


def _emit(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# order-params


def _spin_order_params(cfg: RunConfig) -> tuple[dict, dict]:
    sys_ = _spin(cfg.spin)
    rho = _state(cfg.state, sys_.dim)
    twice = sys_.s.twice
    band = cfg.band_limit if cfg.band_limit is not None else max(2 * twice, twice + max(cfg.ranks))
    try:
        kernel = spin_kernel(sys_.s, build_grid("S2", band))
    except GridError as exc:
        raise UsageError(str(exc)) from exc
    ranks = []
    closed = {1: polarization_operator_closed(sys_.s), 2: nematic_operator_closed(sys_.s)}
    for l in cfg.ranks:
        try:
            op = order_parameter_operator(kernel, 3, l)
        except (GridError, ValueError) as exc:
            raise UsageError(str(exc)) from exc
        note = ""
        if l > twice:
            note = NO_NEMATIC_NOTE if (l == 2 and twice == 1) else f"rank {l} exceeds 2s = {twice}; the tensor vanishes"
            op = op.scaled(0.0)
        extra = {}
        if l in closed:
            extra["closed_form_difference"] = float(np.max(np.abs(op.components - closed[l].components), initial=0.0))
        ranks.append(_rank_entry(l, 3, expectation(rho, op).data, note, **extra))
    prov = _provenance(
        _grid_info(kernel.grid),
        "invariant measure dOmega on S2 for order parameters; mu = (2s+1)/(4 pi) for the state/Wigner pair",
        spin=str(sys_.s),
    )
    return {"system": "spin", "ranks": ranks}, prov


def _fermi_order_params(cfg: RunConfig) -> tuple[dict, dict]:
    L = max(cfg.ranks)
    n_angle = max(256, 2 * L + 1)
    try:
        if cfg.profile_csv:
            occ = MomentumOccupation.from_csv(cfg.profile_csv)
        elif cfg.profile:
            prof = parse_profile(cfg.profile)
            occ = MomentumOccupation.from_profile(prof, n_angle=n_angle)
        else:
            raise UsageError("--profile or --profile-csv is required for fermi")
    except (OSError, ValueError) as exc:
        raise UsageError(str(exc)) from exc
    try:
        p_F = estimate_pF(occ)
    except FermiSurfaceError as exc:
        if cfg.mode == "fermi_surface":
            raise InvariantError(f"Fermi surface: {exc}") from exc
        p_F = None
    try:
        tensors = fermi_order_parameters(occ, L, cfg.mode, p_F=p_F)
    except FermiSurfaceError as exc:
        raise InvariantError(f"Fermi surface: {exc}") from exc
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    ranks = [_rank_entry(l, 2, tensors[l].data) for l in cfg.ranks]
    prov = _provenance(
        {"domain": "polar", "radial_nodes": len(occ.radii), "angular_nodes": len(occ.angles), "band_limit": len(occ.angles) - 1},
        "d^2p/(2 pi)^2, normalized by particle number",
        mode=cfg.mode,
        p_F=p_F,
        source=occ.source,
    )
    return {"system": "fermi", "ranks": ranks}, prov


def _molecular_field(cfg: RunConfig) -> RotationField:
    source = cfg.field or "uniform"
    band = cfg.band_limit if cfg.band_limit is not None else 8
    if band < 4:
        raise UsageError("molecular tensors need --band-limit >= 4")
    if source == "uniform":
        return uniform_density(build_grid("SO3", band))
    if source.startswith("vmf-so3:"):
        try:
            kappa, a, b, g = (float(x) for x in source.split(":", 1)[1].split(","))
        except ValueError as exc:
            raise UsageError("vmf-so3 needs kappa,alpha0,beta0,gamma0") from exc
        return von_mises_density(kappa, euler_to_matrix(a, b, g), build_grid("SO3", band))
    try:
        grid, values = read_grid_csv(source, cfg.band_limit)
        return RotationField(grid, values, True, source)
    except (OSError, GridError) as exc:
        raise UsageError(str(exc)) from exc
    except ValueError as exc:
        if "non-negative" in str(exc):
            raise InvariantError(f"density violates non-negativity: {exc}") from exc
        raise UsageError(str(exc)) from exc


def _molecular_order_params(cfg: RunConfig) -> tuple[dict, dict]:
    field_ = _molecular_field(cfg)
    ranks = []
    for l in cfg.ranks:
        if l == 1:
            P = molecular_polarization(field_)
            ranks.append({"rank": 1, "indices": "lab,body", "tensor": P.tolist(), "note": ""})
        elif l == 2:
            Q = molecular_nematic(field_)
            lab = lab_axis_nematic(Q)
            ranks.append(
                {
                    "rank": 2,
                    "indices": "lab,body,lab,body",
                    "tensor": Q.tolist(),
                    "note": "eigen refers to the lab block Q[:, z, :, z] of the body z axis",
                    "eigen": eigen_summary(lab),
                }
            )
        else:
            raise UsageError("molecular order parameters are defined for ranks 1 and 2")
    prov = _provenance(_grid_info(field_.grid), "Haar measure on SO(3), total volume 8 pi^2", field=field_.label)
    return {"system": "molecular", "ranks": ranks}, prov


def _classical_order_params(cfg: RunConfig) -> tuple[dict, dict]:
    if not cfg.samples:
        raise UsageError("--samples is required for classical")
    grid, values = _read_samples(cfg.samples, cfg.band_limit)
    if grid.domain == "SO3":
        raise UsageError("classical samples must be on S1 or S2; use --system molecular for SO3")
    try:
        res = expand_cartesian(values, grid, max(cfg.ranks))
    except GridError as exc:
        raise UsageError(str(exc)) from exc
    ranks = [_rank_entry(l, grid.dimension, res.tensors[l]) for l in cfg.ranks]
    prov = _provenance(_grid_info(grid), f"invariant measure on {grid.domain}", residual=res.residual)
    return {"system": "classical", "ranks": ranks}, prov


def _read_samples(path: str, band_limit):
    try:
        return read_grid_csv(path, band_limit)
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read samples {path}: {exc}") from exc


def cmd_order_params(cfg: RunConfig) -> int:
    handler = {
        "spin": _spin_order_params,
        "fermi": _fermi_order_params,
        "molecular": _molecular_order_params,
        "classical": _classical_order_params,
    }[cfg.system]
    body, prov = handler(cfg)
    _emit(dumps(_report("order_parameters", cfg, body, prov)), cfg.output)
    return 0


# ---------------------------------------------------------------------------
# expand


def _complex_list(a) -> dict:
    a = np.asarray(a, dtype=complex)
    return {"re": a.real.tolist(), "im": a.imag.tolist()}


def cmd_expand(cfg: RunConfig) -> int:
    grid, values = _read_samples(cfg.samples, None)
    L = cfg.band_limit
    if L is None or L < 0:
        raise UsageError("--band-limit must be a non-negative rank")
    if np.ndim(values) != 1:
        raise UsageError("expand takes a single value column")
    try:
        if grid.domain == "SO3":
            res = expand_rotation(values, grid, L)
            ranks = [{"rank": c.l, "turzi": np.asarray(c.data).tolist()} for c in res.turzi]
        else:
            res = expand_cartesian(values, grid, L)
            mult = expand_angular(values, grid, L)
            ranks = [
                {"rank": l, "cartesian": np.asarray(res.tensors[l]).tolist(), "angular": _complex_list(mult[l])}
                for l in range(L + 1)
            ]
    except GridError as exc:
        raise UsageError(f"grid/band-limit mismatch: {exc}") from exc
    body = {"domain": grid.domain, "band_limit": L, "residual": res.residual, "ranks": ranks}
    prov = _provenance(_grid_info(grid), f"invariant measure on {grid.domain}", source=str(cfg.samples))
    _emit(dumps(_report("expansion", cfg, body, prov)), cfg.output)
    return 0


# ---------------------------------------------------------------------------
# verify, wigner, clebsch


def cmd_verify(cfg: RunConfig) -> int:
    try:
        results = run_criteria(list(cfg.only) or None, cfg.tolerance)
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from exc
    table = format_table(results)
    print(table)
    if cfg.output:
        prov = _provenance({"domain": "various"}, "per criterion", seed="fixed")
        rep = _report("verification", cfg, {"criteria": [r.to_dict() for r in results], "table": table}, prov)
        Path(cfg.output).write_text(dumps(rep))
    return 0 if all(r.passed for r in results) else 3


def cmd_wigner(cfg: RunConfig) -> int:
    sys_ = _spin(cfg.spin)
    rho = _state(cfg.state, sys_.dim)
    band = cfg.band_limit if cfg.band_limit is not None else max(2 * sys_.s.twice, 8)
    try:
        kernel = spin_kernel(sys_.s, build_grid("S2", band))
    except GridError as exc:
        raise UsageError(str(exc)) from exc
    W = wigner_from_state(rho, kernel)
    if cfg.format == "csv":
        if not cfg.output:
            raise UsageError("--format csv needs --output")
        write_grid_csv(cfg.output, kernel.grid, W, ["W"])
        return 0
    body = {
        "spin": str(sys_.s),
        "state": matrix_to_json(rho.data),
        "samples": {"theta": kernel.grid.nodes[:, 0].tolist(), "phi": kernel.grid.nodes[:, 1].tolist(),
                    "weight": kernel.grid.weights.tolist(), "W": W.tolist()},
    }
    prov = _provenance(_grid_info(kernel.grid), f"dOmega with mu = {kernel.mu!r} normalizing the kernel")
    _emit(dumps(_report("wigner", cfg, body, prov)), cfg.output)
    return 0


def cmd_clebsch(cfg: RunConfig) -> int:
    try:
        j1, j2 = HalfInteger.of(cfg.j1), HalfInteger.of(cfg.j2)
    except (ValueError, TypeError) as exc:
        raise UsageError(f"bad angular momentum: {exc}") from exc
    if j1.twice + j2.twice > 40:
        raise UsageError("j1 + j2 is limited to 20")
    rows = []
    for tJ in range(abs(j1.twice - j2.twice), j1.twice + j2.twice + 1, 2):
        J = HalfInteger(tJ)
        for M in J.projections():
            for m1 in j1.projections():
                tm2 = M.twice - m1.twice
                if abs(tm2) > j2.twice:
                    continue
                m2 = HalfInteger(tm2)
                c = clebsch_gordan(j1, m1, j2, m2, J, M)
                if c != 0.0:
                    rows.append({"J": str(J), "M": str(M), "m1": str(m1), "m2": str(m2), "value": c})
    body = {"j1": str(j1), "j2": str(j2), "convention": "Condon-Shortley", "coefficients": rows}
    prov = _provenance({"domain": "none"}, "exact rational arithmetic, rounded to float")
    _emit(dumps(_report("clebsch_gordan", cfg, body, prov)), cfg.output)
    return 0


COMMANDS = {
    "order-params": cmd_order_params,
    "expand": cmd_expand,
    "verify": cmd_verify,
    "wigner": cmd_wigner,
    "clebsch": cmd_clebsch,
}


def _threads() -> int | None:
    raw = os.environ.get("QORIENT_THREADS")
    if raw is None or raw == "":
        return None
    try:
        n = int(raw)
    except ValueError as exc:
        raise UsageError(f"QORIENT_THREADS must be a positive integer, got {raw!r}") from exc
    if n < 1:
        raise UsageError(f"QORIENT_THREADS must be a positive integer, got {raw!r}")
    return n


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    cfg = config_from_args(args)
    if cfg.format == "csv" and cfg.subcommand != "wigner":
        print("qorient: error: csv output is only for grid samples (wigner)", file=sys.stderr)
        return 1
    try:
        threads = _threads()
        if threads is None:
            return COMMANDS[cfg.subcommand](cfg)
        from threadpoolctl import threadpool_limits

        with threadpool_limits(limits=threads):
            return COMMANDS[cfg.subcommand](cfg)
    except InvariantError as exc:
        print(f"qorient: physics invariant violated: {exc}", file=sys.stderr)
        return 2
    except (UsageError, DimensionError) as exc:
        print(f"qorient: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
