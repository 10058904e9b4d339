import json
import math
import subprocess
import sys

import numpy as np
import pytest

from qorient.cli import RunConfig, build_parser, config_from_args, eigen_summary, main, validate_report
from qorient.expansion import build_grid, write_grid_csv


def _state(path, m):
    m = np.asarray(m, dtype=complex)
    path.write_text(json.dumps({"dim": len(m), "re": m.real.tolist(), "im": m.imag.tolist()}))
    return str(path)


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


class TestRunConfig:
    def test_round_trip(self):
        args = build_parser().parse_args(["order-params", "--system", "spin", "--spin", "3/2", "--ranks", "1,2,3"])
        cfg = config_from_args(args)
        assert cfg.ranks == (1, 2, 3)
        assert RunConfig.from_dict(cfg.to_dict()) == cfg
        assert RunConfig.from_json(cfg.to_json()) == cfg
        assert RunConfig.from_json(cfg.to_json()).to_json() == cfg.to_json()

    def test_verify_config(self):
        cfg = config_from_args(build_parser().parse_args(["verify", "--only", "a,b", "--tolerance", "1e-3"]))
        assert cfg.only == ("a", "b") and cfg.tolerance == 1e-3
        assert RunConfig.from_json(cfg.to_json()) == cfg


class TestOrderParams:
    def test_mixed_spin_one(self, tmp_path, capsys):
        path = _state(tmp_path / "mixed.json", np.eye(3) / 3)
        code, out, _ = run(["order-params", "--system", "spin", "--spin", "1", "--state", path, "--ranks", "1,2"], capsys)
        assert code == 0
        rep = json.loads(out)
        validate_report(rep)
        for r in rep["ranks"]:
            assert np.max(np.abs(r["tensor"])) < 1e-12

    def test_spin_half_nematic_note(self, tmp_path, capsys):
        path = _state(tmp_path / "up.json", [[1, 0], [0, 0]])
        code, out, _ = run(["order-params", "--system", "spin", "--spin", "1/2", "--state", path, "--ranks", "2"], capsys)
        rep = json.loads(out)
        assert code == 0
        assert np.all(np.array(rep["ranks"][0]["tensor"]) == 0)
        assert "spin-1/2" in rep["ranks"][0]["note"]

    def test_fermi_ellipse_director(self, capsys):
        code, out, _ = run(["order-params", "--system", "fermi", "--profile", "ellipse:1.2,1.0,0", "--ranks", "2"], capsys)
        assert code == 0
        eig = json.loads(out)["ranks"][0]["eigen"]
        assert abs(eig["director"][0]) == pytest.approx(1.0, abs=1e-10)
        assert eig["strength"] > 0

    def test_fermi_surface_mode(self, capsys):
        code, out, _ = run(
            ["order-params", "--system", "fermi", "--profile", "ellipse:1.2,1.0,0,0.05", "--mode", "fermi_surface", "--ranks", "2"],
            capsys,
        )
        rep = json.loads(out)
        assert code == 0 and rep["provenance"]["p_F"] > 1.0

    def test_molecular(self, capsys):
        code, out, _ = run(["order-params", "--system", "molecular", "--field", "uniform", "--ranks", "1,2"], capsys)
        rep = json.loads(out)
        assert code == 0
        assert np.max(np.abs(rep["ranks"][0]["tensor"])) < 1e-12
        assert rep["ranks"][1]["indices"] == "lab,body,lab,body"

    def test_molecular_vmf(self, capsys):
        code, out, _ = run(["order-params", "--system", "molecular", "--field", "vmf-so3:8,0,0,0", "--ranks", "1", "--band-limit", "40"], capsys)
        P = np.array(json.loads(out)["ranks"][0]["tensor"])
        # conjugation invariance of exp(kappa tr R) makes P a multiple of the identity
        assert code == 0 and np.allclose(P, P[0, 0] * np.eye(3), atol=1e-8)

    def test_classical_samples(self, tmp_path, capsys):
        g = build_grid("S1", 8)
        phi = g.nodes[:, 0]
        path = tmp_path / "two.csv"
        write_grid_csv(path, g, (1 + np.cos(2 * phi)) / (2 * math.pi))
        code, out, _ = run(["order-params", "--system", "classical", "--samples", str(path), "--ranks", "1,2"], capsys)
        rep = json.loads(out)
        assert code == 0
        assert np.max(np.abs(rep["ranks"][0]["tensor"])) < 1e-14
        assert rep["ranks"][1]["eigen"]["strength"] > 0

    def test_non_psd_state_exit_2(self, tmp_path, capsys):
        path = _state(tmp_path / "bad.json", [[1.5, 0], [0, -0.5]])
        code, _, err = run(["order-params", "--system", "spin", "--spin", "1/2", "--state", path], capsys)
        assert code == 2 and "positive semidefiniteness" in err

    def test_non_hermitian_state_exit_2(self, tmp_path, capsys):
        path = _state(tmp_path / "bad.json", [[0.5, 0.3], [0, 0.5]])
        code, _, err = run(["order-params", "--system", "spin", "--spin", "1/2", "--state", path], capsys)
        assert code == 2 and "hermiticity" in err

    @pytest.mark.parametrize(
        "argv",
        [
            ["order-params", "--system", "spin", "--spin", "x", "--state", "builtin:mixed"],
            ["order-params", "--system", "spin", "--spin", "1", "--state", "/nonexistent.json"],
            ["order-params", "--system", "fermi", "--profile", "circle"],
            ["order-params", "--system", "bogus"],
            ["order-params", "--system", "spin", "--spin", "1", "--state", "builtin:mixed", "--ranks", "a"],
            ["order-params", "--system", "spin", "--spin", "1", "--state", "builtin:mixed", "--band-limit", "1"],
            ["order-params", "--system", "molecular", "--band-limit", "2"],
            ["order-params", "--system", "classical"],
            ["order-params", "--system", "spin", "--spin", "1", "--state", "builtin:mixed", "--format", "csv"],
            ["nonsense"],
        ],
    )
    def test_malformed_exit_1(self, argv, capsys):
        with pytest.raises(SystemExit) as exc:
            sys.exit(main(argv))
        assert exc.value.code == 1

    def test_dimension_mismatch(self, tmp_path, capsys):
        path = _state(tmp_path / "s.json", np.eye(2) / 2)
        code, _, _ = run(["order-params", "--system", "spin", "--spin", "1", "--state", path], capsys)
        assert code == 1

    def test_bit_identical(self, tmp_path, capsys):
        argv = ["order-params", "--system", "spin", "--spin", "3/2", "--state", "builtin:up", "--ranks", "1,2,3"]
        outs = [run(argv, capsys)[1] for _ in range(2)]
        assert outs[0] == outs[1]

    def test_output_file(self, tmp_path, capsys):
        out = tmp_path / "r.json"
        code, stdout, _ = run(["order-params", "--system", "spin", "--spin", "1", "--state", "builtin:up", "--output", str(out)], capsys)
        assert code == 0 and stdout == ""
        validate_report(json.loads(out.read_text()))


class TestProvenance:
    def test_missing_block_fails(self):
        with pytest.raises(ValueError):
            validate_report({"schema_version": 1})
        with pytest.raises(ValueError):
            validate_report({"schema_version": 1, "provenance": {"package": "qorient"}})
        with pytest.raises(ValueError):
            validate_report({"provenance": {}})


class TestExpand:
    def test_uniform_circle(self, tmp_path, capsys):
        g = build_grid("S1", 6)
        path = tmp_path / "u.csv"
        write_grid_csv(path, g, np.full(len(g), 1 / (2 * math.pi)))
        code, out, _ = run(["expand", str(path), "--band-limit", "3"], capsys)
        rep = json.loads(out)
        assert code == 0
        assert rep["ranks"][0]["cartesian"] == pytest.approx(1 / (2 * math.pi))
        for r in rep["ranks"][1:]:
            assert np.max(np.abs(r["cartesian"])) < 1e-15

    def test_two_peaked_is_nematic(self, tmp_path, capsys):
        g = build_grid("S1", 8)
        phi = g.nodes[:, 0]
        f = np.exp(2 * np.cos(phi - 0.4)) + np.exp(2 * np.cos(phi - 0.4 - math.pi))
        path = tmp_path / "t.csv"
        write_grid_csv(path, g, f / (g.weights @ f))
        rep = json.loads(run(["expand", str(path), "--band-limit", "2"], capsys)[1])
        assert np.max(np.abs(rep["ranks"][1]["cartesian"])) < 1e-14
        assert np.max(np.abs(rep["ranks"][2]["cartesian"])) > 0.05

    def test_single_peaked_is_polar(self, tmp_path, capsys):
        g = build_grid("S1", 8)
        phi = g.nodes[:, 0]
        f = np.exp(2 * np.cos(phi))
        path = tmp_path / "p.csv"
        write_grid_csv(path, g, f / (g.weights @ f))
        rep = json.loads(run(["expand", str(path), "--band-limit", "2"], capsys)[1])
        P = np.array(rep["ranks"][1]["cartesian"])
        Q = np.array(rep["ranks"][2]["cartesian"])
        assert P[0] > 0.1 and np.linalg.norm(P) > np.linalg.norm(Q)

    def test_so3(self, tmp_path, capsys):
        g = build_grid("SO3", 4)
        path = tmp_path / "r.csv"
        write_grid_csv(path, g, 1 + g.rotations()[:, 0, 0])
        rep = json.loads(run(["expand", str(path), "--band-limit", "2"], capsys)[1])
        assert rep["domain"] == "SO3" and rep["residual"] < 1e-12

    def test_band_mismatch(self, tmp_path, capsys):
        g = build_grid("S2", 2)
        path = tmp_path / "s.csv"
        write_grid_csv(path, g, np.ones(len(g)))
        code, _, err = run(["expand", str(path), "--band-limit", "2"], capsys)
        assert code == 1 and "band" in err


class TestVerify:
    def test_only(self, capsys):
        code, out, _ = run(["verify", "--only", "spin-roundtrip"], capsys)
        rows = [ln for ln in out.splitlines() if "PASS" in ln or "FAIL" in ln]
        assert code == 0 and len(rows) == 1 and rows[0].startswith("spin-roundtrip")

    def test_tight_tolerance_fails(self, capsys):
        code, out, _ = run(["verify", "--only", "spin-roundtrip,closed-form", "--tolerance", "1e-16"], capsys)
        assert code == 3 and out.count("FAIL") == 2

    def test_unknown_criterion(self, capsys):
        assert run(["verify", "--only", "nope"], capsys)[0] == 1

    def test_json_report(self, tmp_path, capsys):
        out = tmp_path / "v.json"
        code, _, _ = run(["verify", "--only", "rank-cutoff", "--output", str(out)], capsys)
        rep = json.loads(out.read_text())
        validate_report(rep)
        assert code == 0 and rep["criteria"][0]["passed"]


class TestWignerAndClebsch:
    def test_wigner_csv(self, tmp_path, capsys):
        out = tmp_path / "w.csv"
        code, _, _ = run(["wigner", "--spin", "1/2", "--state", "builtin:up", "--format", "csv", "--output", str(out)], capsys)
        lines = out.read_text().splitlines()
        assert code == 0 and lines[0].startswith("# qorient-grid") and lines[1] == "theta,phi,weight,W"

    def test_wigner_json(self, capsys):
        code, out, _ = run(["wigner", "--spin", "1", "--state", "builtin:mixed"], capsys)
        W = json.loads(out)["samples"]["W"]
        assert code == 0 and np.ptp(W) < 1e-13

    def test_clebsch(self, capsys):
        code, out, _ = run(["clebsch", "--j1", "1/2", "--j2", "1/2"], capsys)
        rows = json.loads(out)["coefficients"]
        singlet = [r for r in rows if r["J"] == "0" and r["m1"] == "1/2"][0]
        assert code == 0 and singlet["value"] == pytest.approx(1 / math.sqrt(2))
        assert len(rows) == 6

    def test_clebsch_bad(self, capsys):
        assert run(["clebsch", "--j1", "0.3", "--j2", "1"], capsys)[0] == 1


class TestEnvironment:
    def test_threads(self, monkeypatch, capsys):
        monkeypatch.setenv("QORIENT_THREADS", "1")
        assert run(["verify", "--only", "spin-half-nematic"], capsys)[0] == 0
        monkeypatch.setenv("QORIENT_THREADS", "zero")
        assert run(["verify", "--only", "spin-half-nematic"], capsys)[0] == 1

    def test_console_script(self):
        proc = subprocess.run([sys.executable, "-m", "qorient.cli", "clebsch", "--j1", "1", "--j2", "0"], capture_output=True, text=True)
        assert proc.returncode == 0 and json.loads(proc.stdout)["schema_version"] == 1


def test_eigen_summary_sign_convention():
    e = eigen_summary(np.diag([-1.0, 2.0, -1.0]))
    assert e["director"] == [0.0, 1.0, 0.0] and e["strength"] == 2.0
