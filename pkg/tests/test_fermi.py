import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qorient.fermi import (
    FermiSurfaceError,
    MomentumOccupation,
    Profile,
    apply_nematic_stencil,
    estimate_pF,
    fermi_order_parameters,
    nematic_symbol,
    parse_profile,
    symbol_coefficient,
)
from qorient.oracles import fermi_cartesian_oracle


def _rot2(angle):
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]])


class TestProfile:
    def test_parse(self):
        assert parse_profile("disk") == Profile(1.0, 1.0, 0.0, 0.0, "disk")
        assert parse_profile("disk:2,0.1") == Profile(2.0, 2.0, 0.0, 0.1, "disk")
        assert parse_profile("ellipse:1.2,1,0.3") == Profile(1.2, 1.0, 0.3)
        assert parse_profile("ellipse:1.2,1,0.3,0.05").smearing == 0.05

    @pytest.mark.parametrize("bad", ["ellipse:1,2", "circle", "disk:1,2,3", "ellipse:-1,1,0"])
    def test_parse_errors(self, bad):
        with pytest.raises(ValueError):
            parse_profile(bad)

    def test_spec_round_trip(self):
        for text in ("disk:1.5", "ellipse:1.2,1.0,0.3,0.05"):
            p = parse_profile(text)
            assert parse_profile(p.label()) == p


class TestOrderParameters:
    def test_disk_isotropic(self):
        occ = MomentumOccupation.from_profile(Profile(1.0, 1.0, 0.0, 0.0, "disk"))
        ts = fermi_order_parameters(occ, 4)
        assert float(ts[0].data) == pytest.approx((2 * math.pi) ** 2)
        for t in ts[1:]:
            assert np.max(np.abs(t.data)) < 1e-10
        for t in fermi_order_parameters(occ, 4, "fermi_surface"):
            if t.l:
                assert np.max(np.abs(t.data)) < 1e-10

    def test_particle_number(self):
        occ = MomentumOccupation.from_profile(Profile(1.3, 0.8, 0.2))
        assert occ.particle_number() == pytest.approx(1.3 * 0.8 * math.pi / (2 * math.pi) ** 2, rel=1e-3)

    @pytest.mark.parametrize("mode", ["exact", "fermi_surface"])
    def test_ellipse_against_oracle(self, mode):
        prof = Profile(1.2, 1.0, 0.3, 0.05)
        occ = MomentumOccupation.from_profile(prof)
        pF = estimate_pF(occ)
        Q = fermi_order_parameters(occ, 2, mode, p_F=pF)[2].data
        oracle = fermi_cartesian_oracle(prof, prof.p_max(), 300, mode, pF)
        assert np.max(np.abs(Q - oracle)) < 1e-6

    def test_symmetric_traceless(self):
        occ = MomentumOccupation.from_profile(Profile(1.4, 1.0, 0.7, 0.05))
        Q = fermi_order_parameters(occ, 2)[2].data
        assert abs(Q[0, 0] + Q[1, 1]) < 1e-13
        assert abs(Q[0, 1] - Q[1, 0]) < 1e-13

    def test_director_along_major_axis(self):
        occ = MomentumOccupation.from_profile(Profile(1.2, 1.0, 0.0, 0.02))
        Q = fermi_order_parameters(occ, 2)[2].data
        vals, vecs = np.linalg.eigh(Q)
        assert abs(vecs[0, -1]) == pytest.approx(1.0)
        assert vals[-1] == pytest.approx(-vals[0])

    @given(st.floats(0, math.pi))
    def test_rotation_covariance(self, chi):
        base = fermi_order_parameters(MomentumOccupation.from_profile(Profile(1.3, 1.0, 0.0, 0.05), 128, 64), 2)[2].data
        rot = fermi_order_parameters(MomentumOccupation.from_profile(Profile(1.3, 1.0, chi, 0.05), 128, 64), 2)[2].data
        R = _rot2(chi)
        assert np.max(np.abs(rot - R @ base @ R.T)) < 1e-8

    def test_modes_agree_as_circle(self):
        devs = []
        for ratio in (1.3, 1.1, 1.01, 1.001):
            occ = MomentumOccupation.from_profile(Profile(ratio, 1.0, 0.0, 0.05))
            e = fermi_order_parameters(occ, 2, "exact")[2].data
            f = fermi_order_parameters(occ, 2, "fermi_surface")[2].data
            devs.append(np.linalg.norm(e - f))
        assert all(devs[k + 1] < devs[k] for k in range(3))
        assert devs[-1] < 1e-2

    def test_symbol_coefficients(self):
        assert [symbol_coefficient(l) for l in range(4)] == [1, 1, 2, 4]

    def test_resolution_check(self):
        occ = MomentumOccupation.from_profile(Profile(), 32, 4)
        with pytest.raises(ValueError):
            fermi_order_parameters(occ, 2)

    def test_bad_mode(self):
        occ = MomentumOccupation.from_profile(Profile(), 32, 16)
        with pytest.raises(ValueError):
            fermi_order_parameters(occ, 2, "bogus")

    def test_empty_occupation(self):
        occ = MomentumOccupation.from_function(lambda x, y: 0 * x, 1.0, 16, 16)
        with pytest.raises(FermiSurfaceError):
            fermi_order_parameters(occ, 2)
        with pytest.raises(FermiSurfaceError, match="no crossing"):
            fermi_order_parameters(occ, 2, "fermi_surface")


class TestEstimatePF:
    def test_disk(self):
        occ = MomentumOccupation.from_profile(Profile(1.0, 1.0, 0.0, 0.0, "disk"))
        step = np.max(np.diff(occ.radii))
        assert abs(estimate_pF(occ) - 1.0) <= step / 2

    def test_near_circular_ellipse(self):
        a, b = 1.04, 1.0
        occ = MomentumOccupation.from_profile(Profile(a, b, 0.4), 512, 256)
        # the angular-mean crossing is the median radius; it approaches sqrt(ab) to second order
        assert estimate_pF(occ) == pytest.approx(math.sqrt(a * b), abs=1e-3)
        median = math.sqrt(2) * a * b / math.sqrt(a * a + b * b)
        assert estimate_pF(occ) == pytest.approx(median, abs=2e-3)

    def test_empty(self):
        occ = MomentumOccupation.from_function(lambda x, y: 0 * x, 1.0, 16, 16)
        with pytest.raises(FermiSurfaceError, match="no crossing"):
            estimate_pF(occ)


class TestCsv:
    def _write(self, path, prof, n_radial):
        radii = np.linspace(2.5 / n_radial, 2.5, n_radial)
        phis = 2 * math.pi * np.arange(64) / 64
        with open(path, "w") as fh:
            fh.write("p,phi,n\n")
            for r in radii:
                for f in phis:
                    fh.write(f"{float(r)!r},{float(f)!r},{float(prof(r * math.cos(f), r * math.sin(f)))!r}\n")

    def test_round_trip(self, tmp_path):
        prof = Profile(1.2, 1.0, 0.3, 0.05)
        ref = fermi_order_parameters(MomentumOccupation.from_profile(prof), 2)[2].data
        errs = []
        for n in (80, 160, 320):
            path = tmp_path / f"occ{n}.csv"
            self._write(path, prof, n)
            Q = fermi_order_parameters(MomentumOccupation.from_csv(path), 2)[2].data
            errs.append(np.max(np.abs(Q - ref)) / np.max(np.abs(ref)))
        # trapezoid rule in p: second order
        assert errs[-1] < 1e-3
        assert math.log2(errs[0] / errs[1]) > 1.8 and math.log2(errs[1] / errs[2]) > 1.8

    def test_incomplete(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("p,phi,n\n0.1,0,1\n0.2,0,1\n0.1,1,1\n")
        with pytest.raises(ValueError):
            MomentumOccupation.from_csv(path)

    def test_columns(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(ValueError):
            MomentumOccupation.from_csv(path)

    def test_values_clipped(self):
        occ = MomentumOccupation([0.5], [0.5], [0.0, math.pi], [[1.5, -0.2]])
        assert occ.values.tolist() == [[1.0, 0.0]]

    def test_non_uniform_angles(self):
        with pytest.raises(ValueError):
            MomentumOccupation([0.5], [0.5], [0.0, 1.0, 2.0], [[1, 1, 1]])


class TestStencil:
    def _plane(self, N, modes, box=2 * math.pi):
        h = box / N
        x = h * np.arange(N)
        X, Y = np.meshgrid(x, x, indexing="ij")
        k = 2 * math.pi / box * np.array(modes, float)
        return np.exp(1j * (k[0] * X + k[1] * Y)), h, k

    def test_plane_wave_second_order(self):
        errs = []
        for N in (16, 32, 64, 128):
            psi, h, k = self._plane(N, (3, 1))
            qxx, qxy = apply_nematic_stencil(psi, h, 1.0)
            sxx, sxy = nematic_symbol(k[0], k[1], 1.0)
            errs.append(max(np.max(np.abs(qxx / psi - sxx)), np.max(np.abs(qxy / psi - sxy))))
        orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
        assert np.all(np.abs(orders - 2) < 0.15)

    def test_constant(self):
        qxx, qxy = apply_nematic_stencil(np.ones((8, 8)), 0.1, 1.0)
        assert np.max(np.abs(qxx)) < 1e-12 and np.max(np.abs(qxy)) < 1e-12

    def test_diagonal_momentum(self):
        psi, h, _ = self._plane(32, (2, 2))
        qxx, _ = apply_nematic_stencil(psi, h, 1.0)
        assert np.max(np.abs(qxx)) < 1e-10

    def test_anisotropic_spacing(self):
        N = 64
        hx, hy = 2 * math.pi / N, 4 * math.pi / N
        x = hx * np.arange(N)
        y = hy * np.arange(N)
        X, Y = np.meshgrid(x, y, indexing="ij")
        psi = np.exp(1j * (2 * X + 0.5 * Y))
        qxx, _ = apply_nematic_stencil(psi, (hx, hy), 2.0)
        assert np.allclose(qxx / psi, nematic_symbol(2, 0.5, 2.0)[0], rtol=2e-2)

    def test_too_small(self):
        with pytest.raises(ValueError):
            apply_nematic_stencil(np.ones((3, 8)), 0.1, 1.0)
