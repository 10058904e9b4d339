import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from qorient.angular import lm_index, sph_harm_table
from qorient.expansion import build_grid
from qorient.tensors import (
    SymmetricTracelessTensor,
    TurziCoefficient,
    angular_to_cartesian,
    cartesian_to_angular,
    harmonic_dimension,
    monomials,
    normalization,
    projector,
    symmetric_traceless_project,
    tensor_polynomial,
    tensor_polynomial_batch,
)


def unit(d):
    return arrays(float, d, elements=st.floats(-1, 1)).filter(lambda v: np.linalg.norm(v) > 1e-3).map(
        lambda v: v / np.linalg.norm(v)
    )


def _double_factorial(n):
    return math.prod(range(n, 0, -2)) if n > 0 else 1


class TestTensorPolynomial:
    def test_rank_zero(self):
        assert float(tensor_polynomial(2, 0, [1.0, 0.0]).data) == 1.0

    def test_2d_rank_two(self):
        t = tensor_polynomial(2, 2, [1.0, 0.0])
        assert np.allclose(t.data, [[0.5, 0], [0, -0.5]])

    def test_3d_pole(self):
        t = tensor_polynomial(3, 2, [0.0, 0.0, 1.0])
        assert np.allclose(t.data, np.diag([-1 / 3, -1 / 3, 2 / 3]))

    def test_non_unit_rejected(self):
        with pytest.raises(ValueError):
            tensor_polynomial(3, 2, [1.0, 1.0, 0.0])

    def test_rank_errors(self):
        with pytest.raises(ValueError):
            tensor_polynomial(4, 1, [1.0, 0, 0, 0])
        with pytest.raises(ValueError):
            tensor_polynomial(3, 7, [1.0, 0, 0])

    @given(st.sampled_from([2, 3]).flatmap(lambda d: st.tuples(st.just(d), unit(d))), st.integers(0, 6))
    def test_invariants(self, du, l):
        d, u = du
        t = tensor_polynomial(d, l, u)
        assert t.asymmetry() < 1e-12
        assert t.max_trace() < 1e-12

    @given(unit(3))
    def test_rank_two_explicit(self, u):
        assert np.allclose(tensor_polynomial(3, 2, u).data, np.outer(u, u) - np.eye(3) / 3, atol=1e-14)

    @given(unit(3), st.integers(0, 6))
    def test_legendre_contraction(self, u, l):
        # T_l(u) . v^l equals l! / (2l-1)!! * P_l(u . v) for unit v
        v = np.array([0.3, -0.5, 0.8])
        v /= np.linalg.norm(v)
        val = tensor_polynomial(3, l, u).contract(v)
        expected = math.factorial(l) / _double_factorial(2 * l - 1) * np.polynomial.legendre.legval(u @ v, [0] * l + [1])
        assert val == pytest.approx(expected, abs=1e-12)


class TestNormalization:
    def test_2d_values(self):
        assert normalization(2, 0) == pytest.approx(1 / (2 * math.pi))
        assert normalization(2, 1) == pytest.approx(1 / math.pi)
        assert normalization(2, 2) == pytest.approx(2 / math.pi)

    @pytest.mark.parametrize("d", [2, 3])
    @pytest.mark.parametrize("l", range(7))
    def test_reconstruction_property(self, d, l):
        # A_l int T_l(u) (T_l(u) . v^l) du must return T_l(v) . v^l = T_l(v) contracted: self-reproducing kernel
        grid = build_grid("S1" if d == 2 else "S2", 2 * l)
        u = grid.unit_vectors()
        T = tensor_polynomial_batch(d, l, u)
        rng = np.random.default_rng(l)
        F = symmetric_traceless_project(rng.normal(size=(d,) * l), d)
        f = monomials(u, l) @ F.reshape(-1)
        back = normalization(d, l) * (T.T * grid.weights) @ f
        assert np.max(np.abs(back - F.reshape(-1))) < 1e-12


class TestProjection:
    def test_idempotent_on_traceless(self):
        t = tensor_polynomial(3, 3, [0.6, 0.0, 0.8]).data
        assert np.allclose(symmetric_traceless_project(t, 3), t)

    def test_pure_trace(self):
        assert np.allclose(symmetric_traceless_project(np.eye(3), 3), 0)

    @given(arrays(float, (3, 3, 3), elements=st.floats(-5, 5)))
    def test_idempotence_random(self, t):
        p = symmetric_traceless_project(t, 3)
        assert np.max(np.abs(symmetric_traceless_project(p, 3) - p)) < 1e-13
        s = SymmetricTracelessTensor(3, 3, p)
        assert s.asymmetry() < 1e-12 and s.max_trace() < 1e-12

    @pytest.mark.parametrize("d,l", [(2, 3), (3, 2), (3, 4)])
    def test_projector_rank(self, d, l):
        P = projector(d, l)
        assert np.allclose(P @ P, P)
        assert np.allclose(P, P.T)
        assert round(np.trace(P)) == harmonic_dimension(d, l)

    def test_harmonic_dimension(self):
        assert [harmonic_dimension(3, l) for l in range(4)] == [1, 3, 5, 7]
        assert [harmonic_dimension(2, l) for l in range(4)] == [1, 2, 2, 2]

    def test_orthogonality_between_ranks(self):
        grid = build_grid("S2", 8)
        u = grid.unit_vectors()
        for l, lp in itertools.combinations(range(5), 2):
            a = tensor_polynomial_batch(3, l, u)
            b = tensor_polynomial_batch(3, lp, u)
            cross = normalization(3, l) * (a.T * grid.weights) @ b
            assert np.max(np.abs(cross)) < 1e-10


class TestSymmetricTracelessTensor:
    def test_rejects_non_symmetric(self):
        with pytest.raises(ValueError):
            SymmetricTracelessTensor(3, 2, np.array([[0, 1, 0], [0, 0, 0], [0, 0, 0]], float)).check()

    def test_rejects_trace(self):
        with pytest.raises(ValueError):
            SymmetricTracelessTensor(3, 2, np.eye(3)).check()

    def test_rejects_shape(self):
        with pytest.raises(ValueError):
            SymmetricTracelessTensor(3, 2, np.zeros((3, 3, 3)))

    def test_rotation(self):
        u = np.array([0.0, 0.0, 1.0])
        R = np.array([[0, 0, 1], [0, 1, 0], [-1, 0, 0]], float)
        t = tensor_polynomial(3, 2, u).rotated(R)
        assert np.allclose(t.data, tensor_polynomial(3, 2, R @ u).data)


class TestConversion:
    def test_rank_zero(self):
        F = angular_to_cartesian([2.0], 0)
        assert float(F.data) == pytest.approx(2.0 / math.sqrt(4 * math.pi))

    def test_y10_is_along_z(self):
        F = angular_to_cartesian([0.0, 1.0, 0.0], 1).data
        assert np.allclose(F, [0, 0, math.sqrt(3 / (4 * math.pi))])

    def test_incomplete_multiplet(self):
        with pytest.raises(ValueError):
            angular_to_cartesian([1.0, 2.0], 1)
        with pytest.raises(ValueError):
            angular_to_cartesian({-1: 1.0, 0: 0.0}, 1)

    @pytest.mark.parametrize("l", range(5))
    def test_round_trip_3d(self, l, rng):
        c = rng.normal(size=2 * l + 1) + 1j * rng.normal(size=2 * l + 1)
        F = angular_to_cartesian(c, l, 3)
        back = cartesian_to_angular(getattr(F, "data", F), l, 3)
        assert np.max(np.abs(back - c)) < 1e-12

    @pytest.mark.parametrize("l", range(5))
    def test_real_multiplet_gives_real_tensor(self, l, rng):
        c = np.zeros(2 * l + 1, complex)
        c[l] = rng.normal()
        for m in range(1, l + 1):
            z = rng.normal() + 1j * rng.normal()
            c[l + m] = z
            c[l - m] = (-1) ** m * np.conj(z)
        F = angular_to_cartesian(c, l, 3)
        assert isinstance(F, SymmetricTracelessTensor)

    @pytest.mark.parametrize("l", range(5))
    def test_pointwise_agreement(self, l, rng):
        c = rng.normal(size=2 * l + 1) + 1j * rng.normal(size=2 * l + 1)
        F = np.asarray(getattr(angular_to_cartesian(c, l, 3), "data", angular_to_cartesian(c, l, 3)))
        u = rng.normal(size=(100, 3))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        Y = sph_harm_table(l, np.arccos(u[:, 2]), np.arctan2(u[:, 1], u[:, 0]))
        ang = Y[:, lm_index(l, -l) : lm_index(l, l) + 1] @ c
        assert np.max(np.abs(ang - monomials(u, l) @ F.reshape(-1))) < 1e-10


class TestTurzi:
    def test_defect_of_projected(self, rng):
        from qorient.tensors import _basis

        E = _basis(3, 2)
        c = rng.normal(size=(5, 5))
        t = TurziCoefficient(2, E @ c @ E.T)
        assert t.defect() < 1e-12
        assert t.as_tensor().shape == (3, 3, 3, 3)

    def test_rejects_bad_shape(self):
        with pytest.raises(ValueError):
            TurziCoefficient(2, np.zeros((3, 9)))
