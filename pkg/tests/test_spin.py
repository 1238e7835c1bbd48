import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm

from spinprobe.errors import ContractViolation, InvalidSpinError, LayoutError
from spinprobe.spin import (
    HalfInt,
    Operator,
    SiteLayout,
    StateVector,
    apply,
    apply_local,
    evolution_unitary,
    expectation,
    kron,
    m_index,
    magnetic_values,
    propagator,
    spin_operators,
    system_part,
    tensor_embed,
)

SPINS = ["1/2", "1", "3/2", "4", "8", "16"]


def random_hermitian(rng, d):
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return Operator((a + a.conj().T) / 2)


class TestHalfInt:
    @pytest.mark.parametrize("value, twice", [(0, 0), ("1/2", 1), (1.5, 3), (Fraction(-7, 2), -7), ("8", 16)])
    def test_parsing(self, value, twice):
        assert HalfInt.of(value).twice_value == twice

    @pytest.mark.parametrize("bad", ["1/3", 0.25, "spin"])
    def test_rejects_non_half_integers(self, bad):
        with pytest.raises(InvalidSpinError):
            HalfInt.of(bad)

    def test_arithmetic_and_str(self):
        assert str(HalfInt.of("1/2") + 4) == "9/2"
        assert str(HalfInt.of(3) - "1/2") == "5/2"
        assert float(-HalfInt(5)) == -2.5
        assert HalfInt(1) < HalfInt(2)

    @given(st.integers(-200, 200), st.integers(-200, 200))
    def test_add_is_exact(self, a, b):
        assert (HalfInt(a) + HalfInt(b)).twice_value == a + b

    def test_negative_spin_rejected(self):
        with pytest.raises(InvalidSpinError):
            spin_operators(-1)


class TestSpinOperators:
    def test_spin_half(self):
        ops = spin_operators("1/2")
        np.testing.assert_allclose(ops.sz.matrix, np.diag([-0.5, 0.5]))

    def test_spin_one_casimir(self):
        np.testing.assert_allclose(spin_operators(1).s_squared.matrix, 2 * np.eye(3), atol=1e-12)

    def test_l8_diagonal(self):
        np.testing.assert_array_equal(np.diag(spin_operators(8).sz.matrix).real, np.arange(-8, 9))

    @pytest.mark.parametrize("l", SPINS)
    def test_algebra(self, l):
        ops = spin_operators(l)
        x, y, z = (o.matrix for o in ops.components)
        lf = float(HalfInt.of(l))
        for a, b, c in ((x, y, z), (y, z, x), (z, x, y)):
            assert np.abs(a @ b - b @ a - 1j * c).max() <= 1e-12
        assert np.abs(ops.s_squared.matrix - lf * (lf + 1) * np.eye(ops.sz.dim)).max() <= 1e-12
        assert ops.sx.is_hermitian() and ops.sy.is_hermitian()

    @pytest.mark.parametrize("l", SPINS)
    def test_ladder_elements(self, l):
        ops = spin_operators(l)
        m = magnetic_values(l)
        lf = float(HalfInt.of(l))
        np.testing.assert_allclose(np.diag(ops.s_plus.matrix, -1).real, np.sqrt(lf * (lf + 1) - m[:-1] * (m[:-1] + 1)))

    def test_m_index(self):
        assert m_index("3/2", "-3/2") == 0
        assert m_index(2, 2) == 4
        with pytest.raises(InvalidSpinError):
            m_index(2, "1/2")


class TestTensor:
    def test_kron_identities(self):
        assert np.array_equal(kron(Operator(np.eye(2)), Operator(np.eye(3))).matrix, np.eye(6))
        np.testing.assert_array_equal(kron(Operator(np.diag([1, -1])), Operator(np.diag([1, 0]))).matrix, np.diag([1, 0, -1, 0]))
        sz = spin_operators("1/2").sz
        np.testing.assert_allclose(np.diag(kron(sz, sz).matrix).real, [0.25, -0.25, -0.25, 0.25])

    def test_kron_layout_concat(self):
        a = Operator(np.eye(3), SiteLayout((3,)))
        b = Operator(np.eye(2), SiteLayout((2,), has_ancilla=True))
        assert kron(a, b).layout == SiteLayout((3, 2), True)
        with pytest.raises(LayoutError):
            kron(b, a)

    def test_embed(self):
        layout = SiteLayout((2, 2))
        sz = spin_operators("1/2").sz
        np.testing.assert_array_equal(tensor_embed(sz, 0, layout).matrix, np.kron(sz.matrix, np.eye(2)))
        np.testing.assert_array_equal(tensor_embed(Operator(np.eye(2)), 1, layout).matrix, np.eye(4))

    def test_embed_commute(self):
        layout = SiteLayout((3, 3))
        a = tensor_embed(spin_operators(1).sx, 0, layout).matrix
        b = tensor_embed(spin_operators(1).sy, 1, layout).matrix
        assert np.array_equal(a @ b, b @ a)

    @pytest.mark.parametrize("site, op_dim", [(2, 2), (0, 3)])
    def test_embed_errors(self, site, op_dim):
        with pytest.raises(LayoutError):
            tensor_embed(Operator(np.eye(op_dim)), site, SiteLayout((2, 2)))

    def test_apply_local_matches_embedding(self):
        rng = np.random.default_rng(3)
        layout = SiteLayout((3, 2, 4))
        psi = StateVector.from_unnormalized(rng.normal(size=24) + 1j * rng.normal(size=24), layout)
        op = Operator(rng.normal(size=(8, 8)))
        got = apply_local(op, (2, 1), psi).amplitudes
        # reference: permute slots so (2, 1) become adjacent in that order
        tens = psi.tensor().transpose(0, 2, 1).reshape(3, 8)
        ref = (tens @ op.matrix.T).reshape(3, 4, 2).transpose(0, 2, 1).reshape(-1)
        np.testing.assert_allclose(got, ref, atol=1e-12)


class TestStates:
    def test_normalization_enforced(self):
        with pytest.raises(ContractViolation):
            StateVector(np.array([1.0, 1.0]))
        assert StateVector(np.array([1.0, 1.0]), normalized=False).norm() == pytest.approx(math.sqrt(2))

    def test_expectations(self):
        l = 3
        top = np.zeros(7)
        top[-1] = 1
        assert expectation(StateVector(top), spin_operators(l).sz) == pytest.approx(3)
        uniform = StateVector.from_unnormalized(np.ones(7))
        assert expectation(uniform, spin_operators(l).sz) == pytest.approx(0, abs=1e-14)
        sz2 = spin_operators(l).sz @ spin_operators(l).sz
        assert expectation(uniform, sz2).real == pytest.approx(l * (l + 1) / 3)

    def test_layout_mismatch(self):
        with pytest.raises(LayoutError):
            apply(Operator(np.eye(3)), StateVector(np.array([1.0, 0.0])))


class TestEvolution:
    def test_spin_half_full_turn(self):
        u = evolution_unitary(spin_operators("1/2").sz, 2 * np.pi).matrix
        np.testing.assert_allclose(u, -np.eye(2), atol=1e-12)

    def test_zero_time(self):
        rng = np.random.default_rng(0)
        np.testing.assert_allclose(evolution_unitary(random_hermitian(rng, 5), 0.0).matrix, np.eye(5), atol=1e-12)

    def test_heisenberg_spin_half_spectrum(self):
        ops = spin_operators("1/2")
        h = sum((kron(a, a) for a in ops.components[1:]), kron(ops.sx, ops.sx))
        np.testing.assert_allclose(propagator(h).eigenvalues, [-0.75, 0.25, 0.25, 0.25], atol=1e-12)
        phases = np.linalg.eigvals(evolution_unitary(h, 1.1).matrix)
        expected = np.exp(-1j * 1.1 * np.array([-0.75, 0.25]))
        assert all(np.min(np.abs(expected - p)) < 1e-12 for p in phases)

    def test_non_hermitian_rejected(self):
        with pytest.raises(ContractViolation):
            evolution_unitary(Operator(np.array([[0, 1], [0, 0]])), 1.0)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 12), st.floats(-3, 3), st.floats(-3, 3))
    def test_group_property(self, seed, d, t1, t2):
        h = random_hermitian(np.random.default_rng(seed), d)
        u1, u2, u12 = (evolution_unitary(h, t).matrix for t in (t1, t2, t1 + t2))
        assert np.abs(u1 @ u2 - u12).max() <= 1e-9
        assert evolution_unitary(h, t1).unitarity_error() <= 1e-10

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 16))
    def test_matches_series_expansion(self, seed, d):
        h = random_hermitian(np.random.default_rng(seed), d)
        t = 1.0 / max(np.linalg.norm(h.matrix, 2), 1e-12)
        term = np.eye(d, dtype=complex)
        total = term.copy()
        for k in range(1, 40):
            term = term @ (-1j * t * h.matrix) / k
            total += term
        assert np.abs(evolution_unitary(h, t).matrix - total).max() <= 1e-8

    def test_agrees_with_scipy(self):
        h = random_hermitian(np.random.default_rng(9), 10)
        np.testing.assert_allclose(evolution_unitary(h, 0.7).matrix, expm(-0.7j * h.matrix), atol=1e-12)

    def test_norm_preserved(self):
        rng = np.random.default_rng(1)
        h = random_hermitian(rng, 9)
        psi = StateVector.from_unnormalized(rng.normal(size=9) + 0j)
        out = propagator(h).evolve_state(psi, 2.3)
        assert abs(out.norm() - 1) <= 1e-12

    def test_system_part(self):
        h = random_hermitian(np.random.default_rng(4), 3)
        full = kron(h, Operator(np.eye(2), SiteLayout((2,), has_ancilla=True)))
        np.testing.assert_array_equal(system_part(full).matrix, h.matrix)
        with pytest.raises(LayoutError):
            system_part(kron(h, Operator(np.diag([1.0, 2.0]), SiteLayout((2,), has_ancilla=True))))
