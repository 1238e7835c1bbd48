import numpy as np
import pytest

from spinprobe.errors import ConfigError, LayoutError
from spinprobe.models import (
    ANCILLA_STATE,
    ModelSpec,
    heisenberg_two_spin,
    initial_state,
    maximally_magnetized_state,
    one_axis_twisting,
    ramp_state,
    ramp_weights,
    uniform_state,
    with_ancilla,
)
from spinprobe.oracle import exact_series
from spinprobe.spin import HalfInt, SiteLayout, expectation, propagator, spin_operators, tensor_embed


def site_op(op, site, layout):
    return tensor_embed(op, site, layout)


class TestHeisenberg:
    def test_spin_half_spectrum(self):
        vals = np.linalg.eigvalsh(heisenberg_two_spin("1/2").matrix)
        np.testing.assert_allclose(vals, [-0.75, -0.75] + [0.25] * 6, atol=1e-12)

    def test_dimension(self):
        assert heisenberg_two_spin(8).dim == 578

    @pytest.mark.parametrize("l", [1, "5/2", 4])
    def test_stretched_energy(self, l):
        lf = float(HalfInt.of(l))
        h = heisenberg_two_spin(l, ancilla=False)
        assert expectation(maximally_magnetized_state(l), h).real == pytest.approx(lf**2)

    @pytest.mark.parametrize("l", ["1/2", 2, 4])
    def test_conserves_magnetization(self, l):
        h = heisenberg_two_spin(l)
        layout = h.layout
        sz = spin_operators(l).sz
        mz = site_op(sz, 0, layout) + site_op(sz, 1, layout)
        assert np.abs(h.matrix @ mz.matrix - mz.matrix @ h.matrix).max() <= 1e-12
        assert h.is_hermitian()

    def test_dynamic_magnetization(self):
        l = 3
        h = heisenberg_two_spin(l, ancilla=False)
        prop = propagator(h)
        psi = ramp_state(l)
        sz = spin_operators(l).sz
        total = site_op(sz, 0, psi.layout) + site_op(sz, 1, psi.layout)
        values = [expectation(prop.evolve_state(psi, t), total).real for t in np.linspace(0, 4, 9)]
        assert np.ptp(values) <= 1e-9


class TestOneAxisTwisting:
    def test_values(self):
        np.testing.assert_allclose(one_axis_twisting(1.0, 1).matrix, np.diag([1, 0, 1]))
        np.testing.assert_allclose(one_axis_twisting(0.0, 3).matrix, 0)
        np.testing.assert_allclose(one_axis_twisting(2.0, "1/2").matrix, 0.5 * np.eye(2))


class TestStates:
    def test_uniform(self):
        np.testing.assert_allclose(uniform_state("1/2").amplitudes, 0.5)
        psi = uniform_state(8)
        np.testing.assert_allclose(psi.amplitudes, 1 / 17)
        assert expectation(psi, site_op(spin_operators(8).sz, 0, psi.layout)) == pytest.approx(0, abs=1e-14)

    def test_maximally_magnetized(self):
        psi = maximally_magnetized_state(5)
        assert expectation(psi, site_op(spin_operators(5).sz, 0, psi.layout)).real == pytest.approx(5)

    def test_ramp(self):
        psi = ramp_state("1/2")
        expected = np.zeros(4)
        expected[0 * 2 + 1] = 1  # m1 = -1/2, m2 = +1/2
        np.testing.assert_allclose(psi.amplitudes, expected)
        assert (ramp_weights(4) ** 2).sum() == 204
        psi4 = ramp_state(4)
        assert expectation(psi4, site_op(spin_operators(4).sz, 1, psi4.layout)).real == pytest.approx(4)

    @pytest.mark.parametrize("name", ["uniform", "maxmag", "ramp"])
    @pytest.mark.parametrize("l", ["1/2", 4, 16])
    def test_normalized(self, name, l):
        assert abs(initial_state(name, l).norm() - 1) <= 1e-12

    def test_unknown_state(self):
        with pytest.raises(ConfigError):
            initial_state("neel", 2)

    def test_with_ancilla(self):
        full = with_ancilla(uniform_state(2))
        layout = full.layout
        anc = spin_operators("1/2")
        assert expectation(full, site_op(anc.sz, 2, layout)) == pytest.approx(0, abs=1e-14)
        assert expectation(full, site_op(anc.sx, 2, layout)).real == pytest.approx(0.5)
        assert abs(full.norm() - 1) <= 1e-12
        # product structure: rank one across the system / ancilla cut
        sv = np.linalg.svd(full.amplitudes.reshape(-1, 2), compute_uv=False)
        assert sv[1] <= 1e-14
        with pytest.raises(LayoutError):
            with_ancilla(full)

    def test_reflection_symmetry_of_uniform(self):
        l = 3
        h = heisenberg_two_spin(l, ancilla=False)
        psi = uniform_state(l)
        flipped = type(psi)(psi.tensor()[::-1, ::-1].reshape(-1), psi.layout)
        t2 = np.linspace(0, 2, 7)
        np.testing.assert_allclose(exact_series(psi, h, 0, 1, 0.3, t2).real, exact_series(flipped, h, 0, 1, 0.3, t2).real, atol=1e-10)


class TestModelSpec:
    def test_heisenberg(self):
        spec = ModelSpec((2, 2))
        assert spec.layout == SiteLayout((5, 5))
        np.testing.assert_array_equal(spec.hamiltonian().matrix, heisenberg_two_spin(2, ancilla=False).matrix)

    def test_validation(self):
        with pytest.raises(ConfigError):
            ModelSpec((2, 3))
        with pytest.raises(ConfigError):
            ModelSpec((1, 1), "one_axis_twisting")
        with pytest.raises(ConfigError):
            ModelSpec((1,), "custom").hamiltonian()

    def test_custom_and_twisting(self):
        assert ModelSpec((1,), "one_axis_twisting", {"chi": 2.0}).hamiltonian().matrix[0, 0] == 2.0
        mat = np.diag([1.0, 2.0])
        assert ModelSpec(("1/2",), "custom", {"matrix": mat}).hamiltonian().matrix[1, 1] == 2.0

    def test_ancilla_state(self):
        np.testing.assert_allclose(ANCILLA_STATE.amplitudes, [2**-0.5, 2**-0.5])
