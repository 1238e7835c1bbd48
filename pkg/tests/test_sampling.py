import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spinprobe.errors import ConfigError
from spinprobe.models import heisenberg_two_spin, uniform_state
from spinprobe.protocol import OutcomeDistribution, ProtocolConfig, lambdas_for, outcome_grid, run_protocol, script_c_from_distribution
from spinprobe.sampling import (
    ErrorEstimate,
    SampleConfig,
    derive_rng,
    error_bars,
    estimate_script_c,
    fit_scaling_exponent,
    sample_outcomes,
    sampled_extraction,
    sampled_sweep,
    scaling_exponent,
)
from spinprobe.spin import HalfInt


@pytest.fixture(scope="module")
def fig4_config():
    l = HalfInt.of(8)
    return ProtocolConfig(heisenberg_two_spin(l, ancilla=False), uniform_state(l), 0, 1, 0.0, 0.5, lambdas_for([np.pi], l)[0])


def total_variation(a: OutcomeDistribution, b: OutcomeDistribution) -> float:
    return 0.5 * np.abs(a.joint() - b.joint()).sum()


class TestConfig:
    @pytest.mark.parametrize("kwargs", [dict(n_s=0), dict(n_s=10, n_repeats=1), dict(n_s=10, master_seed=-1)])
    def test_invalid(self, kwargs):
        with pytest.raises(ConfigError):
            SampleConfig(**kwargs)

    def test_default_repeats(self):
        assert SampleConfig(10).n_repeats == 100


class TestSampleOutcomes:
    def test_law_of_large_numbers(self, fig4_config):
        dist = run_protocol(fig4_config)
        emp = sample_outcomes(dist, 10**6, 11)
        assert total_variation(emp, dist) < 0.01

    def test_tv_shrinks(self, fig4_config):
        dist = run_protocol(fig4_config)
        tv = [np.mean([total_variation(sample_outcomes(dist, n, derive_rng(5, (n, r))), dist) for r in range(20)]) for n in (100, 10000)]
        assert tv[1] < tv[0] / 5

    def test_point_mass(self):
        m = np.array([-1.0, 0.0, 1.0])
        dist = OutcomeDistribution(m, 1.0, 0.0, [0, 0, 1.0], [1 / 3] * 3)
        emp = sample_outcomes(dist, 7, 3)
        np.testing.assert_array_equal(emp.joint(), dist.joint())
        assert estimate_script_c(emp) == 1.0
        assert not emp.minus_used

    def test_deterministic(self, fig4_config):
        dist = run_protocol(fig4_config)
        a = sample_outcomes(dist, 500, 42).joint()
        b = sample_outcomes(dist, 500, 42).joint()
        assert a.tobytes() == b.tobytes()
        assert sample_outcomes(dist, 500, 43).joint().tobytes() != a.tobytes()

    def test_exact_frequencies_reproduce_script_c(self, fig4_config):
        dist = run_protocol(fig4_config)
        assert estimate_script_c(dist) == script_c_from_distribution(dist)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 500))
    def test_bounded(self, seed, n_s):
        rng = np.random.default_rng(seed)
        m = np.arange(-4.0, 5.0)
        dist = OutcomeDistribution.from_joint(m, rng.dirichlet(np.ones(18)).reshape(2, 9))
        assert abs(estimate_script_c(sample_outcomes(dist, n_s, seed))) <= 4 + 1e-12


class TestErrorBars:
    def test_large_sample(self, fig4_config):
        exact = script_c_from_distribution(run_protocol(fig4_config))
        est = error_bars(fig4_config, SampleConfig(10**6, 10, 1))
        assert est.std_c < 0.01
        assert abs(est.mean_c - exact) <= 3 * est.std_c + 1e-12
        assert min(est.per_repeat) <= est.mean_c <= max(est.per_repeat)

    def test_sqrt_ten_shrink(self):
        l = HalfInt.of(4)
        cfg = ProtocolConfig(heisenberg_two_spin(l, ancilla=False), uniform_state(l), 0, 1, 0.0, 0.5, lambdas_for([np.pi], l)[0])
        small = error_bars(cfg, SampleConfig(100, 100, 7)).std_c
        large = error_bars(cfg, SampleConfig(1000, 100, 7)).std_c
        assert 0.6 * np.sqrt(10) < small / large < 1.6 * np.sqrt(10)

    def test_seed_consistency(self, fig4_config):
        a = error_bars(fig4_config, SampleConfig(1000, 100, 1))
        b = error_bars(fig4_config, SampleConfig(1000, 100, 2))
        assert abs(a.mean_c - b.mean_c) <= 5 * a.std_c / np.sqrt(100)

    def test_order_independent_streams(self, fig4_config):
        l = HalfInt.of(8)
        lams = lambdas_for([np.pi / 2, np.pi], l)
        t2 = [0.0, 0.5, 1.0]
        cfg = SampleConfig(200, 5, 9)
        full = sampled_sweep(fig4_config.replace(t2=0.0), t2, lams, cfg)
        dists = outcome_grid(fig4_config.replace(t2=0.0), [1.0], lams)[0]
        alone = sampled_extraction(dists, lams, l, cfg, stream=(2,))
        assert alone.re_c == full[2].re_c

    def test_error_estimate_invariants(self):
        est = ErrorEstimate.from_values([1.0, 2.0, 4.0])
        assert est.std_c >= 0 and min(est.per_repeat) <= est.mean_c <= max(est.per_repeat)


class TestScaling:
    def test_binomial_proxy(self):
        n_s = np.array([100, 300, 1000, 3000, 10000])
        p = 0.3
        assert fit_scaling_exponent(n_s, np.sqrt(p * (1 - p) / n_s)) == pytest.approx(-0.5, abs=0.05)

    def test_flat(self):
        assert fit_scaling_exponent([10, 100, 1000], [0.2, 0.2, 0.2]) == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize("n_s", [[100, 1000], [100, 200, 400], [100, 100, 1000]])
    def test_degenerate(self, n_s):
        with pytest.raises(ConfigError):
            fit_scaling_exponent(n_s, [0.1] * len(n_s))

    def test_protocol_scaling(self):
        l = HalfInt.of(4)
        cfg = ProtocolConfig(heisenberg_two_spin(l, ancilla=False), uniform_state(l), 0, 1, 0.0, 1.0, lambdas_for([np.pi], l)[0])
        slope = scaling_exponent(cfg, [100, 300, 1000, 3000], SampleConfig(1, 100, 3))
        assert abs(slope + 0.5) <= 0.15
