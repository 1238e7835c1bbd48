"""Finite-sample emulation of the protocol and statistical error bars.

Random streams come from numpy's Philox counter-based generator.  Each
repeat gets its own stream from ``SeedSequence(master_seed, spawn_key=key)``
where ``key`` identifies the grid point and repeat index, so results do not
depend on evaluation order.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigError
from .protocol import (
    OutcomeDistribution,
    ProtocolConfig,
    extract_correlation,
    outcome_grid,
    run_protocol,
    script_c_from_distribution,
)

DEFAULT_REPEATS = 100


@dataclass(frozen=True)
class SampleConfig:
    n_s: int
    n_repeats: int = DEFAULT_REPEATS
    master_seed: int = 0

    def __post_init__(self):
        if int(self.n_s) < 1:
            raise ConfigError(f"sample size must be >= 1, got {self.n_s}")
        if int(self.n_repeats) < 2:
            raise ConfigError(f"need at least 2 repeats for a standard deviation, got {self.n_repeats}")
        if not 0 <= int(self.master_seed) < 2**64:
            raise ConfigError("master_seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class ErrorEstimate:
    mean_c: float
    std_c: float
    per_repeat: tuple[float, ...]

    @classmethod
    def from_values(cls, values: Sequence[float]) -> "ErrorEstimate":
        arr = np.asarray(values, dtype=float)
        return cls(float(arr.mean()), float(arr.std(ddof=1)), tuple(arr.tolist()))


def derive_rng(master_seed: int, key: Sequence[int] = ()) -> np.random.Generator:
    """Independent Philox stream for ``key`` under ``master_seed``."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return derive_rng(seed)


def sample_outcomes(dist: OutcomeDistribution, n_s: int, seed) -> OutcomeDistribution:
    """Relative frequencies of ``n_s`` joint (ancilla, m) draws.

    ``seed`` is an integer master seed or a ready ``numpy.random.Generator``.
    """
    if n_s < 1:
        raise ConfigError("sample size must be >= 1")
    rng = _as_rng(seed)
    joint = dist.joint()
    p = joint.reshape(-1)
    counts = rng.multinomial(n_s, p / p.sum())
    return OutcomeDistribution.from_joint(dist.m_values, counts.reshape(joint.shape) / n_s)


def estimate_script_c(empirical: OutcomeDistribution) -> float:
    return script_c_from_distribution(empirical)


def error_bars(config: ProtocolConfig, sample_cfg: SampleConfig, stream: Sequence[int] = ()) -> ErrorEstimate:
    """Mean and spread of the sampled correlator over independent repeats."""
    dist = run_protocol(config)
    values = [
        estimate_script_c(sample_outcomes(dist, sample_cfg.n_s, derive_rng(sample_cfg.master_seed, (*stream, r))))
        for r in range(sample_cfg.n_repeats)
    ]
    return ErrorEstimate.from_values(values)


@dataclass(frozen=True)
class SampledExtraction:
    """Repeat statistics of cal_C (per lam) and of the extracted Re C, Im C."""

    script_c: tuple[ErrorEstimate, ...]
    re_c: ErrorEstimate
    im_c: ErrorEstimate


def sampled_extraction(dists: Sequence[OutcomeDistribution], lams: Sequence[float], l, sample_cfg: SampleConfig, method: str = "two_point_lambda", refined: bool = True, stream: Sequence[int] = ()) -> SampledExtraction:
    """Sample every lam point independently, then extract C once per repeat.

    The stream key of repeat ``r`` at lam index ``b`` is ``(*stream, b, r)``.
    """
    n_lam = len(lams)
    if len(dists) != n_lam:
        raise ConfigError("need one distribution per lam value")
    samples = np.empty((sample_cfg.n_repeats, n_lam))
    for b, dist in enumerate(dists):
        for r in range(sample_cfg.n_repeats):
            rng = derive_rng(sample_cfg.master_seed, (*stream, b, r))
            samples[r, b] = estimate_script_c(sample_outcomes(dist, sample_cfg.n_s, rng))
    re_vals, im_vals = [], []
    for row in samples:
        est = extract_correlation(dict(zip(map(float, lams), row)), l, method, refined)
        re_vals.append(est.re_c)
        im_vals.append(est.im_c)
    per_lam = tuple(ErrorEstimate.from_values(samples[:, b]) for b in range(n_lam))
    return SampledExtraction(per_lam, ErrorEstimate.from_values(re_vals), ErrorEstimate.from_values(im_vals))


def sampled_sweep(config: ProtocolConfig, t2_values: Sequence[float], lams: Sequence[float], sample_cfg: SampleConfig, method: str = "two_point_lambda", refined: bool = True) -> list[SampledExtraction]:
    """:func:`sampled_extraction` at each t2 (stream key starts with the t2 index)."""
    grid = outcome_grid(config, t2_values, lams)
    return [
        sampled_extraction(row, lams, config.l_i, sample_cfg, method, refined, stream=(a,))
        for a, row in enumerate(grid)
    ]


def fit_scaling_exponent(n_s_list: Sequence[int], stds: Sequence[float]) -> float:
    """Least-squares slope of log(std) against log(n_s)."""
    n = np.asarray(n_s_list, dtype=float)
    s = np.asarray(stds, dtype=float)
    if n.shape != s.shape:
        raise ConfigError("n_s list and std list differ in length")
    if np.unique(n).size < 3:
        raise ConfigError("need at least 3 distinct sample sizes")
    if n.max() / n.min() < 10:
        raise ConfigError("sample sizes must span at least one decade")
    if np.any(s <= 0):
        raise ConfigError("standard deviations must be positive to take logs")
    slope, _ = np.polyfit(np.log(n), np.log(s), 1)
    return float(slope)


def scaling_exponent(config: ProtocolConfig, n_s_list: Sequence[int], sample_cfg: SampleConfig) -> float:
    """Fitted exponent of std(cal_C) in the sample size; ``sample_cfg.n_s`` is ignored."""
    stds = [
        error_bars(config, SampleConfig(int(n), sample_cfg.n_repeats, sample_cfg.master_seed), stream=(k,)).std_c
        for k, n in enumerate(n_s_list)
    ]
    return fit_scaling_exponent(n_s_list, stds)
