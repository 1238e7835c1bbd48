#!/usr/bin/env python3
# Finite-sample estimates with one-standard-deviation error bars from
# 100 independent repeats, at two sample sizes (l = 4, uniform state).

import numpy as np

from spinprobe import (
    HalfInt,
    ProtocolConfig,
    SampleConfig,
    error_bars,
    exact_series,
    heisenberg_two_spin,
    lambdas_for,
    sampled_sweep,
    sweep,
    uniform_state,
)
from spinprobe.sampling import fit_scaling_exponent

l = HalfInt.of(4)
h = heisenberg_two_spin(l, ancilla=False)
psi = uniform_state(l)
cfg = ProtocolConfig(h, psi)
t2 = np.arange(0, 61, 6) * 0.05
lams = lambdas_for([np.pi / 2, np.pi], l)
exact = exact_series(psi, h, 0, 1, 0.0, t2).real / 16
no_noise = sweep(cfg, t2, lams).re_c / 16

for n_s in (100, 1000):
    res = sampled_sweep(cfg, t2, lams, SampleConfig(n_s, n_repeats=100, master_seed=2024))
    print(f"\nn_s = {n_s}")
    print(f"{'t2':>5} {'exact':>8} {'infinite n_s':>13} {'sampled':>8} {'std':>7}")
    for k, t in enumerate(t2):
        r = res[k].re_c
        print(f"{t:5.2f} {exact[k]:8.4f} {no_noise[k]:13.4f} {r.mean_c / 16:8.4f} {r.std_c / 16:7.4f}")

# spread of the raw correlator against sample size
single = cfg.replace(t2=0.5, lam=lams[1])
sizes = [100, 300, 1000, 3000]
stds = [error_bars(single, SampleConfig(n, 100, 7), stream=(k,)).std_c for k, n in enumerate(sizes)]
print("\nstd per n_s:", {n: round(float(s), 4) for n, s in zip(sizes, stds)})
print("fitted exponent:", round(fit_scaling_exponent(sizes, stds), 3))
