#!/usr/bin/env python3
# Systematic error of the extracted Re C for the ramp state at l = 4 and
# l = 16.  The l = 16 run diagonalizes a 1089-dimensional Hamiltonian once.

import time

import numpy as np

from spinprobe import (
    HalfInt,
    ProtocolConfig,
    exact_series,
    heisenberg_two_spin,
    lambdas_for,
    ramp_state,
    sweep,
    systematic_deviation,
)

t2 = np.arange(61) * 0.05
for lv in (4, 16):
    start = time.perf_counter()
    l = HalfInt.of(lv)
    h = heisenberg_two_spin(l, ancilla=False)
    psi = ramp_state(l)
    res = sweep(ProtocolConfig(h, psi), t2, lambdas_for([np.pi / 2, np.pi], l))
    exact = exact_series(psi, h, 0, 1, 0.0, t2).real / lv**2
    dev = np.abs(exact - res.re_c / lv**2)
    rep = systematic_deviation(exact, res.re_c / lv**2, t2)
    worst = int(np.argmax(dev))
    print(f"l = {lv:2d}: max |dev| = {rep.max_abs_dev:.4f} at t2 = {t2[worst]:.2f}, "
          f"mean |dev| = {rep.mean_abs_dev:.4f}  ({time.perf_counter() - start:.1f} s)")

# the largest deviation sits at t2 = 0, where the ramp puts most weight on
# m1 near -l and the edge of the multiplet matters most
