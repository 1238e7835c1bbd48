#!/usr/bin/env python3
# How slowly do the uncoupled-basis coefficients vary with m?  The
# metric is the largest neighbour jump relative to the largest block.

import numpy as np

from spinprobe import gamma_coefficients, initial_state, slow_variation_metric, with_ancilla

for name in ("uniform", "maxmag", "ramp"):
    for l in (4, 16):
        g = gamma_coefficients(with_ancilla(initial_state(name, l)), 0)
        print(f"{name:>7} l={l:2d}: full = {slow_variation_metric(g):.4f}, "
              f"interior = {slow_variation_metric(g, interior=True):.4f}, "
              f"total weight = {g.total_weight():.12f}")

# plus-branch block norms for the ramp state at l = 4
g = gamma_coefficients(with_ancilla(initial_state("ramp", 4)), 0)
plus, _ = g.norms()
for m, v in zip(g.m_values, plus):
    print(f"m = {str(m):>5}  |gamma+| = {v:.4f}  " + "#" * int(round(60 * v)))
