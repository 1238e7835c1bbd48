#!/usr/bin/env python3
# The ancilla correlator computed two ways: from Born-rule outcome
# statistics and as one expectation value on system x ancilla.

import numpy as np

from spinprobe import (
    HalfInt,
    ProtocolConfig,
    heisenberg_two_spin,
    run_protocol,
    script_c_direct,
    script_c_from_distribution,
    uniform_state,
)

l = HalfInt.of(4)
h = heisenberg_two_spin(l)          # S_1 . S_2 x 1_ancilla
psi = uniform_state(l)              # equal weight on every |m1, m2>

print(f"{'coupling':>11} {'lam*l':>7} {'t2':>5} {'Born rule':>12} {'direct':>12} {'|diff|':>9}")
for kind in ("heisenberg", "ising_zz", "ising_xx"):
    for lam_l in (np.pi / 2, np.pi):
        for t2 in (0.0, 0.5, 1.5):
            cfg = ProtocolConfig(h, psi, site_i=0, site_j=1, t1=0.0, t2=t2, lam=lam_l / float(l), coupling=kind)
            dist = run_protocol(cfg)
            born = script_c_from_distribution(dist)
            direct = script_c_direct(cfg)
            print(f"{kind:>11} {lam_l:7.4f} {t2:5.2f} {born:12.8f} {direct:12.8f} {abs(born - direct):9.1e}")

# the outcome distribution itself
dist = run_protocol(ProtocolConfig(h, psi, 0, 1, 0.0, 1.0, np.pi / float(l)))
print("\nP+ =", round(dist.p_plus, 6), " P- =", round(dist.p_minus, 6))
print("P(m|+) =", np.round(dist.p_m_given_plus, 4))
print("P(m|-) =", np.round(dist.p_m_given_minus, 4))

# with an Ising zz coupling and the equal-weight ancilla the correlator is
# odd in lam, and it vanishes on S^z eigenstates
