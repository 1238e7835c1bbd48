"""Benchmark Hamiltonians and initial states.

The two-spin benchmark uses H = S_1 . S_2 with unit exchange constant; time
is measured in units of its inverse.  Sites are 0-indexed.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .errors import ConfigError, LayoutError
from .spin import (
    HalfInt,
    Operator,
    SiteLayout,
    StateVector,
    as_spin,
    kron,
    kron_states,
    magnetic_values,
    spin_dim,
    spin_operators,
)

ANCILLA_STATE = StateVector(np.array([1.0, 1.0]) / np.sqrt(2), SiteLayout((2,), has_ancilla=True))
"""(|-> + |+>)/sqrt(2) on the ancilla slot."""


def heisenberg_two_spin(l, ancilla: bool = True) -> Operator:
    """S_1 . S_2 on two spin-l sites, tensored with the ancilla identity by default."""
    ops = spin_operators(l)
    h = sum((kron(s, s) for s in ops.components[1:]), kron(ops.sx, ops.sx))
    if ancilla:
        h = kron(h, Operator(np.eye(2), SiteLayout((2,), has_ancilla=True)))
    return h


def one_axis_twisting(chi: float, l) -> Operator:
    """chi (S^z)^2 on a single site."""
    return Operator(np.diag(chi * magnetic_values(l) ** 2))


def _two_site_layout(l) -> SiteLayout:
    d = spin_dim(l)
    return SiteLayout((d, d))


def uniform_state(l) -> StateVector:
    """Equal superposition of all |m1> x |m2>."""
    d = spin_dim(l)
    return StateVector.from_unnormalized(np.ones(d * d), _two_site_layout(l))


def maximally_magnetized_state(l) -> StateVector:
    """|l, l> x |l, l>."""
    d = spin_dim(l)
    amps = np.zeros(d * d)
    amps[-1] = 1.0
    return StateVector(amps, _two_site_layout(l))


def ramp_weights(l) -> np.ndarray:
    """Unnormalized (l - m1) weights of the first site, ascending m1."""
    return float(as_spin(l)) - magnetic_values(l)


def ramp_state(l) -> StateVector:
    """sum_m1 (l - m1) |l, m1> x |l, l>, normalized."""
    d = spin_dim(l)
    top = np.zeros(d)
    top[-1] = 1.0
    return StateVector.from_unnormalized(np.kron(ramp_weights(l), top), _two_site_layout(l))


def with_ancilla(psi_system: StateVector, ancilla: StateVector | None = None) -> StateVector:
    """psi x phi with the ancilla appended as the last slot."""
    if psi_system.layout.has_ancilla:
        raise LayoutError("state already has an ancilla slot")
    phi = ANCILLA_STATE if ancilla is None else ancilla
    if phi.amplitudes.size != 2:
        raise LayoutError("ancilla state must be two-dimensional")
    phi = StateVector(phi.amplitudes, SiteLayout((2,), has_ancilla=True))
    return kron_states(psi_system, phi)


STATES: dict[str, Callable[[object], StateVector]] = {
    "uniform": uniform_state,
    "maxmag": maximally_magnetized_state,
    "ramp": ramp_state,
}


def initial_state(name: str, l) -> StateVector:
    try:
        return STATES[name](l)
    except KeyError:
        raise ConfigError(f"unknown initial state {name!r}; choose from {sorted(STATES)}") from None


HAMILTONIAN_KINDS = ("heisenberg_two_spin", "one_axis_twisting", "custom")


@dataclass(frozen=True)
class ModelSpec:
    """Declarative model description.

    ``custom`` expects ``matrix`` (system Hilbert space, ascending-m basis
    per site) in ``parameters``.
    """

    spins: tuple[HalfInt, ...]
    hamiltonian_kind: str = "heisenberg_two_spin"
    parameters: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        spins = tuple(as_spin(l) for l in self.spins)
        object.__setattr__(self, "spins", spins)
        if self.hamiltonian_kind not in HAMILTONIAN_KINDS:
            raise ConfigError(f"unknown Hamiltonian kind {self.hamiltonian_kind!r}")
        if self.hamiltonian_kind == "heisenberg_two_spin" and (len(spins) != 2 or spins[0] != spins[1]):
            raise ConfigError("heisenberg_two_spin needs exactly two sites with equal l")
        if self.hamiltonian_kind == "one_axis_twisting" and len(spins) != 1:
            raise ConfigError("one_axis_twisting is a single-site model")

    @property
    def layout(self) -> SiteLayout:
        return SiteLayout.for_spins(self.spins)

    def hamiltonian(self) -> Operator:
        """System Hamiltonian (no ancilla slot)."""
        if self.hamiltonian_kind == "heisenberg_two_spin":
            return heisenberg_two_spin(self.spins[0], ancilla=False)
        if self.hamiltonian_kind == "one_axis_twisting":
            return one_axis_twisting(float(self.parameters.get("chi", 1.0)), self.spins[0])
        try:
            mat = np.asarray(self.parameters["matrix"], dtype=complex)
        except KeyError:
            raise ConfigError("custom model needs a 'matrix' parameter") from None
        return Operator(mat, self.layout)
