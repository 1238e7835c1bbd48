"""Exact reference values: two-time correlations, Ising closed forms, deviation metrics."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ContractViolation, LayoutError
from .spin import (
    HalfInt,
    Operator,
    StateVector,
    apply_local_array,
    magnetic_values,
    propagator,
    spin_operators,
    system_part,
)

SYMMETRY_ATOL = 1e-12


def _sz_diag(dims: Sequence[int], site: int) -> np.ndarray:
    """Diagonal of S^z at ``site`` over the flattened tensor space."""
    local = magnetic_values(HalfInt(dims[site] - 1))
    shape = [1] * len(dims)
    shape[site] = dims[site]
    return np.broadcast_to(local.reshape(shape), tuple(dims)).reshape(-1)


def _system_inputs(psi: StateVector, h: Operator, sites: Sequence[int]):
    h = system_part(h)
    if psi.layout.has_ancilla:
        raise LayoutError("expected a system-only state")
    if h.layout.local_dims != psi.layout.local_dims:
        raise LayoutError("state and Hamiltonian layouts differ")
    for s in sites:
        psi.layout.check_site(s)
    return h, psi.layout.local_dims


def exact_two_time(psi: StateVector, h: Operator, i: int, j: int, t1: float, t2: float) -> complex:
    """<psi| S_i^z(t1) S_j^z(t2) |psi> with Heisenberg-picture operators."""
    return complex(exact_series(psi, h, i, j, t1, [t2])[0])


def exact_series(psi: StateVector, h: Operator, i: int, j: int, t1: float, t2_values) -> np.ndarray:
    """C(t1, t2) on a grid of t2, reusing one eigendecomposition.

    C = <S_i^z a | e^{i H (t2 - t1)} S_j^z b> with a = psi(t1), b = psi(t2).
    """
    h, dims = _system_inputs(psi, h, (i, j))
    prop = propagator(h)
    szi, szj = _sz_diag(dims, i), _sz_diag(dims, j)
    psi_eig = prop.to_eigenbasis(psi.amplitudes)
    left = prop.to_eigenbasis(szi * prop.from_eigenbasis(psi_eig, t1))
    out = np.empty(len(t2_values), dtype=complex)
    for k, t2 in enumerate(t2_values):
        right = szj * prop.from_eigenbasis(psi_eig, t2)
        out[k] = np.vdot(prop.from_eigenbasis(left, t2 - t1), right)
    return out


def normalized_correlation(psi: StateVector, h: Operator, t1: float, t2: float, l) -> complex:
    """C(t1, t2) / l^2 between the two benchmark sites (0 and 1)."""
    lf = float(HalfInt.of(l))
    return exact_two_time(psi, h, 0, 1, t1, t2) / lf**2


def _split_ancilla(psi_with_ancilla: StateVector) -> np.ndarray:
    layout = psi_with_ancilla.layout
    if not layout.has_ancilla:
        raise LayoutError("closed forms need the state including the ancilla slot")
    return psi_with_ancilla.amplitudes.reshape(-1, 2)


def _heisenberg_observable_action(h: Operator, dims, j: int, tau: float):
    """Return f(v) = S_j^z(tau) v for the system Hamiltonian ``h``."""
    prop = propagator(h)
    szj = _sz_diag(dims, j)

    def act(v: np.ndarray) -> np.ndarray:
        return prop.evolve(szj * prop.evolve(v, tau), -tau)

    return act


def ising_zz_closed_form(psi_with_ancilla: StateVector, h: Operator, i: int, j: int, t1: float, t2: float, lam: float, require_symmetric_ancilla: bool = True) -> float:
    """cal_C for exp(-i lam S_i^z S^z) coupling without running the protocol.

    With Psi(t1) = sum_s chi_s x |s>, the correlator is
    sum_s 2s <chi_s| e^{i lam s S_i^z} S_j^z(t2 - t1) e^{-i lam s S_i^z} |chi_s>.
    For the equal-weight ancilla this is
    (1/2)[<e^{i lam S_i^z/2} O e^{-i lam S_i^z/2}> - <e^{-i lam S_i^z/2} O e^{i lam S_i^z/2}>].
    """
    h = system_part(h)
    dims = psi_with_ancilla.layout.system_dims
    if h.layout.local_dims != dims:
        raise LayoutError("state and Hamiltonian layouts differ")
    for s in (i, j):
        h.layout.check_site(s)
    amps = _split_ancilla(psi_with_ancilla)
    if require_symmetric_ancilla and np.abs(amps[:, 0] - amps[:, 1]).max() > SYMMETRY_ATOL:
        raise ContractViolation("ancilla is not in the equal-weight (|-> + |+>)/sqrt(2) state")
    chi = propagator(h).evolve(amps, t1)
    act = _heisenberg_observable_action(h, dims, j, t2 - t1)
    szi = _sz_diag(dims, i)
    total = 0.0 + 0.0j
    for col, s in ((0, -0.5), (1, 0.5)):
        v = np.exp(-1j * lam * s * szi) * chi[:, col]
        total += 2 * s * np.vdot(v, act(v))
    return float(total.real)


def _sx_rotation(h_dims, i: int, lam_r: float) -> np.ndarray:
    """exp(-i lam_r S_i^x) as a local matrix."""
    l = HalfInt(h_dims[i] - 1)
    vals, vecs = np.linalg.eigh(spin_operators(l).sx.matrix)
    return (vecs * np.exp(-1j * lam_r * vals)) @ vecs.conj().T


def ising_xx_closed_form(psi_with_ancilla: StateVector, h: Operator, i: int, j: int, t1: float, t2: float, lam: float, require_symmetric_ancilla: bool = True) -> float:
    """cal_C for exp(-i lam S_i^x S^x) coupling without running the protocol.

    In the ancilla S^x eigenbasis the coupling is block diagonal and sigma^z
    swaps the two blocks, so cal_C = 2 Re <p_- chi_-| S_j^z(t2 - t1) |p_+ chi_+>
    with p_r = exp(-i lam r S_i^x).  For the equal-weight ancilla chi_- = 0
    and the correlator vanishes identically.
    """
    h = system_part(h)
    dims = psi_with_ancilla.layout.system_dims
    if h.layout.local_dims != dims:
        raise LayoutError("state and Hamiltonian layouts differ")
    for s in (i, j):
        h.layout.check_site(s)
    amps = _split_ancilla(psi_with_ancilla)
    if require_symmetric_ancilla and np.abs(amps[:, 0] - amps[:, 1]).max() > SYMMETRY_ATOL:
        raise ContractViolation("ancilla is not in the equal-weight (|-> + |+>)/sqrt(2) state")
    chi = propagator(h).evolve(amps, t1)
    # |+x> = (|-> + |+>)/sqrt2, |-x> = (|+> - |->)/sqrt2; sigma^z maps one onto the other
    chi_px = (chi[:, 0] + chi[:, 1]) / np.sqrt(2)
    chi_mx = (chi[:, 1] - chi[:, 0]) / np.sqrt(2)
    rot = {r: _sx_rotation(dims, i, lam * r) for r in (-0.5, 0.5)}
    v_plus = apply_local_array(rot[0.5], (i,), dims, chi_px)
    v_minus = apply_local_array(rot[-0.5], (i,), dims, chi_mx)
    act = _heisenberg_observable_action(h, dims, j, t2 - t1)
    return float(2 * np.vdot(v_minus, act(v_plus)).real)


@dataclass(frozen=True)
class DeviationReport:
    max_abs_dev: float
    mean_abs_dev: float
    grid: list[tuple[float, float, float]]


def systematic_deviation(exact_series, estimated_series, t2=None) -> DeviationReport:
    """Pointwise |exact - estimate| summary over a common t2 grid."""
    exact = np.asarray(exact_series)
    est = np.asarray(estimated_series)
    if exact.shape != est.shape or exact.ndim != 1:
        raise LayoutError(f"series shapes differ: {exact.shape} vs {est.shape}")
    t2 = np.arange(exact.size, dtype=float) if t2 is None else np.asarray(t2, dtype=float)
    if t2.shape != exact.shape:
        raise LayoutError("t2 grid does not match the series length")
    if exact.size == 0:
        raise LayoutError("empty series")
    dev = np.abs(exact - est)
    grid = [(float(t), complex(e) if np.iscomplexobj(exact) else float(e), complex(s) if np.iscomplexobj(est) else float(s))
            for t, e, s in zip(t2, exact, est)]
    return DeviationReport(float(dev.max()), float(dev.mean()), grid)
