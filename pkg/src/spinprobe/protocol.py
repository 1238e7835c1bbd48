"""Ancilla-assisted measurement of two-time spin correlations.

One protocol run: evolve the system to t1, couple site i to the ancilla with
U(lam), measure the ancilla S^z, evolve the post-measurement branch to t2 and
measure S_j^z.  The outcome statistics define

    cal_C = sum_m m (P_{m|+} P_+ - P_{m|-} P_-)
          = <Psi(t1)| U^dag(lam) (S_j^z(t2 - t1) x sigma^z) U(lam) |Psi(t1)>,

with sigma^z = 2 S^z the ancilla outcome recorded as +-1.  For Heisenberg
coupling and slowly varying amplitudes,

    cal_C ~ (2/L) sin^2(lam L / 2) Re C - (1/L) sin(lam L) Im C

with L = l (plain) or L = l + 1/2 (refined), which is inverted by
:func:`extract_correlation`.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np

from .coupled import coupling_unitary_coupled_diag, pair_layout
from .errors import ConfigError, ContractViolation, ExtractionError, LayoutError
from .models import ANCILLA_STATE
from .spin import (
    HalfInt,
    Operator,
    SiteLayout,
    StateVector,
    apply_local_array,
    evolution_unitary,
    expectation,
    kron,
    magnetic_values,
    marginal_probabilities,
    propagator,
    spin_operators,
    system_part,
    tensor_embed,
)

COUPLINGS = ("heisenberg", "ising_zz", "ising_xx")
METHODS = ("two_point_lambda", "fourier")
BRANCH_THRESHOLD = 1e-14
PROB_ATOL = 1e-12
NEGATIVE_CLAMP = 1e-14
ANCILLA_OUTCOME_CONVENTION = "sigma_z"  # ancilla outcomes scored as +-1


def _spin_of_dim(d: int) -> HalfInt:
    return HalfInt(d - 1)


@lru_cache(maxsize=128)
def _coupling_matrix(kind: str, l: HalfInt, lam: float) -> np.ndarray:
    if kind == "heisenberg":
        mat = coupling_unitary_coupled_diag(l, lam).matrix
    elif kind == "ising_zz":
        phases = np.exp(-1j * lam * np.outer(magnetic_values(l), [-0.5, 0.5]).reshape(-1))
        mat = np.diag(phases)
    elif kind == "ising_xx":
        sx, sxa = spin_operators(l).sx, spin_operators(HalfInt(1)).sx
        mat = evolution_unitary(kron(sx, sxa), lam).matrix
    else:
        raise ConfigError(f"unknown coupling {kind!r}; choose from {COUPLINGS}")
    mat = np.array(mat)
    mat.setflags(write=False)
    return mat


def coupling_unitary(kind: str, l, lam: float) -> Operator:
    """System-ancilla coupling on H_i x H_A.

    heisenberg: exp(-i lam S_i . S); ising_zz: exp(-i lam S_i^z S^z);
    ising_xx: exp(-i lam S_i^x S^x).
    """
    l = HalfInt.of(l)
    return Operator(_coupling_matrix(kind, l, float(lam)), pair_layout(l))


@dataclass(frozen=True, eq=False)
class ProtocolConfig:
    """One protocol setting.  ``hamiltonian`` may be H_S or H_S x 1_A."""

    hamiltonian: Operator
    initial_state: StateVector
    site_i: int = 0
    site_j: int = 1
    t1: float = 0.0
    t2: float = 0.0
    lam: float = 0.0
    coupling: str = "heisenberg"
    ancilla: StateVector | None = None

    def __post_init__(self):
        psi = self.initial_state
        if psi.layout.has_ancilla:
            raise LayoutError("initial_state must be the system state (no ancilla slot)")
        if not psi.normalized:
            raise ContractViolation("initial state must be normalized")
        h = system_part(self.hamiltonian)
        if h.layout.local_dims != psi.layout.local_dims:
            raise LayoutError("Hamiltonian and initial state live on different layouts")
        psi.layout.check_site(self.site_i)
        psi.layout.check_site(self.site_j)
        if self.t2 < self.t1:
            raise ConfigError(f"need t2 >= t1, got t1={self.t1}, t2={self.t2}")
        if self.coupling not in COUPLINGS:
            raise ConfigError(f"unknown coupling {self.coupling!r}; choose from {COUPLINGS}")
        if self.ancilla is not None and self.ancilla.amplitudes.size != 2:
            raise LayoutError("ancilla state must be two-dimensional")

    @property
    def system_hamiltonian(self) -> Operator:
        return system_part(self.hamiltonian)

    @property
    def l_i(self) -> HalfInt:
        return _spin_of_dim(self.initial_state.layout.local_dims[self.site_i])

    @property
    def l_j(self) -> HalfInt:
        return _spin_of_dim(self.initial_state.layout.local_dims[self.site_j])

    @property
    def ancilla_amplitudes(self) -> np.ndarray:
        return (ANCILLA_STATE if self.ancilla is None else self.ancilla).amplitudes

    def replace(self, **changes) -> "ProtocolConfig":
        return dataclasses.replace(self, **changes)


def _clean_probs(p: np.ndarray, what: str) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.size and p.min() < -NEGATIVE_CLAMP:
        raise ContractViolation(f"negative probability in {what}: {p.min():.3e}")
    return np.clip(p, 0.0, None)


@dataclass(frozen=True, eq=False)
class OutcomeDistribution:
    """P_+-, and P_{m|+-} over the S_j^z eigenvalues ``m_values`` (ascending).

    A branch with P < 1e-14 carries a uniform placeholder conditional and is
    flagged unused.
    """

    m_values: np.ndarray
    p_plus: float
    p_minus: float
    p_m_given_plus: np.ndarray
    p_m_given_minus: np.ndarray
    plus_used: bool = True
    minus_used: bool = True

    def __post_init__(self):
        m = np.asarray(self.m_values, dtype=float)
        pp, pm = (float(x) for x in _clean_probs([self.p_plus, self.p_minus], "ancilla outcome"))
        cp = _clean_probs(self.p_m_given_plus, "P(m|+)")
        cm = _clean_probs(self.p_m_given_minus, "P(m|-)")
        if cp.shape != m.shape or cm.shape != m.shape:
            raise LayoutError("conditional distributions must match m_values")
        if abs(pp + pm - 1.0) > PROB_ATOL:
            raise ContractViolation(f"P+ + P- = {pp + pm!r} != 1")
        for name, c in (("P(m|+)", cp), ("P(m|-)", cm)):
            if abs(c.sum() - 1.0) > PROB_ATOL:
                raise ContractViolation(f"{name} sums to {c.sum()!r}")
        for name, arr in (("m_values", m), ("p_m_given_plus", cp), ("p_m_given_minus", cm)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "p_plus", pp)
        object.__setattr__(self, "p_minus", pm)

    @classmethod
    def from_joint(cls, m_values, joint: np.ndarray) -> "OutcomeDistribution":
        """Build from joint weights ``joint[s, k]`` (s = 0 for -, 1 for +)."""
        joint = _clean_probs(joint, "joint distribution")
        total = joint.sum()
        if abs(total - 1.0) > PROB_ATOL:
            raise ContractViolation(f"joint distribution sums to {total!r}")
        joint = joint / total
        n = joint.shape[1]
        conds, probs, used = [], [], []
        for row in joint:
            p = row.sum()
            probs.append(p)
            if p < BRANCH_THRESHOLD:
                conds.append(np.full(n, 1.0 / n))
                used.append(False)
            else:
                conds.append(row / p)
                used.append(True)
        return cls(m_values, probs[1], probs[0], conds[1], conds[0], used[1], used[0])

    def joint(self) -> np.ndarray:
        """P_+- P_{m|+-} with row 0 = minus, row 1 = plus."""
        return np.vstack([self.p_minus * self.p_m_given_minus, self.p_plus * self.p_m_given_plus])


def _post_coupling_branches(config: ProtocolConfig, lam: float, prop) -> np.ndarray:
    """Columns (minus, plus) of U(lam)|psi(t1), phi>, unnormalized."""
    layout = config.initial_state.layout
    psi_t1 = prop.evolve(config.initial_state.amplitudes, config.t1)
    full = np.outer(psi_t1, config.ancilla_amplitudes).reshape(-1)
    dims = layout.local_dims + (2,)
    umat = _coupling_matrix(config.coupling, config.l_i, float(lam))
    out = apply_local_array(umat, (config.site_i, len(dims) - 1), dims, full)
    return out.reshape(-1, 2)


def outcome_grid(config: ProtocolConfig, t2_values: Sequence[float], lams: Sequence[float]) -> list[list[OutcomeDistribution]]:
    """Exact outcome distributions for every (t2, lam) pair, indexed [t2][lam].

    ``config.t2`` and ``config.lam`` are ignored; the system spectrum is
    diagonalized once and reused across the grid.
    """
    t2_values = [float(t) for t in t2_values]
    if any(t < config.t1 for t in t2_values):
        raise ConfigError("every t2 must satisfy t2 >= t1")
    layout = config.initial_state.layout
    prop = propagator(config.system_hamiltonian)
    m_vals = magnetic_values(config.l_j)
    grid: list[list[OutcomeDistribution | None]] = [[None] * len(lams) for _ in t2_values]
    for b, lam in enumerate(lams):
        branches = _post_coupling_branches(config, lam, prop)
        p_branch = _clean_probs((np.abs(branches) ** 2).sum(axis=0), "ancilla outcome")
        used = p_branch >= BRANCH_THRESHOLD
        normed = np.where(used, branches / np.sqrt(np.where(used, p_branch, 1.0)), 0.0)
        coeffs = prop.to_eigenbasis(normed)
        for a, t2 in enumerate(t2_values):
            evolved = prop.from_eigenbasis(coeffs, t2 - config.t1)
            conds = []
            for s in (0, 1):
                if used[s]:
                    conds.append(marginal_probabilities(evolved[:, s], layout.local_dims, config.site_j))
                else:
                    conds.append(np.full(m_vals.size, 1.0 / m_vals.size))
            grid[a][b] = OutcomeDistribution(
                m_vals, p_branch[1], p_branch[0], conds[1], conds[0], bool(used[1]), bool(used[0])
            )
    return grid  # type: ignore[return-value]


def run_protocol(config: ProtocolConfig) -> OutcomeDistribution:
    """Born-rule statistics of one protocol setting."""
    return outcome_grid(config, [config.t2], [config.lam])[0][0]


def script_c_from_distribution(dist: OutcomeDistribution) -> float:
    """sum_m m (P_{m|+} P_+ - P_{m|-} P_-)."""
    m = dist.m_values
    return float(np.dot(m, dist.p_m_given_plus) * dist.p_plus - np.dot(m, dist.p_m_given_minus) * dist.p_minus)


def script_c_direct(config: ProtocolConfig) -> float:
    """Same quantity as one expectation value on the full system x ancilla space."""
    h_sys = config.system_hamiltonian
    layout = h_sys.layout.with_ancilla()
    h_full = kron(h_sys, Operator(np.eye(2), SiteLayout((2,), has_ancilla=True)))
    n_anc = layout.n_sites - 1
    psi0 = np.kron(config.initial_state.amplitudes, config.ancilla_amplitudes)
    psi_t1 = propagator(h_full).evolve(psi0, config.t1)
    umat = coupling_unitary(config.coupling, config.l_i, config.lam).matrix
    psi_lam = StateVector(apply_local_array(umat, (config.site_i, n_anc), layout.local_dims, psi_t1), layout)

    u_tau = evolution_unitary(h_full, config.t2 - config.t1).matrix
    sjz = tensor_embed(spin_operators(config.l_j).sz, config.site_j, layout).matrix
    sigma_z = tensor_embed(Operator(np.diag([-1.0, 1.0])), n_anc, layout).matrix
    observable = Operator(u_tau.conj().T @ sjz @ u_tau @ sigma_z, layout)
    value = expectation(psi_lam, observable)
    scale = max(1.0, float(config.l_j))
    if abs(value.imag) > 1e-9 * scale:
        raise ContractViolation(f"cal_C has an imaginary part {value.imag:.3e}")
    return float(value.real)


@dataclass(frozen=True)
class CorrelationEstimate:
    """Estimate of C(t1, t2) from cal_C values keyed by lam."""

    script_c_values: Mapping[float, float]
    re_c: float
    im_c: float
    method: str
    refined: bool = True
    l: HalfInt | None = None

    @property
    def value(self) -> complex:
        return complex(self.re_c, self.im_c)


def response_model(lams, l, refined: bool = True) -> np.ndarray:
    """Design matrix mapping (Re C, Im C) to cal_C at each lam."""
    lf = float(HalfInt.of(l))
    big_l = lf + 0.5 if refined else lf
    lams = np.atleast_1d(np.asarray(lams, dtype=float))
    return np.column_stack([
        (2.0 / big_l) * np.sin(lams * big_l / 2) ** 2,
        -(1.0 / big_l) * np.sin(lams * big_l),
    ])


def _find_lambda(lams: np.ndarray, l: float, target: float) -> int:
    hits = np.flatnonzero(np.abs(lams * l - target) <= 1e-9 * max(1.0, target))
    if hits.size == 0:
        raise ExtractionError(f"two-point extraction needs cal_C at lam*l = {target:.6g}")
    return int(hits[0])


def extract_correlation(script_c: Mapping[float, float], l, method: str = "two_point_lambda", refined: bool = True) -> CorrelationEstimate:
    """Invert the cal_C(lam) response for (Re C, Im C).

    ``two_point_lambda`` solves the 2x2 system at lam*l = pi and pi/2 (for
    ``refined=False`` this is Re C = (l/2) cal_C(pi), Im C = Re C - l cal_C(pi/2));
    ``fourier`` is an ordinary least-squares fit over >= 4 distinct lam.
    """
    l = HalfInt.of(l)
    if l.twice_value <= 0:
        raise ExtractionError("extraction needs l > 0")
    lf = float(l)
    lams = np.array([float(k) for k in script_c], dtype=float)
    vals = np.array([float(v) for v in script_c.values()], dtype=float)
    if method == "two_point_lambda":
        idx = [_find_lambda(lams, lf, np.pi), _find_lambda(lams, lf, np.pi / 2)]
        design = response_model(lams[idx], l, refined)
        if abs(np.linalg.det(design)) < 1e-14:
            raise ExtractionError("two-point system is singular for this l")
        re_c, im_c = np.linalg.solve(design, vals[idx])
    elif method == "fourier":
        if np.unique(lams).size < 4:
            raise ExtractionError("fourier extraction needs at least 4 distinct lam values")
        design = response_model(lams, l, refined)
        sv = np.linalg.svd(design, compute_uv=False)
        if sv[-1] <= 1e-10 * sv[0]:
            raise ExtractionError("lam grid makes the Re/Im response functions collinear")
        (re_c, im_c), *_ = np.linalg.lstsq(design, vals, rcond=None)
    else:
        raise ExtractionError(f"unknown method {method!r}; choose from {METHODS}")
    return CorrelationEstimate(dict(zip(lams.tolist(), vals.tolist())), float(re_c), float(im_c), method, refined, l)


def lambdas_for(lambda_l: Sequence[float], l) -> list[float]:
    """Convert dimensionless lam*l values to lam."""
    lf = float(HalfInt.of(l))
    return [float(x) / lf for x in lambda_l]


@dataclass(frozen=True, eq=False)
class ProtocolSweep:
    """cal_C and extracted C on a t2 grid (rows) for several lam (columns)."""

    t2: np.ndarray
    lams: np.ndarray
    distributions: list[list[OutcomeDistribution]]
    script_c: np.ndarray
    re_c: np.ndarray
    im_c: np.ndarray
    method: str
    refined: bool


def sweep(config: ProtocolConfig, t2_values: Sequence[float], lams: Sequence[float], method: str = "two_point_lambda", refined: bool = True) -> ProtocolSweep:
    grid = outcome_grid(config, t2_values, lams)
    script_c = np.array([[script_c_from_distribution(d) for d in row] for row in grid])
    re_c, im_c = [], []
    for row in script_c:
        est = extract_correlation(dict(zip(map(float, lams), row)), config.l_i, method, refined)
        re_c.append(est.re_c)
        im_c.append(est.im_c)
    return ProtocolSweep(
        np.asarray(t2_values, dtype=float), np.asarray(lams, dtype=float), grid,
        script_c, np.array(re_c), np.array(im_c), method, refined,
    )
