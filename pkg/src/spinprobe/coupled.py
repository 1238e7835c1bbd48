"""Coupling of a spin-l site to the spin-1/2 ancilla.

Coupled states |l, j, m> with j = l +- 1/2 are written in the uncoupled
product basis |l, m_l> x |1/2, m_s> using the Condon-Shortley convention:

    |l, l+1/2, m> = a |m - 1/2> x |+> + b |m + 1/2> x |->
    |l, l-1/2, m> = a |m + 1/2> x |-> - b |m - 1/2> x |+>

with a = sqrt((l + 1/2 + m)/(2l + 1)) and b = sqrt((l + 1/2 - m)/(2l + 1)).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import InvalidSpinError, LayoutError
from .spin import (
    HALF,
    HalfInt,
    Operator,
    SiteLayout,
    StateVector,
    apply_local_array,
    as_spin,
    m_index,
    spin_dim,
)

# ancilla basis slots (ascending m_s)
MINUS, PLUS = 0, 1


@dataclass(frozen=True)
class CGPair:
    a: float
    b: float


def _check_total_m(l: HalfInt, m: HalfInt, j: HalfInt):
    if (m.twice_value - l.twice_value) % 2 == 0:
        raise InvalidSpinError(f"m = {m} must differ from l = {l} by a half-odd integer")
    if abs(m.twice_value) > j.twice_value:
        raise InvalidSpinError(f"|m| = {abs(m)} exceeds j = {j}")


def cg_coefficients(l, m) -> CGPair:
    """Clebsch-Gordan pair (a_lm, b_lm) for coupling spin l to spin 1/2."""
    l, m = as_spin(l), HalfInt.of(m)
    _check_total_m(l, m, l + HALF)
    denom = l.twice_value + 1
    # (l + 1/2 +- m) = (2l + 1 +- 2m) / 2, clamped against rounding at the stretch states
    a = np.sqrt(max((l.twice_value + 1 + m.twice_value) / (2 * denom), 0.0))
    b = np.sqrt(max((l.twice_value + 1 - m.twice_value) / (2 * denom), 0.0))
    return CGPair(float(a), float(b))


def pair_layout(l) -> SiteLayout:
    return SiteLayout((spin_dim(l), 2), has_ancilla=True)


def _uncoupled_index(l: HalfInt, m_l: HalfInt, slot: int) -> int | None:
    if abs(m_l.twice_value) > l.twice_value:
        return None
    return 2 * m_index(l, m_l) + slot


def coupled_basis_vector(l, j, m) -> StateVector:
    """|l, j, m> on H_site x H_ancilla."""
    l, j, m = as_spin(l), HalfInt.of(j), HalfInt.of(m)
    if j == l + HALF:
        upper = True
    elif j == l - HALF and j.twice_value >= 0:
        upper = False
    else:
        raise InvalidSpinError(f"j = {j} is not l +- 1/2 for l = {l}")
    _check_total_m(l, m, j)
    cg = cg_coefficients(l, m)
    vec = np.zeros(2 * spin_dim(l), dtype=complex)
    if upper:
        terms = [(cg.a, m - HALF, PLUS), (cg.b, m + HALF, MINUS)]
    else:
        terms = [(cg.a, m + HALF, MINUS), (-cg.b, m - HALF, PLUS)]
    for coeff, m_l, slot in terms:
        idx = _uncoupled_index(l, m_l, slot)
        if idx is not None:
            vec[idx] += coeff
    return StateVector(vec, pair_layout(l))


def coupled_labels(l) -> list[tuple[HalfInt, HalfInt]]:
    """(j, m) labels in the column order of :func:`coupled_basis_matrix`."""
    l = as_spin(l)
    labels = []
    for j in (l + HALF, l - HALF):
        if j.twice_value < 0:
            continue
        labels.extend((j, HalfInt(t)) for t in range(-j.twice_value, j.twice_value + 1, 2))
    return labels


@lru_cache(maxsize=64)
def _basis_matrix(l: HalfInt) -> np.ndarray:
    cols = [coupled_basis_vector(l, j, m).amplitudes for j, m in coupled_labels(l)]
    mat = np.column_stack(cols)
    mat.setflags(write=False)
    return mat


def coupled_basis_matrix(l) -> np.ndarray:
    """Unitary whose columns are the coupled states, ordered as :func:`coupled_labels`."""
    return _basis_matrix(as_spin(l))


def heisenberg_phase_exponent(l, j) -> float:
    """[j(j+1) - l(l+1) - 3/4] / 2, the eigenvalue of S_i . S on the j multiplet."""
    tl, tj = as_spin(l).twice_value, HalfInt.of(j).twice_value
    return (tj * (tj + 2) - tl * (tl + 2) - 3) / 8


def coupling_unitary_coupled_diag(l, lam: float) -> Operator:
    """exp(-i lam S_i . S) built from its diagonal form in the coupled basis."""
    l = as_spin(l)
    basis = coupled_basis_matrix(l)
    phases = np.array([np.exp(-1j * lam * heisenberg_phase_exponent(l, j)) for j, _ in coupled_labels(l)])
    return Operator((basis * phases) @ basis.conj().T, pair_layout(l))


def j_populations(psi: StateVector, site: int) -> dict[HalfInt, float]:
    """Weight of ``psi`` in each coupled multiplet j of (site, ancilla)."""
    layout = psi.layout
    if not layout.has_ancilla:
        raise LayoutError("state has no ancilla slot")
    site = layout.check_site(site)
    d = layout.local_dims[site]
    l = HalfInt(d - 1)
    basis = coupled_basis_matrix(l)
    coeffs = apply_local_array(basis.conj().T, (site, layout.n_sites - 1), layout.local_dims, psi.amplitudes)
    # after the change of basis the (site, ancilla) slot pair indexes coupled labels
    weights = np.abs(coeffs.reshape(layout.local_dims)) ** 2
    weights = np.moveaxis(weights, (site, layout.n_sites - 1), (0, 1)).reshape(2 * d, -1).sum(axis=1)
    out: dict[HalfInt, float] = {}
    for (j, _), w in zip(coupled_labels(l), weights):
        out[j] = out.get(j, 0.0) + float(w)
    return out


@dataclass(frozen=True, eq=False)
class GammaTable:
    """Uncoupled-basis blocks gamma_m^+- = <l, m -+ 1/2; 1/2, +-1/2 | Psi>.

    Rows follow ``m_values`` (-l-1/2 ... l+1/2); each row is a vector over
    the remaining system sites.  Out-of-range rows are zero.
    """

    l: HalfInt
    m_values: tuple[HalfInt, ...]
    plus: np.ndarray
    minus: np.ndarray

    @property
    def gamma_plus(self) -> dict[HalfInt, np.ndarray]:
        return dict(zip(self.m_values, self.plus))

    @property
    def gamma_minus(self) -> dict[HalfInt, np.ndarray]:
        return dict(zip(self.m_values, self.minus))

    def total_weight(self) -> float:
        return float((np.abs(self.plus) ** 2).sum() + (np.abs(self.minus) ** 2).sum())

    def plus_in_range(self) -> np.ndarray:
        """Plus-branch rows whose m - 1/2 lies inside the multiplet."""
        return self.plus[1:]

    def norms(self) -> tuple[np.ndarray, np.ndarray]:
        return np.linalg.norm(self.plus, axis=1), np.linalg.norm(self.minus, axis=1)


def gamma_coefficients(psi: StateVector, site: int) -> GammaTable:
    layout = psi.layout
    if not layout.has_ancilla:
        raise LayoutError("gamma coefficients need a state with the ancilla slot")
    site = layout.check_site(site)
    d = layout.local_dims[site]
    l = HalfInt(d - 1)
    tens = np.moveaxis(psi.tensor(), (site, layout.n_sites - 1), (0, 1)).reshape(d, 2, -1)
    rest = tens.shape[2]
    m_values = tuple(HalfInt(t) for t in range(-l.twice_value - 1, l.twice_value + 2, 2))
    plus = np.zeros((len(m_values), rest), dtype=complex)
    minus = np.zeros_like(plus)
    # row k <-> m = -l - 1/2 + k;  plus uses m_l = m - 1/2 (index k - 1), minus uses m + 1/2 (index k)
    plus[1:] = tens[:, PLUS, :]
    minus[:-1] = tens[:, MINUS, :]
    return GammaTable(l, m_values, plus, minus)


def slow_variation_metric(g: GammaTable, interior: bool = False, floor: float = 1e-30) -> float:
    """max_m ||gamma_{m+1} - gamma_m|| / (max_m ||gamma_m|| + floor), plus branch.

    The full-range variant pads the multiplet with zeros on both sides, so
    any state populating an edge of the multiplet scores at least the edge
    jump; ``interior=True`` compares only neighbours inside the multiplet.
    """
    seq = g.plus_in_range()
    if not interior:
        pad = np.zeros((1, seq.shape[1]), dtype=complex)
        seq = np.vstack([pad, seq, pad])
    if seq.shape[0] < 2:
        return 0.0
    jumps = np.linalg.norm(np.diff(seq, axis=0), axis=1)
    scale = np.linalg.norm(seq, axis=1).max()
    return float(jumps.max() / (scale + floor))
