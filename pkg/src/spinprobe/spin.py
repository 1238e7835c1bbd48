"""Spin operator algebra, tensor-product layouts and exact unitary propagation.

Every site uses the basis |l, m> ordered by ascending m (m = -l first); the
ancilla, when present, is always the last tensor slot.
"""
from __future__ import annotations

import hashlib
import math
import threading
from collections import OrderedDict
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from numbers import Integral
from typing import Sequence

import numpy as np

from .errors import ContractViolation, InvalidSpinError, LayoutError

HERMITIAN_RTOL = 1e-12
UNITARY_ATOL = 1e-10
NORM_ATOL = 1e-12


@dataclass(frozen=True, order=True)
class HalfInt:
    """Exact half-integer, stored as twice its value."""

    twice_value: int

    def __post_init__(self):
        if not isinstance(self.twice_value, Integral) or isinstance(self.twice_value, bool):
            raise TypeError(f"twice_value must be an integer, got {self.twice_value!r}")
        object.__setattr__(self, "twice_value", int(self.twice_value))

    @classmethod
    def of(cls, value) -> "HalfInt":
        """Build from an int, float, Fraction, string ("3/2", "1.5") or HalfInt."""
        if isinstance(value, HalfInt):
            return value
        if isinstance(value, Integral) and not isinstance(value, bool):
            return cls(2 * int(value))
        try:
            frac = Fraction(value) if not isinstance(value, str) else Fraction(value.strip())
        except (TypeError, ValueError) as exc:
            raise InvalidSpinError(f"cannot interpret {value!r} as a half-integer") from exc
        twice = 2 * frac
        if twice.denominator != 1:
            raise InvalidSpinError(f"{value!r} is not a multiple of 1/2")
        return cls(int(twice))

    def __float__(self) -> float:
        return self.twice_value / 2

    def __index__(self):
        if self.twice_value % 2:
            raise TypeError(f"{self} is not an integer")
        return self.twice_value // 2

    def __neg__(self) -> "HalfInt":
        return HalfInt(-self.twice_value)

    def __add__(self, other) -> "HalfInt":
        other = HalfInt.of(other)
        return HalfInt(self.twice_value + other.twice_value)

    __radd__ = __add__

    def __sub__(self, other) -> "HalfInt":
        return self + (-HalfInt.of(other))

    def __rsub__(self, other) -> "HalfInt":
        return HalfInt.of(other) - self

    def __abs__(self) -> "HalfInt":
        return HalfInt(abs(self.twice_value))

    @property
    def is_integer(self) -> bool:
        return self.twice_value % 2 == 0

    def __str__(self) -> str:
        if self.is_integer:
            return str(self.twice_value // 2)
        return f"{self.twice_value}/2"


HALF = HalfInt(1)


def as_spin(l) -> HalfInt:
    """Coerce to a spin quantum number (>= 0)."""
    l = HalfInt.of(l)
    if l.twice_value < 0:
        raise InvalidSpinError(f"spin quantum number must be >= 0, got {l}")
    return l


def spin_dim(l) -> int:
    return as_spin(l).twice_value + 1


def magnetic_values(l) -> np.ndarray:
    """Eigenvalues of S^z for spin l as floats, ascending."""
    l = as_spin(l)
    return (np.arange(l.twice_value + 1) - l.twice_value / 2).astype(float)


def magnetic_numbers(l) -> tuple[HalfInt, ...]:
    l = as_spin(l)
    return tuple(HalfInt(t) for t in range(-l.twice_value, l.twice_value + 1, 2))


def m_index(l, m) -> int:
    """Position of |l, m> in the ascending-m basis."""
    l, m = as_spin(l), HalfInt.of(m)
    if abs(m.twice_value) > l.twice_value or (m.twice_value - l.twice_value) % 2:
        raise InvalidSpinError(f"m = {m} is not a magnetic quantum number of spin {l}")
    return (m.twice_value + l.twice_value) // 2


@dataclass(frozen=True)
class SiteLayout:
    """Ordered local dimensions of a tensor-product space.

    ``has_ancilla`` marks the last slot as the spin-1/2 ancilla.
    """

    local_dims: tuple[int, ...]
    has_ancilla: bool = False

    def __post_init__(self):
        dims = tuple(int(d) for d in self.local_dims)
        if not dims or any(d < 1 for d in dims):
            raise LayoutError(f"local dimensions must be positive, got {self.local_dims}")
        if self.has_ancilla and dims[-1] != 2:
            raise LayoutError("ancilla slot must be two-dimensional and last")
        object.__setattr__(self, "local_dims", dims)

    @classmethod
    def for_spins(cls, spins: Sequence, ancilla: bool = False) -> "SiteLayout":
        dims = tuple(spin_dim(l) for l in spins)
        return cls(dims + ((2,) if ancilla else ()), ancilla)

    @property
    def total_dim(self) -> int:
        return math.prod(self.local_dims)

    @property
    def n_sites(self) -> int:
        return len(self.local_dims)

    @property
    def system_dims(self) -> tuple[int, ...]:
        return self.local_dims[:-1] if self.has_ancilla else self.local_dims

    @property
    def n_system_sites(self) -> int:
        return len(self.system_dims)

    def without_ancilla(self) -> "SiteLayout":
        return SiteLayout(self.system_dims) if self.has_ancilla else self

    def with_ancilla(self) -> "SiteLayout":
        if self.has_ancilla:
            raise LayoutError("layout already carries an ancilla slot")
        return SiteLayout(self.local_dims + (2,), True)

    def concat(self, other: "SiteLayout") -> "SiteLayout":
        if self.has_ancilla:
            raise LayoutError("ancilla must occupy the final tensor slot")
        return SiteLayout(self.local_dims + other.local_dims, other.has_ancilla)

    def check_site(self, site: int, *, system_only: bool = True) -> int:
        n = self.n_system_sites if system_only else self.n_sites
        if not isinstance(site, Integral) or not 0 <= site < n:
            raise LayoutError(f"site index {site!r} out of range for {n} sites")
        return int(site)


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Operator:
    """Dense complex square matrix acting on a declared layout."""

    matrix: np.ndarray
    layout: SiteLayout | None = None

    def __post_init__(self):
        mat = np.array(self.matrix, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise LayoutError(f"operator must be a square matrix, got shape {mat.shape}")
        layout = self.layout if self.layout is not None else SiteLayout((mat.shape[0],))
        if layout.total_dim != mat.shape[0]:
            raise LayoutError(
                f"matrix dimension {mat.shape[0]} does not match layout {layout.local_dims}"
            )
        object.__setattr__(self, "matrix", _frozen(mat))
        object.__setattr__(self, "layout", layout)

    @classmethod
    def identity(cls, layout: SiteLayout) -> "Operator":
        return cls(np.eye(layout.total_dim), layout)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def dagger(self) -> "Operator":
        return Operator(self.matrix.conj().T, self.layout)

    def hermiticity_error(self) -> float:
        scale = np.abs(self.matrix).max(initial=0.0)
        if scale == 0.0:
            return 0.0
        return float(np.abs(self.matrix - self.matrix.conj().T).max() / scale)

    def is_hermitian(self, rtol: float = HERMITIAN_RTOL) -> bool:
        return self.hermiticity_error() <= rtol

    def unitarity_error(self) -> float:
        return float(np.abs(self.matrix.conj().T @ self.matrix - np.eye(self.dim)).max())

    def is_unitary(self, atol: float = UNITARY_ATOL) -> bool:
        return self.unitarity_error() <= atol

    def _check_same(self, other: "Operator"):
        if self.layout.local_dims != other.layout.local_dims:
            raise LayoutError(f"layout mismatch: {self.layout} vs {other.layout}")

    def __add__(self, other: "Operator") -> "Operator":
        self._check_same(other)
        return Operator(self.matrix + other.matrix, self.layout)

    def __sub__(self, other: "Operator") -> "Operator":
        self._check_same(other)
        return Operator(self.matrix - other.matrix, self.layout)

    def __neg__(self) -> "Operator":
        return Operator(-self.matrix, self.layout)

    def __mul__(self, scalar) -> "Operator":
        return Operator(scalar * self.matrix, self.layout)

    __rmul__ = __mul__

    def __matmul__(self, other):
        if isinstance(other, StateVector):
            return apply(self, other)
        self._check_same(other)
        return Operator(self.matrix @ other.matrix, self.layout)

    def __repr__(self) -> str:
        return f"Operator(dim={self.dim}, layout={self.layout.local_dims}, ancilla={self.layout.has_ancilla})"


@dataclass(frozen=True, eq=False)
class StateVector:
    """Dense state vector on a layout.

    With ``normalized=True`` (the default) the norm is verified to equal one;
    projections and other intermediate vectors pass ``normalized=False``.
    """

    amplitudes: np.ndarray
    layout: SiteLayout | None = None
    normalized: bool = True

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        layout = self.layout if self.layout is not None else SiteLayout((amps.size,))
        if layout.total_dim != amps.size:
            raise LayoutError(f"vector length {amps.size} does not match layout {layout.local_dims}")
        if self.normalized:
            err = abs(np.linalg.norm(amps) - 1.0)
            if err > NORM_ATOL:
                raise ContractViolation(f"state is not normalized (|norm - 1| = {err:.3e})")
        object.__setattr__(self, "amplitudes", _frozen(amps))
        object.__setattr__(self, "layout", layout)

    @classmethod
    def from_unnormalized(cls, amplitudes, layout: SiteLayout | None = None) -> "StateVector":
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        norm = np.linalg.norm(amps)
        if norm == 0:
            raise ContractViolation("cannot normalize the zero vector")
        return cls(amps / norm, layout)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def tensor(self) -> np.ndarray:
        """Amplitudes reshaped to one axis per site."""
        return self.amplitudes.reshape(self.layout.local_dims)

    def __repr__(self) -> str:
        return f"StateVector(dim={self.amplitudes.size}, layout={self.layout.local_dims})"


@dataclass(frozen=True, eq=False)
class SpinOps:
    l: HalfInt
    sx: Operator
    sy: Operator
    sz: Operator
    s_plus: Operator
    s_minus: Operator
    s_squared: Operator

    @property
    def components(self) -> tuple[Operator, Operator, Operator]:
        return self.sx, self.sy, self.sz


@lru_cache(maxsize=None)
def _spin_operators(l: HalfInt) -> SpinOps:
    m = magnetic_values(l)
    lf = float(l)
    sp = np.zeros((m.size, m.size))
    # <l, m+1 | S^+ | l, m> = sqrt(l(l+1) - m(m+1))
    idx = np.arange(m.size - 1)
    sp[idx + 1, idx] = np.sqrt(np.clip(lf * (lf + 1) - m[:-1] * (m[:-1] + 1), 0.0, None))
    sm = sp.T.copy()
    sx = (sp + sm) / 2
    sy = (sp - sm) / 2j
    sz = np.diag(m)
    s2 = sx @ sx + sy @ sy + sz @ sz
    ops = [Operator(a) for a in (sx, sy, sz, sp, sm, s2)]
    return SpinOps(l, *ops)


def spin_operators(l) -> SpinOps:
    """Spin matrices of spin ``l`` in the ascending-m basis."""
    return _spin_operators(as_spin(l))


def kron(a: Operator, b: Operator) -> Operator:
    """Kronecker product; the layout is the concatenation ``a.layout + b.layout``."""
    return Operator(np.kron(a.matrix, b.matrix), a.layout.concat(b.layout))


def kron_states(a: StateVector, b: StateVector) -> StateVector:
    return StateVector(
        np.kron(a.amplitudes, b.amplitudes), a.layout.concat(b.layout), a.normalized and b.normalized
    )


def tensor_embed(op: Operator, site_index: int, layout: SiteLayout) -> Operator:
    """Embed a single-site operator as ``1 x ... x op x ... x 1``."""
    site_index = layout.check_site(site_index, system_only=False)
    if op.dim != layout.local_dims[site_index]:
        raise LayoutError(
            f"operator dimension {op.dim} does not match slot {site_index} "
            f"of dimension {layout.local_dims[site_index]}"
        )
    left = math.prod(layout.local_dims[:site_index])
    right = math.prod(layout.local_dims[site_index + 1:])
    mat = np.kron(np.kron(np.eye(left), op.matrix), np.eye(right))
    return Operator(mat, layout)


def apply_local_array(matrix: np.ndarray, sites: Sequence[int], dims: Sequence[int], vec: np.ndarray) -> np.ndarray:
    """Apply ``matrix`` acting on the listed tensor slots to a flat vector.

    The slot order of ``sites`` is the Kronecker order of ``matrix``.  Works on
    a stack of vectors if ``vec`` has a trailing batch axis.
    """
    dims = tuple(dims)
    sites = tuple(sites)
    batch = vec.shape[1:]
    tens = vec.reshape(dims + batch)
    k = len(sites)
    local = tuple(dims[s] for s in sites)
    op = matrix.reshape(local + local)
    out = np.tensordot(op, tens, axes=(tuple(range(k, 2 * k)), sites))
    out = np.moveaxis(out, tuple(range(k)), sites)
    return out.reshape(vec.shape)


def apply_local(op: Operator, sites: Sequence[int], psi: StateVector) -> StateVector:
    """Apply an operator supported on ``sites`` without building the full matrix."""
    sites = tuple(psi.layout.check_site(s, system_only=False) for s in sites)
    expected = math.prod(psi.layout.local_dims[s] for s in sites)
    if op.dim != expected or len(set(sites)) != len(sites):
        raise LayoutError(f"operator of dimension {op.dim} cannot act on slots {sites}")
    out = apply_local_array(op.matrix, sites, psi.layout.local_dims, psi.amplitudes)
    return StateVector(out, psi.layout, normalized=False)


def apply(op: Operator, psi: StateVector) -> StateVector:
    if op.layout.local_dims != psi.layout.local_dims:
        raise LayoutError(f"layout mismatch: operator {op.layout.local_dims} vs state {psi.layout.local_dims}")
    return StateVector(op.matrix @ psi.amplitudes, psi.layout, normalized=False)


def expectation(psi: StateVector, op: Operator) -> complex:
    """<psi| op |psi>."""
    return complex(np.vdot(psi.amplitudes, apply(op, psi).amplitudes))


def marginal_probabilities(amplitudes: np.ndarray, dims: Sequence[int], site: int) -> np.ndarray:
    """Born probabilities of the basis states of one slot (unnormalized input allowed)."""
    probs = np.abs(np.asarray(amplitudes).reshape(tuple(dims))) ** 2
    axes = tuple(a for a in range(len(dims)) if a != site)
    return probs.sum(axis=axes)


def system_part(h: Operator) -> Operator:
    """Return H_S for an operator of the form H_S x 1_A (or H itself if no ancilla)."""
    if not h.layout.has_ancilla:
        return h
    d = h.dim // 2
    blocks = h.matrix.reshape(d, 2, d, 2)
    hs = blocks[:, 0, :, 0]
    scale = max(np.abs(hs).max(initial=0.0), 1.0)
    if (
        np.abs(blocks[:, 1, :, 1] - hs).max() > 1e-12 * scale
        or np.abs(blocks[:, 0, :, 1]).max() > 1e-12 * scale
        or np.abs(blocks[:, 1, :, 0]).max() > 1e-12 * scale
    ):
        raise LayoutError("operator acts nontrivially on the ancilla slot")
    return Operator(hs, h.layout.without_ancilla())


class Propagator:
    """exp(-i h t) from one Hermitian eigendecomposition of ``h``."""

    def __init__(self, h: Operator):
        err = h.hermiticity_error()
        if err > HERMITIAN_RTOL:
            raise ContractViolation(f"Hamiltonian is not Hermitian (relative error {err:.3e})")
        self.layout = h.layout
        herm = (h.matrix + h.matrix.conj().T) / 2
        self.eigenvalues, self.eigenvectors = np.linalg.eigh(herm)
        self._vh = self.eigenvectors.conj().T

    def unitary(self, t: float) -> Operator:
        v = self.eigenvectors
        mat = (v * np.exp(-1j * self.eigenvalues * t)) @ self._vh
        u = Operator(mat, self.layout)
        err = u.unitarity_error()
        if err > UNITARY_ATOL:
            raise ContractViolation(f"evolution operator not unitary (error {err:.3e})")
        return u

    def to_eigenbasis(self, vecs: np.ndarray) -> np.ndarray:
        return self._vh @ vecs

    def from_eigenbasis(self, coeffs: np.ndarray, t: float) -> np.ndarray:
        phase = np.exp(-1j * self.eigenvalues * t)
        if coeffs.ndim > 1:
            phase = phase[:, None]
        return self.eigenvectors @ (phase * coeffs)

    def evolve(self, vecs: np.ndarray, t: float) -> np.ndarray:
        """exp(-i h t) applied to a vector or to the columns of a matrix."""
        if t == 0:
            return np.array(vecs, dtype=complex)
        return self.from_eigenbasis(self.to_eigenbasis(vecs), t)

    def evolve_state(self, psi: StateVector, t: float) -> StateVector:
        if psi.layout.local_dims != self.layout.local_dims:
            raise LayoutError("state layout does not match the Hamiltonian")
        return StateVector(self.evolve(psi.amplitudes, t), psi.layout, normalized=psi.normalized)


@dataclass
class _SpectralCache:
    maxsize: int = 16
    _store: OrderedDict = field(default_factory=OrderedDict)
    _lock: threading.Lock = field(default_factory=threading.Lock)

    def get(self, h: Operator) -> Propagator:
        key = (h.layout, hashlib.sha1(h.matrix.tobytes()).hexdigest())
        with self._lock:
            if key in self._store:
                self._store.move_to_end(key)
                return self._store[key]
        prop = Propagator(h)
        with self._lock:
            self._store[key] = prop
            while len(self._store) > self.maxsize:
                self._store.popitem(last=False)
        return prop

    def clear(self):
        with self._lock:
            self._store.clear()


_CACHE = _SpectralCache()


def propagator(h: Operator) -> Propagator:
    """Cached :class:`Propagator` for ``h`` (keyed on the matrix contents)."""
    return _CACHE.get(h)


def clear_spectral_cache():
    _CACHE.clear()


def evolution_unitary(h: Operator, t: float) -> Operator:
    """U(t) = V diag(exp(-i e_k t)) V^dagger."""
    return propagator(h).unitary(t)
