"""Dense operators on the truncated space (atom) x (bosonic modes).

Tensor factors are ordered atom first, then the modes in declared order.
Every mode keeps Fock states ``0 .. fock_cutoff + buffer``; the buffer
states exist only so that products of truncated exponentials stay exact
on the interior ``n <= n_phys`` that all comparisons are made on.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from numbers import Number
from typing import Sequence

import numpy as np
from scipy.linalg import expm

from .errors import InvalidIndex, NumericError, SpaceMismatch


@dataclass(frozen=True)
class SpaceSpec:
    """Shape of the truncated tensor space.

    Parameters
    ----------
    atomic_dim : int
        Number of internal levels (3 for a Lambda scheme).
    mode_count : int
        Number of motional modes M.
    fock_cutoff : int
        Highest Fock index kept as physical, n_max.
    buffer : int
        Extra Fock states per mode used during construction.
    """

    atomic_dim: int = 3
    mode_count: int = 1
    fock_cutoff: int = 20
    buffer: int = 10

    def __post_init__(self):
        if self.atomic_dim < 1:
            raise ValueError(f"atomic_dim must be >= 1, got {self.atomic_dim}")
        if self.mode_count < 0:
            raise ValueError(f"mode_count must be >= 0, got {self.mode_count}")
        if self.fock_cutoff < 1:
            raise ValueError(f"fock_cutoff must be >= 1, got {self.fock_cutoff}")
        if self.buffer < 0:
            raise ValueError(f"buffer must be >= 0, got {self.buffer}")

    @property
    def mode_levels(self) -> int:
        return self.fock_cutoff + self.buffer + 1

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.atomic_dim,) + (self.mode_levels,) * self.mode_count

    @property
    def dim(self) -> int:
        return self.atomic_dim * self.mode_levels**self.mode_count

    def basis_index(self, level: int, fock: Sequence[int] = ()) -> int:
        """Flat index of |level, n_0, n_1, ...> (level is 1-based)."""
        fock = tuple(fock) or (0,) * self.mode_count
        if not 1 <= level <= self.atomic_dim:
            raise InvalidIndex(f"level {level} outside 1..{self.atomic_dim}")
        if len(fock) != self.mode_count or any(
            not 0 <= n < self.mode_levels for n in fock
        ):
            raise InvalidIndex(f"Fock indices {fock} invalid for {self}")
        return int(np.ravel_multi_index((level - 1,) + fock, self.shape))


class Operator:
    """Immutable dense complex matrix tied to a :class:`SpaceSpec`."""

    __slots__ = ("space", "matrix")
    __array_priority__ = 100

    def __init__(self, space: SpaceSpec, matrix):
        m = np.array(matrix, dtype=complex)
        if m.shape != (space.dim, space.dim):
            raise SpaceMismatch(
                f"matrix shape {m.shape} does not match space dimension {space.dim}"
            )
        m.flags.writeable = False
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "matrix", m)

    def __setattr__(self, name, value):
        raise AttributeError("Operator is immutable")

    def __repr__(self):
        return f"Operator(dim={self.space.dim}, norm={self.norm():.3g})"

    # arithmetic -----------------------------------------------------------

    def _check(self, other: "Operator"):
        if other.space != self.space:
            raise SpaceMismatch(f"{self.space} vs {other.space}")

    def __add__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            return Operator(self.space, self.matrix + other.matrix)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            return Operator(self.space, self.matrix - other.matrix)
        return NotImplemented

    def __neg__(self):
        return Operator(self.space, -self.matrix)

    def __mul__(self, scalar):
        if isinstance(scalar, Number):
            return Operator(self.space, self.matrix * scalar)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        if isinstance(scalar, Number):
            return Operator(self.space, self.matrix / scalar)
        return NotImplemented

    def __matmul__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            return Operator(self.space, self.matrix @ other.matrix)
        return NotImplemented

    def __eq__(self, other):
        if not isinstance(other, Operator):
            return NotImplemented
        return self.space == other.space and np.array_equal(self.matrix, other.matrix)

    __hash__ = None

    # predicates and helpers ----------------------------------------------

    def dag(self) -> "Operator":
        return Operator(self.space, self.matrix.conj().T)

    def norm(self) -> float:
        return float(np.linalg.norm(self.matrix))

    def hermiticity_error(self) -> float:
        return float(np.linalg.norm(self.matrix - self.matrix.conj().T))

    def is_hermitian(self, atol: float = 1e-12) -> bool:
        return self.hermiticity_error() <= atol * max(1.0, self.norm())

    def unitarity_error(self) -> float:
        m = self.matrix
        return float(np.linalg.norm(m.conj().T @ m - np.eye(len(m))))

    def is_unitary(self, atol: float = 1e-10) -> bool:
        return self.unitarity_error() <= atol

    @classmethod
    def zeros(cls, space: SpaceSpec) -> "Operator":
        return cls(space, np.zeros((space.dim, space.dim), dtype=complex))


def commutator(a: Operator, b: Operator) -> Operator:
    return a @ b - b @ a


# construction --------------------------------------------------------------


def _ladder(levels: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, levels, dtype=float)), k=1).astype(complex)


def _embed(space: SpaceSpec, atom=None, modes: dict | None = None) -> np.ndarray:
    """Kronecker product with identities on the unspecified factors."""
    modes = modes or {}
    factors = [atom if atom is not None else np.eye(space.atomic_dim)]
    for k in range(space.mode_count):
        factors.append(modes.get(k, np.eye(space.mode_levels)))
    return reduce(np.kron, factors).astype(complex)


def _check_level(space, l):
    if not 1 <= l <= space.atomic_dim:
        raise InvalidIndex(f"atomic index {l} outside 1..{space.atomic_dim}")


def _check_mode(space, mode):
    if not 0 <= mode < space.mode_count:
        raise InvalidIndex(f"mode {mode} outside 0..{space.mode_count - 1}")


def sigma(space: SpaceSpec, l: int, m: int) -> Operator:
    """|l><m| on the atom (1-based indices), identity on the modes."""
    _check_level(space, l)
    _check_level(space, m)
    atom = np.zeros((space.atomic_dim, space.atomic_dim))
    atom[l - 1, m - 1] = 1.0
    return Operator(space, _embed(space, atom=atom))


def annihilate(space: SpaceSpec, mode: int) -> Operator:
    _check_mode(space, mode)
    return Operator(space, _embed(space, modes={mode: _ladder(space.mode_levels)}))


def create(space: SpaceSpec, mode: int) -> Operator:
    return annihilate(space, mode).dag()


def number(space: SpaceSpec, mode: int) -> Operator:
    _check_mode(space, mode)
    n = np.diag(np.arange(space.mode_levels, dtype=float))
    return Operator(space, _embed(space, modes={mode: n}))


def total_number(space: SpaceSpec) -> Operator:
    out = Operator.zeros(space)
    for k in range(space.mode_count):
        out = out + number(space, k)
    return out


def identity(space: SpaceSpec) -> Operator:
    return Operator(space, np.eye(space.dim, dtype=complex))


def build_basic_operator(kind: str, space: SpaceSpec, *indices: int) -> Operator:
    """Dispatch by name: ``sigma(l, m)``, ``annihilate(mode)``, ``create(mode)``,
    ``number(mode)`` or ``identity``."""
    builders = {
        "sigma": (sigma, 2),
        "annihilate": (annihilate, 1),
        "create": (create, 1),
        "number": (number, 1),
        "identity": (identity, 0),
    }
    try:
        fn, nargs = builders[kind]
    except KeyError:
        raise ValueError(f"unknown operator kind {kind!r}") from None
    if len(indices) != nargs:
        raise TypeError(f"{kind} takes {nargs} indices, got {len(indices)}")
    return fn(space, *indices)


def displacement_phase(eta: Sequence[float], space: SpaceSpec) -> Operator:
    """exp(-i k.r) as prod_a exp(-i eta_a (a_a + a_a^dag)).

    Each mode factor is exponentiated through the eigenbasis of the truncated
    position quadrature, so the result is unitary to rounding.
    """
    eta = np.asarray(eta, dtype=float).reshape(-1)
    if eta.shape != (space.mode_count,):
        raise SpaceMismatch(
            f"need {space.mode_count} Lamb-Dicke components, got {eta.shape[0]}"
        )
    if not np.all(np.isfinite(eta)):
        raise NumericError("non-finite Lamb-Dicke parameter")
    a = _ladder(space.mode_levels)
    x = (a + a.conj().T).real
    w, v = np.linalg.eigh(x)
    modes = {}
    for k, e in enumerate(eta):
        if e != 0.0:
            modes[k] = (v * np.exp(-1j * e * w)) @ v.T
    return Operator(space, _embed(space, modes=modes))


def matrix_exponential(a: Operator) -> Operator:
    """exp(A) by scaling and squaring (scipy's Pade implementation)."""
    return Operator(a.space, expm_array(a.matrix))


def expm_array(m: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(m)):
        raise NumericError("matrix exponential of non-finite matrix")
    return expm(m)


def unitary_exp(h: np.ndarray, t: float) -> np.ndarray:
    """exp(-i h t) for Hermitian ``h`` via its eigendecomposition."""
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * w * t)) @ v.conj().T


# interior projection -------------------------------------------------------


def interior_indices(space: SpaceSpec, n_phys: int) -> np.ndarray:
    """Flat indices of basis states with every Fock index <= n_phys."""
    if not 0 <= n_phys < space.mode_levels:
        raise InvalidIndex(f"n_phys={n_phys} outside 0..{space.mode_levels - 1}")
    grids = np.indices(space.shape).reshape(len(space.shape), -1)
    mask = np.all(grids[1:] <= n_phys, axis=0)
    return np.flatnonzero(mask)


def interior_block(a: Operator, n_phys: int) -> np.ndarray:
    idx = interior_indices(a.space, n_phys)
    return a.matrix[np.ix_(idx, idx)]


def interior_projector(space: SpaceSpec, n_phys: int) -> Operator:
    p = np.zeros(space.dim)
    p[interior_indices(space, n_phys)] = 1.0
    return Operator(space, np.diag(p))


def interior_distance(a: Operator, b: Operator, n_phys: int) -> float:
    """Frobenius norm of P (A - B) P with P the interior Fock projector."""
    if a.space != b.space:
        raise SpaceMismatch(f"{a.space} vs {b.space}")
    idx = interior_indices(a.space, n_phys)
    d = a.matrix[np.ix_(idx, idx)] - b.matrix[np.ix_(idx, idx)]
    return float(np.linalg.norm(d))
