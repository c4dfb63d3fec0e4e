"""Operator-valued trigonometric polynomials f(t) = sum_k A_k exp(i w_k t).

Frequencies are never stored as floats.  A key is an integer vector over a
declared :class:`FreqBasis`, and w_k is the integer combination of the base
values.  The zero key is therefore recognized exactly, which makes the
time average (the zero-key coefficient) and the zero-mean primitive purely
algebraic operations.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from numbers import Number
from typing import Iterable, Mapping

import numpy as np

from .errors import Mismatch, NearResonance, SecularTerm
from .hilbert import Operator, SpaceSpec

Key = tuple[int, ...]

DROP_RTOL = 1e-14
RESONANCE_RTOL = 1e-9


@dataclass(frozen=True)
class FreqBasis:
    labels: tuple[str, ...]
    values: tuple[float, ...]

    def __init__(self, labels: Iterable[str], values: Iterable[float]):
        labels = tuple(str(s) for s in labels)
        values = tuple(float(v) for v in values)
        if len(labels) != len(values):
            raise ValueError("labels and values differ in length")
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate frequency labels {labels}")
        for lab, v in zip(labels, values):
            if not math.isfinite(v):
                raise ValueError(f"frequency {lab} is not finite")
            if v == 0.0:
                raise ValueError(f"frequency {lab} is zero; use the zero key instead")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return len(self.values)

    @property
    def zero(self) -> Key:
        return (0,) * len(self.values)

    def key(self, **coeffs: int) -> Key:
        """Key from label=coefficient pairs, e.g. ``basis.key(D0=-1)``."""
        unknown = set(coeffs) - set(self.labels)
        if unknown:
            raise KeyError(f"unknown frequency labels {sorted(unknown)}")
        return tuple(int(coeffs.get(lab, 0)) for lab in self.labels)

    def unit(self, i: int, sign: int = 1) -> Key:
        k = [0] * len(self.values)
        k[i] = sign
        return tuple(k)

    def value(self, key: Key) -> float:
        return math.fsum(c * v for c, v in zip(key, self.values))

    @property
    def scale(self) -> float:
        return max((abs(v) for v in self.values), default=0.0)

    def check_resonances(self, keys: Iterable[Key], rtol: float = RESONANCE_RTOL):
        """Raise NearResonance for nonzero keys with |w| < rtol * max|base|."""
        zero = self.zero
        bad = [
            k for k in keys if k != zero and abs(self.value(k)) < rtol * self.scale
        ]
        if bad:
            desc = ", ".join(f"{k} (w={self.value(k):.3g})" for k in bad)
            raise NearResonance(f"near-resonant frequency keys: {desc}", keys=bad)


def _norm(m: np.ndarray) -> float:
    return float(np.linalg.norm(m))


class TrigPolyOp:
    """Finite sum of Operator coefficients times exp(i w_k t).

    Instances are canonical and immutable: terms are kept in sorted key
    order and coefficients with norm <= 1e-14 * (expression scale) dropped.
    """

    __slots__ = ("basis", "space", "_terms")

    def __init__(
        self,
        basis: FreqBasis,
        space: SpaceSpec,
        terms: Mapping[Key, Operator | np.ndarray] | None = None,
        scale: float | None = None,
    ):
        self.basis = basis
        self.space = space
        raw = {}
        for key, coeff in (terms or {}).items():
            key = tuple(int(c) for c in key)
            if len(key) != len(basis):
                raise Mismatch(f"key {key} has wrong length for basis {basis.labels}")
            if isinstance(coeff, Operator):
                if coeff.space != space:
                    raise Mismatch("coefficient lives on a different space")
                coeff = coeff.matrix
            raw[key] = np.asarray(coeff, dtype=complex)
        self._terms = _canonical(raw, space, scale)

    # accessors ------------------------------------------------------------

    @property
    def terms(self) -> dict[Key, Operator]:
        return {k: Operator(self.space, m) for k, m in self._terms.items()}

    def keys(self) -> list[Key]:
        return list(self._terms)

    def coefficient(self, key: Key) -> Operator:
        m = self._terms.get(tuple(key))
        return Operator.zeros(self.space) if m is None else Operator(self.space, m)

    def arrays(self) -> dict[Key, np.ndarray]:
        return dict(self._terms)

    def __len__(self):
        return len(self._terms)

    def __repr__(self):
        keys = ", ".join(str(k) for k in self._terms)
        return f"TrigPolyOp(basis={self.basis.labels}, keys=[{keys}])"

    def max_norm(self) -> float:
        return max((_norm(m) for m in self._terms.values()), default=0.0)

    def is_zero(self) -> bool:
        return not self._terms

    # constructors ---------------------------------------------------------

    @classmethod
    def zero(cls, basis: FreqBasis, space: SpaceSpec) -> "TrigPolyOp":
        return cls(basis, space, {})

    @classmethod
    def constant(cls, basis: FreqBasis, op: Operator) -> "TrigPolyOp":
        return cls(basis, op.space, {basis.zero: op})

    # linear structure -----------------------------------------------------

    def _compatible(self, other: "TrigPolyOp"):
        if not isinstance(other, TrigPolyOp):
            raise TypeError(f"expected TrigPolyOp, got {type(other).__name__}")
        if other.basis != self.basis:
            raise Mismatch(f"frequency bases differ: {self.basis} vs {other.basis}")
        if other.space != self.space:
            raise Mismatch(f"spaces differ: {self.space} vs {other.space}")

    def _combine(self, other, sign):
        self._compatible(other)
        out = dict(self._terms)
        for k, m in other._terms.items():
            out[k] = out[k] + sign * m if k in out else sign * m
        scale = max(self.max_norm(), other.max_norm())
        return TrigPolyOp(self.basis, self.space, out, scale=scale)

    def __add__(self, other):
        return self._combine(other, 1.0)

    def __sub__(self, other):
        return self._combine(other, -1.0)

    def __neg__(self):
        return TrigPolyOp(self.basis, self.space, {k: -m for k, m in self._terms.items()})

    def __mul__(self, scalar):
        if not isinstance(scalar, Number):
            return NotImplemented
        return TrigPolyOp(self.basis, self.space, {k: scalar * m for k, m in self._terms.items()})

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / scalar)

    def dag(self) -> "TrigPolyOp":
        """Pointwise adjoint: A e^{iwt} -> A^dag e^{-iwt}."""
        return TrigPolyOp(
            self.basis,
            self.space,
            {tuple(-c for c in k): m.conj().T for k, m in self._terms.items()},
        )

    def hermiticity_error(self) -> float:
        """max_k || A_{-k} - A_k^dag ||, zero iff f(t) is Hermitian for all t."""
        err = 0.0
        zero = np.zeros((self.space.dim, self.space.dim), dtype=complex)
        for k, m in self._terms.items():
            partner = self._terms.get(tuple(-c for c in k), zero)
            err = max(err, _norm(partner - m.conj().T))
        return err

    def is_hermitian_valued(self, rtol: float = 1e-13) -> bool:
        return self.hermiticity_error() <= rtol * max(1.0, self.max_norm())

    # serialization --------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "basis": {"labels": list(self.basis.labels), "values": list(self.basis.values)},
            "space": {
                "atomic_dim": self.space.atomic_dim,
                "mode_count": self.space.mode_count,
                "fock_cutoff": self.space.fock_cutoff,
                "buffer": self.space.buffer,
            },
            "terms": [
                {"coeffs": list(k), "real": m.real.tolist(), "imag": m.imag.tolist()}
                for k, m in self._terms.items()
            ],
        }

    @classmethod
    def from_dict(cls, doc: Mapping) -> "TrigPolyOp":
        basis = FreqBasis(doc["basis"]["labels"], doc["basis"]["values"])
        space = SpaceSpec(**doc["space"])
        terms = {
            tuple(t["coeffs"]): np.asarray(t["real"]) + 1j * np.asarray(t["imag"])
            for t in doc["terms"]
        }
        # no re-canonicalization: a serialized polynomial is already canonical
        out = cls(basis, space, {})
        out._terms = {k: _readonly(terms[k]) for k in sorted(terms)}
        return out


def _readonly(m: np.ndarray) -> np.ndarray:
    m = np.array(m, dtype=complex)
    m.flags.writeable = False
    return m


def _canonical(raw: dict, space: SpaceSpec, scale: float | None) -> dict:
    ref = max((_norm(m) for m in raw.values()), default=0.0)
    if scale is not None:
        ref = max(ref, scale)
    cut = DROP_RTOL * ref
    out = {}
    for k in sorted(raw):
        m = raw[k]
        if m.shape != (space.dim, space.dim):
            raise Mismatch(f"coefficient shape {m.shape} does not match space")
        if _norm(m) > cut:
            out[k] = _readonly(m)
    return out


def _pairwise(f: TrigPolyOp, g: TrigPolyOp, combine) -> TrigPolyOp:
    f._compatible(g)
    acc: dict[Key, list] = defaultdict(list)
    # (kf, kg) visited in lexicographic order, which fixes the summation order
    for kf, a in f._terms.items():
        for kg, b in g._terms.items():
            k = tuple(x + y for x, y in zip(kf, kg))
            acc[k].append(combine(a, b))
    out = {k: np.sum(parts, axis=0) for k, parts in acc.items()}
    return TrigPolyOp(f.basis, f.space, out, scale=f.max_norm() * g.max_norm())


def tp_product(f: TrigPolyOp, g: TrigPolyOp) -> TrigPolyOp:
    """Pointwise product f(t) g(t)."""
    return _pairwise(f, g, lambda a, b: a @ b)


def tp_commutator(f: TrigPolyOp, g: TrigPolyOp) -> TrigPolyOp:
    """Pointwise commutator [f(t), g(t)]."""
    return _pairwise(f, g, lambda a, b: a @ b - b @ a)


def tp_mean(f: TrigPolyOp) -> Operator:
    """Long-time average: exactly the zero-key coefficient."""
    f.basis.check_resonances(f.keys())
    return f.coefficient(f.basis.zero)


def tp_oscillating_part(f: TrigPolyOp) -> TrigPolyOp:
    """f minus its mean."""
    zero = f.basis.zero
    return TrigPolyOp(f.basis, f.space, {k: m for k, m in f._terms.items() if k != zero})


def tp_zero_mean_primitive(f: TrigPolyOp) -> TrigPolyOp:
    """The unique zero-mean F with dF/dt = f; needs f to have zero mean."""
    zero = f.basis.zero
    if zero in f._terms:
        raise SecularTerm(
            "polynomial has a zero-frequency term; subtract tp_mean first"
        )
    f.basis.check_resonances(f.keys())
    out = {k: m / (1j * f.basis.value(k)) for k, m in f._terms.items()}
    return TrigPolyOp(f.basis, f.space, out)


def tp_eval_array(f: TrigPolyOp, t: float) -> np.ndarray:
    out = np.zeros((f.space.dim, f.space.dim), dtype=complex)
    for k, m in f._terms.items():
        out += m * np.exp(1j * f.basis.value(k) * t)
    return out


def tp_eval(f: TrigPolyOp, t: float) -> Operator:
    """f(t) = sum_k A_k exp(i w_k t)."""
    return Operator(f.space, tp_eval_array(f, t))


def tp_definite_integral(f: TrigPolyOp, t: float) -> Operator:
    """integral_0^t f, secular part included (zero key contributes A t)."""
    f.basis.check_resonances(f.keys())
    out = np.zeros((f.space.dim, f.space.dim), dtype=complex)
    for k, m in f._terms.items():
        if k == f.basis.zero:
            out += m * t
        else:
            w = f.basis.value(k)
            out += m * (np.exp(1j * w * t) - 1.0) / (1j * w)
    return Operator(f.space, out)
