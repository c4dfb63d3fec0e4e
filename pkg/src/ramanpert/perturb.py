"""Gauge-fixed decomposition T = exp(-iZ(t)) exp(-iCt) exp(iZ(0)).

Units: hbar = 1 and the physical interaction-picture Hamiltonian is

    H~(t) = scale * sum_n lambda**n H~_n(t)

so a dimensionless model (H~_n measured in units of ``scale``) and a
physical one (``scale = 1``) share the same code path.  The returned C_n
carry physical frequency units (per lambda**n); the Z_n are dimensionless.

Only orders 1 and 2 are provided:

    C1 = <K1>,                        Z1 = prim(K1 - C1)
    G2 = (i/2)[Z1, K1 + C1] + K2,     C2 = <G2>,  Z2 = prim(G2 - C2)

with K_n = scale * H~_n, <.> the time average and prim the zero-mean
primitive.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import InvalidHamiltonian, Mismatch
from .hilbert import Operator, unitary_exp
from .trigpoly import (
    TrigPolyOp,
    tp_commutator,
    tp_definite_integral,
    tp_eval_array,
    tp_mean,
    tp_zero_mean_primitive,
)

HERMITIAN_RTOL = 1e-12


@dataclass(frozen=True)
class HamiltonianOrders:
    lambda_: float
    orders: tuple[TrigPolyOp, ...]
    h0: Operator
    scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "orders", tuple(self.orders))
        if not self.orders:
            raise ValueError("at least the first order H~_1 is required")
        first = self.orders[0]
        for f in self.orders:
            if f.basis != first.basis or f.space != first.space:
                raise Mismatch("all orders must share one basis and one space")
        if self.h0.space != first.space:
            raise Mismatch("h0 lives on a different space than the orders")
        if abs(self.lambda_) >= 1:
            warnings.warn(
                f"|lambda| = {abs(self.lambda_):.3g} >= 1; the expansion is unlikely to converge",
                stacklevel=2,
            )

    @property
    def basis(self):
        return self.orders[0].basis

    @property
    def space(self):
        return self.orders[0].space

    def order(self, n: int) -> TrigPolyOp:
        """K_n = scale * H~_n (zero polynomial beyond the given orders)."""
        if n <= len(self.orders):
            return self.scale * self.orders[n - 1]
        return TrigPolyOp.zero(self.basis, self.space)

    def interaction(self, t: float) -> np.ndarray:
        """H~(t) as an array."""
        out = np.zeros((self.space.dim, self.space.dim), dtype=complex)
        for n, f in enumerate(self.orders, start=1):
            out += (self.scale * self.lambda_**n) * tp_eval_array(f, t)
        return out


@dataclass(frozen=True)
class PerturbativeDecomposition:
    c: tuple[Operator, ...]
    z: tuple[TrigPolyOp, ...]
    lambda_: float
    h0: Operator

    @property
    def order(self) -> int:
        return len(self.c)

    @property
    def space(self):
        return self.h0.space

    @cached_property
    def c_total(self) -> Operator:
        """C^(N) = sum_n lambda**n C_n."""
        out = Operator.zeros(self.space)
        for n, cn in enumerate(self.c, start=1):
            out = out + self.lambda_**n * cn
        return out

    @cached_property
    def z_total(self) -> TrigPolyOp:
        """Z^(N)(t) = sum_n lambda**n Z_n(t)."""
        out = self.z[0] * self.lambda_
        for n, zn in enumerate(self.z[1:], start=2):
            out = out + self.lambda_**n * zn
        return out

    def z_at(self, t: float) -> np.ndarray:
        return tp_eval_array(self.z_total, t)

    @cached_property
    def _c_eig(self):
        m = self.c_total.matrix
        return np.linalg.eigh(0.5 * (m + m.conj().T))

    @cached_property
    def _h0_eig(self):
        m = self.h0.matrix
        return np.linalg.eigh(0.5 * (m + m.conj().T))

    @cached_property
    def _dress0(self) -> np.ndarray:
        """exp(+i Z^(N)(0))."""
        return _herm_exp(self.z_at(0.0), -1.0)

    def secular(self, t: float) -> np.ndarray:
        """exp(-i C^(N) t)."""
        w, v = self._c_eig
        return (v * np.exp(-1j * w * t)) @ v.conj().T

    def free(self, t: float) -> np.ndarray:
        """U0(t) = exp(-i H0 t)."""
        w, v = self._h0_eig
        return (v * np.exp(-1j * w * t)) @ v.conj().T


def _herm_exp(z: np.ndarray, t: float) -> np.ndarray:
    return unitary_exp(0.5 * (z + z.conj().T), t)


def _check_hermitian(f: TrigPolyOp, n: int):
    err = f.hermiticity_error()
    if err > HERMITIAN_RTOL * max(1.0, f.max_norm()):
        raise InvalidHamiltonian(f"order {n} is not Hermitian-valued (error {err:.3g})")


def compute_cz_orders(h: HamiltonianOrders, n_orders: int = 2) -> PerturbativeDecomposition:
    """Solve the order-matching equations for C_1..C_N, Z_1..Z_N (N <= 2)."""
    if n_orders not in (1, 2):
        raise ValueError(f"only orders 1 and 2 are available, got {n_orders}")
    for n, f in enumerate(h.orders, start=1):
        _check_hermitian(f, n)

    basis = h.basis
    k1 = h.order(1)
    c1 = tp_mean(k1)
    c1_poly = TrigPolyOp.constant(basis, c1)
    z1 = tp_zero_mean_primitive(k1 - c1_poly)
    cs, zs = [c1], [z1]

    if n_orders == 2:
        g2 = 0.5j * tp_commutator(z1, k1 + c1_poly) + h.order(2)
        c2 = tp_mean(g2)
        z2 = tp_zero_mean_primitive(g2 - TrigPolyOp.constant(basis, c2))
        cs.append(c2)
        zs.append(z2)

    return PerturbativeDecomposition(tuple(cs), tuple(zs), h.lambda_, h.h0)


def assemble_truncated_evolutor(d: PerturbativeDecomposition, t: float) -> Operator:
    """exp(-i Z(t)) exp(-i C t) exp(i Z(0)), the N-th order interaction-picture evolutor."""
    return Operator(d.space, _truncated(d, t))


def _truncated(d, t):
    return _herm_exp(d.z_at(t), 1.0) @ d.secular(t) @ d._dress0


def full_evolutor(d: PerturbativeDecomposition, t: float) -> Operator:
    """U0(t) times the truncated interaction-picture evolutor."""
    return Operator(d.space, d.free(t) @ _truncated(d, t))


def effective_evolutor(d: PerturbativeDecomposition, t: float) -> Operator:
    """U0(t) exp(-i C t); the two factors are kept ordered, never merged."""
    return Operator(d.space, d.free(t) @ d.secular(t))


def dressing_operator(d: PerturbativeDecomposition, t: float) -> Operator:
    """exp(-i U0 Z(t) U0^dag), computed as U0 exp(-i Z(t)) U0^dag."""
    u0 = d.free(t)
    return Operator(d.space, u0 @ _herm_exp(d.z_at(t), 1.0) @ u0.conj().T)


def magnus1_evolutor(h: HamiltonianOrders, t: float) -> Operator:
    """U0(t) exp(-i lambda int_0^t K1), first Magnus term only (Z = 0 gauge)."""
    integral = tp_definite_integral(h.order(1), t).matrix
    w, v = np.linalg.eigh(0.5 * (h.h0.matrix + h.h0.matrix.conj().T))
    u0 = (v * np.exp(-1j * w * t)) @ v.conj().T
    return Operator(h.space, u0 @ _herm_exp(h.lambda_ * integral, 1.0))
