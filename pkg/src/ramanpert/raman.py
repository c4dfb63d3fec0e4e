"""Trapped-ion Lambda-Raman model: Hamiltonian builders and the analytic
second-order effective model.

Conventions
-----------
* hbar = 1, every frequency in one user-chosen unit.
* Levels are 1-based: |1>, |2> are the effective levels, |3> the auxiliary.
* Wave vectors enter only through Lamb-Dicke vectors eta = k x0 (one
  component per mode), so exp(-i k.r) = prod_a exp(-i eta_a (a_a + a_a^dag)).
* Laser frequencies are derived, omega_j3 = omega_3 - omega_j - Delta, so
  both legs of a pair always share the detuning Delta.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import DuplicateDetuning, InvalidScheme, SpaceMismatch
from .hilbert import (
    Operator,
    SpaceSpec,
    displacement_phase,
    sigma,
    total_number,
)
from .perturb import HamiltonianOrders
from .trigpoly import FreqBasis, TrigPolyOp


@dataclass(frozen=True)
class LaserPair:
    """One Raman pair: strengths, Lamb-Dicke vectors, shared detuning."""

    g13: complex
    g23: complex
    eta13: tuple[float, ...]
    eta23: tuple[float, ...]
    detuning: float

    def __post_init__(self):
        object.__setattr__(self, "g13", complex(self.g13))
        object.__setattr__(self, "g23", complex(self.g23))
        object.__setattr__(self, "eta13", tuple(float(e) for e in self.eta13))
        object.__setattr__(self, "eta23", tuple(float(e) for e in self.eta23))
        object.__setattr__(self, "detuning", float(self.detuning))
        if self.detuning == 0.0 or not math.isfinite(self.detuning):
            raise InvalidScheme(f"detuning must be finite and nonzero, got {self.detuning}")
        if len(self.eta13) != len(self.eta23):
            raise InvalidScheme("eta13 and eta23 have different lengths")

    def strength(self, j: int) -> complex:
        return self.g13 if j == 1 else self.g23

    def eta(self, j: int) -> tuple[float, ...]:
        return self.eta13 if j == 1 else self.eta23


@dataclass(frozen=True)
class RamanConfig:
    level_freqs: tuple[float, float, float]
    trap_freq: float
    schemes: tuple[LaserPair, ...]
    space: SpaceSpec = field(default_factory=SpaceSpec)

    def __post_init__(self):
        object.__setattr__(self, "level_freqs", tuple(float(w) for w in self.level_freqs))
        object.__setattr__(self, "schemes", tuple(self.schemes))
        if len(self.level_freqs) != 3:
            raise InvalidScheme("exactly three level frequencies are required")
        if len(set(self.level_freqs)) != 3:
            raise InvalidScheme(f"level frequencies must be distinct, got {self.level_freqs}")
        if not self.trap_freq > 0:
            raise InvalidScheme(f"trap frequency must be positive, got {self.trap_freq}")
        if self.space.atomic_dim != 3:
            raise SpaceMismatch("the Lambda model needs atomic_dim = 3")
        if not self.schemes:
            raise InvalidScheme("at least one laser pair is required")
        for s in self.schemes:
            if len(s.eta13) != self.space.mode_count:
                raise SpaceMismatch(
                    f"Lamb-Dicke vectors have {len(s.eta13)} components, "
                    f"space has {self.space.mode_count} modes"
                )

    @property
    def coupling_scale(self) -> float:
        """g = max{nu, |g_j3| over all schemes}."""
        strengths = [abs(s.strength(j)) for s in self.schemes for j in (1, 2)]
        return max([self.trap_freq] + strengths)

    @property
    def reference_detuning(self) -> float:
        """The detuning of largest magnitude (the first one on ties)."""
        return max((s.detuning for s in self.schemes), key=abs)

    @property
    def perturbative_parameter(self) -> float:
        return self.coupling_scale / self.reference_detuning

    def laser_frequency(self, scheme: int, j: int) -> float:
        w = self.level_freqs
        return w[2] - w[j - 1] - self.schemes[scheme].detuning

    def max_frequency(self) -> float:
        """Fastest scale a time stepper has to resolve."""
        w = self.level_freqs
        diffs = [abs(a - b) for i, a in enumerate(w) for b in w[i + 1 :]]
        return max([abs(s.detuning) for s in self.schemes] + [self.trap_freq] + diffs)


@dataclass(frozen=True)
class EffectiveCoupling:
    g12: complex
    eta12: tuple[float, ...]
    omega12: float


@dataclass(frozen=True)
class EffectiveModel:
    shifts: tuple[float, float, float]
    couplings: tuple[EffectiveCoupling, ...]

    @classmethod
    def combine(cls, models: Sequence["EffectiveModel"]) -> "EffectiveModel":
        """Shifts add, couplings concatenate."""
        shifts = [0.0, 0.0, 0.0]
        couplings = []
        for m in models:
            for j in range(3):
                shifts[j] += m.shifts[j]
            couplings.extend(m.couplings)
        return cls(tuple(shifts), tuple(couplings))


# validation ------------------------------------------------------------------


def _check_buildable(cfg: RamanConfig):
    for i, s in enumerate(cfg.schemes):
        if s.g13 == 0 or s.g23 == 0:
            raise InvalidScheme(f"scheme {i} has a zero laser strength")
    dets = [s.detuning for s in cfg.schemes]
    if len(set(dets)) != len(dets):
        # the difference frequency Delta_i - Delta_j vanishes
        keys = []
        for i in range(len(dets)):
            for j in range(i + 1, len(dets)):
                if dets[i] == dets[j]:
                    k = [0] * len(dets)
                    k[i], k[j] = 1, -1
                    keys.append(tuple(k))
        names = ", ".join(f"Delta{i} - Delta{j}" for i, j in
                          ((k.index(1), k.index(-1)) for k in keys))
        raise DuplicateDetuning(f"schemes share a detuning ({names} = 0): {dets}", keys=keys)
    g = cfg.coupling_scale
    for i, s in enumerate(cfg.schemes):
        local = max(abs(s.g13), abs(s.g23))
        if i == _ref_index(cfg):
            local = max(local, cfg.trap_freq)
        if abs(s.detuning) < 10 * local:
            warnings.warn(
                f"scheme {i}: |Delta| = {abs(s.detuning):.3g} is not large against "
                f"the couplings ({local:.3g}); perturbation theory may fail",
                stacklevel=3,
            )
    return g


def _ref_index(cfg):
    ref = cfg.reference_detuning
    return [s.detuning for s in cfg.schemes].index(ref)


# operator cache --------------------------------------------------------------


@lru_cache(maxsize=64)
def _phase(eta: tuple[float, ...], space: SpaceSpec) -> Operator:
    return displacement_phase(eta, space)


@lru_cache(maxsize=16)
def _sigmas(space: SpaceSpec) -> dict:
    return {(l, m): sigma(space, l, m) for l in (1, 2, 3) for m in (1, 2, 3)}


def _leg(cfg: RamanConfig, s: LaserPair, j: int) -> np.ndarray:
    """g_j3 exp(-i k_j3.r) sigma_j3 as an array."""
    return s.strength(j) * (_phase(s.eta(j), cfg.space).matrix @ _sigmas(cfg.space)[(j, 3)].matrix)


def h0_operator(cfg: RamanConfig) -> Operator:
    """H0 = sum_l omega_l sigma_ll (atomic energies only)."""
    sig = _sigmas(cfg.space)
    out = Operator.zeros(cfg.space)
    for l, w in enumerate(cfg.level_freqs, start=1):
        out = out + w * sig[(l, l)]
    return out


def trap_operator(cfg: RamanConfig) -> Operator:
    """H_B = nu sum_a a_a^dag a_a."""
    return cfg.trap_freq * total_number(cfg.space)


# builders --------------------------------------------------------------------


def build_interaction_orders(cfg: RamanConfig) -> HamiltonianOrders:
    """Dimensionless interaction-picture Hamiltonian with lambda = g / Delta.

    The returned orders satisfy H~(t) = Delta * lambda * H~_1(t), i.e.
    ``scale`` is the reference detuning and H~_1 is measured in units of g:

        H~_1 = (nu/g) N + sum_s sum_j (g_j3/g) e^{-i k.r} sigma_j3 e^{-i Delta_s t} + h.c.
    """
    g = _check_buildable(cfg)
    basis = FreqBasis([f"Delta{i}" for i in range(len(cfg.schemes))],
                      [s.detuning for s in cfg.schemes])
    dim = cfg.space.dim
    terms: dict = {}
    if cfg.space.mode_count:
        terms[basis.zero] = (cfg.trap_freq / g) * total_number(cfg.space).matrix
    for i, s in enumerate(cfg.schemes):
        lower = np.zeros((dim, dim), dtype=complex)
        for j in (1, 2):
            lower += _leg(cfg, s, j) / g
        terms[basis.unit(i, -1)] = lower
        terms[basis.unit(i, +1)] = lower.conj().T
    h1 = TrigPolyOp(basis, cfg.space, terms)
    return HamiltonianOrders(
        lambda_=cfg.perturbative_parameter,
        orders=(h1,),
        h0=h0_operator(cfg),
        scale=cfg.reference_detuning,
    )


def interaction_hamiltonian(cfg: RamanConfig, t: float) -> Operator:
    """H_B + H~_R(t) assembled directly in the time domain."""
    return Operator(cfg.space, interaction_hamiltonian_fn(cfg)(t))


def interaction_hamiltonian_fn(cfg: RamanConfig):
    """Fast callable t -> H~(t) (array) for time steppers.

    Built from ``hilbert`` primitives only, with no frequency-key algebra,
    so it can serve as an independent reference.
    """
    static = trap_operator(cfg).matrix
    lowers = []
    for s in cfg.schemes:
        lowers.append((s.detuning, _leg(cfg, s, 1) + _leg(cfg, s, 2)))

    def h(t: float) -> np.ndarray:
        out = static.copy()
        for det, low in lowers:
            x = low * np.exp(-1j * det * t)
            out += x + x.conj().T
        return out

    return h


def schroedinger_hamiltonian_fn(cfg: RamanConfig):
    """Fast callable t -> H(t) = H0 + H_B + H_R(t) in the lab frame."""
    static = h0_operator(cfg).matrix + trap_operator(cfg).matrix
    legs = []
    for i, s in enumerate(cfg.schemes):
        for j in (1, 2):
            legs.append((cfg.laser_frequency(i, j), _leg(cfg, s, j)))

    def h(t: float) -> np.ndarray:
        out = static.copy()
        for w, leg in legs:
            x = leg * np.exp(1j * w * t)
            out += x + x.conj().T
        return out

    return h


def schroedinger_hamiltonian(cfg: RamanConfig, t: float) -> Operator:
    return Operator(cfg.space, schroedinger_hamiltonian_fn(cfg)(t))


# analytic effective model ----------------------------------------------------


def _single_model(cfg: RamanConfig, s: LaserPair) -> EffectiveModel:
    a1, a2 = abs(s.g13) ** 2, abs(s.g23) ** 2
    d = s.detuning
    shifts = (-a1 / d, -a2 / d, (a1 + a2) / d)
    # minus sign: sigma_12 coefficient of (1/Delta)[h^dag, h] with h = sum_j B_j
    g12 = -s.g13 * s.g23.conjugate() / d
    eta12 = tuple(x - y for x, y in zip(s.eta13, s.eta23))
    w = cfg.level_freqs
    return EffectiveModel(shifts, (EffectiveCoupling(g12, eta12, w[1] - w[0]),))


def analytic_effective_model(cfg: RamanConfig) -> EffectiveModel:
    """Stark shifts and effective 1-2 couplings, one coupling per scheme."""
    return EffectiveModel.combine([_single_model(cfg, s) for s in cfg.schemes])


def effective_c2_operator(model: EffectiveModel, cfg: RamanConfig) -> Operator:
    """lambda^2 C_2 = sum_j w_j sigma_jj + (sum_s g12 e^{-i k12.r} sigma_12 + h.c.)."""
    space = cfg.space
    sig = _sigmas(space)
    dim = space.dim
    diag = np.zeros((dim, dim), dtype=complex)
    for j in (1, 2, 3):
        diag += model.shifts[j - 1] * sig[(j, j)].matrix
    off = np.zeros((dim, dim), dtype=complex)
    for c in model.couplings:
        if len(c.eta12) != space.mode_count:
            raise SpaceMismatch("coupling Lamb-Dicke vector does not match the space")
        x = c.g12 * (_phase(c.eta12, space).matrix @ sig[(1, 2)].matrix)
        off += x + x.conj().T
    return Operator(space, diag + off)


def rabi_period(model: EffectiveModel) -> float:
    """2 pi / |sum of effective couplings|."""
    total = sum(c.g12 for c in model.couplings)
    return 2 * math.pi / abs(total)


# configuration helpers -------------------------------------------------------


def with_lambda(cfg: RamanConfig, lam: float) -> RamanConfig:
    """Rescale every detuning by one factor so that g / Delta_ref = lam."""
    factor = cfg.coupling_scale / (lam * cfg.reference_detuning)
    if not factor > 0:
        raise InvalidScheme(f"lambda={lam} has the wrong sign for this configuration")
    schemes = tuple(replace(s, detuning=s.detuning * factor) for s in cfg.schemes)
    return replace(cfg, schemes=schemes)


def default_config(
    lam: float = 0.01,
    eta: float = 0.1,
    space: SpaceSpec | None = None,
) -> RamanConfig:
    """Desk-scale single-scheme model used throughout the tests.

    g13 = g23 = g = 1, nu = 0.5, counter-propagating legs (eta, -eta) on a
    single mode, Delta = g / lam.
    """
    space = space or SpaceSpec(atomic_dim=3, mode_count=1, fock_cutoff=20, buffer=10)
    m = space.mode_count
    pair = LaserPair(
        g13=1.0,
        g23=1.0,
        eta13=(eta,) * m,
        eta23=(-eta,) * m,
        detuning=1.0 / lam,
    )
    return RamanConfig(
        level_freqs=(0.0, 0.37, 12.0),
        trap_freq=0.5,
        schemes=(pair,),
        space=space,
    )
