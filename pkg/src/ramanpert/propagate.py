"""Reference propagation and comparison metrics.

The stepper only sees a callable ``h_of_t``; it knows nothing about
frequency keys or perturbative generators, which keeps it usable as an
independent oracle for the perturbative evolutors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import InvalidState, SpaceMismatch, StepTooLarge
from .hilbert import Operator, SpaceSpec, expm_array, interior_indices

STEP_RESOLUTION = 0.05
_TIME_EPS = 1e-12


@dataclass(frozen=True)
class PropagationRun:
    times: tuple[float, ...]
    dt: float
    unitaries: tuple[Operator, ...]
    space: SpaceSpec
    n_phys: int

    def __len__(self):
        return len(self.times)


def _as_array(h) -> np.ndarray:
    return h.matrix if isinstance(h, Operator) else np.asarray(h, dtype=complex)


def _space_of(h, space):
    if isinstance(h, Operator):
        return h.space
    if space is None:
        raise ValueError("h_of_t returns arrays; pass space= explicitly")
    return space


def exact_propagate(
    h_of_t: Callable[[float], Operator | np.ndarray],
    t_final: float,
    dt: float,
    samples: Sequence[float],
    *,
    max_frequency: float | None = None,
    period: float | None = None,
    space: SpaceSpec | None = None,
    n_phys: int | None = None,
) -> PropagationRun:
    """Midpoint-exponential propagation U <- exp(-i H(t + dt/2) dt) U.

    Parameters
    ----------
    h_of_t : callable
        Hamiltonian at time t (Operator or square array).
    t_final, dt : float
        Propagation horizon and step.
    samples : sequence of float
        Times in [0, t_final] at which U(t) is recorded.  Off-grid samples
        are reached by one shorter midpoint step from the last grid point.
    max_frequency : float, optional
        Fastest frequency in H; ``dt > 0.05 / max_frequency`` raises
        StepTooLarge.
    period : float, optional
        If H(t + period) = H(t) and period is an integer multiple of dt,
        the per-period product is reused.  The result is the same stepping
        scheme, only cheaper for long horizons.
    """
    times = _check_grid(t_final, dt, samples, max_frequency)

    space = _space_of(h_of_t(0.0), space)
    n_phys = space.fock_cutoff if n_phys is None else n_phys
    mats = _run(h_of_t, dt, times, period, np.eye(space.dim, dtype=complex))
    return PropagationRun(
        times=tuple(times),
        dt=dt,
        unitaries=tuple(Operator(space, m) for m in mats),
        space=space,
        n_phys=n_phys,
    )


def exact_propagate_states(
    h_of_t: Callable[[float], Operator | np.ndarray],
    psi0: np.ndarray,
    t_final: float,
    dt: float,
    samples: Sequence[float],
    *,
    space: SpaceSpec,
    max_frequency: float | None = None,
    period: float | None = None,
) -> tuple[tuple[float, ...], np.ndarray]:
    """Same stepping as :func:`exact_propagate`, applied to one state.

    Returns the sorted sample times and an array of states, one row per
    sample.  Memory stays O(dim) per sample, so dense time grids are cheap.
    """
    times = _check_grid(t_final, dt, samples, max_frequency)
    psi0 = _check_state(psi0, space)
    states = _run(h_of_t, dt, times, period, psi0.reshape(-1, 1))
    return tuple(times), np.array([v[:, 0] for v in states]).reshape(len(times), space.dim)


def _check_grid(t_final, dt, samples, max_frequency) -> list[float]:
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if max_frequency is not None and dt > STEP_RESOLUTION / max_frequency:
        raise StepTooLarge(
            f"dt={dt:.3g} exceeds {STEP_RESOLUTION}/max_frequency={STEP_RESOLUTION / max_frequency:.3g}"
        )
    times = sorted(float(s) for s in samples)
    if times and (times[0] < 0 or times[-1] > t_final * (1 + 1e-12) + _TIME_EPS):
        raise ValueError("sample times must lie in [0, t_final]")
    return times


def _run(h_of_t, dt, times, period, init):
    """Propagate ``init`` (identity or a column of states) to every sample."""

    def step(t0: float, h: float) -> np.ndarray:
        return step_exponential(-1j * h * _as_array(h_of_t(t0 + 0.5 * h)))

    if period is None:
        return _march(step, dt, times, init)
    return _march_periodic(step, dt, period, times, init)


def step_exponential(a: np.ndarray) -> np.ndarray:
    """exp(a) for one time step.

    Small generators (the usual case for a resolved step) use a truncated
    Taylor series whose remainder bound is below double precision; anything
    larger goes through scaling and squaring.
    """
    if not np.all(np.isfinite(a)):
        return expm_array(a)  # raises NumericError
    norm = float(np.abs(a).sum(axis=0).max())
    if norm > 0.05:
        return expm_array(a)
    out = np.eye(len(a), dtype=complex)
    term = out
    k = 0
    # remainder of the Taylor series <= norm**(k+1) / (k+1)! * e**norm
    tail = 1.0
    while tail > 1e-17:
        k += 1
        term = term @ a / k
        out = out + term
        tail = tail * norm / (k + 1)
    return out


def _grid_split(s: float, dt: float) -> tuple[int, float]:
    k = int(math.floor(s / dt + 1e-9))
    rem = s - k * dt
    if rem < _TIME_EPS * max(1.0, abs(s)):
        rem = 0.0
    return k, rem


def _march(step, dt, times, init):
    u = init
    k = 0
    out = []
    for s in times:
        target, rem = _grid_split(s, dt)
        while k < target:
            u = step(k * dt, dt) @ u
            k += 1
        out.append(step(k * dt, rem) @ u if rem else u.copy())
    return out


def _march_periodic(step, dt, period, times, init):
    n_per = int(round(period / dt))
    if n_per < 1 or abs(n_per * dt - period) > 1e-9 * period:
        raise ValueError(f"period {period} is not an integer multiple of dt {dt}")
    # the step grid is k*dt with dt = period / n_per exactly
    dt = period / n_per
    needed = {}
    for s in times:
        m, r = _grid_split(s, period)
        j, rem = _grid_split(r, dt)
        if j >= n_per:
            m, j = m + 1, j - n_per
        needed[s] = (m, j, rem)
    wanted_j = {j for _, j, _ in needed.values()}

    dim = init.shape[0]
    prefix = {}
    u = np.eye(dim, dtype=complex)
    for j in range(n_per):
        if j in wanted_j:
            prefix[j] = u.copy()
        u = step(j * dt, dt) @ u
    one_period = u

    out = []
    # ``power`` carries U_period**m applied to init
    power, m_cur = init, 0
    for s in times:
        m, j, rem = needed[s]
        while m_cur < m:
            power = one_period @ power
            m_cur += 1
        v = prefix[j] @ power
        if rem:
            v = step(j * dt, rem) @ v
        out.append(v)
    return out


def step_halving_ratio(
    h_of_t, t_final: float, dt: float, *, space=None, n_phys=None, period=None
) -> tuple[float, float, float]:
    """Self-convergence check against a dt/8 reference.

    Returns (error(dt), error(dt/2), ratio); ratio ~ 0.24 for a second order
    method in its asymptotic regime.
    """
    kw = dict(space=space, period=period)
    runs = [exact_propagate(h_of_t, t_final, dt / f, [t_final], **kw) for f in (1, 2, 8)]
    n_phys = runs[0].space.fock_cutoff if n_phys is None else n_phys
    u1, u2, ref = (interior_array(r.unitaries[-1], n_phys) for r in runs)
    e1 = float(np.linalg.norm(u1 - ref))
    e2 = float(np.linalg.norm(u2 - ref))
    return e1, e2, e2 / e1


# metrics ---------------------------------------------------------------------


def interior_array(u: Operator, n_phys: int) -> np.ndarray:
    idx = interior_indices(u.space, n_phys)
    return u.matrix[np.ix_(idx, idx)]


def fidelity(u: Operator, v: Operator, n_phys: int) -> float:
    """|tr(P U^dag V P)| / tr(P), with P the interior projector."""
    if u.space != v.space:
        raise SpaceMismatch(f"{u.space} vs {v.space}")
    idx = interior_indices(u.space, n_phys)
    # tr(P U^dag V P) = sum_{c interior} sum_r conj(U_rc) V_rc
    overlap = np.vdot(u.matrix[:, idx], v.matrix[:, idx])
    return float(abs(overlap) / len(idx))


def basis_state(space: SpaceSpec, level: int, fock: Sequence[int] = ()) -> np.ndarray:
    psi = np.zeros(space.dim, dtype=complex)
    psi[space.basis_index(level, fock)] = 1.0
    return psi


def level_populations(u: Operator | np.ndarray, psi0: np.ndarray, space: SpaceSpec) -> np.ndarray:
    """P_l = <psi| sigma_ll x 1 |psi> for psi = U psi0, all levels at once."""
    return state_populations(_as_array(u) @ psi0, space)


def state_populations(psi: np.ndarray, space: SpaceSpec) -> np.ndarray:
    """Level populations of one state (1-D) or of each row of a 2-D array."""
    psi = np.asarray(psi)
    lead = psi.shape[:-1]
    probs = np.abs(psi.reshape(lead + (space.atomic_dim, -1))) ** 2
    return probs.sum(axis=-1)


def _check_state(psi0: np.ndarray, space: SpaceSpec) -> np.ndarray:
    psi0 = np.asarray(psi0, dtype=complex).reshape(-1)
    if psi0.shape != (space.dim,):
        raise InvalidState(f"state has dimension {psi0.shape[0]}, space has {space.dim}")
    norm = float(np.linalg.norm(psi0))
    if abs(norm - 1.0) > 1e-10:
        raise InvalidState(f"initial state is not normalized (norm {norm:.12g})")
    return psi0


def populations(run: PropagationRun, initial_state, level: int) -> list[float]:
    """Population of ``level`` (1-based) at every sample of the run."""
    psi0 = _check_state(initial_state, run.space)
    if not 1 <= level <= run.space.atomic_dim:
        raise InvalidState(f"level {level} outside 1..{run.space.atomic_dim}")
    return [float(level_populations(u, psi0, run.space)[level - 1]) for u in run.unitaries]
