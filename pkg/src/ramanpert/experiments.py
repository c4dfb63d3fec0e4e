"""Exact-vs-perturbative studies shared by the CLI and the acceptance suite."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import perturb, raman
from .hilbert import Operator, interior_distance, unitary_exp
from .propagate import exact_propagate, fidelity, level_populations, basis_state, interior_array

MAX_CACHED_STEPS = 200_000


def common_period(cfg: raman.RamanConfig, max_denominator: int = 64) -> float | None:
    """Period of the interaction-picture Hamiltonian, if the detunings are
    commensurate with small integer ratios."""
    ref = abs(cfg.reference_detuning)
    lcm = 1
    for s in cfg.schemes:
        r = Fraction(abs(s.detuning) / ref).limit_denominator(max_denominator)
        if not math.isclose(float(r), abs(s.detuning) / ref, rel_tol=1e-12, abs_tol=0.0):
            return None
        lcm = lcm * r.denominator // math.gcd(lcm, r.denominator)
    return 2 * math.pi * lcm / ref


def exact_unitaries(
    cfg: raman.RamanConfig,
    times,
    dt: float,
    *,
    periodic: bool = True,
) -> tuple[list[Operator], float]:
    """U(t) = U0(t) T(t) with T from midpoint stepping of H~(t).

    Returns the unitaries and the step actually used (snapped down so that
    the Hamiltonian period is an integer number of steps when caching).
    """
    times = sorted(float(t) for t in times)
    h = raman.interaction_hamiltonian_fn(cfg)
    period = common_period(cfg) if periodic else None
    if period is not None:
        n = math.ceil(period / dt * (1 - 1e-12))
        if n > MAX_CACHED_STEPS:
            period = None
        else:
            dt = period / n
    run = exact_propagate(
        h,
        times[-1],
        dt,
        times,
        max_frequency=cfg.max_frequency(),
        period=period,
        space=cfg.space,
    )
    h0 = raman.h0_operator(cfg).matrix
    out = [Operator(cfg.space, unitary_exp(h0, t) @ u.matrix) for t, u in zip(run.times, run.unitaries)]
    return out, dt


@dataclass
class CompareResult:
    times: list[float]
    fid_dressed: list[float]
    fid_effective: list[float]
    pops_exact: np.ndarray  # (n_times, 3)
    pops_effective: np.ndarray
    dt: float
    integrator_error: float
    lambda_: float

    def rows(self):
        for i, t in enumerate(self.times):
            yield {
                "t": t,
                "fid_exact_vs_dressed": self.fid_dressed[i],
                "fid_exact_vs_effective": self.fid_effective[i],
                "P1": self.pops_exact[i, 0],
                "P2": self.pops_exact[i, 1],
                "P3": self.pops_exact[i, 2],
                "P1_eff": self.pops_effective[i, 0],
                "P2_eff": self.pops_effective[i, 1],
            }


def compare(
    cfg: raman.RamanConfig,
    times,
    dt: float,
    n_phys: int,
    initial_level: int = 1,
) -> CompareResult:
    """Exact evolution against the order-2 dressed and effective evolutors."""
    d = perturb.compute_cz_orders(raman.build_interaction_orders(cfg))
    times = sorted(float(t) for t in times)
    exact, dt_used = exact_unitaries(cfg, times, dt)
    # step-halving estimate of the integrator error at the last sample
    half, _ = exact_unitaries(cfg, [times[-1]], dt_used / 2)
    integ = 4.0 / 3.0 * float(
        np.linalg.norm(interior_array(exact[-1], n_phys) - interior_array(half[0], n_phys))
    )

    psi0 = basis_state(cfg.space, initial_level)
    fd, fe, pe, pf = [], [], [], []
    for t, u in zip(times, exact):
        dressed = perturb.full_evolutor(d, t)
        eff = perturb.effective_evolutor(d, t)
        fd.append(fidelity(u, dressed, n_phys))
        fe.append(fidelity(u, eff, n_phys))
        pe.append(level_populations(u, psi0, cfg.space))
        pf.append(level_populations(eff, psi0, cfg.space))
    return CompareResult(
        times, fd, fe, np.array(pe), np.array(pf), dt_used, integ, d.lambda_
    )


def dressed_error(cfg: raman.RamanConfig, dt: float, n_phys: int, delta_t: float = 20.0) -> float:
    """||P (U_exact - U_dressed) P||_F at t = delta_t / |Delta_ref|."""
    t = delta_t / abs(cfg.reference_detuning)
    d = perturb.compute_cz_orders(raman.build_interaction_orders(cfg))
    (exact,), _ = exact_unitaries(cfg, [t], dt)
    return interior_distance(exact, perturb.full_evolutor(d, t), n_phys)


def sweep(
    cfg: raman.RamanConfig,
    lambdas,
    dt: float,
    n_phys: int,
    delta_t: float = 20.0,
) -> tuple[list[tuple[float, float]], float | None]:
    """Dressed-evolutor error versus lambda, Delta rescaled at fixed g.

    ``dt`` refers to ``cfg``; each sweep point uses the step with the same
    Delta * dt.  Returns (rows, fitted log-log slope or None).
    """
    rows = []
    base = abs(cfg.reference_detuning)
    for lam in lambdas:
        c = raman.with_lambda(cfg, lam)
        step = dt * base / abs(c.reference_detuning)
        rows.append((lam, dressed_error(c, step, n_phys, delta_t)))
    slope = None
    if len(rows) >= 2:
        x = np.log([abs(r[0]) for r in rows])
        y = np.log([r[1] for r in rows])
        slope = float(np.polyfit(x, y, 1)[0])
    return rows, slope
