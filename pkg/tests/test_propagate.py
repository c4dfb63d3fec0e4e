import numpy as np
import pytest

from ramanpert import raman
from ramanpert.errors import InvalidState, SpaceMismatch, StepTooLarge
from ramanpert.hilbert import Operator, SpaceSpec, matrix_exponential, sigma
from ramanpert.propagate import (
    basis_state,
    exact_propagate,
    fidelity,
    level_populations,
    populations,
    step_exponential,
    step_halving_ratio,
)

SP = SpaceSpec(atomic_dim=3, mode_count=1, fock_cutoff=4, buffer=2)


def random_hermitian(seed, n):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (x + x.conj().T) / 2


def test_constant_hamiltonian_is_exact():
    h = Operator(SP, random_hermitian(0, SP.dim))
    run = exact_propagate(lambda t: h, 1.0, 1e-3, [1.0])
    expected = matrix_exponential(Operator(SP, -1j * h.matrix))
    assert np.linalg.norm(run.unitaries[-1].matrix - expected.matrix) <= 1e-10


def test_off_grid_samples():
    h = Operator(SP, random_hermitian(1, SP.dim))
    times = [0.0, 0.0123, 0.5, 0.77777]
    run = exact_propagate(lambda t: h, 0.8, 1e-2, times)
    assert run.times == tuple(times)
    for t, u in zip(times, run.unitaries):
        expected = matrix_exponential(Operator(SP, -1j * t * h.matrix)).matrix
        assert np.linalg.norm(u.matrix - expected) <= 1e-11


def test_taylor_step_matches_expm():
    a = -1j * 0.004 * random_hermitian(2, 20)
    np.testing.assert_allclose(step_exponential(a), matrix_exponential(Operator(SpaceSpec(20, 0), a)).matrix, atol=1e-15)


def test_step_too_large():
    h = Operator(SP, np.eye(SP.dim))
    with pytest.raises(StepTooLarge):
        exact_propagate(lambda t: h, 1.0, 0.01, [1.0], max_frequency=10.0)
    exact_propagate(lambda t: h, 0.01, 0.005, [0.01], max_frequency=10.0)


def test_periodic_caching_is_the_same_scheme():
    cfg = raman.default_config(space=SP)
    h = raman.interaction_hamiltonian_fn(cfg)
    period = 2 * np.pi / cfg.reference_detuning
    dt = period / 64
    times = [0.0, 0.3 * period, 2 * period, 5.5 * period + 0.1 * dt]
    plain = exact_propagate(h, times[-1], dt, times, space=SP)
    cached = exact_propagate(h, times[-1], dt, times, space=SP, period=period)
    for u, v in zip(plain.unitaries, cached.unitaries):
        assert np.linalg.norm(u.matrix - v.matrix) <= 1e-12


def test_unitarity_at_final_time():
    cfg = raman.default_config(space=SP)
    run = exact_propagate(
        raman.interaction_hamiltonian_fn(cfg), 0.5, 4e-4, [0.5], space=SP, max_frequency=cfg.max_frequency()
    )
    assert run.unitaries[-1].unitarity_error() <= 1e-8


@pytest.mark.slow
def test_step_halving_ratio_default_config():
    cfg = raman.default_config()
    h = raman.interaction_hamiltonian_fn(cfg)
    _, _, ratio = step_halving_ratio(h, 20 / cfg.reference_detuning, 4e-4, space=cfg.space, n_phys=10)
    assert 0.2 <= ratio <= 0.3


def test_fidelity_examples():
    sp = SpaceSpec(atomic_dim=2, mode_count=0)
    u = Operator(sp, random_hermitian(3, 2))
    u = matrix_exponential(Operator(sp, -1j * u.matrix))
    assert fidelity(u, u, 0) == pytest.approx(1.0, abs=1e-15)
    assert fidelity(u, np.exp(1.234j) * u, 0) == pytest.approx(1.0, abs=1e-15)
    swap = Operator(sp, [[0, 1], [1, 0]])
    assert fidelity(Operator(sp, np.eye(2)), swap, 0) == 0.0


def test_fidelity_space_mismatch():
    a = Operator(SpaceSpec(atomic_dim=2, mode_count=0), np.eye(2))
    b = Operator(SpaceSpec(atomic_dim=1, mode_count=1, fock_cutoff=1, buffer=0), np.eye(2))
    with pytest.raises(SpaceMismatch):
        fidelity(a, b, 0)


def test_populations_without_coupling():
    cfg = raman.default_config(space=SP)
    h0 = raman.h0_operator(cfg) + raman.trap_operator(cfg)
    run = exact_propagate(lambda t: h0, 3.0, 0.01, np.linspace(0, 3.0, 7))
    psi = basis_state(SP, 1)
    assert populations(run, psi, 1) == pytest.approx([1.0] * 7, abs=1e-14)


def test_populations_sum_to_one():
    cfg = raman.default_config(space=SP)
    run = exact_propagate(
        raman.schroedinger_hamiltonian_fn(cfg), 0.3, 2e-4, np.linspace(0, 0.3, 5), space=SP
    )
    psi = basis_state(SP, 1)
    total = np.sum([populations(run, psi, l) for l in (1, 2, 3)], axis=0)
    np.testing.assert_allclose(total, 1.0, atol=1e-8)


def test_populations_reject_bad_states():
    run = exact_propagate(lambda t: Operator(SP, np.zeros((SP.dim, SP.dim))), 1.0, 0.1, [1.0])
    with pytest.raises(InvalidState):
        populations(run, 2 * basis_state(SP, 1), 1)
    with pytest.raises(InvalidState):
        populations(run, np.ones(3), 1)
    with pytest.raises(InvalidState):
        populations(run, basis_state(SP, 1), 4)


def test_level_populations_matches_projectors():
    rng = np.random.default_rng(4)
    psi = rng.normal(size=SP.dim) + 1j * rng.normal(size=SP.dim)
    psi /= np.linalg.norm(psi)
    got = level_populations(np.eye(SP.dim), psi, SP)
    for l in (1, 2, 3):
        p = sigma(SP, l, l).matrix
        assert got[l - 1] == pytest.approx(np.vdot(psi, p @ psi).real, abs=1e-15)
