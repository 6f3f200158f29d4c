import dataclasses

import numpy as np
import pytest

from oner.atom import SR87, DriveParams, select_detuning
from oner.basis import DIM, BasisState, EXCITED_SLICE, state_index
from oner.engine import (
    EngineOptions,
    Trajectory,
    collapse_operators,
    evolve,
    evolve_state,
    lindblad_rhs,
    period_unitaries,
)

TWO_PI = 2 * np.pi

BARE = dataclasses.replace(SR87, hyperfine_a=0.0, hyperfine_q=0.0)


def pure_state(index):
    psi = np.zeros(DIM, dtype=complex)
    psi[index] = 1.0
    return psi


def pure_density(index):
    rho = np.zeros((DIM, DIM), dtype=complex)
    rho[index, index] = 1.0
    return rho


def operating_drive(m_i=-4.5, window=50.0):
    delta = select_detuning(SR87, 3000.0, m_i)
    return DriveParams(
        field=3000.0,
        rabi_peak=TWO_PI * 30.0,
        angle=np.deg2rad(60.0),
        detuning=delta,
        period=0.517,
        window=window,
    )


def test_pure_decay_matches_exponential_law():
    # no field, no hyperfine, no drive: excited population is exp(-gamma t)
    drive = DriveParams(
        field=0.0, rabi_peak=0.0, angle=0.0, detuning=0.0, period=1.0, window=30.0
    )
    rho0 = pure_density(state_index("3P1", 0, 0.5))
    traj = evolve(BARE, drive, rho0, EngineOptions(slices_per_period=32))
    expected = np.exp(-BARE.gamma * traj.times)
    assert np.abs(traj.excited_population() - expected).max() < 1e-6


def test_modulated_two_level_rabi_closed_form():
    # theta = 0 couples each ground sublevel to the m_J = 0 excited sublevel
    # only; with no field, no hyperfine, no decay, and zero detuning the
    # dynamics is an exact two-level flop whose phase is the integral of
    # half the envelope:
    #   P_e(t) = sin^2( (omega0/4) (t - (T/2pi) sin(2 pi t/T)) )
    omega0 = TWO_PI * 0.3
    period = 1.0
    drive = DriveParams(
        field=0.0,
        rabi_peak=omega0,
        angle=0.0,
        detuning=0.0,
        period=period,
        window=10.0,
    )
    atom = BARE.without_decay()
    src = state_index("1S0", 0, 1.5)
    tgt = state_index("3P1", 0, 1.5)
    expected_at = lambda t: (
        np.sin(omega0 / 4 * (t - period / TWO_PI * np.sin(TWO_PI * t / period)))
        ** 2
    )
    traj = evolve_state(atom, drive, pure_state(src), EngineOptions())
    assert np.abs(traj.population(tgt) - expected_at(traj.times)).max() < 1e-6
    # same closed form through the density-matrix path
    traj_rho = evolve(atom, drive, pure_density(src), EngineOptions())
    assert np.abs(traj_rho.population(tgt) - expected_at(traj_rho.times)).max() < 1e-6
    # all other basis states stay empty
    others = [k for k in range(DIM) if k not in (src, tgt)]
    assert traj.populations[:, others].max() < 1e-12


def test_undriven_ground_state_is_stationary():
    drive = operating_drive(window=5.0)
    drive = dataclasses.replace(drive, rabi_peak=0.0)
    src = state_index("1S0", 0, -4.5)
    traj = evolve(SR87, drive, pure_density(src), EngineOptions(slices_per_period=32))
    assert np.abs(traj.population(src) - 1.0).max() < 1e-12
    assert traj.populations[:, [k for k in range(DIM) if k != src]].max() < 1e-12


def test_trace_and_positivity_over_full_window():
    drive = operating_drive()
    traj = evolve(
        SR87,
        drive,
        pure_density(state_index("1S0", 0, -4.5)),
        EngineOptions(slices_per_period=64, sample_stride=8),
    )
    assert traj.trace_drift < 1e-8
    final = traj.final_state
    assert np.abs(final - final.conj().T).max() < 1e-10
    assert np.linalg.eigvalsh(final).min() > -1e-8


def test_state_and_density_paths_agree_without_decay():
    drive = operating_drive(window=3.0)
    atom = SR87.without_decay()
    src = state_index("1S0", 0, -4.5)
    opts = EngineOptions(slices_per_period=64)
    t1 = evolve_state(atom, drive, pure_state(src), opts)
    t2 = evolve(atom, drive, pure_density(src), opts)
    assert np.array_equal(t1.times, t2.times)
    assert np.abs(t1.populations - t2.populations).max() < 1e-10


def test_sampling_grid_contract():
    drive = operating_drive(window=1.23)
    opts = EngineOptions(slices_per_period=64, sample_stride=5, store_states="all")
    traj = evolve_state(SR87, drive, pure_state(0), opts)
    assert traj.times[0] == 0.0
    assert traj.times[-1] == pytest.approx(1.23, abs=1e-12)
    assert np.all(np.diff(traj.times) > 0)
    assert traj.populations.shape == (len(traj.times), DIM)
    assert len(traj.states) == len(traj.times)
    assert traj.trace_drift < 1e-10
    # stride that divides the window exactly still ends on the window
    drive2 = dataclasses.replace(drive, window=0.517)
    traj2 = evolve_state(SR87, drive2, pure_state(0), EngineOptions(slices_per_period=64))
    assert traj2.times[-1] == pytest.approx(0.517, abs=1e-12)


def test_period_unitaries_are_unitary():
    drive = operating_drive()
    us = period_unitaries(SR87, drive, 16)
    assert us.shape == (16, DIM, DIM)
    eye = np.eye(DIM)
    for u in us:
        assert np.abs(u @ u.conj().T - eye).max() < 1e-12


def test_collapse_operator_structure():
    ops = collapse_operators()
    assert len(ops) == 3
    for slot, c in zip((1, 2, 3), ops):
        proj = c.T @ c
        assert np.allclose(proj @ proj, proj, atol=1e-14)
        assert np.trace(proj) == pytest.approx(10.0)
        # maps |3P1, m_J, m_I> to |1S0, 0, m_I> for every m_I
        for k in range(10):
            src = np.zeros(DIM)
            src[slot * 10 + k] = 1.0
            out = c @ src
            assert out[k] == 1.0 and np.count_nonzero(out) == 1


def test_lindblad_rhs_closed_and_trace_free():
    rng = np.random.default_rng(7)
    assert np.allclose(
        lindblad_rhs(pure_density(12), np.zeros((DIM, DIM)), 0.0), 0.0
    )
    # free decay of a pure excited state
    rho = pure_density(state_index("3P1", 0, -0.5))
    rhs = lindblad_rhs(rho, np.zeros((DIM, DIM)), SR87.gamma)
    idx = state_index("3P1", 0, -0.5)
    assert rhs[idx, idx] == pytest.approx(-SR87.gamma)
    for _ in range(5):
        a = rng.normal(size=(DIM, DIM)) + 1j * rng.normal(size=(DIM, DIM))
        rho = a @ a.conj().T
        rho /= np.trace(rho).real
        h = a + a.conj().T
        rhs = lindblad_rhs(rho, h, SR87.gamma)
        assert abs(np.trace(rhs)) < 1e-12
        assert np.abs(rhs - rhs.conj().T).max() < 1e-11


def test_engine_rejects_bad_inputs():
    with pytest.raises(ValueError):
        EngineOptions(slices_per_period=4)
    with pytest.raises(ValueError):
        EngineOptions(sample_stride=0)
    with pytest.raises(ValueError):
        EngineOptions(store_states="sometimes")
    uncalibrated = DriveParams(field=3000.0, rabi_peak=1.0, angle=0.3)
    with pytest.raises(ValueError):
        evolve(SR87, uncalibrated, pure_density(0))
    drive = operating_drive()
    with pytest.raises(ValueError):
        evolve(SR87, drive, np.zeros((4, 4)))
    with pytest.raises(ValueError):
        evolve_state(SR87, drive, np.zeros((DIM, DIM)))
