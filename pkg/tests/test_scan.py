import dataclasses

import numpy as np
import pytest

from oner.atom import SR87, DriveParams, select_detuning
from oner.basis import DIM, state_index
from oner.engine import Trajectory
from oner.scan import (
    Peak,
    ScanCurve,
    default_period_grid,
    first_peak,
    flip_probability,
    nuclear_rabi_frequency,
    peak_spacing_analysis,
    scan_modulation_period,
)

TWO_PI = 2 * np.pi


def synthetic_curve(peak_specs):
    peaks = [Peak(t, p, 10.0, np.pi / 10.0) for t, p in peak_specs]
    return ScanCurve(
        m_i=-4.5,
        periods=np.linspace(0.2, 1.5, 5),
        probabilities=np.zeros(5),
        peaks=peaks,
        template=DriveParams(field=3000.0, rabi_peak=1.0, angle=0.5),
    )


def synthetic_flip_trajectory(omega, window, n=4001, amplitude=1.0):
    times = np.linspace(0.0, window, n)
    pops = np.zeros((n, DIM))
    pops[:, 8] = amplitude * np.sin(omega * times / 2.0) ** 2
    template = DriveParams(field=1.0, rabi_peak=1.0, angle=0.0, detuning=0.0, period=1.0)
    return Trajectory(times=times, populations=pops, params=template)


def test_first_peak_prefers_smallest_period():
    curve = synthetic_curve([(0.4, 0.9995), (0.8, 0.9993), (1.2, 0.9991)])
    assert first_peak(curve).period == 0.4


def test_first_peak_honors_fidelity_floor():
    curve = synthetic_curve([(0.35, 0.95), (0.7, 0.999)])
    assert first_peak(curve).period == 0.7
    assert first_peak(curve, floor=0.9) .period == 0.35
    assert first_peak(synthetic_curve([(0.35, 0.95)])) is None


def test_nuclear_rabi_from_synthetic_sinusoid():
    omega = TWO_PI * 0.01  # 10 kHz
    traj = synthetic_flip_trajectory(omega, window=200.0)
    est = nuclear_rabi_frequency(traj, 8)
    assert est.frequency == pytest.approx(omega, rel=1e-3)
    assert est.flip_time == pytest.approx(np.pi / omega, rel=1e-3)
    assert est.fit_frequency == pytest.approx(omega, rel=1e-3)
    assert est.fit_agrees is True


def test_nuclear_rabi_skips_fit_for_short_windows():
    omega = TWO_PI * 0.01
    traj = synthetic_flip_trajectory(omega, window=120.0)  # 1.2 oscillations
    est = nuclear_rabi_frequency(traj, 8)
    assert est.fit_frequency is None and est.fit_agrees is None
    assert est.frequency == pytest.approx(omega, rel=1e-3)


def test_nuclear_rabi_reports_no_flip():
    traj = synthetic_flip_trajectory(TWO_PI * 0.01, window=200.0, amplitude=0.3)
    assert nuclear_rabi_frequency(traj, 8) is None


def test_peak_spacing_exact_comb():
    curve = synthetic_curve([(0.4 * n, 0.999) for n in (1, 2, 3, 4)])
    structure = peak_spacing_analysis(curve)
    assert structure.orders == [1, 2, 3, 4]
    assert structure.spacing == pytest.approx(0.4, abs=1e-12)
    assert structure.energy_gap == pytest.approx(TWO_PI / 0.4, rel=1e-12)
    assert structure.residual < 1e-12


def test_peak_spacing_with_missing_order():
    curve = synthetic_curve([(0.4, 0.999), (1.2, 0.999)])
    structure = peak_spacing_analysis(curve)
    assert structure.orders == [1, 3]
    assert structure.spacing == pytest.approx(0.4, abs=1e-9)


def test_peak_spacing_needs_two_peaks():
    assert peak_spacing_analysis(synthetic_curve([(0.4, 0.999)])) is None


def test_flip_probability_zero_drive():
    drive = DriveParams(
        field=3000.0, rabi_peak=0.0, angle=0.5,
        detuning=select_detuning(SR87, 3000.0, -4.5), period=0.5, window=5.0,
    )
    prob, t_max = flip_probability(SR87, drive, -4.5)
    assert prob == 0.0 and t_max == 0.0


def test_flip_probability_rejects_stretched_state():
    drive = DriveParams(
        field=3000.0, rabi_peak=1.0, angle=0.5, detuning=0.0, period=0.5
    )
    with pytest.raises(ValueError):
        flip_probability(SR87, drive, 4.5)


def test_badly_detuned_drive_is_suppressed():
    delta = select_detuning(SR87, 3000.0, -4.5) + TWO_PI * 50.0
    drive = DriveParams(
        field=3000.0, rabi_peak=TWO_PI * 30.0, angle=np.deg2rad(60.0),
        detuning=delta, period=0.517, window=50.0,
    )
    prob, _ = flip_probability(SR87, drive, -4.5)
    assert prob < 0.5


def test_scan_grid_validation():
    template = DriveParams(field=3000.0, rabi_peak=1.0, angle=0.5)
    with pytest.raises(ValueError):
        scan_modulation_period(SR87, template, -4.5, periods=np.array([0.5, 0.4, 0.6]))
    with pytest.raises(ValueError):
        scan_modulation_period(SR87, template, -4.5, periods=np.array([0.5]))


def test_default_grid_covers_stated_range():
    grid = default_period_grid()
    assert grid[0] == pytest.approx(0.2)
    assert grid[-1] == pytest.approx(1.5, abs=1e-9)
    assert np.all(np.diff(grid) <= 0.002 + 1e-12)


def test_scan_without_coupling_finds_nothing():
    template = DriveParams(field=3000.0, rabi_peak=0.0, angle=0.5, window=10.0)
    curve = scan_modulation_period(
        SR87, template, -4.5, periods=np.linspace(0.4, 0.6, 5)
    )
    assert not curve.found
    assert curve.peaks == []
    assert curve.probabilities.max() < 1e-12


def test_narrow_scan_locates_known_transition():
    # the m_I = -9/2 -> -7/2 resonance at the reference operating point
    # sits near T = 0.517 us; a narrow grid around it must find and refine
    # a high-fidelity peak
    template = DriveParams(
        field=3000.0, rabi_peak=TWO_PI * 30.0, angle=np.deg2rad(60.0), window=50.0
    )
    curve = scan_modulation_period(
        SR87, template, -4.5, periods=np.arange(0.508, 0.528, 0.002)
    )
    assert curve.found
    peak = first_peak(curve, floor=0.999)
    assert peak is not None
    assert 0.514 < peak.period < 0.520
    assert peak.probability > 0.999
    # nuclear Rabi frequency in the tens-of-kHz range
    assert TWO_PI * 0.008 < peak.rabi < TWO_PI * 0.060
    # template detuning was filled in by the midpoint rule
    assert curve.template.detuning == pytest.approx(
        select_detuning(SR87, 3000.0, -4.5)
    )
