"""Modulation-period scans and transition characterization.

The central quantity is the spin-flip probability: starting from one
nuclear sublevel of the electronic ground state, the maximum population
reached by the neighboring sublevel during the drive window.  It is
computed from coherent dynamics (``engine.evolve_state``).  This is the
gate figure of merit; photon scattering during the flip is small (the
excited manifold stays below the percent level) and is budgeted
separately in ``stability.scattering_estimate`` rather than folded into
the probability itself.

A scan evaluates the flip probability over a grid of modulation periods,
detects local maxima, and refines each by golden-section search.  Peaks
recur at near-integer multiples of the fundamental period because the
drive flips the spin through an n-photon sideband resonance; the spacing
analysis extracts the effective ground-state splitting from that comb.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import curve_fit

from .atom import AtomSpec, DriveParams, select_detuning
from .basis import DIM, TRANSITIONS, state_index
from .engine import EngineOptions, Trajectory, evolve_state

__all__ = [
    "Peak",
    "ScanCurve",
    "RabiEstimate",
    "PeakStructure",
    "OperatingPoint",
    "SCAN_OPTIONS",
    "PROBE_OPTIONS",
    "default_period_grid",
    "flip_probability",
    "scan_modulation_period",
    "first_peak",
    "nuclear_rabi_frequency",
    "peak_spacing_analysis",
    "calibrate_transition",
    "calibrate_manifold",
]

# discretization tiers: coarse grid walking vs. peak refinement/reporting
SCAN_OPTIONS = EngineOptions(slices_per_period=64, sample_stride=2, store_states="none")
PROBE_OPTIONS = EngineOptions(slices_per_period=128, sample_stride=1, store_states="none")

PEAK_RECORD_THRESHOLD = 0.5
FIDELITY_FLOOR = 0.99
REFINE_TOL = 1e-4  # us, i.e. 0.1 ns in T


@dataclass(frozen=True)
class Peak:
    """One refined scan maximum."""

    period: float       # us
    probability: float
    flip_time: float    # us, first population maximum
    rabi: float         # rad/us, pi / flip_time

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class ScanCurve:
    """Flip probability versus modulation period for one transition."""

    m_i: float
    periods: np.ndarray
    probabilities: np.ndarray
    peaks: list[Peak]
    template: DriveParams

    @property
    def found(self) -> bool:
        """False means: no transition found in the scanned range."""
        return bool(self.peaks)


@dataclass(frozen=True)
class RabiEstimate:
    """Nuclear Rabi frequency from one flip trajectory."""

    frequency: float          # rad/us, from the half-period rule
    flip_time: float          # us
    fit_frequency: float | None  # sinusoid fit, when enough oscillations fit
    fit_agrees: bool | None      # None when the fit was not applicable


@dataclass(frozen=True)
class PeakStructure:
    """Multi-photon comb structure of a scan curve."""

    orders: list[int]
    spacing: float       # us, fundamental period (order 1 position)
    energy_gap: float    # rad/us, effective ground-pair splitting
    residual: float      # max relative deviation of peak positions from the comb


@dataclass(frozen=True)
class OperatingPoint:
    """One transition's calibrated drive: detuning from the midpoint rule,
    period from the refined first peak."""

    m_i: float
    drive: DriveParams   # period and detuning filled in
    probability: float   # flip probability at the calibrated point
    flip_time: float     # us
    rabi: float          # rad/us


def default_period_grid(start: float = 0.2, stop: float = 1.5, step: float = 0.002):
    """Default scan grid; 2 ns spacing resolves every peak comfortably."""
    return np.arange(start, stop + 0.5 * step, step)


def _target_series(
    atom: AtomSpec, drive: DriveParams, m_i: float, options: EngineOptions
) -> Trajectory:
    if m_i not in TRANSITIONS:
        raise ValueError(f"no m_I -> m_I + 1 transition starts at m_I = {m_i}")
    psi0 = np.zeros(DIM, dtype=complex)
    psi0[state_index("1S0", 0, m_i)] = 1.0
    return evolve_state(atom, drive, psi0, options)


def _first_max_index(series: np.ndarray, tol: float = 1e-3) -> int:
    """Index of the earliest local maximum within tol of the global one.

    Successive Rabi extrema differ by parts in 1e-6 near resonance, so a
    bare argmax can land on the third flip instead of the first and
    triple the inferred flip time.  Interior maxima more than tol below
    the global value do not count; if none qualifies (say the window
    ends mid-rise) the global argmax is kept.
    """
    top = int(np.argmax(series))
    if len(series) < 3 or series[top] <= tol:
        return top
    inner = series[1:-1]
    local = (inner >= series[:-2]) & (inner >= series[2:]) & (inner >= series[top] - tol)
    hits = np.nonzero(local)[0]
    return int(hits[0]) + 1 if hits.size else top


def flip_probability(
    atom: AtomSpec,
    drive: DriveParams,
    m_i: float,
    options: EngineOptions = PROBE_OPTIONS,
) -> tuple[float, float]:
    """Maximum target-sublevel population over the window, and when.

    Starts from |1S0, 0, m_i> and reads the population of
    |1S0, 0, m_i + 1>.  Returns (probability, time of the earliest
    maximum at sample resolution).
    """
    traj = _target_series(atom, drive, m_i, options)
    series = traj.population(state_index("1S0", 0, m_i + 1.0))
    k = _first_max_index(series)
    return float(series.max()), float(traj.times[k])


def _refined_flip_time(times: np.ndarray, series: np.ndarray) -> float:
    """First-maximum time, parabola-refined through the three top samples."""
    k = _first_max_index(series)
    if k == 0 or k == len(series) - 1:
        return float(times[k])
    denom = series[k - 1] - 2 * series[k] + series[k + 1]
    if denom >= 0:
        return float(times[k])
    shift = 0.5 * (series[k - 1] - series[k + 1]) / denom
    return float(times[k] + shift * (times[k + 1] - times[k]))


def _golden_max(f: Callable[[float], float], a: float, b: float, tol: float) -> float:
    inv_phi = (np.sqrt(5.0) - 1.0) / 2.0
    c, d = b - inv_phi * (b - a), a + inv_phi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = f(d)
    return (a + b) / 2.0


def scan_modulation_period(
    atom: AtomSpec,
    template: DriveParams,
    m_i: float,
    periods: np.ndarray | None = None,
    max_peaks: int | None = None,
    refine: bool = True,
) -> ScanCurve:
    """Walk the period grid, record the flip probability, refine the peaks.

    Parameters
    ----------
    template : DriveParams
        Field, drive strength, and angle of the operating point.  The
        detuning is filled in from the midpoint rule when unset; the
        period field is ignored (that is the scan variable).
    periods : ndarray, optional
        Monotone grid in microseconds; defaults to 0.2-1.5 us at 2 ns.
    max_peaks : int, optional
        Stop walking the grid once this many maxima have been passed.
        The returned curve then covers only the scanned prefix.
    refine : bool
        Golden-section refine each detected peak to 0.1 ns and re-probe
        it at reporting resolution.

    Peaks are local maxima of the grid curve with probability at least
    0.5; an empty peak list is a valid result meaning no transition in
    range.
    """
    if periods is None:
        periods = default_period_grid()
    periods = np.asarray(periods, dtype=float)
    if periods.ndim != 1 or len(periods) < 3 or np.any(np.diff(periods) <= 0):
        raise ValueError("periods must be a monotonically increasing grid")
    if template.detuning is None:
        template = dataclasses.replace(
            template, detuning=select_detuning(atom, template.field, m_i)
        )

    probs = np.empty(len(periods))
    raw_peaks: list[int] = []
    n_used = len(periods)
    for i, period in enumerate(periods):
        drive = dataclasses.replace(template, period=float(period))
        probs[i], _ = flip_probability(atom, drive, m_i, SCAN_OPTIONS)
        if (
            i >= 2
            and probs[i - 1] >= PEAK_RECORD_THRESHOLD
            and probs[i - 1] > probs[i - 2]
            and probs[i - 1] > probs[i]
        ):
            raw_peaks.append(i - 1)
        if (
            max_peaks is not None
            and len(raw_peaks) >= max_peaks
            and probs[i] < PEAK_RECORD_THRESHOLD
        ):
            n_used = i + 1
            break
    periods = periods[:n_used]
    probs = probs[:n_used]

    peaks = []
    for k in raw_peaks:
        if refine:
            peaks.append(
                _refine_peak(atom, template, m_i, periods[k - 1], periods[k + 1])
            )
        else:
            drive = dataclasses.replace(template, period=float(periods[k]))
            traj = _target_series(atom, drive, m_i, PROBE_OPTIONS)
            series = traj.population(state_index("1S0", 0, m_i + 1.0))
            t_flip = _refined_flip_time(traj.times, series)
            peaks.append(
                Peak(float(periods[k]), float(series.max()), t_flip, np.pi / t_flip)
            )
    return ScanCurve(m_i, periods, probs, peaks, template)


def _refine_peak(
    atom: AtomSpec, template: DriveParams, m_i: float, lo: float, hi: float
) -> Peak:
    def objective(period: float) -> float:
        drive = dataclasses.replace(template, period=period)
        return flip_probability(atom, drive, m_i, PROBE_OPTIONS)[0]

    best = _golden_max(objective, lo, hi, REFINE_TOL)
    drive = dataclasses.replace(template, period=best)
    traj = _target_series(atom, drive, m_i, PROBE_OPTIONS)
    series = traj.population(state_index("1S0", 0, m_i + 1.0))
    t_flip = _refined_flip_time(traj.times, series)
    return Peak(best, float(series.max()), t_flip, np.pi / t_flip)


def first_peak(curve: ScanCurve, floor: float = FIDELITY_FLOOR) -> Peak | None:
    """The smallest-period peak clearing the fidelity floor, or None.

    Order n = 1 sits at the smallest period and carries the highest
    nuclear Rabi frequency, so it is the peak one operates at.
    """
    for peak in sorted(curve.peaks, key=lambda p: p.period):
        if peak.probability >= floor:
            return peak
    return None


def nuclear_rabi_frequency(
    traj: Trajectory, target_index: int
) -> RabiEstimate | None:
    """Nuclear Rabi frequency from a flip trajectory.

    Half-period rule: Omega_N = pi / t_pi with t_pi the first maximum of
    the target population.  When at least 1.5 oscillations fit in the
    window, a sin^2 fit cross-checks the estimate; disagreement beyond 5%
    is flagged rather than averaged away.  Returns None when the
    trajectory contains no flip (max population below 0.9).
    """
    series = traj.population(target_index)
    if series.max() < 0.9:
        return None
    t_flip = _refined_flip_time(traj.times, series)
    omega = np.pi / t_flip
    window = traj.times[-1] - traj.times[0]
    if window < 1.5 * (2 * np.pi / omega):
        return RabiEstimate(omega, t_flip, None, None)

    def model(t, amplitude, om):
        return amplitude * np.sin(om * t / 2.0) ** 2

    try:
        popt, _ = curve_fit(
            model,
            traj.times,
            series,
            p0=(series.max(), omega),
            bounds=([0.5, 0.5 * omega], [1.001, 1.5 * omega]),
            maxfev=2000,
        )
    except RuntimeError:
        return RabiEstimate(omega, t_flip, None, False)
    fit_omega = float(popt[1])
    agrees = abs(fit_omega - omega) <= 0.05 * omega
    return RabiEstimate(omega, t_flip, fit_omega, agrees)


def calibrate_transition(
    atom: AtomSpec,
    template: DriveParams,
    m_i: float,
    periods: np.ndarray | None = None,
    floor: float = FIDELITY_FLOOR,
) -> OperatingPoint | None:
    """Find the first usable peak of one transition and package it.

    Scans until the first peak has been passed, refines it, and returns
    the calibrated operating point, or None when no peak in the grid
    clears the fidelity floor.
    """
    curve = scan_modulation_period(atom, template, m_i, periods, max_peaks=1)
    peak = first_peak(curve, floor)
    if peak is None:
        return None
    drive = dataclasses.replace(curve.template, period=peak.period)
    return OperatingPoint(m_i, drive, peak.probability, peak.flip_time, peak.rabi)


def calibrate_manifold(
    atom: AtomSpec,
    template: DriveParams,
    transitions=TRANSITIONS,
    periods: np.ndarray | None = None,
    floor: float = FIDELITY_FLOOR,
    workers: int = 1,
) -> dict[float, OperatingPoint | None]:
    """Calibrate every requested transition; keys are the lower m_I.

    Transitions are independent, so with ``workers > 1`` they are
    calibrated in parallel processes.
    """
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor
        from functools import partial

        fn = partial(calibrate_transition, atom, template, periods=periods, floor=floor)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(fn, transitions))
        return dict(zip(transitions, results))
    return {
        m_i: calibrate_transition(atom, template, m_i, periods, floor)
        for m_i in transitions
    }


def peak_spacing_analysis(curve: ScanCurve) -> PeakStructure | None:
    """Fit the multi-photon comb T_n = n * spacing through the peaks.

    The effective splitting of the driven sublevel pair follows as
    2 pi / spacing.  Orders are assigned from the smallest gap between
    neighboring peaks, so combs with missing orders are handled.
    Returns None for fewer than two peaks.
    """
    if len(curve.peaks) < 2:
        return None
    positions = np.array(sorted(p.period for p in curve.peaks))
    # the first detected peak is some low order n1; try the candidates and
    # keep the lowest one whose comb fits the remaining peaks best
    best = None
    for n1 in (1, 2, 3, 4):
        orders = np.round(positions / (positions[0] / n1)).astype(int)
        if orders[0] != n1 or (orders <= 0).any():
            continue
        if len(set(orders.tolist())) != len(orders):
            continue
        spacing = float(np.sum(orders * positions) / np.sum(orders * orders))
        residual = float(np.abs(positions / (orders * spacing) - 1.0).max())
        if best is None or residual < 0.5 * best.residual:
            best = PeakStructure(
                orders=orders.tolist(),
                spacing=spacing,
                energy_gap=2 * np.pi / spacing,
                residual=residual,
            )
        if best.residual < 0.02:
            break
    return best
