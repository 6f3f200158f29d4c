"""Tolerance analysis of the calibrated drive against parameter drift.

Each of the five drive settings (modulation period, magnetic field, peak
optical Rabi frequency, polarization angle, laser detuning) is perturbed
one at a time about a transition's calibrated operating point, and the
flip probability is re-evaluated.  The tolerance threshold for a target
fidelity is the largest static offset that keeps every considered
transition above the target for both offset signs.  Thresholds are found
by bisection, floored to two significant figures, and then certified by
re-simulating at the reported value, so a non-monotone fidelity landscape
cannot smuggle an unverified number into a table.

Perturbations are constant over a run.  Slow drifts are the regime of
interest; nothing here injects time-dependent noise.

Two table layouts are produced.  The aggregated layout takes the minimum
fidelity over all nine transitions per probe, giving one threshold per
(parameter, target) cell.  The per-transition layout runs the same
search for each transition separately.  Cells whose target is already
missed with no perturbation report "not achievable"; cells whose
threshold lies beyond the search cap report "exceeds bound" rather than
chasing arbitrarily large offsets.

Scattering is budgeted separately: `scattering_estimate` takes a
decay-inclusive density-matrix trajectory and converts the peak excited
population into photons scattered per nuclear Rabi cycle.
"""

from __future__ import annotations

import dataclasses
import math
from collections.abc import Mapping
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .atom import AtomSpec, DriveParams
from .basis import TRANSITIONS
from .engine import EngineOptions, Trajectory
from .scan import PROBE_OPTIONS, OperatingPoint, flip_probability

__all__ = [
    "PERTURBABLE",
    "STRONG_FIELD_BOUNDS",
    "WEAK_FIELD_BOUNDS",
    "EXCITED_POPULATION_BOUND",
    "SCATTERED_PHOTON_BOUND",
    "PerturbationSpec",
    "Threshold",
    "ToleranceReport",
    "ScatteringReport",
    "perturbed_fidelities",
    "min_fidelity",
    "tolerance_threshold",
    "tolerance_table",
    "per_transition_tolerance_table",
    "scattering_estimate",
]

# Drive settings the analysis may perturb, by their DriveParams field name.
PERTURBABLE = ("period", "field", "rabi_peak", "angle", "detuning")

# Bisection caps, chosen an order of magnitude above the loosest threshold
# expected in each regime so the search always brackets.  The weak-field
# caps are deliberately tight for the field and detuning columns: at those
# operating points the fidelity stays high out to offsets that stop being
# interesting (a gauss of field error, megahertz of detuning), and the
# honest report is "exceeds bound", not a large number from an open-ended
# search.
STRONG_FIELD_BOUNDS: Mapping[str, float] = {
    "period": 6.0e-3,                 # us (6 ns)
    "field": 30.0,                    # gauss
    "rabi_peak": 2.0 * np.pi * 0.8,   # rad/us (800 kHz)
    "angle": np.deg2rad(2.0),         # rad
    "detuning": 2.0 * np.pi * 50.0,   # rad/us (50 MHz)
}
WEAK_FIELD_BOUNDS: Mapping[str, float] = {
    "period": 40.0e-3,
    "field": 1.0,
    "rabi_peak": 2.0 * np.pi * 0.8,
    "angle": np.deg2rad(10.0),
    "detuning": 2.0 * np.pi * 5.0,
}

EXCITED_POPULATION_BOUND = 0.01
SCATTERED_PHOTON_BOUND = 0.004

# Probes evaluate the same quantity the calibration quotes: the flip
# probability maximised over the operating point's own observation
# window.  Shrinking the window around the nominal flip time would make
# perturbed runs look worse than the figure of merit says they are.
# Probes default to the scanner's reporting tier, not its coarse survey
# tier: at 64 slices per period the central transitions' fidelity comes
# out a few parts in 1e4 low, enough to corrupt a 0.999 certification.


@dataclass(frozen=True)
class PerturbationSpec:
    """One static offset applied to a single drive setting."""

    parameter: str
    magnitude: float
    sign: int = 1

    def __post_init__(self) -> None:
        if self.parameter not in PERTURBABLE:
            raise ValueError(
                f"unknown parameter {self.parameter!r}; expected one of {PERTURBABLE}"
            )
        if self.magnitude < 0:
            raise ValueError("magnitude must be non-negative")
        if self.sign not in (-1, 1):
            raise ValueError("sign must be -1 or +1")

    def apply(self, drive: DriveParams) -> DriveParams:
        """Return the drive with this offset added to its setting."""
        if drive.period is None or drive.detuning is None:
            raise ValueError("drive must be calibrated before perturbing")
        value = getattr(drive, self.parameter) + self.sign * self.magnitude
        return dataclasses.replace(drive, **{self.parameter: value})


@dataclass(frozen=True)
class Threshold:
    """Outcome of one tolerance search.

    value is the certified offset magnitude, in the parameter's own
    units.  status is "ok" for a bracketed threshold, "not_achievable"
    when the target is missed with no perturbation (value is None), and
    "exceeds_bound" when the search cap itself passes (value equals the
    cap).  probes counts fidelity evaluations spent on the search.
    """

    parameter: str
    target: float
    value: float | None
    status: str
    bound: float
    certified: bool
    probes: int

    @property
    def achieved(self) -> bool:
        return self.status != "not_achievable"


@dataclass(frozen=True)
class ToleranceReport:
    """A full tolerance table plus the unperturbed fidelities behind it.

    layout is "aggregated" (thresholds keyed by (parameter, target),
    minimum over transitions per probe) or "per_transition" (keyed by
    (m_i, parameter, target)).  baseline maps each lower m_I to its
    unperturbed flip probability under the same probe settings.
    """

    layout: str
    targets: tuple[float, ...]
    bounds: Mapping[str, float]
    thresholds: Mapping[tuple, Threshold]
    baseline: Mapping[float, float]

    def threshold(self, parameter: str, target: float, m_i: float | None = None) -> Threshold:
        key = (parameter, target) if m_i is None else (m_i, parameter, target)
        return self.thresholds[key]

    def ordering_violations(self) -> list[tuple]:
        """Keys where a stricter target got a looser threshold.

        For every (parameter, and transition where applicable) the
        threshold at the highest target must not exceed the threshold at
        any lower target.  An empty list is the healthy outcome.
        """
        bad = []
        by_group: dict[tuple, list[Threshold]] = {}
        for key, thr in self.thresholds.items():
            group = key[:-1]
            by_group.setdefault(group, []).append(thr)
        for group, entries in by_group.items():
            entries = [t for t in entries if t.value is not None]
            entries.sort(key=lambda t: t.target, reverse=True)
            for strict, loose in zip(entries, entries[1:]):
                if strict.value > loose.value * (1 + 1e-12):
                    bad.append(group + (strict.target, loose.target))
        return bad


@dataclass(frozen=True)
class ScatteringReport:
    """Spontaneous-emission budget of one flip.

    excited_peak is the maximum total excited-state population over the
    run, photons_per_cycle the expected number of scattered photons per
    nuclear Rabi cycle, excited_peak * gamma / rabi.
    """

    excited_peak: float
    rabi: float
    photons_per_cycle: float
    excited_ok: bool
    scattering_ok: bool


def _checked_points(
    points: Mapping[float, OperatingPoint | None],
) -> dict[float, OperatingPoint]:
    out = {}
    for m_i, point in points.items():
        if point is None:
            raise ValueError(f"transition at m_i = {m_i} has no calibrated point")
        out[m_i] = point
    if not out:
        raise ValueError("no operating points given")
    return out


def perturbed_fidelities(
    atom: AtomSpec,
    points: Mapping[float, OperatingPoint | None],
    perturbation: PerturbationSpec,
    options: EngineOptions = PROBE_OPTIONS,
) -> dict[float, float]:
    """Flip probability per transition with the offset applied to each drive."""
    checked = _checked_points(points)
    out = {}
    for m_i, point in checked.items():
        drive = perturbation.apply(point.drive)
        prob, _ = flip_probability(atom, drive, m_i, options)
        out[m_i] = prob
    return out


def min_fidelity(
    atom: AtomSpec,
    points: Mapping[float, OperatingPoint | None],
    perturbation: PerturbationSpec,
    options: EngineOptions = PROBE_OPTIONS,
) -> float:
    """Worst flip probability over the given transitions under one offset."""
    return min(perturbed_fidelities(atom, points, perturbation, options).values())


class _ProbeBudget:
    """Counts fidelity evaluations and keeps a worst-first transition order.

    Putting the most recently failing transition first lets a failing
    probe return after a single simulation most of the time.
    """

    def __init__(self, order: list[float]) -> None:
        self.order = order
        self.count = 0

    def passes(
        self,
        atom: AtomSpec,
        points: Mapping[float, OperatingPoint],
        parameter: str,
        delta: float,
        target: float,
        options: EngineOptions,
    ) -> bool:
        signs = (1,) if delta == 0.0 else (1, -1)
        for sign in signs:
            perturbation = PerturbationSpec(parameter, delta, sign)
            for m_i in list(self.order):
                drive = perturbation.apply(points[m_i].drive)
                prob, _ = flip_probability(atom, drive, m_i, options)
                self.count += 1
                if prob < target:
                    self.order.remove(m_i)
                    self.order.insert(0, m_i)
                    return False
        return True


def _floor_two_sig(x: float) -> float:
    """Largest two-significant-figure value not above x (modulo fp noise)."""
    if x <= 0.0:
        return 0.0
    exponent = math.floor(math.log10(x)) - 1
    quantum = 10.0 ** exponent
    return math.floor(x / quantum * (1.0 + 1e-9)) * quantum


def tolerance_threshold(
    atom: AtomSpec,
    points: Mapping[float, OperatingPoint | None],
    parameter: str,
    target: float,
    bound: float,
    options: EngineOptions = PROBE_OPTIONS,
    lower_start: float = 0.0,
) -> Threshold:
    """Largest certified offset of one parameter keeping fidelity at target.

    Bisects on [0, bound] with the pass criterion "every transition stays
    at or above target for both offset signs".  The returned value is
    floored to two significant figures and certified by a fresh probe; if
    certification fails (the landscape is not assumed monotone) the value
    steps down and is probed again.  lower_start seeds the passing edge
    of the bracket when a larger target has already been searched, since
    its certified offset passes any smaller target by definition.
    """
    if parameter not in PERTURBABLE:
        raise ValueError(f"unknown parameter {parameter!r}")
    if not 0.0 < target < 1.0:
        raise ValueError("target must lie strictly between 0 and 1")
    if bound <= 0.0:
        raise ValueError("search bound must be positive")
    checked = _checked_points(points)
    budget = _ProbeBudget(list(checked))

    if not budget.passes(atom, checked, parameter, 0.0, target, options):
        return Threshold(parameter, target, None, "not_achievable", bound,
                         certified=False, probes=budget.count)
    if budget.passes(atom, checked, parameter, bound, target, options):
        return Threshold(parameter, target, bound, "exceeds_bound", bound,
                         certified=True, probes=budget.count)

    lo, hi = 0.0, bound
    if 0.0 < lower_start < bound:
        if budget.passes(atom, checked, parameter, lower_start, target, options):
            lo = lower_start
    for _ in range(60):
        if hi - lo <= 0.02 * hi or _floor_two_sig(lo) == _floor_two_sig(hi):
            break
        mid = 0.5 * (lo + hi)
        if budget.passes(atom, checked, parameter, mid, target, options):
            lo = mid
        else:
            hi = mid

    value = _floor_two_sig(lo)
    certified = False
    for _ in range(6):
        if value <= 0.0:
            break
        if budget.passes(atom, checked, parameter, value, target, options):
            certified = True
            break
        value = _floor_two_sig(0.85 * value)
    return Threshold(parameter, target, value, "ok", bound,
                     certified=certified, probes=budget.count)


def _threshold_column(args) -> list[Threshold]:
    """One parameter searched at every target, strictest first.

    Each certified result seeds the next search's passing edge, since an
    offset certified at a high target passes any lower one.
    """
    atom, points, parameter, targets, bound, options = args
    out = []
    seed = 0.0
    for target in targets:
        thr = tolerance_threshold(atom, points, parameter, target, bound,
                                  options, seed)
        out.append(thr)
        seed = thr.value if thr.status == "ok" and thr.certified else 0.0
    return out


def tolerance_table(
    atom: AtomSpec,
    points: Mapping[float, OperatingPoint | None],
    bounds: Mapping[str, float] = STRONG_FIELD_BOUNDS,
    targets: tuple[float, ...] = (0.999, 0.99),
    options: EngineOptions = PROBE_OPTIONS,
    workers: int = 1,
) -> ToleranceReport:
    """Aggregated tolerance table: one threshold per (parameter, target).

    Every probe takes the minimum fidelity over all nine transitions, so
    the full manifold must be calibrated.  Targets are searched strictest
    first and each result seeds the next search's passing edge.  With
    workers > 1 the parameter columns run in parallel processes.
    """
    checked = _checked_points(points)
    if set(checked) != set(TRANSITIONS):
        raise ValueError("aggregated table needs all nine transitions calibrated")
    ordered_targets = tuple(sorted(targets, reverse=True))
    baseline = perturbed_fidelities(
        atom, checked, PerturbationSpec(PERTURBABLE[0], 0.0), options)

    jobs = [(atom, checked, parameter, ordered_targets, bounds[parameter], options)
            for parameter in PERTURBABLE]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            columns = list(pool.map(_threshold_column, jobs))
    else:
        columns = [_threshold_column(job) for job in jobs]

    thresholds: dict[tuple, Threshold] = {}
    for parameter, col in zip(PERTURBABLE, columns):
        for target, thr in zip(ordered_targets, col):
            thresholds[(parameter, target)] = thr
    return ToleranceReport("aggregated", ordered_targets, dict(bounds),
                           thresholds, baseline)


def per_transition_tolerance_table(
    atom: AtomSpec,
    points: Mapping[float, OperatingPoint | None],
    bounds: Mapping[str, float] = WEAK_FIELD_BOUNDS,
    targets: tuple[float, ...] = (0.999, 0.99),
    options: EngineOptions = PROBE_OPTIONS,
    workers: int = 1,
) -> ToleranceReport:
    """Per-transition tolerance table keyed by (m_i, parameter, target).

    Same search as the aggregated table but each transition is held to
    the target on its own, which is the layout that exposes which end of
    the nuclear manifold limits a weak-field operating point.  With
    workers > 1 the transitions run in parallel processes.
    """
    checked = _checked_points(points)
    ordered_targets = tuple(sorted(targets, reverse=True))
    baseline = perturbed_fidelities(
        atom, checked, PerturbationSpec(PERTURBABLE[0], 0.0), options)

    jobs = []
    for m_i in checked:
        for parameter in PERTURBABLE:
            jobs.append((atom, {m_i: checked[m_i]}, parameter, ordered_targets,
                         bounds[parameter], options))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            columns = list(pool.map(_threshold_column, jobs))
    else:
        columns = [_threshold_column(job) for job in jobs]

    thresholds: dict[tuple, Threshold] = {}
    for job, col in zip(jobs, columns):
        m_i = next(iter(job[1]))
        parameter = job[2]
        for target, thr in zip(ordered_targets, col):
            thresholds[(m_i, parameter, target)] = thr
    return ToleranceReport("per_transition", ordered_targets, dict(bounds),
                           thresholds, baseline)


def scattering_estimate(
    traj: Trajectory,
    rabi: float,
    gamma: float | None = None,
) -> ScatteringReport:
    """Photons scattered per nuclear Rabi cycle, from a decay-aware run.

    The trajectory should come from the density-matrix path with decay
    enabled, so its excited population already reflects loss.  gamma
    defaults to the natural linewidth of the reference atom.
    """
    if rabi <= 0.0:
        raise ValueError("rabi must be positive")
    if gamma is None:
        from .atom import SR87

        gamma = SR87.gamma
    if gamma < 0.0:
        raise ValueError("gamma must be non-negative")
    peak = float(np.max(traj.excited_population()))
    photons = peak * gamma / rabi
    return ScatteringReport(
        excited_peak=peak,
        rabi=rabi,
        photons_per_cycle=photons,
        excited_ok=peak < EXCITED_POPULATION_BOUND,
        scattering_ok=photons < SCATTERED_PHOTON_BOUND,
    )
