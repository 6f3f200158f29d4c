"""Time evolution of the driven atom.

Two propagation paths share one discretization of the modulation period:

* ``evolve`` integrates the Lindblad master equation for the full density
  matrix, with spontaneous decay from the excited manifold.
* ``evolve_state`` integrates the Schrodinger equation for a pure state,
  ignoring decay.  This is the cheap path used by the period scans, where
  the figure of merit is defined on coherent dynamics and the scattering
  budget is accounted for separately (see ``scan`` and ``stability``).

The integrator splits each modulation period into ``slices_per_period``
uniform slices and builds a fourth-order commutator-free exponential
propagator per slice from the Hamiltonian sampled at the two Gauss-Legendre
nodes.  The envelope is periodic, so the slice unitaries are built once and
reused for every period.  Decay is interleaved symmetrically around each
unitary slice as an exact amplitude-damping map (the pure-decay part of the
Lindblad equation integrates in closed form: excited blocks damp by
exp(-gamma*dt), coherences by the square root, and the damped population
feeds the ground block nuclear-sublevel by nuclear-sublevel).  The map is
trace preserving and completely positive by construction, so trace drift
measures arithmetic error only.

Accuracy is certified in the test suite against an independent
superoperator-exponential oracle (``liouville``); 64 slices per period is
sufficient for scan work, 192 for reported numbers.  One caveat worth
knowing: the absolute per-element error over a period is not monotone in
the slice count.  Far-detuned sublevels acquire hundreds of radians of
phase per slice, and whether their tiny adiabatic admixture cancels or
accumulates depends on that phase modulo 2 pi, so particular slice counts
can sit on an aliasing ridge (about 1e-6 stranded population) while
others land at 1e-9.  Quantities read off population extrema are
insensitive to this; element-wise certification runs should use 512 or
more slices per period.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .atom import (
    AtomSpec,
    DriveParams,
    atom_field_operator,
    detuning_term,
    modulation_envelope,
    static_hamiltonian,
)
from .basis import BasisState, DIM, EXCITED_SLICE, GROUND_SLICE, N_NUCLEAR

__all__ = [
    "EngineOptions",
    "Trajectory",
    "collapse_operators",
    "lindblad_rhs",
    "period_unitaries",
    "evolve",
    "evolve_state",
]

# Fourth-order commutator-free scheme: two exponentials per slice, each a
# weighted mix of the Hamiltonian at the Gauss nodes t0 + (1/2 -+ sqrt(3)/6)h.
_CF_ALPHA1 = (3.0 - 2.0 * np.sqrt(3.0)) / 12.0
_CF_ALPHA2 = (3.0 + 2.0 * np.sqrt(3.0)) / 12.0
_GAUSS_C1 = 0.5 - np.sqrt(3.0) / 6.0
_GAUSS_C2 = 0.5 + np.sqrt(3.0) / 6.0


@dataclass(frozen=True)
class EngineOptions:
    """Discretization and recording knobs for a propagation run.

    slices_per_period: time slices per modulation period.  64 resolves the
        envelope to scan accuracy, 192 to reporting accuracy.
    sample_stride: record populations every this many slices.
    store_states: "none", "final", or "all" (every sampled density matrix
        or state vector; mind the memory for long windows at stride 1).
    """

    slices_per_period: int = 192
    sample_stride: int = 1
    store_states: str = "final"

    def __post_init__(self) -> None:
        if self.slices_per_period < 8:
            raise ValueError("need at least 8 slices per period")
        if self.sample_stride < 1:
            raise ValueError("sample_stride must be positive")
        if self.store_states not in ("none", "final", "all"):
            raise ValueError(f"unknown store_states {self.store_states!r}")


@dataclass
class Trajectory:
    """Sampled populations (and optionally states) from one run.

    times: sample instants in microseconds, strictly increasing from 0.
    populations: array of shape (len(times), 40); row i is the diagonal of
        the density matrix (or |amplitude|^2 of the state) at times[i].
    params: the drive the run was made with.
    final_state: last density matrix / state vector, if recorded.
    states: every sampled state when store_states="all".
    trace_drift: max |trace - 1| (norm error for pure states) seen while
        sampling; a health check, not a physical quantity.
    """

    times: np.ndarray
    populations: np.ndarray
    params: DriveParams
    final_state: np.ndarray | None = None
    states: list[np.ndarray] | None = None
    trace_drift: float = 0.0

    def population(self, state: BasisState | int) -> np.ndarray:
        """Time series for one basis state (index or BasisState)."""
        idx = state.index if isinstance(state, BasisState) else int(state)
        return self.populations[:, idx]

    def excited_population(self) -> np.ndarray:
        """Total population of the excited manifold at each sample."""
        return self.populations[:, EXCITED_SLICE].sum(axis=1)


def collapse_operators() -> list[np.ndarray]:
    """The three jump operators for spontaneous decay.

    Each maps one excited electronic sublevel to the ground level with the
    identity on the nuclear factor; the emitted photon carries away the
    electronic angular momentum, so the nuclear projection is untouched.
    Rates are not included here; every operator acts with the same rate
    ``atom.gamma``.
    """
    ops = []
    for slot in (1, 2, 3):
        c = np.zeros((DIM, DIM))
        rows = np.arange(N_NUCLEAR)
        c[rows, slot * N_NUCLEAR + rows] = 1.0
        ops.append(c)
    return ops


def lindblad_rhs(
    rho: np.ndarray, hamiltonian: np.ndarray, gamma: float
) -> np.ndarray:
    """Right-hand side of the master equation, drho/dt.

    Reference implementation, textbook form; the propagator itself never
    calls this.  Returns -i[H, rho] + gamma * sum_a (c rho c+ - {c+c, rho}/2).
    """
    if rho.shape != (DIM, DIM) or hamiltonian.shape != (DIM, DIM):
        raise ValueError("expected 40x40 operators")
    out = -1j * (hamiltonian @ rho - rho @ hamiltonian)
    if gamma != 0.0:
        for c in collapse_operators():
            cr = c @ rho
            out += gamma * (cr @ c.T - 0.5 * (c.T @ cr + rho @ c.T @ c))
    return out


def _slice_unitaries(
    atom: AtomSpec, drive: DriveParams, starts: np.ndarray, widths: np.ndarray
) -> np.ndarray:
    """CF4 propagators for slices [starts[k], starts[k] + widths[k]].

    Returns an array of shape (len(starts), 40, 40).  Exponentials are taken
    through batched Hermitian eigendecomposition.
    """
    h0 = static_hamiltonian(atom, drive.field) + detuning_term(drive.detuning)
    v = atom_field_operator(drive.angle)
    # coupling enters H as (envelope/2) * V
    f1 = 0.5 * modulation_envelope(
        starts + _GAUSS_C1 * widths, drive.period, drive.rabi_peak
    )
    f2 = 0.5 * modulation_envelope(
        starts + _GAUSS_C2 * widths, drive.period, drive.rabi_peak
    )
    wa = _CF_ALPHA2 * f1 + _CF_ALPHA1 * f2
    wb = _CF_ALPHA1 * f1 + _CF_ALPHA2 * f2
    ma = 0.5 * h0 + wa[:, None, None] * v
    mb = 0.5 * h0 + wb[:, None, None] * v

    def expm_batch(m: np.ndarray) -> np.ndarray:
        evals, evecs = np.linalg.eigh(m)
        phases = np.exp(-1j * widths[:, None] * evals)
        return (evecs * phases[:, None, :]) @ evecs.conj().transpose(0, 2, 1)

    return expm_batch(mb) @ expm_batch(ma)


def period_unitaries(
    atom: AtomSpec, drive: DriveParams, n_slices: int
) -> np.ndarray:
    """Slice propagators covering one full modulation period."""
    h = drive.period / n_slices
    starts = h * np.arange(n_slices)
    return _slice_unitaries(atom, drive, starts, np.full(n_slices, h))


def _decay_step(rho: np.ndarray, gamma: float, dt: float) -> None:
    """Exact amplitude-damping map over dt, in place."""
    k = np.exp(-gamma * dt)
    n = N_NUCLEAR
    feed = (1.0 - k) * (
        rho[n : 2 * n, n : 2 * n]
        + rho[2 * n : 3 * n, 2 * n : 3 * n]
        + rho[3 * n :, 3 * n :]
    )
    sk = np.sqrt(k)
    rho[GROUND_SLICE, EXCITED_SLICE] *= sk
    rho[EXCITED_SLICE, GROUND_SLICE] *= sk
    rho[EXCITED_SLICE, EXCITED_SLICE] *= k
    rho[GROUND_SLICE, GROUND_SLICE] += feed


def _plan(drive: DriveParams, options: EngineOptions):
    """Slice widths and sample schedule covering [0, window] exactly."""
    if drive.period is None or drive.detuning is None:
        raise ValueError("drive must be calibrated (period and detuning set)")
    n = options.slices_per_period
    h = drive.period / n
    whole = int(np.floor(drive.window / h + 1e-9))
    remainder = drive.window - whole * h
    if remainder < 1e-12 * drive.window:
        remainder = 0.0
    return n, h, whole, remainder


def evolve(
    atom: AtomSpec,
    drive: DriveParams,
    rho0: np.ndarray,
    options: EngineOptions = EngineOptions(),
) -> Trajectory:
    """Propagate a density matrix through [0, drive.window].

    Parameters
    ----------
    atom : AtomSpec
        Atomic constants; ``atom.gamma`` sets the decay rate.
    drive : DriveParams
        Operating point; must carry ``period`` and ``detuning``.
    rho0 : ndarray
        Initial 40x40 density matrix (not modified).
    options : EngineOptions
        Discretization and recording settings.

    Returns
    -------
    Trajectory
        Populations sampled on the slice grid (subject to
        ``options.sample_stride``); the final sample always lands exactly
        on ``drive.window``.
    """
    if rho0.shape != (DIM, DIM):
        raise ValueError("rho0 must be 40x40")
    n, h, whole, remainder = _plan(drive, options)
    us = period_unitaries(atom, drive, n)
    uh = us.conj().transpose(0, 2, 1).copy()
    gamma = atom.gamma

    rho = rho0.astype(complex).copy()
    tail = 1 if (remainder or whole % options.sample_stride) else 0
    n_samples = whole // options.sample_stride + 1 + tail
    times = np.empty(n_samples)
    pops = np.empty((n_samples, DIM))
    times[0] = 0.0
    pops[0] = np.diag(rho).real
    states = [rho.copy()] if options.store_states == "all" else None

    tmp = np.empty_like(rho)
    drift = 0.0
    w = 1
    for step in range(whole):
        j = step % n
        if gamma:
            _decay_step(rho, gamma, 0.5 * h)
        np.matmul(us[j], rho, out=tmp)
        np.matmul(tmp, uh[j], out=rho)
        if gamma:
            _decay_step(rho, gamma, 0.5 * h)
        if (step + 1) % options.sample_stride == 0:
            diag = np.einsum("ii->i", rho).real
            times[w] = (step + 1) * h
            pops[w] = diag
            drift = max(drift, abs(diag.sum() - 1.0))
            if states is not None:
                states.append(rho.copy())
            w += 1
    if remainder:
        j = whole % n
        (u_last,) = _slice_unitaries(
            atom, drive, np.array([j * h]), np.array([remainder])
        )
        if gamma:
            _decay_step(rho, gamma, 0.5 * remainder)
        rho = u_last @ rho @ u_last.conj().T
        if gamma:
            _decay_step(rho, gamma, 0.5 * remainder)
    if remainder or whole % options.sample_stride:
        diag = np.diag(rho).real
        times[w] = drive.window
        pops[w] = diag
        drift = max(drift, abs(diag.sum() - 1.0))
        if states is not None:
            states.append(rho.copy())
        w += 1

    return Trajectory(
        times=times[:w],
        populations=pops[:w],
        params=drive,
        final_state=rho if options.store_states != "none" else None,
        states=states,
        trace_drift=drift,
    )


def evolve_state(
    atom: AtomSpec,
    drive: DriveParams,
    psi0: np.ndarray,
    options: EngineOptions = EngineOptions(),
) -> Trajectory:
    """Propagate a pure state coherently (decay ignored) over [0, window].

    Same discretization as ``evolve``; per slice the cost is one
    matrix-vector product, so this path is roughly an order of magnitude
    cheaper and is what the period scans run on.
    """
    if psi0.shape != (DIM,):
        raise ValueError("psi0 must be a 40-vector")
    n, h, whole, remainder = _plan(drive, options)
    us = period_unitaries(atom, drive, n)

    psi = psi0.astype(complex).copy()
    tail = 1 if (remainder or whole % options.sample_stride) else 0
    n_samples = whole // options.sample_stride + 1 + tail
    times = np.empty(n_samples)
    pops = np.empty((n_samples, DIM))
    times[0] = 0.0
    pops[0] = np.abs(psi) ** 2
    states = [psi.copy()] if options.store_states == "all" else None

    drift = 0.0
    w = 1
    for step in range(whole):
        psi = us[step % n] @ psi
        if (step + 1) % options.sample_stride == 0:
            p = np.abs(psi) ** 2
            times[w] = (step + 1) * h
            pops[w] = p
            drift = max(drift, abs(p.sum() - 1.0))
            if states is not None:
                states.append(psi.copy())
            w += 1
    if remainder:
        (u_last,) = _slice_unitaries(
            atom, drive, np.array([(whole % n) * h]), np.array([remainder])
        )
        psi = u_last @ psi
    if remainder or whole % options.sample_stride:
        p = np.abs(psi) ** 2
        times[w] = drive.window
        pops[w] = p
        drift = max(drift, abs(p.sum() - 1.0))
        if states is not None:
            states.append(psi.copy())
        w += 1

    return Trajectory(
        times=times[:w],
        populations=pops[:w],
        params=drive,
        final_state=psi if options.store_states != "none" else None,
        states=states,
        trace_drift=drift,
    )
