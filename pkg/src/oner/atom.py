"""Static structure and drive coupling of the 87Sr 1S0 - 3P1 system.

Conventions used throughout the package:

  * energies and angular frequencies in rad/us, time in us, field in gauss,
    hbar = 1.  A quantity quoted as "x MHz" enters as 2*pi*x rad/us.
  * the Hamiltonian is written in the frame co-rotating with the laser and
    within the rotating-wave approximation, so the optical carrier frequency
    never appears; only the detuning of the laser from the zero-field line
    center survives.
  * the magnetic field points along z, which is also the quantization axis.

The static part is the Zeeman interaction of both the electronic and the
nuclear moment plus the magnetic-dipole (A) and electric-quadrupole (Q)
hyperfine coupling of the 3P1 manifold.  The 1S0 level has J = 0 and
therefore carries no hyperfine term, only the nuclear Zeeman shift.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .basis import (
    DIM,
    EXCITED_LEVEL,
    GROUND_LEVEL,
    I_NUCLEAR,
    J_EXCITED,
    N_NUCLEAR,
    TRANSITIONS,
    electronic_index,
    format_half_integer,
    nuclear_index,
)
from .spinops import (
    embed_electronic,
    excited_projector,
    full_angular_momentum,
    full_nuclear_momentum,
)

TWO_PI = 2.0 * np.pi

#: Bohr magneton over hbar, rad/us per gauss (CODATA 1.399624604 MHz/G).
MU_BOHR = TWO_PI * 1.399624604
#: Nuclear magneton over hbar, rad/us per gauss (CODATA 0.762259328 kHz/G).
MU_NUCLEAR = TWO_PI * 7.62259328e-4


@dataclass(frozen=True)
class AtomSpec:
    """Atomic constants of the 1S0 - 3P1 system of 87Sr.

    g_j:        Lande factor of 3P1
    g_i:        nuclear g factor (dimensionless, negative for 87Sr)
    hyperfine_a: magnetic-dipole constant of 3P1, rad/us
    hyperfine_q: electric-quadrupole constant of 3P1, rad/us
    gamma:      3P1 decay rate, rad/us
    wavelength: transition wavelength in meters (photometry only)
    """

    g_j: float = 1.5
    g_i: float = -1.0928
    hyperfine_a: float = TWO_PI * (-260.0)
    hyperfine_q: float = TWO_PI * (-35.0)
    gamma: float = TWO_PI * 7.48e-3
    wavelength: float = 689e-9

    def __post_init__(self) -> None:
        if self.gamma < 0:
            raise ValueError("decay rate must be non-negative")
        if self.wavelength <= 0:
            raise ValueError("wavelength must be positive")

    def without_decay(self) -> "AtomSpec":
        return replace(self, gamma=0.0)


SR87 = AtomSpec()


@dataclass(frozen=True)
class DriveParams:
    """Operating point of the modulated optical drive.

    field:     magnetic field in gauss
    rabi_peak: peak optical Rabi frequency Omega_E0 in rad/us
    angle:     polarization angle theta in radians, 0 <= theta <= pi/2
    detuning:  laser detuning (line center minus laser frequency) in rad/us,
               None until calibrated
    period:    amplitude-modulation period T in us, None until calibrated
    window:    simulated drive window tau in us
    """

    field: float
    rabi_peak: float
    angle: float
    detuning: float | None = None
    period: float | None = None
    window: float = 50.0

    def __post_init__(self) -> None:
        if self.field < 0:
            raise ValueError("field must be non-negative")
        if self.rabi_peak < 0:
            raise ValueError("rabi_peak must be non-negative")
        if not 0 <= self.angle <= np.pi / 2:
            raise ValueError("angle must lie in [0, pi/2]")
        if self.period is not None and self.period <= 0:
            raise ValueError("period must be positive")
        if self.window <= 0:
            raise ValueError("window must be positive")

    def calibrated(self, detuning: float, period: float) -> "DriveParams":
        return replace(self, detuning=detuning, period=period)


class RegimeError(RuntimeError):
    """Raised when product-state labels stop being meaningful."""


def zeeman_term(atom: AtomSpec, field: float) -> np.ndarray:
    """(g_J mu_B J_z - g_I mu_N I_z) B, rad/us."""
    _, _, jz = full_angular_momentum()
    _, _, iz = full_nuclear_momentum()
    return field * (atom.g_j * MU_BOHR * jz - atom.g_i * MU_NUCLEAR * iz)


def hyperfine_term(atom: AtomSpec) -> np.ndarray:
    """A I.J plus the quadrupole correction, nonzero only on 3P1.

    The quadrupole part is
        Q * [ (3/2) K (2K + 1) - I(I+1) J(J+1) ] / [ 2 I J (2I-1)(2J-1) ]
    with K = I.J understood as an operator.  Because J vanishes on the 1S0
    sublevel, both terms are automatically zero there.
    """
    jx, jy, jz = full_angular_momentum()
    ix, iy, iz = full_nuclear_momentum()
    k = jx @ ix + jy @ iy + jz @ iz
    j_sq = jx @ jx + jy @ jy + jz @ jz
    i_sq = I_NUCLEAR * (I_NUCLEAR + 1) * np.eye(DIM)
    denom = 2 * I_NUCLEAR * J_EXCITED * (2 * I_NUCLEAR - 1) * (2 * J_EXCITED - 1)
    quad = (1.5 * k @ (2 * k + np.eye(DIM)) - i_sq @ j_sq) / denom
    return atom.hyperfine_a * k + atom.hyperfine_q * quad


def static_hamiltonian(atom: AtomSpec, field: float) -> np.ndarray:
    """Zeeman plus hyperfine Hamiltonian at the given field, rad/us."""
    return zeeman_term(atom, field) + hyperfine_term(atom)


def detuning_term(detuning: float) -> np.ndarray:
    """Diagonal energy of the excited manifold in the co-rotating frame.

    With the detuning defined as line center minus laser frequency, every
    3P1 basis state acquires the shift +detuning.  A positive detuning
    (laser below the zero-field line center) raises the excited manifold,
    so a level whose static shift is s is driven resonantly when
    s + detuning = 0.
    """
    return detuning * excited_projector()


def atom_field_operator(angle: float) -> np.ndarray:
    """Unit-amplitude drive operator for polarization angle theta.

    Couples 1S0 to the three 3P1 sublevels with weights cos(theta) on
    m_J = 0 and +-sin(theta)/sqrt(2) on m_J = -+1, identity on the nuclear
    spin.  The time-dependent coupling in the Hamiltonian is this operator
    times Omega_E(t)/2.
    """
    if not 0 <= angle <= np.pi / 2:
        raise ValueError("angle must lie in [0, pi/2]")
    v = np.zeros((4, 4), dtype=complex)
    g = electronic_index(GROUND_LEVEL, 0)
    c = np.cos(angle)
    s = np.sin(angle) / np.sqrt(2)
    v[g, electronic_index(EXCITED_LEVEL, 0)] = c
    v[g, electronic_index(EXCITED_LEVEL, -1)] = s
    v[g, electronic_index(EXCITED_LEVEL, +1)] = -s
    v = v + v.conj().T
    return embed_electronic(v)


def modulation_envelope(t, period: float, rabi_peak: float):
    """Omega_E(t) = (Omega_E0 / 2) (1 - cos(2 pi t / T)).

    Starts and ends each cycle at zero and peaks at Omega_E0 mid-cycle.
    Accepts scalar or array t.
    """
    if period <= 0:
        raise ValueError("period must be positive")
    return 0.5 * rabi_peak * (1.0 - np.cos(TWO_PI * np.asarray(t) / period))


def hamiltonian_at(atom: AtomSpec, drive: DriveParams, t: float) -> np.ndarray:
    """Full co-rotating Hamiltonian at time t (drive must be calibrated)."""
    if drive.detuning is None or drive.period is None:
        raise ValueError("drive needs detuning and period to build H(t)")
    coupling = 0.5 * modulation_envelope(t, drive.period, drive.rabi_peak)
    return (
        detuning_term(drive.detuning)
        + static_hamiltonian(atom, drive.field)
        + coupling * atom_field_operator(drive.angle)
    )


# --- level labeling -------------------------------------------------------

@dataclass(frozen=True)
class LevelMap:
    """Eigenlevels of the static Hamiltonian tagged by product states.

    energy[i] is the eigenvalue whose eigenvector has the largest overlap
    with product basis state i (bijectively, largest overlaps first);
    overlap[i] is that squared overlap.
    """

    field: float
    energy: np.ndarray
    overlap: np.ndarray

    def labeled_energy(self, level: str, m_j: int, m_i: float) -> float:
        idx = N_NUCLEAR * electronic_index(level, m_j) + nuclear_index(m_i)
        return float(self.energy[idx])


def _assign_block(h_block: np.ndarray, offset: int, energy, overlap) -> None:
    w, vec = np.linalg.eigh(h_block)
    ov = np.abs(vec) ** 2  # ov[basis, eig]
    n = h_block.shape[0]
    # Greedy bijection, largest overlap first.  Ties (never seen at the
    # fields this package targets) resolve by basis index, then eigenindex.
    order = sorted(
        ((ov[b, e], b, e) for b in range(n) for e in range(n)),
        key=lambda item: (-item[0], item[1], item[2]),
    )
    taken_b: set[int] = set()
    taken_e: set[int] = set()
    for o, b, e in order:
        if b in taken_b or e in taken_e:
            continue
        if o < 0.5:
            raise RegimeError(
                "state mixing too strong to label levels by product states "
                f"(squared overlap {o:.3f} < 0.5); increase the field"
            )
        energy[offset + b] = w[e]
        overlap[offset + b] = o
        taken_b.add(b)
        taken_e.add(e)


def label_levels(atom: AtomSpec, field: float) -> LevelMap:
    """Tag each static eigenlevel with its dominant product state.

    Works per electronic manifold (the static Hamiltonian never mixes 1S0
    with 3P1).  Raises RegimeError when any squared overlap drops below
    0.5, which happens at low field where the hyperfine coupling wins over
    the Zeeman splitting.
    """
    h = static_hamiltonian(atom, field)
    energy = np.empty(DIM)
    overlap = np.empty(DIM)
    _assign_block(h[: N_NUCLEAR, : N_NUCLEAR], 0, energy, overlap)
    _assign_block(h[N_NUCLEAR:, N_NUCLEAR:], N_NUCLEAR, energy, overlap)
    return LevelMap(field=field, energy=energy, overlap=overlap)


def transition_shift(levels: LevelMap, m_i: float) -> float:
    """Labeled optical shift s(m_i) of |1S0,0,m_i> -> |3P1,-1,m_i>.

    Measured relative to the zero-field line center, which the co-rotating
    frame removes; light shifts are deliberately not included.
    """
    return levels.labeled_energy(EXCITED_LEVEL, -1, m_i) - levels.labeled_energy(
        GROUND_LEVEL, 0, m_i
    )


def select_detuning(atom: AtomSpec, field: float, m_i: float) -> float:
    """Laser detuning halfway between the two target optical lines.

    For the nuclear transition m_i <-> m_i + 1 the laser is placed at the
    mean of the two labeled m_J = -1 optical shifts, so the returned
    detuning (line center minus laser) is -(s(m_i) + s(m_i + 1)) / 2 and
    the two lines see residual detunings of equal size and opposite sign.
    """
    if m_i not in TRANSITIONS:
        raise ValueError(
            f"no adjacent transition starts at m_I = {format_half_integer(m_i)}"
        )
    levels = label_levels(atom, field)
    return -(transition_shift(levels, m_i) + transition_shift(levels, m_i + 1)) / 2


def residual_detunings(atom: AtomSpec, field: float, m_i: float) -> tuple[float, float]:
    """Residual detunings s + delta of the two target lines after balancing."""
    levels = label_levels(atom, field)
    delta = -(transition_shift(levels, m_i) + transition_shift(levels, m_i + 1)) / 2
    return (
        transition_shift(levels, m_i) + delta,
        transition_shift(levels, m_i + 1) + delta,
    )
