"""Bookkeeping for the 40-level product basis.

The simulated state space is the product of an electronic degree of freedom
with four sublevels and a nuclear spin I = 9/2 with ten projections.  The
electronic sublevels are ordered

    index 0: (1S0, m_J = 0)
    index 1: (3P1, m_J = -1)
    index 2: (3P1, m_J =  0)
    index 3: (3P1, m_J = +1)

and within each electronic sublevel the nuclear projection m_I runs in
descending order +9/2, +7/2, ..., -9/2.  A product state (e, m_I) therefore
sits at flat index  10*e + (9/2 - m_I).  This ordering is fixed; every matrix
in the package refers to it.
"""
from __future__ import annotations

from dataclasses import dataclass

I_NUCLEAR = 4.5
J_EXCITED = 1.0

GROUND_LEVEL = "1S0"
EXCITED_LEVEL = "3P1"

ELECTRONIC_SUBLEVELS: tuple[tuple[str, int], ...] = (
    (GROUND_LEVEL, 0),
    (EXCITED_LEVEL, -1),
    (EXCITED_LEVEL, 0),
    (EXCITED_LEVEL, +1),
)

N_ELECTRONIC = len(ELECTRONIC_SUBLEVELS)
N_NUCLEAR = int(round(2 * I_NUCLEAR)) + 1
DIM = N_ELECTRONIC * N_NUCLEAR

NUCLEAR_PROJECTIONS: tuple[float, ...] = tuple(
    I_NUCLEAR - k for k in range(N_NUCLEAR)
)

GROUND_SLICE = slice(0, N_NUCLEAR)
EXCITED_SLICE = slice(N_NUCLEAR, DIM)


@dataclass(frozen=True)
class BasisState:
    """One product state |level, m_J, m_I> of the 40-dimensional basis."""

    level: str
    m_j: int
    m_i: float

    @property
    def index(self) -> int:
        return state_index(self.level, self.m_j, self.m_i)

    def __str__(self) -> str:
        return f"|{self.level}, m_J={self.m_j:+d}, m_I={format_half_integer(self.m_i)}>"


def nuclear_index(m_i: float) -> int:
    """Position of projection m_i in the descending nuclear ordering."""
    k = I_NUCLEAR - m_i
    ki = int(round(k))
    if abs(k - ki) > 1e-9 or not 0 <= ki < N_NUCLEAR:
        raise ValueError(f"m_I = {m_i} is not a valid I = 9/2 projection")
    return ki


def electronic_index(level: str, m_j: int) -> int:
    try:
        return ELECTRONIC_SUBLEVELS.index((level, m_j))
    except ValueError:
        raise ValueError(f"no electronic sublevel ({level}, m_J={m_j})") from None


def state_index(level: str, m_j: int, m_i: float) -> int:
    return N_NUCLEAR * electronic_index(level, m_j) + nuclear_index(m_i)


def ground_index(m_i: float) -> int:
    """Flat index of |1S0, 0, m_i>."""
    return nuclear_index(m_i)


def state_at(index: int) -> BasisState:
    if not 0 <= index < DIM:
        raise ValueError(f"basis index {index} out of range")
    level, m_j = ELECTRONIC_SUBLEVELS[index // N_NUCLEAR]
    return BasisState(level, m_j, NUCLEAR_PROJECTIONS[index % N_NUCLEAR])


ALL_STATES: tuple[BasisState, ...] = tuple(state_at(i) for i in range(DIM))

#: The nine adjacent-pair transitions (m_I, m_I + 1), lowest first.
TRANSITIONS: tuple[float, ...] = tuple(-4.5 + k for k in range(9))


def format_half_integer(m: float) -> str:
    """Render 1.5 as '3/2', -4.5 as '-9/2', 2.0 as '2'."""
    twice = int(round(2 * m))
    if twice % 2 == 0:
        return str(twice // 2)
    return f"{twice}/2"


def parse_half_integer(text: str) -> float:
    text = text.strip()
    if "/" in text:
        num, den = text.split("/", 1)
        if den.strip() != "2":
            raise ValueError(f"cannot read {text!r} as a half integer")
        return int(num) / 2
    return float(int(text))
