"""Angular momentum matrices and embeddings into the 40-dim product space."""
from __future__ import annotations

import numpy as np

from .basis import (
    DIM,
    ELECTRONIC_SUBLEVELS,
    EXCITED_LEVEL,
    N_ELECTRONIC,
    N_NUCLEAR,
)


def angular_momentum_matrices(j: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(Jx, Jy, Jz) for spin j in the descending-m basis, hbar = 1.

    Jz is diagonal with entries j, j-1, ..., -j.  The raising operator has
    <j,m+1|J+|j,m> = sqrt(j(j+1) - m(m+1)) on the first superdiagonal.
    """
    twice = 2 * j
    if j < 0 or abs(twice - round(twice)) > 1e-9:
        raise ValueError(f"spin must be a non-negative half integer, got {j}")
    n = int(round(twice)) + 1
    m = j - np.arange(n)
    jz = np.diag(m).astype(complex)
    jp = np.zeros((n, n), dtype=complex)
    for k in range(1, n):
        jp[k - 1, k] = np.sqrt(j * (j + 1) - m[k] * (m[k] + 1))
    jm = jp.conj().T
    jx = (jp + jm) / 2
    jy = (jp - jm) / 2j
    return jx, jy, jz


def embed_nuclear(op: np.ndarray) -> np.ndarray:
    """Act with a 10x10 nuclear operator on every electronic sublevel."""
    op = np.asarray(op)
    if op.shape != (N_NUCLEAR, N_NUCLEAR):
        raise ValueError(f"expected a {N_NUCLEAR}x{N_NUCLEAR} nuclear operator")
    return np.kron(np.eye(N_ELECTRONIC), op)


def embed_electronic(op: np.ndarray) -> np.ndarray:
    """Act with a 4x4 electronic-sublevel operator, identity on the spin."""
    op = np.asarray(op)
    if op.shape != (N_ELECTRONIC, N_ELECTRONIC):
        raise ValueError(f"expected a {N_ELECTRONIC}x{N_ELECTRONIC} electronic operator")
    return np.kron(op, np.eye(N_NUCLEAR))


def electronic_angular_momentum() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(Jx, Jy, Jz) of the electronic degree of freedom as 4x4 matrices.

    The 1S0 sublevel carries J = 0, so all three matrices vanish on it; the
    3P1 triplet carries the spin-1 matrices, rearranged from descending-m
    order into the fixed electronic ordering (-1, 0, +1).
    """
    j3 = angular_momentum_matrices(1.0)
    slot = {
        m_j: k
        for k, (level, m_j) in enumerate(ELECTRONIC_SUBLEVELS)
        if level == EXCITED_LEVEL
    }
    row = {+1: 0, 0: 1, -1: 2}  # descending-m positions inside the spin-1 block
    out = []
    for comp in j3:
        mat = np.zeros((N_ELECTRONIC, N_ELECTRONIC), dtype=complex)
        for ma, sa in slot.items():
            for mb, sb in slot.items():
                mat[sa, sb] = comp[row[ma], row[mb]]
        out.append(mat)
    return out[0], out[1], out[2]


def excited_projector() -> np.ndarray:
    """Projector onto the full 3P1 manifold (rank 30)."""
    diag = [1.0 if level == EXCITED_LEVEL else 0.0 for level, _ in ELECTRONIC_SUBLEVELS]
    return embed_electronic(np.diag(diag))


def full_angular_momentum() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Electronic J components embedded in the 40-dim space."""
    return tuple(embed_electronic(c) for c in electronic_angular_momentum())


def full_nuclear_momentum() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Nuclear I components embedded in the 40-dim space."""
    return tuple(embed_nuclear(c) for c in angular_momentum_matrices(4.5))


def projector(index: int) -> np.ndarray:
    p = np.zeros((DIM, DIM))
    p[index, index] = 1.0
    return p
