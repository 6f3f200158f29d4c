"""Superoperator route to the master equation, used as a cross-check.

The propagation engine in ``engine`` is a split-step scheme tuned for
speed.  This module provides a structurally independent path to the same
dynamics: vectorize the density matrix row-major, assemble the 1600x1600
Liouvillian as a sparse matrix, and push vec(rho) through matrix
exponentials of piecewise-constant slices.  Nothing here shares code with
the engine beyond the Hamiltonian assembly, so agreement between the two
is a meaningful certification of both.

Row-major vectorization convention: vec(A rho B) = kron(A, B^T) vec(rho).

This path costs seconds per modulation period and exists for validation
windows only; production runs go through ``engine.evolve``.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import expm_multiply

from .atom import (
    AtomSpec,
    DriveParams,
    atom_field_operator,
    detuning_term,
    modulation_envelope,
    static_hamiltonian,
)
from .basis import DIM
from .engine import collapse_operators

__all__ = ["hamiltonian_superoperator", "dissipator", "superoperator", "propagate_piecewise"]

_EYE = sp.identity(DIM, format="csr")


def hamiltonian_superoperator(hamiltonian: np.ndarray) -> sp.csr_matrix:
    """Sparse superoperator for the coherent part, -i[H, .]."""
    h = sp.csr_matrix(hamiltonian)
    return (-1j * (sp.kron(h, _EYE) - sp.kron(_EYE, h.T))).tocsr()


def dissipator(gamma: float) -> sp.csr_matrix:
    """Sparse superoperator for the decay part of the master equation."""
    out = sp.csr_matrix((DIM * DIM, DIM * DIM), dtype=complex)
    for c_dense in collapse_operators():
        c = sp.csr_matrix(c_dense)
        cdc = (c.T @ c).tocsr()
        out = out + gamma * (
            sp.kron(c, c.conj())
            - 0.5 * (sp.kron(cdc, _EYE) + sp.kron(_EYE, cdc.T))
        )
    return out.tocsr()


def superoperator(hamiltonian: np.ndarray, gamma: float) -> sp.csr_matrix:
    """Full Liouvillian for a fixed Hamiltonian: d vec(rho)/dt = L vec(rho)."""
    return (hamiltonian_superoperator(hamiltonian) + dissipator(gamma)).tocsr()


def propagate_piecewise(
    atom: AtomSpec,
    drive: DriveParams,
    rho0: np.ndarray,
    t_final: float,
    n_slices: int,
) -> np.ndarray:
    """Evolve rho0 to t_final by exponentiating piecewise-constant slices.

    The Liouvillian is split as L0 + f(t) * LV with f the half-envelope
    sampled at each slice midpoint; both parts are assembled once.  Slice
    count should keep each slice at or below period/1000 when this is used
    to certify the engine.

    Returns the final 40x40 density matrix.
    """
    if drive.period is None or drive.detuning is None:
        raise ValueError("drive must be calibrated (period and detuning set)")
    if rho0.shape != (DIM, DIM):
        raise ValueError("rho0 must be 40x40")
    h0 = static_hamiltonian(atom, drive.field) + detuning_term(drive.detuning)
    l0 = (hamiltonian_superoperator(h0) + dissipator(atom.gamma)).tocsr()
    lv = hamiltonian_superoperator(atom_field_operator(drive.angle))

    dt = t_final / n_slices
    mids = dt * (np.arange(n_slices) + 0.5)
    weights = 0.5 * modulation_envelope(mids, drive.period, drive.rabi_peak)

    vec = rho0.astype(complex).reshape(-1)
    for f in weights:
        vec = expm_multiply((l0 + f * lv) * dt, vec)
    return vec.reshape(DIM, DIM)
