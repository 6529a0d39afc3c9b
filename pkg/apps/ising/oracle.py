"""
Brute-force dense diagonalization of the Ising ring, used to calibrate and
check the free-fermion solution. Accepts any ring length up to the dense cap.
"""
import numpy as np
from scipy import linalg

from apps.heisenberg.hamiltonian import parity_basis, project, spin_chain_terms

from .models import Sector

ISING_ANISOTROPY = (0.0, 0.0, 1.0)


def ising_terms(n_sites, coupling=1.0):
    """Sparse (static, field) pair of the Ising ring."""
    return spin_chain_terms(n_sites, coupling, ISING_ANISOTROPY)


def dense_ising_hamiltonian(n_sites, field, coupling=1.0):
    static, transverse = ising_terms(n_sites, coupling)
    return (static + field * transverse).toarray()


def dense_spectrum(n_sites, field, coupling=1.0):
    """All 2^N eigenvalues, ascending."""
    return linalg.eigvalsh(dense_ising_hamiltonian(n_sites, field, coupling))


def sector_z2(sector):
    """Z2 eigenvalue of a fermion-parity sector (even parity is Z2 = +1)."""
    return 1 if Sector(sector) is Sector.EVEN else -1


def dense_sector_spectrum(n_sites, field, sector, coupling=1.0):
    """Eigenvalues inside one Z2 block, ascending."""
    basis = parity_basis(n_sites, sector_z2(sector))
    matrix = project(sparse_hamiltonian(n_sites, field, coupling), basis)
    return linalg.eigvalsh(matrix.real)


def sparse_hamiltonian(n_sites, field, coupling=1.0):
    static, transverse = ising_terms(n_sites, coupling)
    return static + field * transverse


def dense_ground_state(n_sites, field, sector=Sector.EVEN, coupling=1.0):
    """Lowest eigenvector of a Z2 block, expanded in the full z-basis."""
    basis = parity_basis(n_sites, sector_z2(sector))
    matrix = project(sparse_hamiltonian(n_sites, field, coupling), basis)
    energies, vectors = linalg.eigh(matrix.real)
    return energies[0], np.asarray(basis @ vectors[:, 0]).ravel()
