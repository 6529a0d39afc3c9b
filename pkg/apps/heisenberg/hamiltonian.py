"""
Dense and sparse operators of the cyclic anisotropic Heisenberg chain

    H = -J sum_i (Dx sx_i sx_i+1 + Dy sy_i sy_i+1 + Dz sz_i sz_i+1) - J g sum_i sx_i

in the product z-basis. Bit i of a basis index is site i; a clear bit is
sz = +1. The transverse-field Ising chain is the case (Dx, Dy, Dz) = (0, 0, 1).
"""
import logging

import numpy as np
from scipy import sparse

from apps.core.exceptions import SizeCapError

logger = logging.getLogger(__name__)

DENSE_MAX_SITES = 14


def check_size(name, n_sites, limit=DENSE_MAX_SITES):
    if n_sites > limit:
        raise SizeCapError(name, limit, n_sites)


def _bits(states, site):
    return (states >> site) & 1


def spin_chain_terms(n_sites, coupling, anisotropy):
    """
    Sparse (static, field) operators with H = static + g * field.

    Accepts any ring length N >= 2 up to the dense cap.
    """
    check_size('spin_chain_terms', n_sites)
    if n_sites < 2:
        raise ValueError('a ring needs at least two sites')
    dx, dy, dz = anisotropy
    dim = 2 ** n_sites
    states = np.arange(dim, dtype=np.int64)

    diagonal = np.zeros(dim)
    rows, cols, data = [], [], []
    for i in range(n_sites):
        j = (i + 1) % n_sites
        bi, bj = _bits(states, i), _bits(states, j)
        equal = bi == bj
        diagonal += dz * np.where(equal, 1.0, -1.0)
        # sx sx flips both spins; sy sy adds -1 on aligned and +1 on anti-aligned pairs.
        amplitude = dx - dy * np.where(equal, 1.0, -1.0)
        keep = amplitude != 0
        rows.append(states[keep] ^ ((1 << i) | (1 << j)))
        cols.append(states[keep])
        data.append(amplitude[keep])

    rows.append(states)
    cols.append(states)
    data.append(diagonal)
    static = sparse.coo_matrix(
        (-coupling * np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(dim, dim),
    ).tocsr()
    static.eliminate_zeros()

    flip_rows = np.concatenate([states ^ (1 << i) for i in range(n_sites)])
    flip_cols = np.tile(states, n_sites)
    field = sparse.coo_matrix(
        (np.full(len(flip_rows), -coupling), (flip_rows, flip_cols)), shape=(dim, dim),
    ).tocsr()
    return static, field


def hamiltonian_terms(params):
    return spin_chain_terms(params.n_sites, params.coupling, params.anisotropy)


def dense_hamiltonian(params):
    """H(g) of ``params`` as a dense 2^N x 2^N array."""
    check_size('dense_hamiltonian', params.n_sites)
    static, field = hamiltonian_terms(params)
    return (static + params.field * field).toarray()


def translate(states, n_sites, steps=1):
    """Cyclic right shift of the site pattern: site i moves to i + steps."""
    mask = (1 << n_sites) - 1
    steps %= n_sites
    if steps == 0:
        return states & mask
    return ((states << steps) | (states >> (n_sites - steps))) & mask


def symmetry_operators(N):
    """Sparse permutation matrices (Z2, T): Z2 flips every spin, T shifts right."""
    check_size('symmetry_operators', N)
    dim = 2 ** N
    states = np.arange(dim, dtype=np.int64)
    ones = np.ones(dim)
    z2 = sparse.csr_matrix((ones, (states ^ (dim - 1), states)), shape=(dim, dim))
    t = sparse.csr_matrix((ones, (translate(states, N), states)), shape=(dim, dim))
    return z2, t


def orbit_representatives(N):
    """Smallest element of each state's orbit under translations and Z2."""
    mask = (1 << N) - 1
    states = np.arange(2 ** N, dtype=np.int64)
    rep = np.minimum(states, states ^ mask)
    for j in range(1, N):
        shifted = translate(states, N, j)
        rep = np.minimum(rep, np.minimum(shifted, shifted ^ mask))
    return rep


def sector_basis(N, k, z2):
    """
    Orthonormal basis of the sector T = exp(-2 pi i k / N), Z2 = z2.

    Columns are normalised sums sum_j exp(2 pi i k j / N) T^j (|r> + z2 |~r>)
    over orbit representatives r; vanishing combinations are dropped.
    Returned as a sparse (2^N, dim) complex matrix.
    """
    check_size('sector_basis', N)
    if z2 not in (1, -1):
        raise ValueError('z2 must be +1 or -1')
    mask = (1 << N) - 1
    reps = np.unique(orbit_representatives(N))
    phases = np.exp(2j * np.pi * k * np.arange(N) / N)

    rows, cols, data = [], [], []
    columns = np.arange(len(reps))
    for j in range(N):
        shifted = translate(reps, N, j)
        rows += [shifted, shifted ^ mask]
        cols += [columns, columns]
        data += [np.full(len(reps), phases[j]), np.full(len(reps), z2 * phases[j])]
    # Duplicate entries sum on conversion.
    basis = sparse.coo_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(2 ** N, len(reps)),
    ).tocsc()
    norms = np.sqrt(np.asarray(abs(basis).power(2).sum(axis=0))).ravel()
    keep = norms > 1e-10
    basis = basis[:, keep] @ sparse.diags(1.0 / norms[keep])
    return sparse.csc_matrix(basis)


def parity_basis(N, z2):
    """Orthonormal basis (|b> + z2 |~b>)/sqrt(2) of one Z2 block, sparse and real."""
    check_size('parity_basis', N)
    mask = (1 << N) - 1
    states = np.arange(2 ** N, dtype=np.int64)
    lower = states[states < (states ^ mask)]
    columns = np.arange(len(lower))
    rows = np.concatenate([lower, lower ^ mask])
    cols = np.concatenate([columns, columns])
    data = np.concatenate([np.ones(len(lower)), np.full(len(lower), float(z2))]) / np.sqrt(2.0)
    return sparse.csc_matrix((data, (rows, cols)), shape=(2 ** N, len(lower)))


def sector_labels(N):
    """All (k, z2) sector labels of a ring of N sites."""
    return [(k, z2) for z2 in (1, -1) for k in range(N)]


def project(operator, basis):
    """Dense matrix of ``operator`` in the column ``basis``."""
    projected = basis.conj().T @ (operator @ basis)
    return projected.toarray() if sparse.issparse(projected) else np.asarray(projected)


def x_basis_state(N, flipped):
    """
    Product state with spins along +x except those in ``flipped`` (along -x),
    expanded in the z-basis.
    """
    states = np.arange(2 ** N, dtype=np.int64)
    parity = np.zeros(2 ** N, dtype=np.int64)
    for site in {s % N for s in flipped}:
        parity ^= _bits(states, site)
    return np.where(parity == 1, -1.0, 1.0) / np.sqrt(2.0 ** N)
