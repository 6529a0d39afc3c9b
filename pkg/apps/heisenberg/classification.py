"""
Sector diagonalization and (n, k, d) labelling of Heisenberg eigenstates.

The group index n is defined by the g -> infinity limit, where the
eigenstates cluster by the number of spins pointing against the field.
It is read off at a large reference field and carried down to the
requested field by maximal-overlap tracking inside each sector.
"""
import logging
from collections import Counter

import numpy as np
from scipy import linalg
from scipy.optimize import linear_sum_assignment

from .hamiltonian import hamiltonian_terms, project, sector_basis, sector_labels
from .models import EigenDecomposition, SymmetryLabels

logger = logging.getLogger(__name__)

REFERENCE_FIELD_FACTOR = 50.0
TRACKING_STEPS = 200
# Tracked weight below this marks the label as ambiguous.
AMBIGUOUS_OVERLAP = 0.5
DEGENERACY_TOLERANCE = 1e-8


def reference_field(params):
    return REFERENCE_FIELD_FACTOR * max(params.max_anisotropy, 1.0)


def _fix_phases(vectors):
    """Make the largest-magnitude coefficient of every column real and positive."""
    pivots = np.argmax(np.abs(vectors), axis=0)
    values = vectors[pivots, np.arange(vectors.shape[1])]
    return vectors * (np.abs(values) / values)


def _sector_matrices(params, k, z2):
    basis = sector_basis(params.n_sites, k, z2)
    static, field = hamiltonian_terms(params)
    return basis, project(static, basis), project(field, basis)


def diagonalize_sector(params, k, z2):
    """Eigenpairs of H(g) restricted to the (k, z2) sector, ascending."""
    basis, static, field = _sector_matrices(params, k, z2)
    energies, vectors = linalg.eigh(static + params.field * field)
    return EigenDecomposition(
        momentum_index=k,
        z2=z2,
        field=params.field,
        energies=energies,
        states=_fix_phases(vectors),
        basis=basis,
    )


def spectrum_by_sector(params):
    """Decompositions of every (k, z2) sector, keyed by (k, z2)."""
    return {(k, z2): diagonalize_sector(params, k, z2) for k, z2 in sector_labels(params.n_sites)}


def full_spectrum(params):
    """All 2^N eigenvalues assembled from the sectors, ascending."""
    sectors = spectrum_by_sector(params).values()
    return np.sort(np.concatenate([d.energies for d in sectors]))


def degeneracies(energies, tolerance=DEGENERACY_TOLERANCE):
    """Degeneracy D of every level: the size of its cluster of equal energies."""
    energies = np.asarray(energies, dtype=float)
    if energies.size == 0:
        return np.zeros(0, dtype=int)
    order = np.argsort(energies, kind='stable')
    ordered = energies[order]
    scale = max(1.0, float(np.max(np.abs(ordered))))
    starts = np.concatenate([[True], np.diff(ordered) > tolerance * scale])
    cluster = np.cumsum(starts) - 1
    sizes = np.bincount(cluster)
    counts = np.empty(len(energies), dtype=int)
    counts[order] = sizes[cluster]
    return counts


def _initial_groups(energies, g_ref, params):
    """Group index from the Zeeman clustering E ~ -J g (N - 2n)."""
    J, N = params.coupling, params.n_sites
    groups = np.rint((energies / J + g_ref * N) / (2.0 * g_ref)).astype(int)
    return np.clip(groups, 0, N)


def _track(groups, previous, current):
    """
    Carry group indices from ``previous`` eigenvectors to ``current`` ones.

    The weight of a new state on a group is the squared norm of its
    projection onto the span of that group's old states, so degenerate
    multiplets are compared as subspaces. Group sizes are preserved.
    """
    overlaps = np.abs(previous.conj().T @ current) ** 2
    labels = np.unique(groups)
    weights = np.stack([overlaps[groups == n].sum(axis=0) for n in labels], axis=1)
    counts = Counter(groups.tolist())
    columns = np.concatenate([[i] * counts[n] for i, n in enumerate(labels)])
    rows, slots = linear_sum_assignment(-weights[:, columns])
    assigned = np.empty(len(groups), dtype=int)
    assigned[rows] = labels[columns[slots]]
    tracked = weights[rows, columns[slots]]
    ambiguous = np.zeros(len(groups), dtype=bool)
    ambiguous[rows] = tracked < AMBIGUOUS_OVERLAP
    return assigned, ambiguous


def classify_eigenstates(params, decomposition, tracking_steps=TRACKING_STEPS):
    """
    Attach SymmetryLabels to every state of ``decomposition``.

    The decomposition must come from ``diagonalize_sector`` at
    ``params.field``. Labels are also stored on ``decomposition.labels``.
    """
    k, z2 = decomposition.momentum_index, decomposition.z2
    basis, static, field = _sector_matrices(params, k, z2)
    g_ref = max(reference_field(params), params.field)
    energies, vectors = linalg.eigh(static + g_ref * field)
    groups = _initial_groups(energies, g_ref, params)
    flagged = np.zeros(len(groups), dtype=bool)

    if g_ref != params.field:
        path = np.linspace(g_ref, params.field, tracking_steps + 1)[1:-1]
        for g in path:
            _, current = linalg.eigh(static + g * field)
            groups, ambiguous = _track(groups, vectors, current)
            flagged |= ambiguous
            vectors = current
        groups, ambiguous = _track(groups, vectors, decomposition.states)
        flagged |= ambiguous

    labels = [None] * decomposition.dim
    for n in np.unique(groups):
        members = np.flatnonzero(groups == n)
        members = members[np.argsort(decomposition.energies[members], kind='stable')]
        for d, i in enumerate(members, start=1):
            labels[i] = SymmetryLabels(z2, k, int(n), d, bool(flagged[i]))

    broken = [lab for lab in labels if not lab.obeys_parity_rule]
    if broken:
        logger.warning(
            'sector (k=%d, z2=%+d) at g=%.4g: %d labels break the parity rule',
            k, z2, params.field, len(broken),
        )
    if flagged.any():
        logger.warning(
            'sector (k=%d, z2=%+d) at g=%.4g: %d ambiguous tracking steps',
            k, z2, params.field, int(flagged.sum()),
        )
    decomposition.labels = labels
    return labels


def labeled_spectrum(params, tracking_steps=TRACKING_STEPS):
    """
    Every level with its labels and degeneracy, ascending in energy.

    Returns a list of (energy, SymmetryLabels, D) triples.
    """
    rows = []
    for decomposition in spectrum_by_sector(params).values():
        labels = classify_eigenstates(params, decomposition, tracking_steps)
        rows += list(zip(decomposition.energies, labels))
    rows.sort(key=lambda row: (row[0], row[1].group_index, row[1].momentum_index))
    counts = degeneracies([energy for energy, _ in rows])
    return [(float(e), label, int(D)) for (e, label), D in zip(rows, counts)]
