"""
Level tables of both chains on a grid of fields.
"""
import logging

import numpy as np

from apps.core.exceptions import SizeCapError
from apps.heisenberg.classification import DEGENERACY_TOLERANCE, TRACKING_STEPS, degeneracies, labeled_spectrum
from apps.heisenberg.hamiltonian import DENSE_MAX_SITES
from apps.ising.spectrum import enumerate_levels, two_fermion_gaps

logger = logging.getLogger(__name__)

ISING_HEADER = ['g', 'level', 'energy', 'sector', 'occupation', 'degeneracy']
HEISENBERG_HEADER = ['g', 'level', 'energy', 'z2', 'k', 'n', 'degeneracy', 'flagged']
TABLE_HEADER = ['energy', 'degeneracy', 'n', 'k']


def ising_spectrum_rows(params, g_values, levels=None):
    """
    Lowest ``levels`` many-body levels at every g (all 2^N by default,
    which needs N <= DENSE_MAX_SITES).
    """
    N = params.n_sites
    if levels is None:
        if N > DENSE_MAX_SITES:
            raise SizeCapError('spectrum (all levels)', DENSE_MAX_SITES, N)
        levels = 2 ** N
    rows = []
    for g in g_values:
        found = enumerate_levels(params.at_field(g), levels)
        counts = degeneracies([level.energy for level in found])
        for i, (level, D) in enumerate(zip(found, counts)):
            rows.append([g, i, level.energy, level.sector.value, level.occupation_label, D])
    return rows


def heisenberg_spectrum_rows(params, g_values, tracking_steps=TRACKING_STEPS):
    """Every level with its (z2, k, n, D) labels at each g."""
    rows = []
    flagged = 0
    for g in g_values:
        for i, (energy, label, D) in enumerate(labeled_spectrum(params.at_field(g), tracking_steps)):
            rows.append([
                g, i, energy, label.z2, label.momentum_index, label.group_index, D, label.flagged,
            ])
            flagged += label.flagged
    if flagged:
        logger.warning('%d level labels are ambiguous', flagged)
    return rows


def degeneracy_table(params, tracking_steps=TRACKING_STEPS):
    """One row per distinct level of ``params``: energy, D and the n and k it holds."""
    labeled = labeled_spectrum(params, tracking_steps)
    scale = max(1.0, max(abs(e) for e, _, _ in labeled))
    clusters = []
    for energy, label, _ in labeled:
        if clusters and abs(energy - clusters[-1][0]) <= DEGENERACY_TOLERANCE * scale:
            clusters[-1][1].append(label)
        else:
            clusters.append((energy, [label]))
    return [
        [
            energy,
            len(labels),
            ' '.join(str(n) for n in sorted({label.group_index for label in labels})),
            ' '.join(str(k) for k in sorted({label.momentum_index for label in labels})),
        ]
        for energy, labels in clusters
    ]


def pair_gap_rows(params, g_values):
    """Excitation energies of the two-fermion states |n> at every g."""
    rows = []
    for g in g_values:
        energies = two_fermion_gaps(params.n_sites, g, params.coupling)
        rows += [[g, n, e] for n, e in zip(np.arange(1, len(energies) + 1), energies)]
    return rows
