"""
Sweep dynamics of the Heisenberg chain inside the k = 0, Z2 = +1 sector.

The sweep conserves translation and Z2, so a ground state that starts in
this sector stays there and the evolution runs on its projected matrices.
"""
import logging
import time

import numpy as np
from scipy import linalg
from scipy.sparse.linalg import eigsh

from apps.core.exceptions import SectorProjectionError
from apps.core.integrators import RampedOperator, evolve_state
from apps.core.models import Channel, ExcitationReport, Validity, clip_probability

from .classification import TRACKING_STEPS, classify_eigenstates, diagonalize_sector
from .hamiltonian import check_size, hamiltonian_terms, project

logger = logging.getLogger(__name__)

TDSE_MAX_SITES = 13
# Below this size the extremal energies come from a dense solve.
DENSE_EXTREMES_MAX_SITES = 10
SWEEP_SECTOR = (0, 1)


def extremal_energies(params):
    """Lowest and highest eigenvalue of H(g) over the full space."""
    static, field = hamiltonian_terms(params)
    H = static + params.field * field
    if params.n_sites <= DENSE_EXTREMES_MAX_SITES:
        energies = linalg.eigvalsh(H.toarray())
        return float(energies[0]), float(energies[-1])
    low = eigsh(H, k=1, which='SA', return_eigenvectors=False)[0]
    high = eigsh(H, k=1, which='LA', return_eigenvectors=False)[0]
    return float(low), float(high)


def check_sector_ground(params, sector_ground, tolerance=1e-8):
    """Fail if the full-space ground state lies below the sweep sector."""
    low, high = extremal_energies(params)
    if low < sector_ground - tolerance * max(1.0, abs(low)):
        raise SectorProjectionError(
            f'ground state at g={params.field:.4g} lies outside the k=0, z2=+1 sector '
            f'({low:.10g} < {sector_ground:.10g})'
        )
    return low, high


def tdse_sweep(params, schedule, opts, units=None, tracking_steps=TRACKING_STEPS):
    """
    Evolve the sector ground state of H(g0) along ``schedule``.

    Channels are the two-flip states (group n = 2) of H(g1) indexed by d;
    p_ground_loss is 1 - |<ground(g1)|psi(T)>|^2.
    """
    check_size('tdse_sweep', params.n_sites, TDSE_MAX_SITES)
    started = time.perf_counter()
    k, z2 = SWEEP_SECTOR
    g0, g1 = schedule.g_start, schedule.g_end

    start = diagonalize_sector(params.at_field(g0), k, z2)
    check_sector_ground(params.at_field(g0), start.energies[0])
    static, field = hamiltonian_terms(params)
    S, F = project(static, start.basis), project(field, start.basis)
    psi = evolve_state(RampedOperator(S, F), schedule, start.states[:, 0], opts, units)

    final_params = params.at_field(g1)
    final = diagonalize_sector(final_params, k, z2)
    _, high = check_sector_ground(final_params, final.energies[0])
    labels = classify_eigenstates(final_params, final, tracking_steps)

    weights = np.abs(final.states.conj().T @ psi) ** 2
    ground = final.energies[0]
    channels = [
        Channel(label.degeneracy_index, float(final.energies[i] - ground), clip_probability(weights[i]))
        for i, label in enumerate(labels)
        if label.group_index == 2
    ]
    H1 = S + g1 * F
    mean = float(np.vdot(psi, H1 @ psi).real)
    variance = max(float(np.vdot(H1 @ psi, H1 @ psi).real) - mean * mean, 0.0)

    flags = []
    validity = params.perturbative_validity(g1)
    if validity is not Validity.VALID:
        flags.append(f'perturbative_{validity.value}')
    if any(label.flagged for label in labels):
        flags.append('ambiguous_labels')
    report = ExcitationReport(
        model='heisenberg',
        n_sites=params.n_sites,
        schedule=schedule,
        channels=channels,
        p_ground_loss=clip_probability(1.0 - weights[0]),
        mean_energy_above_ground=mean - ground,
        energy_variance=variance,
        spectrum_width=high - ground,
        flags=flags,
    )
    logger.info(
        'heisenberg N=%d g %.4g -> %.4g rate %.4g: p_E=%.4e (two-flip %.4e) in %.2fs',
        params.n_sites, g0, g1, schedule.rate, report.p_ground_loss, report.p_total,
        time.perf_counter() - started,
    )
    return report
