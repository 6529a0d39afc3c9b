"""
Sweeps under a static symmetry-breaking perturbation V.

V breaks Z2 (and, for site-dependent strengths, translations), so both
sweeps run on the full 2^N space.
"""
import logging
import math
import time

import numpy as np
from scipy import linalg, sparse
from scipy.sparse.linalg import eigsh

from apps.core.integrators import RampedOperator, evolve_state
from apps.core.models import Validity, clip_probability
from apps.heisenberg.classification import diagonalize_sector
from apps.heisenberg.hamiltonian import check_size, hamiltonian_terms
from apps.ising.dynamics import spectrum_width
from apps.ising.models import RegimeEstimate, Sector
from apps.ising.oracle import dense_ground_state, ising_terms

from .models import HeatingLaw, PerturbationSpec, PerturbedSweepResult

logger = logging.getLogger(__name__)

PERTURBED_ISING_MAX_SITES = 12
PERTURBED_HEISENBERG_MAX_SITES = 11
DENSE_GROUND_MAX_SITES = 10


def perturbation_operator(spec, coupling=1.0):
    """V = J sum_j eps_j (n_x sx_j + n_y sy_j + n_z sz_j) as a sparse matrix."""
    N = spec.n_sites
    check_size('perturbation_operator', N)
    dim = 2 ** N
    states = np.arange(dim, dtype=np.int64)
    diagonal = np.zeros(dim)
    rows, cols, data = [], [], []
    for j, (eps, (nx, ny, nz)) in enumerate(zip(spec.strengths, spec.directions)):
        if eps == 0:
            continue
        bit = (states >> j) & 1
        diagonal += eps * nz * np.where(bit == 0, 1.0, -1.0)
        # sy raises a clear bit with +i and lowers a set bit with -i.
        amplitude = eps * (nx + ny * np.where(bit == 0, 1j, -1j))
        rows.append(states ^ (1 << j))
        cols.append(states)
        data.append(amplitude)
    rows.append(states)
    cols.append(states)
    data.append(diagonal.astype(complex))
    V = sparse.coo_matrix(
        (coupling * np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(dim, dim),
    ).tocsr()
    V.eliminate_zeros()
    return V


def _site_field(n_sites, epsilon, site=0):
    """PerturbationSpec of eps sz on a single site."""
    strengths = np.zeros(n_sites)
    strengths[site] = epsilon
    directions = np.tile([0.0, 0.0, 1.0], (n_sites, 1))
    return PerturbationSpec(strengths, directions)


def ising_perturbed_sweep(params, schedule, epsilon, opts, units=None):
    """
    Sweep the Ising ring under V = J eps sz_0 from its unperturbed ground state.

    Weights are taken on the ground state, the first excited state (the
    lowest odd-parity level) and everything above, all of H(g1) without V.
    """
    N, J = params.n_sites, params.coupling
    check_size('ising_perturbed_sweep', N, PERTURBED_ISING_MAX_SITES)
    started = time.perf_counter()
    g0, g1 = schedule.g_start, schedule.g_end
    static, field = ising_terms(N, J)
    V = perturbation_operator(_site_field(N, epsilon), J)
    _, psi0 = dense_ground_state(N, g0, Sector.EVEN, J)
    psi = evolve_state(RampedOperator(static, field) + V, schedule, psi0, opts, units)

    final = static + g1 * field
    e0, ground = dense_ground_state(N, g1, Sector.EVEN, J)
    _, first = dense_ground_state(N, g1, Sector.ODD, J)
    mean = float(np.vdot(psi, final @ psi).real)
    w0 = clip_probability(abs(np.vdot(ground, psi)) ** 2)
    w1 = clip_probability(abs(np.vdot(first, psi)) ** 2)
    flags = []
    if g1 >= 1.0 or g0 <= 1.0:
        flags.append('schedule_does_not_cross_critical_point')
    result = PerturbedSweepResult(
        epsilon=float(epsilon),
        heating_ratio=(mean - e0) / spectrum_width(params, g1),
        ground_weight=w0,
        first_excited_weight=w1,
        higher_weight=clip_probability(1.0 - w0 - w1),
        flags=flags,
    )
    logger.info(
        'perturbed ising N=%d eps=%.3g g %.4g -> %.4g: heating %.4e, w1 %.4e in %.2fs',
        N, epsilon, g0, g1, result.heating_ratio, w1, time.perf_counter() - started,
    )
    return result


def heating_law(params, schedule, epsilons, opts, units=None):
    """
    Fit excess(eps) = constant * eps^slope of the heating ratio above the
    unperturbed sweep.
    """
    _check_epsilons(epsilons)
    baseline = ising_perturbed_sweep(params, schedule, 0.0, opts, units)
    results = [ising_perturbed_sweep(params, schedule, eps, opts, units) for eps in epsilons]
    return fit_heating_law(baseline, results)


def _check_epsilons(epsilons):
    if len(epsilons) < 2 or min(epsilons) <= 0:
        raise ValueError('need at least two positive perturbation strengths')


def fit_heating_law(baseline, results):
    """
    Power-law fit of the heating of ``results`` in excess of the eps = 0 ``baseline``.

    Points without positive excess are left out of the fit and flagged; with
    fewer than two usable points slope and constant are NaN.
    """
    epsilons = [r.epsilon for r in results]
    _check_epsilons(epsilons)
    excess = [r.heating_ratio - baseline.heating_ratio for r in results]
    usable = [(eps, value) for eps, value in zip(epsilons, excess) if value > 0]
    flags = ()
    if len(usable) < len(excess):
        logger.warning('excess heating is not positive at %d of %d strengths', len(excess) - len(usable), len(excess))
        flags = ('non_positive_excess',)
    if len(usable) < 2:
        return HeatingLaw(math.nan, math.nan, tuple(epsilons), tuple(excess), flags + ('underdetermined',))
    x, y = zip(*usable)
    slope, intercept = np.polyfit(np.log(x), np.log(y), 1)
    return HeatingLaw(float(slope), float(math.exp(intercept)), tuple(epsilons), tuple(excess), flags)


def _ground_state(H, n_sites):
    if n_sites <= DENSE_GROUND_MAX_SITES:
        _, vectors = linalg.eigh(H.toarray(), subset_by_index=[0, 0])
        return vectors[:, 0]
    _, vectors = eigsh(H, k=1, which='SA')
    return vectors[:, 0]


def heisenberg_perturbed_sweep(params, schedule, spec, opts, units=None):
    """
    1 - |<ground(H(g1) + V)|psi(T)>|^2 for a sweep under H(t) + V started
    from the unperturbed ground state of H(g0).
    """
    N = params.n_sites
    check_size('heisenberg_perturbed_sweep', N, PERTURBED_HEISENBERG_MAX_SITES)
    if spec.n_sites != N:
        raise ValueError(f'perturbation has {spec.n_sites} sites, chain has {N}')
    started = time.perf_counter()
    static, field = hamiltonian_terms(params)
    V = perturbation_operator(spec, params.coupling)
    psi0 = diagonalize_sector(params.at_field(schedule.g_start), 0, 1).full_state(0)
    psi = evolve_state(RampedOperator(static, field) + V, schedule, psi0, opts, units)
    ground = _ground_state(static + schedule.g_end * field + V, N)
    p = clip_probability(1.0 - abs(np.vdot(ground, psi)) ** 2)
    logger.info(
        'perturbed heisenberg N=%d eps=%.3g: p_V=%.4e in %.2fs',
        N, spec.effective_strength('field'), p, time.perf_counter() - started,
    )
    return p


def heisenberg_perturbation_bound(spec, g0, n_sites=None, convention='xy', anisotropy=1.0):
    """p_V = (eps / (2 g0))^2 N, flagged unless g0 >> max(|Delta|, eps_j)."""
    N = spec.n_sites if n_sites is None else n_sites
    eps = spec.effective_strength(convention)
    scale = max(abs(anisotropy), float(np.max(np.abs(spec.strengths), initial=0.0)), 1e-300)
    validity = Validity.much_greater(g0, scale)
    if validity is not Validity.VALID:
        logger.warning('perturbation bound at g0=%.4g is %s', g0, validity.value)
    bound = (eps / (2.0 * g0)) ** 2 * N
    return RegimeEstimate('perturbation', float(bound), validity, {'g0_large': validity})
