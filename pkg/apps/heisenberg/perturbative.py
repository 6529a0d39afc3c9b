"""
Large-field expansion of the Heisenberg ground state and the two-flip group.

In the x-basis the field term is diagonal and the couplings split into a
diagonal Dx part, hopping of flipped spins with amplitude -J (Dy + Dz) and
pair creation with amplitude -J (Dz - Dy). Energies are given to zeroth
order in 1/g, states to first order.

Two forms of the two-flip results are provided. ``closed_form`` are the closed
standing-wave expressions; ``effective`` diagonalises the first-order
problem of the k = 0 group exactly on the relative coordinate
j = 1..(N-1)/2, which includes the adjacent-pair Dx shift and the
reflection at j = (N-1)/2.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from apps.core.models import UnitsConvention, Validity
from apps.ising.models import RegimeEstimate

from .classification import classify_eigenstates, diagonalize_sector
from .hamiltonian import hamiltonian_terms, project
from .models import PerturbativeLevels

logger = logging.getLogger(__name__)

VARIANTS = ('closed_form', 'effective')


def _check_variant(variant):
    if variant not in VARIANTS:
        raise ValueError(f'unknown variant {variant!r}; choose from {VARIANTS}')


def standing_waves(N):
    """Closed-form zeroth-order two-flip states: rows d, columns j (both from 1)."""
    M = (N - 1) // 2
    d = np.arange(1, M + 1)[:, None]
    j = np.arange(1, M + 1)[None, :]
    return 2.0 / math.sqrt(N + 1) * np.sin(2 * np.pi * d * j / (N + 1))


def effective_chain(params):
    """
    First-order Hamiltonian of the k = 0 two-flip group without the field
    term, in units of J, on the normalized states Upsilon_j.
    """
    N = params.n_sites
    M = params.group_count
    dx, dy, dz = params.anisotropy
    hop = -(dy + dz)
    matrix = np.diag(np.full(M, -dx * (N - 8.0)))
    matrix[0, 0] = -dx * (N - 4.0)
    off = np.full(M - 1, 2.0 * hop)
    matrix += np.diag(off, 1) + np.diag(off, -1)
    # Distance M + 1 is distance M seen from the other side of the ring.
    matrix[M - 1, M - 1] += 2.0 * hop
    return matrix


def _effective_states(params):
    energies, vectors = linalg.eigh(effective_chain(params))
    # Sign fixed by a positive amplitude on the adjacent pair.
    signs = np.where(vectors[0] < 0, -1.0, 1.0)
    signs[vectors[0] == 0] = 1.0
    return energies, (vectors * signs).T


def perturbative_levels(params):
    """Series coefficients and state amplitudes at ``params.field``."""
    N = params.n_sites
    dx, dy, dz = params.anisotropy
    M = params.group_count
    d = np.arange(1, M + 1)

    closed_form_constant = -dx * (1 - 8.0 / N) + (4.0 / N) * abs(dz + dy) * np.cos(2 * np.pi * d / (N + 1))
    slope = np.full(M, -(1 - 4.0 / N))
    chain_energies, chain_states = _effective_states(params)

    phi0_first = np.zeros(M)
    phi0_first[0] = (dz - dy) * math.sqrt(N) / 4.0
    waves = standing_waves(N)
    overlap = -0.5 * (dz - dy) * math.sqrt(N / (N + 1)) * np.sin(2 * np.pi * d / (N + 1))

    validity = params.perturbative_validity()
    if validity is not Validity.VALID:
        logger.warning(
            'perturbative levels at g=%.4g with max|Delta|=%.4g are %s',
            params.field, params.max_anisotropy, validity.value,
        )
    return PerturbativeLevels(
        n_sites=N,
        field=params.field,
        e0_series=(-1.0, -dx),
        e20d_series=np.column_stack([slope, closed_form_constant]),
        e20d_effective=np.column_stack([slope, chain_energies / N]),
        phi0_zeroth=1.0,
        phi0_first=phi0_first,
        phi20d_zeroth=waves,
        phi20d_effective=chain_states,
        polarized_overlap_first=overlap,
        validity=validity,
    )


def matrix_element_hd0(d, s, params, schedule, variant='closed_form'):
    """
    <psi_20d| H'(s) |psi_0> to leading order in 1/g, with
    H'(s) = -J g'(s) sum_i sx_i.
    """
    _check_variant(variant)
    N = params.n_sites
    M = params.group_count
    if not 1 <= d <= M:
        raise ValueError(f'd must lie in 1..{M}, got {d}')
    dx, dy, dz = params.anisotropy
    g = schedule.field(s)
    ratio = schedule.dg_ds / g
    if variant == 'closed_form':
        amplitude = 2.0 * math.sqrt(N / (N + 1)) * math.sin(2 * math.pi * d / (N + 1))
    else:
        _, states = _effective_states(params)
        amplitude = math.sqrt(N) * states[d - 1, 0]
    return -params.coupling * (dz - dy) * ratio * amplitude


def dense_matrix_element(params, dg_ds, tracking_steps=None):
    """
    |<psi_20d| H' |psi_0>| from the k = 0, z2 = +1 sector at ``params.field``,
    one value per d, with H' = dg_ds * (field operator).
    """
    decomposition = diagonalize_sector(params, 0, 1)
    kwargs = {} if tracking_steps is None else {'tracking_steps': tracking_steps}
    labels = classify_eigenstates(params, decomposition, **kwargs)
    _, field = hamiltonian_terms(params)
    F = project(field, decomposition.basis)
    ground = decomposition.states[:, 0]
    values = {}
    for i, label in enumerate(labels):
        if label.group_index == 2:
            element = np.vdot(decomposition.states[:, i], F @ ground) * dg_ds
            values[label.degeneracy_index] = float(abs(element))
    return np.array([values[d] for d in sorted(values)])


@dataclass(frozen=True)
class PerturbativeComparison:
    """Dense sector energies next to the series at one field."""

    field: float
    e0_dense: float
    e0_series: float
    e20d_dense: np.ndarray
    e20d_closed_form: np.ndarray
    e20d_effective: np.ndarray
    scale: float

    @property
    def e0_residual(self):
        return abs(self.e0_dense - self.e0_series) / self.scale

    def e20d_residual(self, variant='effective'):
        _check_variant(variant)
        series = self.e20d_closed_form if variant == 'closed_form' else self.e20d_effective
        return float(np.max(np.abs(self.e20d_dense - series))) / self.scale


def compare_with_dense(params, tracking_steps=None):
    """Residuals of the series against the k = 0, z2 = +1 sector at ``params.field``."""
    levels = perturbative_levels(params)
    decomposition = diagonalize_sector(params, 0, 1)
    kwargs = {} if tracking_steps is None else {'tracking_steps': tracking_steps}
    labels = classify_eigenstates(params, decomposition, **kwargs)
    two_flip = sorted(
        (label.degeneracy_index, e)
        for e, label in zip(decomposition.energies, labels)
        if label.group_index == 2
    )
    J = params.coupling
    comparison = PerturbativeComparison(
        field=params.field,
        e0_dense=float(decomposition.energies[0]),
        e0_series=levels.e0(J),
        e20d_dense=np.array([e for _, e in two_flip]),
        e20d_closed_form=np.sort(levels.e20d(J, 'closed_form')),
        e20d_effective=levels.e20d(J, 'effective'),
        scale=J * params.n_sites,
    )
    logger.info(
        'g=%.4g: E0 residual %.3e, E20d residual %.3e (closed-form %.3e) per JN',
        params.field, comparison.e0_residual, comparison.e20d_residual('effective'),
        comparison.e20d_residual('closed_form'),
    )
    return comparison


def pe_heisenberg(params, schedule, units=None):
    """
    p_E = hbar^2 (Dz - Dy)^2 ((g0 - g1)/T)^2 N / (2^8 J^2 g1^6),
    flagged by the perturbative validity at g1.
    """
    units = units or UnitsConvention()
    dx, dy, dz = params.anisotropy
    g1 = schedule.g_end
    validity = params.perturbative_validity(g1)
    if validity is not Validity.VALID:
        logger.warning('pe_heisenberg at g1=%.4g is %s', g1, validity.value)
    if schedule.is_stationary:
        bound = 0.0
    elif g1 == 0:
        bound = math.nan
    else:
        rate = (schedule.g_start - g1) / schedule.duration
        bound = (
            units.hbar ** 2 * (dz - dy) ** 2 * rate ** 2 * params.n_sites
            / (2 ** 8 * params.coupling ** 2 * g1 ** 6)
        )
    return RegimeEstimate('heisenberg', float(bound), validity, {'g1_large': validity})
