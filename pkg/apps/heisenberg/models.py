"""
Domain types of the anisotropic Heisenberg chain.
"""
import math
from dataclasses import dataclass, field, replace

import numpy as np

from apps.core.models import Validity

# Perturbative results need g at least this many times max |Delta|.
PERTURBATIVE_RATIO = 5.0


@dataclass(frozen=True)
class HeisenbergParams:
    """Chain size N, coupling J, anisotropies (Dx, Dy, Dz) and field g."""

    n_sites: int
    coupling: float = 1.0
    delta_x: float = 0.0
    delta_y: float = 0.0
    delta_z: float = 1.0
    field: float = 0.0

    def __post_init__(self):
        if not isinstance(self.n_sites, (int, np.integer)) or isinstance(self.n_sites, bool):
            raise ValueError('n_sites must be an integer')
        if self.n_sites < 3 or self.n_sites % 2 == 0:
            raise ValueError(f'n_sites must be odd and >= 3, got {self.n_sites}')
        if not self.coupling > 0:
            raise ValueError('coupling must be positive')
        if not (math.isfinite(self.field) and self.field >= 0):
            raise ValueError('field must be a nonnegative finite number')

    @property
    def anisotropy(self):
        return (self.delta_x, self.delta_y, self.delta_z)

    @property
    def max_anisotropy(self):
        return max(abs(d) for d in self.anisotropy)

    @property
    def group_count(self):
        """Number of two-flip standing waves d = 1..(N-1)/2."""
        return (self.n_sites - 1) // 2

    def at_field(self, g):
        return replace(self, field=float(g))

    def perturbative_validity(self, g=None):
        """Whether g >> max |Delta| holds (ratio >= 5 valid, >= 1 marginal)."""
        g = self.field if g is None else g
        scale = max(self.max_anisotropy, 1e-300)
        ratio = g / scale
        if ratio >= PERTURBATIVE_RATIO:
            return Validity.VALID
        if ratio > 1.0:
            return Validity.MARGINAL
        return Validity.INVALID


@dataclass(frozen=True)
class SymmetryLabels:
    """Z2 parity, momentum index k, group index n and degeneracy index d."""

    z2: int
    momentum_index: int
    group_index: int
    degeneracy_index: int
    flagged: bool = False

    @property
    def obeys_parity_rule(self):
        return self.z2 == (1 if self.group_index % 2 == 0 else -1)


@dataclass
class EigenDecomposition:
    """
    Eigenpairs of one (k, z2) sector.

    ``states`` holds coordinate columns in ``basis`` (a sparse 2^N x dim
    matrix); ``labels`` is filled by classification.
    """

    momentum_index: int
    z2: int
    field: float
    energies: np.ndarray
    states: np.ndarray
    basis: object
    labels: list = field(default_factory=list)

    @property
    def dim(self):
        return len(self.energies)

    def full_state(self, i):
        """Eigenvector ``i`` expanded in the product z-basis."""
        return np.asarray(self.basis @ self.states[:, i]).ravel()


@dataclass(frozen=True)
class PerturbativeLevels:
    """
    Large-g expansion of the ground state and the two-flip group.

    Series are (coefficient of g, constant) pairs of E/(J N). State
    coefficients are given on the normalized two-flip states
    Upsilon_j = N^(-1/2) sum_i |i, i+j>, j = 1..(N-1)/2, with |->> the
    fully polarized state.
    """

    n_sites: int
    field: float
    e0_series: tuple
    e20d_series: np.ndarray
    e20d_effective: np.ndarray
    phi0_zeroth: float
    phi0_first: np.ndarray
    phi20d_zeroth: np.ndarray
    phi20d_effective: np.ndarray
    polarized_overlap_first: np.ndarray
    validity: Validity

    def e0(self, coupling=1.0):
        slope, constant = self.e0_series
        return coupling * self.n_sites * (slope * self.field + constant)

    def e20d(self, coupling=1.0, variant='closed_form'):
        series = self.e20d_series if variant == 'closed_form' else self.e20d_effective
        return coupling * self.n_sites * (series[:, 0] * self.field + series[:, 1])
