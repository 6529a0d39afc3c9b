"""
Domain types of the cyclic transverse-field Ising chain.
"""
import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from apps.core.models import Validity


class Sector(str, Enum):
    """Fermion-number parity subspace."""

    EVEN = 'even'
    ODD = 'odd'

    @property
    def parity(self):
        return 0 if self is Sector.EVEN else 1


@dataclass(frozen=True)
class IsingParams:
    """Chain size N, coupling J and dimensionless field g."""

    n_sites: int
    coupling: float = 1.0
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
    def pair_count(self):
        """Number of momentum pairs (n, N-n), n = 1..(N-1)/2."""
        return (self.n_sites - 1) // 2

    def at_field(self, g):
        return replace(self, field=float(g))


@dataclass(frozen=True)
class FermionMode:
    """A momentum mode k of one parity sector."""

    index: int
    n_sites: int
    sector: Sector

    @property
    def momentum(self):
        return 2 * math.pi * self.index / self.n_sites

    @property
    def partner(self):
        return (self.n_sites - self.index) % self.n_sites

    @property
    def is_paired(self):
        return self.partner != self.index


@dataclass(frozen=True)
class Level:
    """One many-body level: energy, occupied mode indices and sector."""

    energy: float
    occupation: tuple
    sector: Sector

    @property
    def occupation_label(self):
        return ' '.join(str(k) for k in self.occupation) or '-'


@dataclass(frozen=True)
class SectorSpectrum:
    """
    Single-fermion energies of a sector.

    ``single_energies`` are the dimensionless Lambda_k (index k); energies of
    many-body levels are J * sum_k Lambda_k (n_k - 1/2) + additive_offset.
    """

    sector: Sector
    coupling: float
    single_energies: np.ndarray
    additive_offset: float
    ground_occupation: tuple = ()

    def energy(self, occupation):
        occupied = np.zeros(len(self.single_energies))
        occupied[list(occupation)] = 1.0
        return float(
            self.coupling * np.sum(self.single_energies * (occupied - 0.5))
            + self.additive_offset
        )

    @property
    def ground_energy(self):
        return self.energy(self.ground_occupation)

    def allows(self, occupation):
        return len(occupation) % 2 == self.sector.parity


@dataclass
class ModeAmplitudes:
    """
    Two-level amplitudes of the momentum pairs.

    Row ``i`` holds (a_n, b_n) for pair ``modes[i]`` in the basis
    {empty pair, doubly occupied pair}; ``s`` is the schedule position.
    """

    modes: np.ndarray
    amplitudes: np.ndarray
    s: float = 1.0

    def norms(self):
        return np.sum(np.abs(self.amplitudes) ** 2, axis=1)

    def max_norm_drift(self):
        return float(np.max(np.abs(self.norms() - 1.0))) if len(self.modes) else 0.0


@dataclass(frozen=True)
class RegimeEstimate:
    """Closed-form p_E estimate of one regime with its validity outcome."""

    regime: str
    p_e_bound: float
    validity: Validity
    conditions: dict = field(default_factory=dict)

    @property
    def is_valid(self):
        return self.validity is Validity.VALID
