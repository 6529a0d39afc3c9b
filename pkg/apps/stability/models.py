"""
Static symmetry-breaking perturbations V = J sum_j eps_j (n_j . sigma_j).
"""
import math
from dataclasses import dataclass, field

import numpy as np

STRENGTH_CONVENTIONS = ('xy', 'field')


@dataclass(frozen=True)
class PerturbationSpec:
    """Per-site strengths eps_j and unit directions n_j."""

    strengths: np.ndarray
    directions: np.ndarray

    def __post_init__(self):
        strengths = np.asarray(self.strengths, dtype=float)
        directions = np.asarray(self.directions, dtype=float)
        if strengths.ndim != 1 or directions.shape != (len(strengths), 3):
            raise ValueError('expected N strengths and an N x 3 array of directions')
        norms = np.linalg.norm(directions, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-12):
            raise ValueError('directions must be unit vectors')
        object.__setattr__(self, 'strengths', strengths)
        object.__setattr__(self, 'directions', directions)

    @property
    def n_sites(self):
        return len(self.strengths)

    @classmethod
    def uniform(cls, n_sites, strength, direction=(1.0, 0.0, 0.0)):
        direction = np.asarray(direction, dtype=float)
        direction = direction / np.linalg.norm(direction)
        return cls(np.full(n_sites, float(strength)), np.tile(direction, (n_sites, 1)))

    @classmethod
    def zero(cls, n_sites):
        return cls.uniform(n_sites, 0.0)

    @classmethod
    def random(cls, n_sites, rng, strength=1.0):
        """Isotropic random directions with strengths uniform in [0, strength]."""
        directions = rng.normal(size=(n_sites, 3))
        directions /= np.linalg.norm(directions, axis=1, keepdims=True)
        return cls(rng.uniform(0.0, strength, size=n_sites), directions)

    def transverse_weights(self, convention='xy'):
        """
        |n_a + i n_b|^2 per site: (x, y) components for ``xy``, or the
        components (y, z) transverse to the sx field for ``field``.
        """
        if convention not in STRENGTH_CONVENTIONS:
            raise ValueError(f'unknown convention {convention!r}; choose from {STRENGTH_CONVENTIONS}')
        a, b = (0, 1) if convention == 'xy' else (1, 2)
        return self.directions[:, a] ** 2 + self.directions[:, b] ** 2

    def effective_strength(self, convention='xy'):
        """eps = sqrt((1/N) sum_j eps_j^2 |n_a + i n_b|^2)."""
        weights = self.transverse_weights(convention)
        return math.sqrt(float(np.mean(self.strengths ** 2 * weights)))

    def scaled(self, factor):
        return PerturbationSpec(self.strengths * factor, self.directions)


@dataclass
class PerturbedSweepResult:
    """Outcome of a sweep under H(t) + V, measured against the unperturbed H(g1)."""

    epsilon: float
    heating_ratio: float
    ground_weight: float
    first_excited_weight: float
    higher_weight: float
    flags: list = field(default_factory=list)


@dataclass(frozen=True)
class HeatingLaw:
    """Fit excess = constant * eps^slope of the perturbation-induced heating."""

    slope: float
    constant: float
    epsilons: tuple
    excess: tuple
    flags: tuple = ()
