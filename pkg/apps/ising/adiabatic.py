"""
Adiabatic-Approximation estimates for Ising sweeps.

Per-channel bounds p_{0->n} <~ hbar^2 / (16 J^2 T^2) max_s |theta'_n / Lambda_n|^2,
their sum, the closed forms of the three sweep regimes and their inversion
for the duration that reaches a target p_E.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from apps.core.exceptions import RegimeValidityError
from apps.core.models import UnitsConvention, Validity

from .models import IsingParams, RegimeEstimate
from .spectrum import lambda_even

logger = logging.getLogger(__name__)

REGIMES = ('R1', 'R2', 'R3')
S_GRID_POINTS = 2001


def theta_prime(k, g, N, dg_ds):
    """theta'_k(s) = (dg/ds) sin(q) / (1 + g^2 + 2 g cos q), q = 2 pi k / N."""
    q = 2 * np.pi * np.asarray(k) / N
    return dg_ds * np.sin(q) / (1.0 + g * g + 2.0 * g * np.cos(q))


def channel_matrix_element(n, s, params, schedule):
    """<n(s)|H'(s)|vac(s)> = -J Lambda_n theta'_n, in units of J."""
    g = schedule.field(s)
    N = params.n_sites
    return -params.coupling * lambda_even(n, g, N) * theta_prime(n, g, N, schedule.dg_ds)


@dataclass(frozen=True)
class TransitionChannel:
    """Adiabatic coupling data of the pair channel |n>."""

    n: int
    params: IsingParams
    schedule: object
    units: UnitsConvention = UnitsConvention()

    def coupling(self, s):
        """A_{n0}(s) = theta'_n(s) / 2 (dimensionless)."""
        g = self.schedule.field(s)
        return 0.5 * theta_prime(self.n, g, self.params.n_sites, self.schedule.dg_ds)

    def angular_gap(self, s):
        """omega_{n0}(s) = 2 J Lambda_n / hbar."""
        g = self.schedule.field(s)
        return 2.0 * self.params.coupling * lambda_even(self.n, g, self.params.n_sites) / self.units.hbar

    def matrix_element(self, s):
        return channel_matrix_element(self.n, s, self.params, self.schedule)

    def adiabatic_ratio(self, s):
        return np.abs(self.coupling(s) / self.angular_gap(s))


def _ratio_squared(n, s, params, schedule):
    g = schedule.field(s)
    N = params.n_sites
    return (theta_prime(n, g, N, schedule.dg_ds) / lambda_even(n, g, N)) ** 2


def max_ratio_squared(n, params, schedule):
    """
    max over s of |theta'_n / Lambda_n|^2 for every n in ``n``.

    Uniform grid in s with a bounded refinement around each grid maximum.
    """
    n = np.atleast_1d(n)
    s = np.linspace(0.0, 1.0, S_GRID_POINTS)
    values = _ratio_squared(n[:, None], s[None, :], params, schedule)
    best = values.max(axis=1)
    for row, i in enumerate(values.argmax(axis=1)):
        lo, hi = s[max(i - 1, 0)], s[min(i + 1, S_GRID_POINTS - 1)]
        result = minimize_scalar(
            lambda x: -_ratio_squared(n[row], x, params, schedule),
            bounds=(lo, hi), method='bounded', options={'xatol': 1e-10},
        )
        best[row] = max(best[row], -result.fun)
    return best


def _prefactor(params, schedule, units):
    return units.hbar ** 2 / (16.0 * params.coupling ** 2 * schedule.duration ** 2)


def p0n_bound(n, params, schedule, units=None):
    """Adiabatic-Approximation estimate of p_{0->n}; ``n`` may be an array."""
    units = units or UnitsConvention()
    if schedule.is_stationary:
        return np.zeros(np.shape(n)) if np.ndim(n) else 0.0
    bound = _prefactor(params, schedule, units) * max_ratio_squared(n, params, schedule)
    return bound if np.ndim(n) else float(bound[0])


def channel_bounds(params, schedule, units=None):
    """Map n -> p0n_bound for every pair channel."""
    n = np.arange(1, params.pair_count + 1)
    return {int(i): float(b) for i, b in zip(n, p0n_bound(n, params, schedule, units))}


def pe_sum(params, schedule, units=None):
    """Sum of the per-channel bounds."""
    n = np.arange(1, params.pair_count + 1)
    return float(np.sum(p0n_bound(n, params, schedule, units)))


def regime_validity(regime, g0, g1, N):
    """Validity outcome and the evaluated conditions of a regime at (g0, g1, N)."""
    distance = N * (g1 - 1.0)
    conditions = {
        'g0_large': Validity.much_greater(g0),
        'g1_above_critical': Validity.holds(g1 > 1.0),
    }
    if regime == 'R1':
        conditions['far_from_critical'] = Validity.much_greater(distance)
    elif regime == 'R2':
        conditions['near_critical'] = Validity.much_less(abs(distance)) if g1 > 1.0 else Validity.INVALID
    elif regime == 'R3':
        conditions = {
            'g0_large': conditions['g0_large'],
            'g1_at_or_below_critical': Validity.holds(g1 <= 1.0),
        }
    else:
        raise ValueError(f'unknown regime {regime!r}; choose from {REGIMES}')
    return Validity.combine(*conditions.values()), conditions


def _regime_coefficient(regime, params, g1, units):
    """p_E * T^2 / (g0 - g1)^2 of a regime."""
    N = params.n_sites
    scale = units.hbar ** 2 / params.coupling ** 2
    if regime == 'R1':
        return scale * N / (2 ** 8 * (g1 * g1 - 1.0) ** 3)
    if regime == 'R2':
        return scale * (4.0 - 3.0 * g1) * N ** 4 / (2 ** 6 * math.pi ** 4)
    return scale * N ** 4 / (2 ** 6 * math.pi ** 4)


def _check(regime, validity, conditions, override):
    if validity is Validity.INVALID and not override:
        failed = sorted(k for k, v in conditions.items() if v is Validity.INVALID)
        raise RegimeValidityError(f'{regime} is not valid here: {", ".join(failed)}')
    if validity is not Validity.VALID:
        logger.warning('%s evaluated with validity %s: %s', regime, validity.value, conditions)


def pe_regime(regime, params, schedule, units=None, override=False):
    """Closed-form p_E of ``regime``, evaluated verbatim."""
    units = units or UnitsConvention()
    g0, g1 = schedule.g_start, schedule.g_end
    validity, conditions = regime_validity(regime, g0, g1, params.n_sites)
    _check(regime, validity, conditions, override)
    if regime == 'R1' and g1 <= 1.0:
        # The R1 closed form diverges at g1 = 1 and changes sign below it.
        bound = math.nan
    else:
        coefficient = _regime_coefficient(regime, params, g1, units)
        bound = coefficient * (g0 - g1) ** 2 / schedule.duration ** 2 if coefficient >= 0 else math.nan
    return RegimeEstimate(regime, float(bound), validity, conditions)


def pe_regime1(params, schedule, units=None, override=False):
    return pe_regime('R1', params, schedule, units, override)


def pe_regime2(params, schedule, units=None, override=False):
    return pe_regime('R2', params, schedule, units, override)


def pe_regime3(params, schedule, units=None, override=False):
    return pe_regime('R3', params, schedule, units, override)


def regime_estimates(params, schedule, units=None):
    """All three regimes evaluated with their validity flags."""
    return [pe_regime(r, params, schedule, units, override=True) for r in REGIMES]


def duration_for_target(p_target, regime, params, g0, g1, units=None, override=False):
    """Duration T at which the closed form of ``regime`` equals ``p_target``."""
    if not 0.0 < p_target < 1.0:
        raise ValueError('p_target must lie in (0, 1)')
    units = units or UnitsConvention()
    validity, conditions = regime_validity(regime, g0, g1, params.n_sites)
    _check(regime, validity, conditions, override)
    coefficient = _regime_coefficient(regime, params, g1, units) if (regime != 'R1' or g1 > 1.0) else 0.0
    if not coefficient > 0:
        raise RegimeValidityError(f'{regime} gives no positive estimate at g1={g1}')
    return abs(g0 - g1) * math.sqrt(coefficient / p_target)
