"""
Free-fermion spectrum of the cyclic transverse-field Ising chain.

After the Jordan-Wigner transformation the chain splits into the even and
odd fermion-parity sectors. Each is a sum of independent modes k = 0..N-1
with single-fermion energies J * Lambda_k; many-body levels occupy a subset
of modes whose size has the parity of the sector.
"""
import heapq
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import islice

import numpy as np
from scipy.optimize import minimize_scalar

from .models import FermionMode, IsingParams, Level, Sector, SectorSpectrum

logger = logging.getLogger(__name__)

# Oracle calibration point for the additive constant.
CALIBRATION_SITES = 5
CALIBRATION_FIELD = 0.7


def _folded_cos(k, N):
    """cos(2 pi k / N) evaluated on min(k, N - k) so that k and N - k agree bit for bit."""
    k = np.asarray(k)
    return np.cos(2 * np.pi * np.minimum(k % N, (N - k) % N) / N)


def lambda_even(k, g, N):
    """Lambda_k = 2 sqrt(1 + g^2 + 2 g cos(2 pi k / N)); ``k`` may be an array."""
    c = _folded_cos(k, N)
    # Round-off can dip below zero next to the critical point.
    value = 2.0 * np.sqrt(np.maximum(1.0 + g * g + 2.0 * g * c, 0.0))
    return value if value.ndim else float(value)


def lambda_odd(k, g, N):
    """Odd-sector energies: 2 (g - 1) for k = 0, else 2 sqrt(1 + g^2 - 2 g cos(2 pi k / N))."""
    k = np.asarray(k)
    c = _folded_cos(k, N)
    value = 2.0 * np.sqrt(np.maximum(1.0 + g * g - 2.0 * g * c, 0.0))
    value = np.where(k == 0, 2.0 * (g - 1.0), value)
    return value if value.ndim else float(value)


def bogoliubov_angle(k, g, N):
    """theta_k = atan2(sin(2 pi k / N), g + cos(2 pi k / N))."""
    q = 2 * np.pi * np.asarray(k) / N
    return np.arctan2(np.sin(q), g + np.cos(q))


def bogoliubov_angle_derivative(k, g, N):
    """d theta_k / dg = -sin(q) / (1 + g^2 + 2 g cos q)."""
    q = 2 * np.pi * np.asarray(k) / N
    return -np.sin(q) / (1.0 + g * g + 2.0 * g * np.cos(q))


def sector_modes(params, sector):
    """The momentum modes of a sector, k = 0..N-1."""
    return [FermionMode(k, params.n_sites, Sector(sector)) for k in range(params.n_sites)]


def single_energies(params, sector):
    k = np.arange(params.n_sites)
    if Sector(sector) is Sector.EVEN:
        return lambda_even(k, params.field, params.n_sites)
    return np.asarray(lambda_odd(k, params.field, params.n_sites), dtype=float)


def _ground_occupation(energies, sector):
    """Occupy every negative mode, then fix the parity at least cost."""
    occupied = {int(k) for k in np.flatnonzero(energies < 0)}
    if len(occupied) % 2 != sector.parity:
        cheapest = int(np.argmin(np.abs(energies)))
        occupied ^= {cheapest}
    return tuple(sorted(occupied))


@lru_cache(maxsize=None)
def calibrate_offset(sector):
    """
    Additive constant of a sector, fixed against the dense oracle.

    The lowest free-fermion level of the sector is matched to the lowest
    dense eigenvalue of the same Z2 block at one calibration point.
    """
    from .oracle import dense_sector_spectrum

    sector = Sector(sector)
    params = IsingParams(CALIBRATION_SITES, coupling=1.0, field=CALIBRATION_FIELD)
    energies = single_energies(params, sector)
    occupation = _ground_occupation(energies, sector)
    occupied = np.zeros(len(energies))
    occupied[list(occupation)] = 1.0
    free = float(np.sum(energies * (occupied - 0.5)))
    offset = float(dense_sector_spectrum(params.n_sites, params.field, sector)[0]) - free
    logger.debug('%s sector offset calibrated to %.3e J', sector.value, offset)
    return offset


def sector_spectrum(params, sector):
    """Single-fermion energies, offset and ground occupation of a sector."""
    sector = Sector(sector)
    energies = single_energies(params, sector)
    return SectorSpectrum(
        sector=sector,
        coupling=params.coupling,
        single_energies=energies,
        additive_offset=calibrate_offset(sector) * params.coupling,
        ground_occupation=_ground_occupation(energies, sector),
    )


def _sector_levels(spectrum):
    """Yield the levels of one sector in ascending energy order."""
    energies = spectrum.single_energies
    base = set(int(k) for k in np.flatnonzero(energies < 0))
    costs = spectrum.coupling * np.abs(energies)
    order = np.argsort(costs, kind='stable')
    sorted_costs = costs[order]
    base_energy = spectrum.energy(tuple(sorted(base)))
    n_modes = len(order)

    def emit(flips, extra):
        occupation = base.symmetric_difference(int(order[i]) for i in flips)
        if len(occupation) % 2 == spectrum.sector.parity:
            return Level(base_energy + extra, tuple(sorted(occupation)), spectrum.sector)
        return None

    level = emit((), 0.0)
    if level is not None:
        yield level
    if n_modes == 0:
        return
    # k-smallest subset sums: extend with the next index or replace the last one.
    heap = [(float(sorted_costs[0]), (0,))]
    while heap:
        extra, flips = heapq.heappop(heap)
        level = emit(flips, extra)
        if level is not None:
            yield level
        last = flips[-1]
        if last + 1 < n_modes:
            nxt = float(sorted_costs[last + 1])
            heapq.heappush(heap, (extra + nxt, flips + (last + 1,)))
            heapq.heappush(heap, (extra - float(sorted_costs[last]) + nxt, flips[:-1] + (last + 1,)))


def enumerate_levels(params, max_levels):
    """Lowest ``max_levels`` many-body levels across both sectors, ascending."""
    total = 2 ** params.n_sites
    if max_levels > total:
        raise ValueError(f'max_levels={max_levels} exceeds the dimension 2^N={total}')
    streams = [_sector_levels(sector_spectrum(params, s)) for s in Sector]
    merged = heapq.merge(*streams, key=lambda level: level.energy)
    return list(islice(merged, max_levels))


def all_levels(params):
    """Every many-body energy of the chain, sorted."""
    return np.array([level.energy for level in enumerate_levels(params, 2 ** params.n_sites)])


@dataclass(frozen=True)
class GapEstimate:
    """Exact even/odd sector gap and its closed asymptotic form."""

    exact: float
    asymptotic: float

    @property
    def relative_deviation(self):
        return abs(self.asymptotic - self.exact) / abs(self.exact)


def asymptotic_gap(params):
    """J ((g - 1) + sqrt((g - 1)^2 + g (pi / N)^2))."""
    g = params.field
    delta = g - 1.0
    return params.coupling * (delta + math.sqrt(delta * delta + g * (math.pi / params.n_sites) ** 2))


def critical_gap(N, coupling=1.0):
    """Exact first gap at g = 1: 2 J tan(pi / 4N)."""
    return 2.0 * coupling * math.tan(math.pi / (4 * N))


def first_gap(params):
    """Energy of the lowest odd-sector level above the even-sector vacuum."""
    even = sector_spectrum(params, Sector.EVEN).ground_energy
    odd = sector_spectrum(params, Sector.ODD).ground_energy
    return GapEstimate(exact=odd - even, asymptotic=asymptotic_gap(params))


def two_fermion_gaps(N, g, coupling=1.0):
    """Excitation energies 2 J Lambda_n(g) of the pair states, n = 1..(N-1)/2."""
    n = np.arange(1, (N - 1) // 2 + 1)
    return 2.0 * coupling * lambda_even(n, g, N)


def min_two_fermion_gap(N, g_range=(0.5, 1.5), coupling=1.0, grid_points=2001):
    """Minimum over g in ``g_range`` and n of 2 J Lambda_n(g); returns (g_min, gap)."""
    IsingParams(N, coupling)
    lo, hi = g_range
    if not lo <= 1.0 <= hi:
        raise ValueError('g_range must contain the critical field g = 1')

    def lowest(g):
        return float(np.min(two_fermion_gaps(N, g, coupling)))

    grid = np.linspace(lo, hi, grid_points)
    values = np.array([lowest(g) for g in grid])
    i = int(np.argmin(values))
    bounds = (grid[max(i - 1, 0)], grid[min(i + 1, grid_points - 1)])
    result = minimize_scalar(lowest, bounds=bounds, method='bounded', options={'xatol': 1e-12})
    if result.fun < values[i]:
        return float(result.x), float(result.fun)
    return float(grid[i]), float(values[i])
