"""
Parameter scans over N, rate, g1 and perturbation strength.

Every scan returns a list of dict rows ordered by the scanned value; grid
points run through ``parallel_map`` so the worker count never changes the
result.
"""
import logging
import math
import time
from dataclasses import replace
from functools import partial

import numpy as np
from scipy.optimize import brentq

from apps.core.exceptions import RootBracketError
from apps.core.models import FieldSchedule, UnitsConvention
from apps.heisenberg.dynamics import tdse_sweep
from apps.heisenberg.perturbative import pe_heisenberg
from apps.ising.adiabatic import channel_bounds, duration_for_target, pe_sum, regime_estimates
from apps.ising.dynamics import pair_energies, spectrum_width, sweep_report
from apps.stability.models import PerturbationSpec
from apps.stability.perturbations import (
    fit_heating_law,
    heisenberg_perturbation_bound,
    heisenberg_perturbed_sweep,
    ising_perturbed_sweep,
)

from .models import RateSolution
from .workers import parallel_map

logger = logging.getLogger(__name__)

SWEEPS = {
    'ising': sweep_report,
    'heisenberg': tdse_sweep,
}

AXES = ('N', 'rate', 'g1', 'epsilon')

# A bracket that misses is widened by one e-fold per side at most this often.
MAX_BRACKET_WIDENINGS = 4


def run_sweep(model, params, schedule, opts, units=None):
    """ExcitationReport of one sweep of ``model``."""
    try:
        sweep = SWEEPS[model]
    except KeyError:
        raise ValueError(f'unknown model {model!r}; choose from {tuple(SWEEPS)}')
    return sweep(params, schedule, opts, units)


def _sweep_point(model, params, opts, units, schedule):
    return run_sweep(model, params, schedule, opts, units)


def bound_columns(model, params, schedule, units=None):
    """Closed-form estimates of one sweep as flat CSV columns."""
    if model == 'heisenberg':
        estimate = pe_heisenberg(params, schedule, units)
        return {'pe_heisenberg': estimate.p_e_bound, 'pe_heisenberg_validity': estimate.validity.value}
    columns = {'pe_sum': pe_sum(params, schedule, units)}
    for estimate in regime_estimates(params, schedule, units):
        name = estimate.regime.lower()
        columns[f'pe_{name}'] = estimate.p_e_bound
        columns[f'{name}_validity'] = estimate.validity.value
    return columns


def adiabatic_heating(params, schedule, units=None):
    """Heating ratio predicted by the per-channel bounds: sum_n p_n E_n / width."""
    bounds = channel_bounds(params, schedule, units)
    energies = pair_energies(params, schedule.g_end)
    mean = sum(bounds[n] * e for n, e in zip(sorted(bounds), energies))
    return mean / spectrum_width(params, schedule.g_end)


def _report_columns(report):
    return {
        'p_e': report.p_ground_loss,
        'p_total': report.p_total,
        'heating_ratio': report.heating_ratio,
        'energy_variance': report.energy_variance,
    }


def _sweeps(model, params, schedules, opts, units, workers):
    return parallel_map(partial(_sweep_point, model, params, opts, units), schedules, workers)


def scan_g1(model, params, g0, g1_values, rate, opts, units=None, workers=1, with_bounds=False):
    """p_E at the end of sweeps g0 -> g1 at a fixed rate, one row per g1."""
    values = []
    for g1 in sorted(set(g1_values)):
        if g1 == g0:
            logger.warning('skipping g1=%.4g: it equals g0', g1)
            continue
        values.append(g1)
    schedules = [FieldSchedule.from_rate(g0, g1, rate) for g1 in values]
    rows = []
    for schedule, report in zip(schedules, _sweeps(model, params, schedules, opts, units, workers)):
        row = {'g1': schedule.g_end, 'duration': schedule.duration, **_report_columns(report)}
        if with_bounds:
            row.update(bound_columns(model, params, schedule, units))
        rows.append(row)
    return rows


def scan_rate(model, params, g0, g1, rates, opts, units=None, workers=1):
    """Sweeps g0 -> g1 at each rate, with heating ratio and energy variance."""
    schedules = [FieldSchedule.from_rate(g0, g1, rate) for rate in sorted(set(rates))]
    rows = []
    for schedule, report in zip(schedules, _sweeps(model, params, schedules, opts, units, workers)):
        row = {'rate': schedule.rate, 'duration': schedule.duration, **_report_columns(report)}
        if model == 'ising':
            row['adiabatic_heating'] = adiabatic_heating(params, schedule, units)
        row.update(bound_columns(model, params, schedule, units))
        rows.append(row)
    return rows


def _n_point(model, params, schedule, opts, units, n_sites):
    return run_sweep(model, replace(params, n_sites=n_sites), schedule, opts, units)


def scan_n(model, params, n_values, schedule, opts, units=None, workers=1):
    """The same schedule applied to chains of every size in ``n_values``."""
    ns = sorted(set(int(n) for n in n_values))
    reports = parallel_map(partial(_n_point, model, params, schedule, opts, units), ns, workers)
    rows = []
    for n, report in zip(ns, reports):
        row = {'n': n, 'rate': schedule.rate, **_report_columns(report)}
        row.update(bound_columns(model, replace(params, n_sites=n), schedule, units))
        rows.append(row)
    return rows


def _seed_rate(params, g0, g1, target, units):
    """|rate| at which the matching closed form equals the target."""
    regime = 'R3' if g1 <= 1.0 else 'R1'
    duration = duration_for_target(target, regime, params, g0, g1, units, override=True)
    return abs(g1 - g0) / duration


def tune_rate(params, g0, g1, target, opts, units=None, rtol=1e-3):
    """
    Ising sweep rate giving p_E = ``target`` within relative ``rtol``.

    Root finding runs on log|rate|; the bracket starts one e-fold around the
    closed-form estimate and widens when the sign change is missing.
    """
    units = units or UnitsConvention()
    if g1 == g0:
        raise ValueError('a tuned sweep needs distinct endpoints')
    N = params.n_sites
    sign = math.copysign(1.0, g1 - g0)
    cache = {}

    def excess(log_rate):
        if log_rate not in cache:
            schedule = FieldSchedule.from_rate(g0, g1, sign * math.exp(log_rate))
            cache[log_rate] = sweep_report(params, schedule, opts, units).p_ground_loss
        return cache[log_rate] / target - 1.0

    centre = math.log(_seed_rate(params, g0, g1, target, units))
    lo, hi = centre - 1.0, centre + 1.0
    for _ in range(MAX_BRACKET_WIDENINGS):
        below, above = excess(lo) < 0, excess(hi) > 0
        if below and above:
            break
        if not below:
            lo -= 1.0
        if not above:
            hi += 1.0
    else:
        if not (excess(lo) < 0 < excess(hi)):
            raise RootBracketError(
                f'N={N}: p_E={target} not bracketed by rates '
                f'[{math.exp(lo):.4g}, {math.exp(hi):.4g}]',
                key=N,
            )
    # p_E ~ rate^2, so a log-rate tolerance of rtol/4 keeps p_E within rtol/2.
    root = brentq(excess, lo, hi, xtol=rtol / 4.0)
    rate = sign * math.exp(root)
    p_e = target * (1.0 + excess(root))
    return RateSolution(N, rate, abs(g1 - g0) / abs(rate), p_e, len(cache))


def _tune_point(params, g0, g1, target, opts, units, n_sites):
    try:
        return tune_rate(replace(params, n_sites=n_sites), g0, g1, target, opts, units)
    except RootBracketError as exc:
        logger.error('%s', exc)
        return str(exc)


def fit_power_law(x, y):
    """(exponent, coefficient) of y = coefficient * x^exponent in log-log space."""
    if len(x) < 2:
        raise ValueError('a power law needs at least two points')
    exponent, intercept = np.polyfit(np.log(x), np.log(y), 1)
    return float(exponent), float(math.exp(intercept))


def duration_scan(params, n_values, g0, g1, target, opts, units=None, workers=1):
    """
    Durations reaching p_E = ``target`` for every N.

    Returns (rows, fit, failures): ``fit`` is the (exponent, coefficient) of
    T against N or None with fewer than two solutions; ``failures`` maps N
    to the bracketing error.
    """
    units = units or UnitsConvention()
    started = time.perf_counter()
    ns = sorted(set(int(n) for n in n_values))
    outcomes = parallel_map(partial(_tune_point, params, g0, g1, target, opts, units), ns, workers)
    rows, failures = [], {}
    for n, outcome in zip(ns, outcomes):
        if isinstance(outcome, str):
            failures[n] = outcome
            continue
        analytic = duration_for_target(target, 'R3', replace(params, n_sites=n), g0, g1, units, override=True)
        rows.append({
            'n': n,
            'rate': outcome.rate,
            'duration': outcome.duration,
            'p_e': outcome.p_e,
            'duration_per_n2': outcome.duration_per_n_squared,
            'analytic_duration': analytic,
            'evaluations': outcome.evaluations,
        })
    fit = None
    if len(rows) >= 2:
        fit = fit_power_law([r['n'] for r in rows], [r['duration'] for r in rows])
    logger.info(
        'duration scan over %d sizes: fit %s, %d failures in %.2fs',
        len(ns), fit, len(failures), time.perf_counter() - started,
    )
    return rows, fit, failures


def _epsilon_point(params, schedule, opts, units, epsilon):
    return ising_perturbed_sweep(params, schedule, epsilon, opts, units)


def _heisenberg_epsilon_point(params, schedule, opts, units, spec):
    return heisenberg_perturbed_sweep(params, schedule, spec, opts, units)


def scan_epsilon(model, params, schedule, epsilons, opts, units=None, workers=1, seed=0):
    """
    Response to a static perturbation of growing strength.

    Ising: eps sz on one site, heating in excess of eps = 0 and its power-law
    fit. Heisenberg: one random direction pattern (from ``seed``) rescaled to
    each strength, numeric p_V next to the closed-form bound.
    Returns (rows, fit); ``fit`` is a HeatingLaw or None.
    """
    epsilons = sorted(set(float(e) for e in epsilons))
    if model == 'ising':
        values = [0.0] + [e for e in epsilons if e > 0]
        results = parallel_map(partial(_epsilon_point, params, schedule, opts, units), values, workers)
        baseline = results[0]
        rows = [
            {
                'epsilon': r.epsilon,
                'heating_ratio': r.heating_ratio,
                'excess_heating': r.heating_ratio - baseline.heating_ratio,
                'ground_weight': r.ground_weight,
                'first_excited_weight': r.first_excited_weight,
                'higher_weight': r.higher_weight,
            }
            for r in results
        ]
        fit = fit_heating_law(baseline, results[1:]) if len(results) > 2 else None
        return rows, fit
    if model != 'heisenberg':
        raise ValueError(f'unknown model {model!r}; choose from {tuple(SWEEPS)}')
    if min(epsilons) <= 0:
        raise ValueError('perturbation strengths must be positive')
    pattern = PerturbationSpec.random(params.n_sites, np.random.default_rng(seed))
    unit = pattern.effective_strength('field')
    specs = [pattern.scaled(e / unit) for e in epsilons]
    values = parallel_map(partial(_heisenberg_epsilon_point, params, schedule, opts, units), specs, workers)
    rows = []
    for eps, spec, p_v in zip(epsilons, specs, values):
        bound = heisenberg_perturbation_bound(
            spec, schedule.g_start, convention='field', anisotropy=params.max_anisotropy,
        )
        rows.append({
            'epsilon': eps,
            'p_v': p_v,
            'bound': bound.p_e_bound,
            'bound_validity': bound.validity.value,
        })
    return rows, None
