"""
Data behind each figure, regenerated deterministically.

Every figure writes its tables plus one ``<figure>.manifest.json`` into the
output directory. Parameters are fixed per figure; ``FIGURE_IDS`` lists
the figures in order.
"""
import logging

from apps.core.exceptions import SimulationError
from apps.core.models import FieldSchedule, IntegratorOptions, UnitsConvention
from apps.heisenberg.models import HeisenbergParams
from apps.ising.adiabatic import duration_for_target
from apps.ising.models import IsingParams
from apps.ising.spectrum import min_two_fermion_gap

from .models import FigureResult
from .scans import duration_scan, run_sweep, scan_epsilon, scan_g1, scan_n, scan_rate
from .serializers import ExcitationReportSerializer, parse_grid
from .spectra import (
    HEISENBERG_HEADER,
    ISING_HEADER,
    TABLE_HEADER,
    degeneracy_table,
    heisenberg_spectrum_rows,
    ising_spectrum_rows,
    pair_gap_rows,
)
from .writers import RunRecorder

logger = logging.getLogger(__name__)

ANISOTROPY = {'delta_x': 0.1, 'delta_y': 0.3, 'delta_z': 1.0}
# Long Ising sweeps step all pairs together; the adaptive path integrates pair by pair.
PAIR_SWEEP_OPTIONS = IntegratorOptions(method='magnus4', step=0.05)
TARGET_PE = 0.05


def fig1(recorder, opts, units, workers):
    """Ising spectrum, N = 5, against g."""
    grid = parse_grid('0:0.01:3')
    rows = ising_spectrum_rows(IsingParams(5), grid)
    recorder.csv('.csv', ISING_HEADER, rows)
    return {'levels': 2 ** 5, 'fields': len(grid)}


def fig2(recorder, opts, units, workers):
    """Heisenberg spectrum with (n, k, D) labels, N = 5, and the level table at the largest field."""
    grid = parse_grid('0:0.1:5')
    params = HeisenbergParams(5, **ANISOTROPY)
    recorder.csv('.csv', HEISENBERG_HEADER, heisenberg_spectrum_rows(params, grid))
    table = degeneracy_table(params.at_field(grid[-1]))
    recorder.csv('_degeneracy.csv', TABLE_HEADER, table)
    return {'distinct_levels_at_g_max': len(table)}


def fig3(recorder, opts, units, workers):
    """p_{0->n} for N = 501, g 5 -> g1 at rate -1e-4, channels by ascending energy."""
    params = IsingParams(501)
    summary = {}
    rows = []
    for g1 in (1.08, 1.05, 1.03, 1.0):
        report = run_sweep('ising', params, FieldSchedule.from_rate(5.0, g1, -1e-4), opts or PAIR_SWEEP_OPTIONS, units)
        recorder.json(f'_g1_{g1}.json', ExcitationReportSerializer(report).data)
        rows += [[g1, rank, c.index, c.energy, c.probability] for rank, c in enumerate(report.channels)]
        summary[str(g1)] = {
            'dominant_channel_rank': report.channels.index(report.dominant_channel()),
            'p_total': report.p_total,
        }
    recorder.csv('_p0n.csv', ['g1', 'rank', 'n', 'energy', 'probability'], rows)
    return summary


def fig4(recorder, opts, units, workers):
    """p_E against g1, N = 51, g0 = 5, rate -0.01, with the closed-form curves."""
    recorder.note('g0 = 5 is used here; the same sweep is also described as starting from g0 = 2.')
    rows = scan_g1(
        'ising', IsingParams(51), 5.0, parse_grid('0:0.05:4.95'), -0.01,
        opts or PAIR_SWEEP_OPTIONS, units, workers, with_bounds=True,
    )
    recorder.records('.csv', rows)
    by_g1 = {round(r['g1'], 6): r['p_e'] for r in rows}
    return {'p_e_ratio_0.8_over_1.5': by_g1[0.8] / by_g1[1.5]}


def fig5(recorder, opts, units, workers):
    """Heating ratio and energy variance against the rate, N = 51, g 5 -> 0."""
    rates = [-1.0, -0.5, -0.2, -0.1, -0.05, -0.02, -0.01, -0.005, -0.002, -0.001, -0.0005]
    rows = scan_rate('ising', IsingParams(51), 5.0, 0.0, rates, opts or PAIR_SWEEP_OPTIONS, units, workers)
    recorder.records('.csv', rows)
    return {'max_heating_ratio': max(r['heating_ratio'] for r in rows)}


def fig6(recorder, opts, units, workers):
    """Duration reaching p_E = 0.05 against N, g 5 -> 0."""
    ns = range(11, 102, 10)
    rows, fit, failures = duration_scan(
        IsingParams(11), ns, 5.0, 0.0, TARGET_PE, opts or PAIR_SWEEP_OPTIONS, units, workers,
    )
    analytic = duration_for_target(TARGET_PE, 'R3', IsingParams(11), 5.0, 0.0, units) / 11 ** 2
    recorder.note(f'closed-form duration T = {analytic:.4f} N^2')
    if rows:
        recorder.records('.csv', rows)
    for n, message in failures.items():
        recorder.flag(f'root_bracket_failed_n{n}')
        recorder.note(message)
    summary = {'analytic_coefficient': analytic, 'failed_n': sorted(failures)}
    if fit is not None:
        summary.update(fitted_exponent=fit[0], fitted_coefficient=fit[1])
    return summary


def fig7(recorder, opts, units, workers):
    """Heisenberg p_E against the rate alpha for N = 5 and 9, g 10 -> 5."""
    alphas = [-1.0, -2.0, -4.0, -6.0, -8.0, -10.0]
    rows = []
    for n in (5, 9):
        params = HeisenbergParams(n, **ANISOTROPY)
        rows += [
            {'n': n, **row}
            for row in scan_rate('heisenberg', params, 10.0, 5.0, alphas, opts or IntegratorOptions(), units, workers)
        ]
    recorder.records('.csv', rows)
    return {'points': len(rows)}


def fig8(recorder, opts, units, workers):
    """Heisenberg p_E against N for alpha = -6 and -10, g 10 -> 5."""
    rows = []
    for alpha in (-6.0, -10.0):
        schedule = FieldSchedule.from_rate(10.0, 5.0, alpha)
        rows += scan_n(
            'heisenberg', HeisenbergParams(5, **ANISOTROPY), [5, 7, 9, 11], schedule,
            opts or IntegratorOptions(), units, workers,
        )
    recorder.records('.csv', rows)
    return {'points': len(rows)}


def gaps(recorder, opts, units, workers):
    """Two-fermion excitation energies against g, N = 51, and the critical minimum for N = 501."""
    recorder.csv('.csv', ['g', 'n', 'energy'], pair_gap_rows(IsingParams(51), parse_grid('0:0.01:3')))
    g_min, gap = min_two_fermion_gap(501)
    return {'n501_min_gap': gap, 'n501_min_gap_field': g_min}


def stability(recorder, opts, units, workers):
    """Heating against a local sz field (Ising) and p_V against random fields (Heisenberg)."""
    ising_rows, law = scan_epsilon(
        'ising', IsingParams(7), FieldSchedule.from_rate(5.0, 0.0, -0.01),
        [0.05, 0.1, 0.2], opts or PAIR_SWEEP_OPTIONS, units, workers,
    )
    recorder.records('_ising.csv', ising_rows)
    recorder.flag(*law.flags)
    heisenberg_rows, _ = scan_epsilon(
        'heisenberg', HeisenbergParams(5, **ANISOTROPY), FieldSchedule.from_rate(10.0, 5.0, -0.5),
        [0.025, 0.05, 0.1], opts or IntegratorOptions(), units, workers,
    )
    recorder.records('_heisenberg.csv', heisenberg_rows)
    return {'ising_heating_exponent': law.slope}


FIGURES = {
    'fig1': fig1,
    'fig2': fig2,
    'fig3': fig3,
    'fig4': fig4,
    'fig5': fig5,
    'fig6': fig6,
    'fig7': fig7,
    'fig8': fig8,
    'gaps': gaps,
    'stability': stability,
}
FIGURE_IDS = tuple(FIGURES)


def run_figure(figure, output_dir, opts=None, units=None, workers=1):
    """
    Regenerate one figure. ``opts`` overrides each figure's integrator;
    None keeps the choice of each figure (default options for Heisenberg
    and stability runs).
    """
    try:
        build = FIGURES[figure]
    except KeyError:
        raise ValueError(f'unknown figure {figure!r}; choose from {FIGURE_IDS}')
    units = units or UnitsConvention()
    parameters = {'figure': figure, 'hbar': units.hbar, 'integrator': opts, 'workers': workers}
    recorder = RunRecorder('figures', figure, parameters, output_dir)
    try:
        summary = build(recorder, opts, units, workers)
    except (SimulationError, ValueError) as exc:
        # Files already written still get their manifest.
        recorder.flag('failed')
        recorder.note(f'{type(exc).__name__}: {exc}')
        recorder.finish()
        raise
    if summary:
        recorder.json('_summary.json', summary)
    manifest = recorder.finish()
    return FigureResult(figure, manifest.name, list(recorder.manifest.outputs), summary)


def run_figures(figures, output_dir, opts=None, units=None, workers=1):
    """
    Regenerate several figures, continuing past failures.

    Returns (results, failures); ``failures`` maps the figure id to the
    raised exception.
    """
    results, failures = [], {}
    for figure in figures:
        try:
            results.append(run_figure(figure, output_dir, opts, units, workers))
        except (SimulationError, ValueError) as exc:
            logger.error('%s failed: %s', figure, exc)
            failures[figure] = exc
    return results, failures
