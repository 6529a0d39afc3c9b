from apps.core.exceptions import RootBracketError
from apps.reports.base import SimulationCommand
from apps.reports.scans import AXES, duration_scan, scan_epsilon, scan_g1, scan_n, scan_rate
from apps.reports.serializers import MODELS, ScheduleInputSerializer, parse_grid
from apps.reports.writers import RunRecorder

# (g0, g1, rate) used when a flag is left out.
SCHEDULE_DEFAULTS = {
    'ising': (5.0, 0.0, -0.01),
    'heisenberg': (10.0, 5.0, -6.0),
}
EPSILON_SCHEDULES = {
    'ising': (5.0, 0.0, -0.01),
    'heisenberg': (10.0, 5.0, -0.5),
}
EPSILON_DEFAULTS = {
    'ising': '0.05,0.1,0.2',
    'heisenberg': '0.025,0.05,0.1',
}
RATE_DEFAULTS = {
    'ising': '-1,-0.5,-0.2,-0.1,-0.05,-0.02,-0.01,-0.005,-0.002,-0.001',
    'heisenberg': '-10,-8,-6,-4,-2,-1',
}


class Command(SimulationCommand):
    help = 'Repeat sweeps along one axis (N, rate, g1 or epsilon) and write a CSV table.'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('axis', choices=AXES)
        parser.add_argument('--model', choices=MODELS, default='ising')
        self.add_model_arguments(parser, n_help='Number of sites; a grid a:step:b for the N axis.')
        self.add_workers_argument(parser)
        parser.add_argument('--g0', type=float)
        parser.add_argument('--g1', type=float)
        parser.add_argument('--rate', '--alpha', dest='rate', type=float)
        parser.add_argument('--T', dest='duration', type=float)
        parser.add_argument('--rates', help='Rate grid for the rate axis (use --rates=-1,-0.1 for negatives).')
        parser.add_argument('--g1-values', help='Final-field grid for the g1 axis.')
        parser.add_argument('--epsilons', help='Perturbation strengths for the epsilon axis.')
        parser.add_argument('--target-pe', type=float, help='N axis: tune the rate to reach this p_E.')
        parser.add_argument('--with-bounds', action='store_true', help='g1 axis: add the closed-form estimates.')
        parser.add_argument('--seed', type=int, default=0, help='Seed of the random perturbation pattern.')

    def run(self, **options):
        axis, model = options['axis'], options['model']
        if axis == 'N':
            values = parse_grid(options['n'])
            if any(v != int(v) for v in values):
                raise ValueError('--n must list integers')
            ns = [int(v) for v in values]
            params = self.build_params(model, ns[0], options)
            for n in ns[1:]:
                self.build_params(model, n, options)
        else:
            params = self.build_params(model, options['n'], options)
        defaults = EPSILON_SCHEDULES[model] if axis == 'epsilon' else SCHEDULE_DEFAULTS[model]
        g0 = defaults[0] if options['g0'] is None else options['g0']
        g1 = defaults[1] if options['g1'] is None else options['g1']
        opts, units, workers = self.build_options(options), self.build_units(options), self.workers(options)
        name = options['name'] or f'scan_{axis}_{model}'
        parameters = {
            'axis': axis, 'model': model, 'params': params, 'n': options['n'], 'g0': g0, 'g1': g1,
            'rate': options['rate'], 'duration': options['duration'], 'rates': options['rates'],
            'g1_values': options['g1_values'], 'epsilons': options['epsilons'],
            'target_pe': options['target_pe'], 'seed': options['seed'],
            'integrator': opts, 'hbar': units.hbar, 'workers': workers,
        }
        recorder = RunRecorder('scan', name, parameters, self.output_dir(options))
        summary = {}

        if axis == 'N' and options['target_pe'] is not None:
            if model != 'ising':
                raise ValueError('--target-pe is available for the ising model only')
            if not 0.0 < options['target_pe'] < 1.0:
                raise ValueError('--target-pe must lie in (0, 1)')
            rows, fit, failures = duration_scan(params, ns, g0, g1, options['target_pe'], opts, units, workers)
            for n, message in failures.items():
                recorder.flag(f'root_bracket_failed_n{n}')
                recorder.note(message)
            if not rows:
                recorder.finish()
                raise RootBracketError('no system size could be tuned to the target', key=ns)
            if fit is not None:
                summary.update(fitted_exponent=fit[0], fitted_coefficient=fit[1])
            summary['failed_n'] = sorted(failures)
        elif axis == 'N':
            rows = scan_n(model, params, ns, self._schedule(options, g0, g1, model), opts, units, workers)
        elif axis == 'rate':
            rates = parse_grid(options['rates'] or RATE_DEFAULTS[model])
            rows = scan_rate(model, params, g0, g1, rates, opts, units, workers)
        elif axis == 'g1':
            if not options['g1_values']:
                raise ValueError('the g1 axis needs --g1-values')
            rate = options['rate'] if options['rate'] is not None else SCHEDULE_DEFAULTS[model][2]
            rows = scan_g1(
                model, params, g0, parse_grid(options['g1_values']), rate, opts, units, workers,
                options['with_bounds'],
            )
        else:
            epsilons = parse_grid(options['epsilons'] or EPSILON_DEFAULTS[model])
            schedule = self._schedule(options, g0, g1, model, EPSILON_SCHEDULES[model][2])
            rows, law = scan_epsilon(model, params, schedule, epsilons, opts, units, workers, options['seed'])
            if law is not None:
                summary.update(heating_exponent=law.slope, heating_constant=law.constant)
                recorder.flag(*law.flags)

        recorder.records('.csv', rows)
        if summary:
            recorder.json('_summary.json', summary)
        return str(recorder.finish())

    def _schedule(self, options, g0, g1, model, default_rate=None):
        rate, duration = options['rate'], options['duration']
        if rate is None and duration is None:
            rate = SCHEDULE_DEFAULTS[model][2] if default_rate is None else default_rate
        serializer = self.validated(ScheduleInputSerializer, {
            'g0': g0, 'g1': g1, 'rate': rate, 'duration': duration,
        })
        return serializer.schedule()
