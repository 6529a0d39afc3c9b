from apps.core.models import Validity
from apps.heisenberg.perturbative import pe_heisenberg
from apps.ising.adiabatic import pe_sum, regime_estimates
from apps.ising.serializers import RegimeEstimateSerializer
from apps.reports.base import SimulationCommand
from apps.reports.scans import run_sweep, scan_g1
from apps.reports.serializers import MODELS, ExcitationReportSerializer, ScheduleInputSerializer, parse_grid
from apps.reports.writers import RunRecorder


class Command(SimulationCommand):
    help = 'Sweep the field from g0 to g1 and report the excitation probabilities.'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('model', choices=MODELS)
        self.add_model_arguments(parser)
        self.add_workers_argument(parser)
        parser.add_argument('--g0', type=float, required=True, help='Initial field.')
        parser.add_argument('--g1', type=float, help='Final field.')
        parser.add_argument('--g1-scan', help='Grid of final fields a:step:b; writes one CSV row per g1.')
        parser.add_argument('--rate', '--alpha', dest='rate', type=float, help='Change rate dg/dt.')
        parser.add_argument('--T', dest='duration', type=float, help='Sweep duration.')
        parser.add_argument('--with-bounds', action='store_true', help='Add the closed-form estimates.')
        parser.add_argument('--p0n', action='store_true', help='Also write the channel probabilities as CSV.')

    def run(self, **options):
        model = options['model']
        params = self.build_params(model, options['n'], options)
        if (options['g1'] is None) == (options['g1_scan'] is None):
            raise ValueError('give exactly one of --g1 and --g1-scan')
        schedule_input = self.validated(ScheduleInputSerializer, {
            'g0': options['g0'], 'g1': options['g1'],
            'rate': options['rate'], 'duration': options['duration'],
        })
        opts, units = self.build_options(options), self.build_units(options)
        parameters = {
            'model': model, 'params': params, **schedule_input.validated_data,
            'g1_scan': options['g1_scan'], 'integrator': opts, 'hbar': units.hbar,
        }
        name = options['name'] or f'sweep_{model}_n{params.n_sites}'
        recorder = RunRecorder('sweep', name, parameters, self.output_dir(options))

        if options['g1_scan'] is not None:
            if options['rate'] is None:
                raise ValueError('--g1-scan needs --rate')
            values = parse_grid(options['g1_scan'])
            rows = scan_g1(
                model, params, options['g0'], values, options['rate'], opts, units,
                self.workers(options), options['with_bounds'],
            )
            recorder.records('.csv', rows)
            return str(recorder.finish())

        schedule = schedule_input.schedule()
        report = run_sweep(model, params, schedule, opts, units)
        recorder.flag(*report.flags)
        recorder.json('.json', ExcitationReportSerializer(report).data)
        if options['p0n']:
            recorder.csv(
                '_p0n.csv', ['rank', 'index', 'energy', 'probability'],
                [[rank, c.index, c.energy, c.probability] for rank, c in enumerate(report.channels)],
            )
        if options['with_bounds']:
            if model == 'ising':
                estimates = regime_estimates(params, schedule, units)
                bounds = {'pe_sum': pe_sum(params, schedule, units)}
            else:
                estimates = [pe_heisenberg(params, schedule, units)]
                bounds = {}
            for estimate in estimates:
                if estimate.validity is not Validity.VALID:
                    recorder.flag(f'{estimate.regime}_{estimate.validity.value}')
            bounds['estimates'] = RegimeEstimateSerializer(estimates, many=True).data
            recorder.json('_bounds.json', bounds)
        return str(recorder.finish())
