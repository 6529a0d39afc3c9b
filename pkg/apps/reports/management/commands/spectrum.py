from django.conf import settings

from apps.reports.base import SimulationCommand
from apps.reports.serializers import MODELS, parse_grid
from apps.reports.spectra import (
    HEISENBERG_HEADER,
    ISING_HEADER,
    TABLE_HEADER,
    degeneracy_table,
    heisenberg_spectrum_rows,
    ising_spectrum_rows,
)
from apps.reports.writers import RunRecorder


class Command(SimulationCommand):
    help = 'Write the level curves of a chain on a grid of fields g as CSV.'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('model', choices=MODELS)
        self.add_model_arguments(parser)
        parser.add_argument('--g', default='0:0.05:3', help='Field grid a:step:b or v1,v2,...')
        parser.add_argument(
            '--levels', type=int, default=None,
            help='Ising only: number of lowest levels per field (default: all 2^N).',
        )
        parser.add_argument(
            '--tracking-steps', type=int, default=None,
            help='Heisenberg only: steps of the label tracking from large g.',
        )

    def run(self, **options):
        model = options['model']
        params = self.build_params(model, options['n'], options)
        grid = parse_grid(options['g'])
        if any(g < 0 for g in grid):
            raise ValueError('fields must be nonnegative')
        name = options['name'] or f'spectrum_{model}_n{params.n_sites}'
        recorder = RunRecorder(
            'spectrum', name,
            {'model': model, 'params': params, 'g': options['g'], 'levels': options['levels']},
            self.output_dir(options),
        )
        if model == 'ising':
            recorder.csv('.csv', ISING_HEADER, ising_spectrum_rows(params, grid, options['levels']))
        else:
            steps = options['tracking_steps'] or settings.SIMULATION['TRACKING_STEPS']
            rows = heisenberg_spectrum_rows(params, grid, steps)
            recorder.csv('.csv', HEISENBERG_HEADER, rows)
            if any(row[-1] for row in rows):
                recorder.flag('ambiguous_labels')
            recorder.csv('_degeneracy.csv', TABLE_HEADER, degeneracy_table(params.at_field(grid[-1]), steps))
        return str(recorder.finish())
