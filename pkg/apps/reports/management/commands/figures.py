from django.core.management.base import CommandError

from apps.core.exceptions import SimulationError
from apps.reports.base import NUMERICAL_ERROR, USAGE_ERROR, SimulationCommand
from apps.reports.figures import FIGURE_IDS, run_figures


class Command(SimulationCommand):
    help = 'Regenerate the data of one or more figures (or all of them).'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('figures', nargs='+', choices=('all',) + FIGURE_IDS)
        self.add_workers_argument(parser)

    def run(self, **options):
        figures = FIGURE_IDS if 'all' in options['figures'] else tuple(dict.fromkeys(options['figures']))
        overridden = any(options.get(key) is not None for key in ('integrator', 'step', 'rtol', 'atol'))
        opts = self.build_options(options) if overridden else None
        results, failures = run_figures(
            figures, self.output_dir(options), opts, self.build_units(options), self.workers(options),
        )
        for result in results:
            self.stdout.write(f'{result.figure}: {result.manifest} ({len(result.outputs)} files)')
        if failures:
            completed = ', '.join(r.figure for r in results) or 'none'
            failed = '; '.join(f'{figure}: {exc}' for figure, exc in failures.items())
            numerical = any(isinstance(exc, SimulationError) for exc in failures.values())
            raise CommandError(
                f'completed figures: {completed}. failed: {failed}',
                returncode=NUMERICAL_ERROR if numerical else USAGE_ERROR,
            )
        return None
