"""
Shared behaviour of the simulation management commands.

Exit codes: 0 success, 2 usage or validation error (including size caps),
3 numerical failure.
"""
import logging

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError
from rest_framework import serializers

from apps.core.exceptions import SimulationError
from apps.core.models import IntegratorOptions, UnitsConvention
from apps.heisenberg.serializers import HeisenbergParamsSerializer
from apps.ising.serializers import IsingParamsSerializer

from .serializers import IntegratorInputSerializer

logger = logging.getLogger(__name__)

USAGE_ERROR = 2
NUMERICAL_ERROR = 3

PARAMS_SERIALIZERS = {
    'ising': IsingParamsSerializer,
    'heisenberg': HeisenbergParamsSerializer,
}


def format_errors(detail):
    """Flatten DRF error details into one line."""
    if isinstance(detail, dict):
        parts = []
        for key, value in detail.items():
            text = format_errors(value)
            parts.append(text if key == 'non_field_errors' else f'{key}: {text}')
        return '; '.join(parts)
    if isinstance(detail, list):
        return ' '.join(format_errors(item) for item in detail)
    return str(detail)


class SimulationCommand(BaseCommand):
    """Base command: common flags, option resolution and error translation."""

    requires_system_checks = []

    def add_arguments(self, parser):
        parser.add_argument('--output-dir', help='Directory for the run files (default: settings OUTPUT_DIR).')
        parser.add_argument('--name', help='Run name used as the file prefix.')
        parser.add_argument('--hbar', type=float, help='Value of hbar (default 1).')
        parser.add_argument('--integrator', help='rk4, adaptive or magnus4.')
        parser.add_argument('--step', type=float, help='Step of the fixed-step integrators.')
        parser.add_argument('--rtol', type=float)
        parser.add_argument('--atol', type=float)

    def add_model_arguments(self, parser, n_help='Number of sites N (odd).'):
        parser.add_argument('--n', required=True, help=n_help)
        parser.add_argument('--coupling', type=float, default=None, help='Coupling J (default: settings COUPLING).')
        parser.add_argument('--dx', type=float, default=0.1, help='Heisenberg anisotropy Delta_x.')
        parser.add_argument('--dy', type=float, default=0.3, help='Heisenberg anisotropy Delta_y.')
        parser.add_argument('--dz', type=float, default=1.0, help='Heisenberg anisotropy Delta_z.')

    def add_workers_argument(self, parser):
        parser.add_argument(
            '--workers', type=int, default=None,
            help='Worker processes for scans (default: settings WORKERS).',
        )

    def handle(self, *args, **options):
        try:
            return self.run(**options)
        except serializers.ValidationError as exc:
            raise CommandError(format_errors(exc.detail), returncode=USAGE_ERROR)
        except SimulationError as exc:
            raise CommandError(f'numerical failure: {exc}', returncode=NUMERICAL_ERROR)
        except ValueError as exc:
            raise CommandError(str(exc), returncode=USAGE_ERROR)

    def run(self, **options):
        raise NotImplementedError

    # Option resolution

    def validated(self, serializer_class, data):
        serializer = serializer_class(data=data)
        serializer.is_valid(raise_exception=True)
        return serializer

    def build_params(self, model, n_sites, options):
        coupling = options.get('coupling')
        data = {
            'n_sites': n_sites,
            'coupling': settings.SIMULATION['COUPLING'] if coupling is None else coupling,
        }
        if model == 'heisenberg':
            data.update(delta_x=options['dx'], delta_y=options['dy'], delta_z=options['dz'])
        return self.validated(PARAMS_SERIALIZERS[model], data).save()

    def integrator_overrides(self, options):
        data = {
            key: options.get(key)
            for key in ('integrator', 'step', 'rtol', 'atol', 'hbar')
            if options.get(key) is not None
        }
        return self.validated(IntegratorInputSerializer, data).validated_data

    def build_options(self, options):
        """IntegratorOptions from settings with the command-line overrides applied."""
        overrides = self.integrator_overrides(options)
        return IntegratorOptions.from_settings(
            method=overrides.get('integrator'),
            step=overrides.get('step'),
            rtol=overrides.get('rtol'),
            atol=overrides.get('atol'),
        )

    def build_units(self, options):
        hbar = self.integrator_overrides(options).get('hbar')
        return UnitsConvention(hbar=hbar) if hbar is not None else UnitsConvention.from_settings()

    def workers(self, options):
        workers = options.get('workers')
        workers = settings.SIMULATION['WORKERS'] if workers is None else workers
        if workers < 1:
            raise ValueError('--workers must be at least 1')
        return workers

    def output_dir(self, options):
        return options.get('output_dir') or settings.SIMULATION['OUTPUT_DIR']
