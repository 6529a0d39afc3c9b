import math
import re

import numpy as np
from rest_framework import serializers

from apps.core.models import INTEGRATOR_METHODS, FieldSchedule

MODELS = ('ising', 'heisenberg')
GRID_PATTERN = re.compile(r'^\s*([^:]+):([^:]+):([^:]+)\s*$')


def parse_grid(text):
    """
    Parse ``a:step:b`` (inclusive of b) or a comma separated list of values.

    Raises ValueError on malformed or empty grids.
    """
    if text is None or not str(text).strip():
        raise ValueError('empty grid')
    match = GRID_PATTERN.match(str(text))
    try:
        if match is None:
            values = [float(v) for v in str(text).split(',') if v.strip()]
        else:
            start, step, stop = (float(v) for v in match.groups())
            if step == 0 or (stop - start) * step < 0:
                raise ValueError(f'grid {text!r} is empty')
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            values = list(np.round(start + step * np.arange(count), 12))
    except ValueError as exc:
        raise ValueError(f'malformed grid {text!r}: {exc}') from exc
    if not values:
        raise ValueError(f'grid {text!r} is empty')
    if not all(math.isfinite(v) for v in values):
        raise ValueError(f'grid {text!r} has non-finite values')
    return [float(v) for v in values]


class ScheduleInputSerializer(serializers.Serializer):
    """Sweep endpoints plus exactly one of rate or duration."""

    g0 = serializers.FloatField(min_value=0.0)
    g1 = serializers.FloatField(required=False, allow_null=True, default=None, min_value=0.0)
    rate = serializers.FloatField(required=False, allow_null=True, default=None)
    duration = serializers.FloatField(required=False, allow_null=True, default=None, min_value=0.0)

    def validate(self, attrs):
        if (attrs['rate'] is None) == (attrs['duration'] is None):
            raise serializers.ValidationError('give exactly one of --rate and --T.')
        if attrs['rate'] == 0:
            raise serializers.ValidationError({'rate': 'rate must be nonzero.'})
        if attrs['duration'] == 0:
            raise serializers.ValidationError({'duration': 'duration must be positive.'})
        return attrs

    def schedule(self, g1=None):
        """FieldSchedule ending at ``g1`` (or the validated g1)."""
        data = self.validated_data
        g1 = data['g1'] if g1 is None else g1
        if g1 is None:
            raise ValueError('the final field g1 is required')
        if data['rate'] is not None:
            return FieldSchedule.from_rate(data['g0'], g1, data['rate'])
        return FieldSchedule(data['g0'], g1, data['duration'])


class IntegratorInputSerializer(serializers.Serializer):
    """Command-line overrides of the integrator settings."""

    integrator = serializers.ChoiceField(choices=INTEGRATOR_METHODS, required=False, allow_null=True)
    step = serializers.FloatField(required=False, allow_null=True, min_value=0.0)
    rtol = serializers.FloatField(required=False, allow_null=True, min_value=0.0)
    atol = serializers.FloatField(required=False, allow_null=True, min_value=0.0)
    hbar = serializers.FloatField(required=False, allow_null=True, min_value=0.0)


class FieldScheduleSerializer(serializers.Serializer):
    g_start = serializers.FloatField()
    g_end = serializers.FloatField()
    duration = serializers.FloatField()
    rate = serializers.FloatField()


class ChannelSerializer(serializers.Serializer):
    index = serializers.IntegerField()
    energy = serializers.FloatField()
    probability = serializers.FloatField()


class ExcitationReportSerializer(serializers.Serializer):
    """Serializer for sweep reports; channels in ascending energy."""

    model = serializers.CharField()
    n_sites = serializers.IntegerField()
    schedule = FieldScheduleSerializer()
    channels = ChannelSerializer(many=True)
    p_ground_loss = serializers.FloatField()
    p_total = serializers.FloatField()
    mean_energy_above_ground = serializers.FloatField()
    energy_variance = serializers.FloatField()
    spectrum_width = serializers.FloatField()
    heating_ratio = serializers.FloatField()
    flags = serializers.ListField(child=serializers.CharField())


class RunManifestSerializer(serializers.Serializer):
    command = serializers.CharField()
    parameters = serializers.DictField()
    version = serializers.CharField()
    runtime = serializers.FloatField()
    created_at = serializers.CharField()
    flags = serializers.ListField(child=serializers.CharField())
    notes = serializers.ListField(child=serializers.CharField())
    outputs = serializers.ListField(child=serializers.CharField())
