from rest_framework import serializers

from .hamiltonian import DENSE_MAX_SITES
from .models import HeisenbergParams


class HeisenbergParamsSerializer(serializers.Serializer):
    """Validate anisotropic Heisenberg chain parameters."""

    n_sites = serializers.IntegerField(min_value=3, max_value=DENSE_MAX_SITES)
    coupling = serializers.FloatField(default=1.0)
    delta_x = serializers.FloatField(default=0.0)
    delta_y = serializers.FloatField(default=0.0)
    delta_z = serializers.FloatField(default=1.0)
    field = serializers.FloatField(default=0.0, min_value=0.0)

    def validate_n_sites(self, value):
        if value % 2 == 0:
            raise serializers.ValidationError('n_sites must be odd.')
        return value

    def validate_coupling(self, value):
        if value <= 0:
            raise serializers.ValidationError('coupling must be positive.')
        return value

    def create(self, validated_data):
        return HeisenbergParams(**validated_data)


class SymmetryLabelsSerializer(serializers.Serializer):
    """Serializer for (z2, k, n, d) labels."""

    z2 = serializers.IntegerField()
    momentum_index = serializers.IntegerField()
    group_index = serializers.IntegerField()
    degeneracy_index = serializers.IntegerField()
    flagged = serializers.BooleanField()
