from rest_framework import serializers

from .models import IsingParams


class IsingParamsSerializer(serializers.Serializer):
    """Validate Ising chain parameters."""

    n_sites = serializers.IntegerField(min_value=3)
    coupling = serializers.FloatField(default=1.0)
    field = serializers.FloatField(default=0.0, min_value=0.0)

    def validate_n_sites(self, value):
        """Free-fermion paths need an odd ring."""
        if value % 2 == 0:
            raise serializers.ValidationError('n_sites must be odd.')
        return value

    def validate_coupling(self, value):
        if value <= 0:
            raise serializers.ValidationError('coupling must be positive.')
        return value

    def create(self, validated_data):
        return IsingParams(**validated_data)


class RegimeEstimateSerializer(serializers.Serializer):
    """Serializer for closed-form regime estimates."""

    regime = serializers.CharField()
    p_e_bound = serializers.FloatField()
    validity = serializers.CharField(source='validity.value')
    conditions = serializers.SerializerMethodField()

    def get_conditions(self, obj):
        return {name: outcome.value for name, outcome in obj.conditions.items()}
