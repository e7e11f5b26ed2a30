"""
Serializers for the synth app.

SynthSpecSerializer validates generator flags; the others fix the JSON schema
of bench and convergence reports.
"""

import math

from rest_framework import serializers

from apps.core.exceptions import ParameterError
from apps.core.fields import ExtendedFloatField
from apps.solver.serializers import SolverConfigSerializer

from .generators import BASIS_KINDS, SynthSpec


class SynthSpecSerializer(serializers.Serializer):
    M = serializers.IntegerField(min_value=1)
    K = serializers.IntegerField(min_value=1)
    L = serializers.IntegerField(min_value=1)
    snr_db = ExtendedFloatField(default=math.inf)
    sor_db = ExtendedFloatField(default=math.inf)
    n_outliers = serializers.IntegerField(min_value=0, default=0)
    purity_level = serializers.FloatField(default=0.85, max_value=1.0)
    basis_kind = serializers.ChoiceField(choices=BASIS_KINDS, default=BASIS_KINDS[0])
    singular_values = serializers.ListField(child=serializers.FloatField(), required=False, allow_null=True)
    rng_seed = serializers.IntegerField(min_value=0, default=0)

    def validate(self, attrs):
        K = attrs['K']
        if attrs['purity_level'] <= 1.0 / K:
            raise serializers.ValidationError({
                'purity_level': f"purity_level must exceed 1/K = {1.0 / K:.4g}."
            })
        if attrs['n_outliers'] > attrs['L']:
            raise serializers.ValidationError({'n_outliers': "n_outliers cannot exceed L."})
        if attrs['n_outliers'] and math.isinf(attrs['sor_db']):
            raise serializers.ValidationError({'sor_db': "Outliers need a finite sor_db."})
        return attrs

    def create(self, validated_data):
        values = validated_data.get('singular_values')
        if values is not None:
            validated_data['singular_values'] = tuple(values)
        try:
            return SynthSpec(**validated_data)
        except ParameterError as e:
            raise serializers.ValidationError(str(e))


class AxisValueField(serializers.Field):
    """Numeric axis values go through ExtendedFloatField; names pass through."""

    def to_representation(self, value):
        if isinstance(value, str):
            return value
        if isinstance(value, int):
            return value
        return ExtendedFloatField().to_representation(value)

    def to_internal_value(self, data):
        return data


class TrialRecordSerializer(serializers.Serializer):
    axis_index = serializers.IntegerField()
    axis_value = AxisValueField()
    trial_index = serializers.IntegerField()
    seed = serializers.IntegerField()
    mse_linear = ExtendedFloatField()
    mse_db = ExtendedFloatField()
    iterations = serializers.IntegerField()
    termination_reason = serializers.CharField(allow_blank=True)
    wall_time = serializers.FloatField()
    failed = serializers.BooleanField()
    error = serializers.CharField(allow_blank=True)


class SweepPointSerializer(serializers.Serializer):
    axis_value = AxisValueField()
    mean_mse_db = ExtendedFloatField()
    median_mse_db = ExtendedFloatField()
    trials = serializers.IntegerField()
    failures = serializers.IntegerField()


class SweepResultSerializer(serializers.Serializer):
    """Schema of the bench report.json."""
    axis = serializers.CharField()
    values = serializers.ListField(child=AxisValueField())
    trials = serializers.IntegerField()
    failures = serializers.IntegerField()
    points = SweepPointSerializer(many=True)
    records = TrialRecordSerializer(many=True)
    base_spec = SynthSpecSerializer()
    solver_config = SolverConfigSerializer()


class ConvergenceTraceSerializer(serializers.Serializer):
    seed = serializers.IntegerField()
    target = ExtendedFloatField()
    extrapolated_iterations = serializers.IntegerField(allow_null=True)
    plain_iterations = serializers.IntegerField(allow_null=True)
    extrapolated = serializers.ListField(child=ExtendedFloatField())
    plain = serializers.ListField(child=ExtendedFloatField())
