"""
Serializers for the solver app.
"""

from rest_framework import serializers

from apps.core.fields import ExtendedFloatField
from apps.regularizers.volume import KINDS

from .config import BASIS_CONSTRAINTS, WEIGHT_SCHEDULES, SolverConfig


class SolverConfigSerializer(serializers.Serializer):
    """Validates solver flags; unset fields fall back to settings.RVOLMIN."""
    p = serializers.FloatField(required=False, min_value=0.0, max_value=2.0)
    lambda_ = serializers.FloatField(required=False, min_value=0.0)
    epsilon = serializers.FloatField(required=False, min_value=0.0)
    tau = serializers.FloatField(required=False)
    regularizer = serializers.ChoiceField(choices=KINDS, required=False)
    basis_constraint = serializers.ChoiceField(choices=BASIS_CONSTRAINTS, required=False)
    extrapolate = serializers.BooleanField(required=False)
    max_iter = serializers.IntegerField(required=False, min_value=1)
    tol = serializers.FloatField(required=False, min_value=0.0)
    safety_delta = serializers.FloatField(required=False, min_value=0.0)
    rng_seed = serializers.IntegerField(required=False, min_value=0)
    weight_schedule = serializers.ChoiceField(choices=WEIGHT_SCHEDULES, required=False)
    restart_extrapolation = serializers.BooleanField(required=False)

    def validate_p(self, value):
        if value <= 0:
            raise serializers.ValidationError("p must lie in (0, 2].")
        return value

    def validate_tau(self, value):
        if value <= 0:
            raise serializers.ValidationError("tau must be > 0.")
        return value

    def validate(self, attrs):
        """epsilon may only be 0 when p >= 1."""
        defaults = SolverConfig.from_settings()
        p = attrs.get('p', defaults.p)
        epsilon = attrs.get('epsilon', defaults.epsilon)
        if p < 1.0 and epsilon <= 0:
            raise serializers.ValidationError({
                'epsilon': f"epsilon must be > 0 when p < 1 (p={p})."
            })
        return attrs

    def create(self, validated_data):
        return SolverConfig.from_settings(**validated_data)


class SolveReportSerializer(serializers.Serializer):
    """Fixed JSON schema of report.json written by the factorize command."""
    termination_reason = serializers.CharField()
    iterations_used = serializers.IntegerField()
    wall_time = serializers.FloatField()
    final_objective = ExtendedFloatField()
    objective_history = serializers.ListField(child=ExtendedFloatField())
    config = SolverConfigSerializer()
