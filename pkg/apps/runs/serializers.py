"""
Serializers for the runs app.
"""

from rest_framework import serializers

from .io import jsonable


class RunManifestSerializer(serializers.Serializer):
    """Fixed schema of manifest.json."""
    command = serializers.CharField()
    tool_version = serializers.CharField()
    seed = serializers.IntegerField(allow_null=True)
    wall_time = serializers.FloatField()
    config = serializers.DictField()
    inputs = serializers.DictField(child=serializers.CharField())
    output_dir = serializers.CharField()
    outputs = serializers.ListField(child=serializers.CharField())

    def to_representation(self, instance):
        return jsonable(super().to_representation(instance))
