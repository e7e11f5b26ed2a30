"""
Serializers for identifiability reports.
"""

from rest_framework import serializers

from apps.core.fields import ExtendedFloatField


class ScatterReportSerializer(serializers.Serializer):
    """Schema of the check_scatter report.json."""
    gamma = ExtendedFloatField()
    threshold = ExtendedFloatField()
    sufficiently_scattered = serializers.BooleanField()
    centroid_distance = ExtendedFloatField()
    interior_facet_count = serializers.IntegerField()
    extreme_point_count = serializers.IntegerField()
