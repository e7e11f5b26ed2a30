"""
Shared DRF serializer fields.

JSON has no literal for infinities or NaN, so reports carry them as the
strings "inf", "-inf" and "nan". Finite values keep Python's round-trip repr.
"""

import argparse
import math

from rest_framework import serializers

_NON_FINITE = {'inf': math.inf, '+inf': math.inf, 'infinity': math.inf,
               '-inf': -math.inf, '-infinity': -math.inf, 'nan': math.nan}


class ExtendedFloatField(serializers.FloatField):
    """FloatField that accepts and emits non-finite values as strings."""

    def to_internal_value(self, data):
        if isinstance(data, str) and data.strip().lower() in _NON_FINITE:
            return _NON_FINITE[data.strip().lower()]
        if isinstance(data, float) and not math.isfinite(data):
            return data
        return super().to_internal_value(data)

    def to_representation(self, value):
        value = float(value)
        if math.isnan(value):
            return 'nan'
        if math.isinf(value):
            return 'inf' if value > 0 else '-inf'
        return value


def parse_float_flag(text: str) -> float:
    """argparse type for float flags that may be 'inf'."""
    try:
        return ExtendedFloatField().to_internal_value(text)
    except serializers.ValidationError:
        raise argparse.ArgumentTypeError(f"invalid float value: {text!r}")


def parse_float_list(text: str) -> list:
    """argparse type for comma-separated float lists."""
    return [parse_float_flag(item) for item in text.split(',') if item.strip()]
