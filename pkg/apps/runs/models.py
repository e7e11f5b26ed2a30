"""
Runs Models

- RunRecord: one row per command-line invocation (when RVOLMIN_RECORD_RUNS is on)
"""

from django.db import models


class RunRecord(models.Model):
    """
    History of factorize / synth / bench / convergence / check_scatter runs.

    Mirrors the manifest.json written next to the outputs.
    """

    class Status(models.TextChoices):
        SUCCESS = 'SUCCESS', 'Success'
        FAILED = 'FAILED', 'Failed'

    command = models.CharField(max_length=32, db_index=True)
    config = models.JSONField(default=dict)
    inputs = models.JSONField(default=dict)
    output_dir = models.CharField(max_length=500, blank=True)
    outputs = models.JSONField(default=list)
    seed = models.PositiveBigIntegerField(null=True, blank=True)
    tool_version = models.CharField(max_length=20)
    wall_time = models.FloatField(default=0.0)
    status = models.CharField(max_length=10, choices=Status.choices, default=Status.SUCCESS)
    error_message = models.TextField(blank=True)

    created_at = models.DateTimeField(auto_now_add=True)

    class Meta:
        db_table = 'run_records'
        ordering = ['-created_at']

    def __str__(self):
        return f"{self.command} ({self.status}) at {self.created_at:%Y-%m-%d %H:%M:%S}"
