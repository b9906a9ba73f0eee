# cli/models.py
from django.db import models


class RunRecord(models.Model):
    STATUS_CHOICES = [
        ('ok', 'Succeeded'),
        ('failed', 'Failed'),
    ]

    subcommand = models.CharField(max_length=32)
    seed = models.BigIntegerField(null=True, blank=True)
    config_json = models.JSONField(default=dict)
    report_json = models.JSONField(null=True, blank=True)
    manifest_json = models.JSONField(default=list)
    status = models.CharField(max_length=10, choices=STATUS_CHOICES, default='ok')
    created_at = models.DateTimeField(auto_now_add=True)

    class Meta:
        ordering = ['-created_at', '-id']

    def __str__(self):
        return f"{self.subcommand} seed={self.seed} ({self.status})"
