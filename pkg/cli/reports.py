# cli/reports.py
import json
import logging
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

from django.conf import settings
from django.db import DatabaseError

logger = logging.getLogger(__name__)


@dataclass
class RunReport:
    """Config echo, wall-clock per phase, result summaries and written files."""

    subcommand: str
    config: dict = field(default_factory=dict)
    phases: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)
    manifest: list = field(default_factory=list)
    status: str = 'ok'

    @contextmanager
    def phase(self, name):
        start = time.perf_counter()
        try:
            yield
        finally:
            elapsed = max(time.perf_counter() - start, 0.0)
            self.phases[name] = self.phases.get(name, 0.0) + elapsed

    @property
    def total_seconds(self):
        return sum(self.phases.values())

    def add_file(self, path):
        path = str(path)
        if path not in self.manifest:
            self.manifest.append(path)
        return path

    def to_dict(self):
        return {
            'subcommand': self.subcommand,
            'status': self.status,
            'config': self.config,
            'wall_clock': {**self.phases, 'total': self.total_seconds},
            'summary': self.summary,
            'manifest': list(self.manifest),
        }

    def write(self, path):
        path = Path(path)
        self.add_file(path)
        path.write_text(json.dumps(self.to_dict(), indent=2, default=str), encoding='utf-8')
        return path


def record_run(report):
    """Store ``report`` in the run ledger. Returns the row, or None when not recorded."""
    if not settings.CONVSEQ.get('record_runs', True):
        return None
    from .models import RunRecord

    data = json.loads(json.dumps(report.to_dict(), default=str))
    try:
        return RunRecord.objects.create(
            subcommand=report.subcommand,
            seed=report.config.get('seed'),
            config_json=data['config'],
            report_json=data,
            manifest_json=data['manifest'],
            status=report.status,
        )
    except DatabaseError as exc:
        logger.warning('run ledger unavailable (%s); run %s not recorded. '
                       'Run "python convseq.py migrate" to create it.', exc, report.subcommand)
        return None
