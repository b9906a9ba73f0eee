# cli/base.py
import logging

from django.core.exceptions import ValidationError
from django.core.management.base import BaseCommand, CommandError

from spikecore.exceptions import ConvseqError

from .config import resolve
from .reports import RunReport, record_run

logger = logging.getLogger(__name__)


def _describe(exc):
    if isinstance(exc, ValidationError) and hasattr(exc, 'error_dict'):
        return '; '.join(f'{key}: {" ".join(messages)}'
                         for key, messages in exc.message_dict.items())
    if isinstance(exc, ValidationError):
        return ' '.join(exc.messages)
    return str(exc)


class ConvseqCommand(BaseCommand):
    """
    Shared plumbing of the pipeline subcommands.

    Subclasses declare the settings they read in ``config_keys`` (argparse
    dests, which double as ``settings.CONVSEQ`` and config file keys), add
    their flags in ``add_command_arguments`` and do the work in
    ``run(config, report)``. Flag defaults must stay ``None`` so that config
    files and settings can fill them in.
    """

    config_keys = ()
    input_keys = ()
    required_keys = ()

    @property
    def subcommand(self):
        return self.__module__.rsplit('.', 1)[-1]

    def add_arguments(self, parser):
        parser.add_argument('--config', help='TOML or JSON file with settings for this run')
        parser.add_argument('--seed', type=int, help='Random seed (default: config file, then CONVSEQ_SEED, then 0)')
        parser.add_argument('-o', '--out-dir', dest='out_dir', help='Directory for every output of this run')
        self.add_command_arguments(parser)

    def add_command_arguments(self, parser):
        pass

    def run(self, config, report):
        raise NotImplementedError('subclasses of ConvseqCommand must provide a run() method')

    def handle(self, *args, **options):
        try:
            config = resolve(self.subcommand, options, self.config_keys, self.input_keys,
                             self.required_keys)
        except ValidationError as exc:
            raise CommandError(f'{self.subcommand}: invalid configuration: {_describe(exc)}') from exc

        report = RunReport(self.subcommand, config.to_dict())
        try:
            config.out_dir.mkdir(parents=True, exist_ok=True)
            self.run(config, report)
        except (ConvseqError, ValidationError, OSError, ValueError) as exc:
            # plain ValueErrors come from numpy and scipy argument checks
            report.status = 'failed'
            report.summary['error'] = _describe(exc)
            record_run(report)
            raise CommandError(f'{self.subcommand}: {_describe(exc)}') from exc

        path = report.write(config.output(f'{self.subcommand}_report.json'))
        record_run(report)
        logger.info('%s finished in %.2fs, %d files written', self.subcommand,
                    report.total_seconds, len(report.manifest))
        self.stdout.write(self.style.SUCCESS(f'{self.subcommand}: report written to {path}'))
