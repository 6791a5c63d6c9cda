import json
from pathlib import Path

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from quantum_sdk.recoverability.manager import ExperimentManager
from quantum_sdk.recoverability.schemas import ExperimentConfig

from verification.cli import EXIT_INVALID, command_errors


class Command(BaseCommand):
    help = 'Seeded sweep of DPI gaps, Petz recovery errors and sufficiency checks; writes a JSON report'

    def add_arguments(self, parser):
        parser.add_argument('--seed', type=int, required=True, help='Root seed of the sweep')
        parser.add_argument('--config', help='JSON file with ExperimentConfig fields; flags below override it')
        parser.add_argument('--dim', type=int)
        parser.add_argument('--env-dim', type=int)
        parser.add_argument('--trials', type=int)
        parser.add_argument('--alphas', type=float, nargs='+')
        parser.add_argument('--workers', type=int)
        parser.add_argument('--identity', action='store_true', help='Use the identity channel for random instances')
        parser.add_argument('--no-constructed', action='store_true', help='Skip block-built sufficient instances')
        parser.add_argument('-o', '--output', help='Report destination; printed when omitted')

    def _config(self, options) -> ExperimentConfig:
        values = {}
        if options['config']:
            try:
                values = json.loads(Path(options['config']).read_text())
            except (OSError, ValueError) as exc:
                raise CommandError(f"cannot read config {options['config']}: {exc}", returncode=EXIT_INVALID)
        overrides = {
            'seed': options['seed'],
            'dim': options['dim'],
            'env_dim': options['env_dim'],
            'trials': options['trials'],
            'alphas': options['alphas'],
            'workers': options['workers'],
            'output_path': options['output'],
        }
        values.update({key: value for key, value in overrides.items() if value is not None})
        if options['identity']:
            values['identity'] = True
        if options['no_constructed']:
            values['constructed'] = False
        values.setdefault('workers', settings.EXPERIMENT_WORKERS)
        return ExperimentConfig.model_validate(values)

    def handle(self, *args, **options):
        with command_errors():
            config = self._config(options)
        report = ExperimentManager(config).run()
        text = report.model_dump_json(indent=2)
        if config.output_path:
            Path(config.output_path).write_text(text + '\n')
            aggregates = report.aggregates
            style = self.style.SUCCESS if report.passed else self.style.WARNING
            self.stdout.write(
                style(
                    f'{aggregates.records} records, {aggregates.failed} failed, '
                    f'min gap {aggregates.min_gap}; report written to {config.output_path}'
                )
            )
        else:
            self.stdout.write(text)
