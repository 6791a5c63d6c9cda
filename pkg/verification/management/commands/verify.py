from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from verification.cli import EXIT_INVALID, EXIT_VERIFY
from verification.suite_service import SUITES, UnknownSuiteError, verification_service


class Command(BaseCommand):
    help = f"Run invariant suites ({', '.join(SUITES)} or all); exit code 4 when any check fails"

    def add_arguments(self, parser):
        parser.add_argument('--suite', default='all')
        parser.add_argument('--seed', type=int, help='Seed of the random instances (default PETZLAB_VERIFY_SEED)')
        parser.add_argument('--json', action='store_true', help='Print the full results as JSON')

    def handle(self, *args, **options):
        seed = options['seed'] if options['seed'] is not None else settings.VERIFY_SEED
        try:
            results = verification_service.run(options['suite'], seed)
        except UnknownSuiteError as exc:
            raise CommandError(str(exc), returncode=EXIT_INVALID)

        failed = 0
        for result in results:
            if options['json']:
                self.stdout.write(result.model_dump_json(indent=2))
            status = self.style.SUCCESS('passed') if result.passed else self.style.ERROR('FAILED')
            self.stdout.write(f'suite {result.suite} (seed {seed}): {status}, {len(result.checks)} checks')
            for check_name, failure in result.failures():
                failed += 1
                self.stdout.write(f'  {check_name}: seed {failure.seed}: {failure.detail}')
        if failed:
            raise CommandError(f'{failed} failing instance(s)', returncode=EXIT_VERIFY)
