from django.core.management.base import BaseCommand

from quantum_sdk.recoverability.recovery import is_sufficient

from verification.cli import command_errors
from verification.matrix_io import read_channel, read_state


class Command(BaseCommand):
    help = 'Test whether a channel is sufficient for the pair {rho, sigma}'

    def add_arguments(self, parser):
        parser.add_argument('--channel', required=True)
        parser.add_argument('--rho', required=True)
        parser.add_argument('--sigma', required=True)
        parser.add_argument('--alpha', default='2', help='Order of the sandwiched DPI gap (default 2)')
        parser.add_argument('--tol', type=float, help='Recovery error treated as sufficient')

    def handle(self, *args, **options):
        with command_errors():
            channel = read_channel(options['channel'])
            rho = read_state(options['rho'])
            sigma = read_state(options['sigma'])
            report = is_sufficient(channel, rho, sigma, tol=options['tol'], alpha=options['alpha'])
        self.stdout.write(report.model_dump_json(indent=2))
