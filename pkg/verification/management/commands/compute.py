from django.core.management.base import BaseCommand, CommandError

from quantum_sdk.recoverability.divergences import DIVERGENCE_KINDS, divergence

from verification.cli import EXIT_SUPPORT, command_errors
from verification.matrix_io import read_state


class Command(BaseCommand):
    help = 'Divergence between two states given as JSON matrix files (nats unless --bits)'

    def add_arguments(self, parser):
        parser.add_argument('--rho', required=True, help='State file of rho')
        parser.add_argument('--sigma', required=True, help='State file of sigma')
        parser.add_argument('--alpha', help='Order, e.g. 2 or 3/2; not used by umegaki and dmax')
        parser.add_argument(
            '--kind', default='renyi_sandwiched', help=f"One of {', '.join(DIVERGENCE_KINDS)}"
        )
        parser.add_argument('--bits', action='store_true', help='Report the value in bits')

    def handle(self, *args, **options):
        with command_errors():
            rho = read_state(options['rho'])
            sigma = read_state(options['sigma'])
            result = divergence(rho, sigma, options['kind'], options['alpha'])
        if options['bits']:
            result = result.in_bits()
        self.stdout.write(result.model_dump_json())
        if not result.finite:
            raise CommandError('divergence is +inf: supp(rho) is not contained in supp(sigma)', returncode=EXIT_SUPPORT)
