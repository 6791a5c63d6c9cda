from django.core.management.base import BaseCommand

from quantum_sdk.recoverability.recovery import petz_map

from verification.cli import command_errors
from verification.matrix_io import read_channel, read_state, write_channel


class Command(BaseCommand):
    help = 'Write the Petz recovery map of a channel with respect to a reference state'

    def add_arguments(self, parser):
        parser.add_argument('--channel', required=True, help='Channel file (Kraus or Choi form)')
        parser.add_argument('--sigma', required=True, help='Reference state file')
        parser.add_argument('-o', '--output', required=True, help='Destination channel file')

    def handle(self, *args, **options):
        with command_errors():
            channel = read_channel(options['channel'])
            sigma = read_state(options['sigma'])
            recovery = petz_map(channel, sigma)
            write_channel(recovery, options['output'])
        self.stdout.write(
            self.style.SUCCESS(
                f"Petz map {recovery.dim_in}->{recovery.dim_out} with {len(recovery.kraus_ops)} "
                f"Kraus operators written to {options['output']}"
            )
        )
