from django.core.management.base import BaseCommand

from quantum_sdk.recoverability.fixed_point_structure import sufficiency_structure

from verification.cli import command_errors
from verification.matrix_io import read_channel, read_state, write_structure


class Command(BaseCommand):
    help = 'Decompose the fixed-point algebra of the Petz map composed with the channel and write the blocks'

    def add_arguments(self, parser):
        parser.add_argument('--channel', required=True)
        parser.add_argument('--sigma', required=True)
        parser.add_argument('--seed', type=int, required=True, help='Seed of the randomized decomposition')
        parser.add_argument('-o', '--output', required=True, help='Destination structure file')

    def handle(self, *args, **options):
        with command_errors():
            channel = read_channel(options['channel'])
            sigma = read_state(options['sigma'])
            structure = sufficiency_structure(channel, sigma, options['seed'])
            write_structure(structure, options['output'])
        blocks = ', '.join(f'({block.d_L}, {block.d_R})' for block in structure.blocks)
        self.stdout.write(self.style.SUCCESS(f"blocks (d_L, d_R): {blocks}; written to {options['output']}"))
