from django.core.management import BaseCommand, CommandError

from bench.datasets import PROFILES, generate_dataset
from bench.exceptions import BenchException


class Command(BaseCommand):
    help = 'Writes a synthetic dataset (schema file and dump files) for the benchmarks'

    def add_arguments(self, parser):
        """Argument handle
        """
        parser.add_argument('--profile', choices=PROFILES, default='world')
        parser.add_argument('--rows', type=int, default=1000, help='Rows of the main table')
        parser.add_argument('--seed', type=int, default=1)
        parser.add_argument('--out', dest='out_dir', required=True, help='Directory to write the dataset to')

    def handle(self, *args, **options):
        """Command handle
        """
        if options['rows'] < 2:
            raise CommandError('A dataset needs at least 2 rows', returncode=2)
        try:
            catalog = generate_dataset(options['profile'], options['rows'], options['seed'], options['out_dir'])
        except (BenchException, OSError) as e:
            raise CommandError(str(e), returncode=2)
        self.stdout.write(self.style.SUCCESS('Wrote {} table(s) of the {} profile to {}'.format(
            len(catalog), options['profile'], options['out_dir']
        )))
