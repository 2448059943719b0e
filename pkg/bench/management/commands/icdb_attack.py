import sys
import tempfile

from django.core.management import BaseCommand, CommandError

from bench.attack_suite import ATTACKS, deviations, format_matrix, format_sweep, run_attack_matrix, run_forgery_sweep
from bench.exceptions import BenchException
from codec.exceptions import CodecException
from conversion.exceptions import ConversionException
from rewrite.exceptions import RewriteException
from schemes.exceptions import SchemeException
from store.exceptions import StoreException
from verification.exceptions import VerificationException

SCHEMES = ['rsa', 'pbkdf2', 'aes']
MODELS = ['ocf', 'oct']


class Command(BaseCommand):
    help = 'Runs every attack against every scheme and model and prints the detection matrix'

    def add_arguments(self, parser):
        """Argument handle
        """
        parser.add_argument('--schemes', nargs='+', choices=SCHEMES, default=SCHEMES)
        parser.add_argument('--models', nargs='+', choices=MODELS, default=MODELS)
        parser.add_argument('--attacks', nargs='+', choices=ATTACKS, default=list(ATTACKS))
        parser.add_argument('--rows', type=int, default=8)
        parser.add_argument('--seed', type=int, default=1)
        parser.add_argument('--sweep', action='store_true', help='Also forge every single cell of every table')

    def handle(self, *args, **options):
        """Command handle
        """
        if options['rows'] < 2:
            raise CommandError('The attacks need at least 2 rows', returncode=2)
        try:
            with tempfile.TemporaryDirectory() as work_dir:
                outcomes = run_attack_matrix(options['schemes'], options['models'], work_dir, options['rows'],
                                             options['seed'], options['attacks'])
                sweeps = run_forgery_sweep(options['schemes'], options['models'], work_dir, options['rows'],
                                           options['seed']) if options['sweep'] else []
        except (BenchException, ConversionException, RewriteException, SchemeException, CodecException,
                StoreException, VerificationException, OSError) as e:
            raise CommandError(str(e), returncode=2)

        self.stdout.write(format_matrix(outcomes))
        if sweeps:
            self.stdout.write(format_sweep(sweeps))
        unexpected = deviations(outcomes)
        missed = sum(len(result.misses) for result in sweeps)
        if unexpected or missed:
            self.stderr.write('{} outcome(s) deviate from the expected matrix, {} forgeries missed'.format(
                len(unexpected), missed
            ))
            sys.exit(1)
        self.stdout.write(self.style.SUCCESS('All attacks behaved as expected'))
