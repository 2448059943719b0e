import os
import tempfile

from django.conf import settings
from django.core.management import BaseCommand, CommandError

import rewrite
from bench.exceptions import BenchException
from bench.harness import OUTPUT_FORMATS, format_csv, format_json, load_corpus, run_time_bench
from codec.codes import CodecOptions
from codec.exceptions import CodecException
from conversion.exceptions import ConversionException
from rewrite.exceptions import RewriteException
from schemes.exceptions import SchemeException
from store.exceptions import StoreException
from verification.exceptions import VerificationException

SCHEMES = ['rsa', 'pbkdf2', 'aes']
MODELS = ['ocf', 'oct']
DEFAULT_CORPUS = os.path.join(os.path.dirname(rewrite.__file__), 'fixtures', 'corpus.yaml')


class Command(BaseCommand):
    help = 'Times conversion, query execution and verification of a dataset'

    def add_arguments(self, parser):
        """Argument handle
        """
        parser.add_argument('--dataset', required=True, help='Directory written by icdb_generate_dataset')
        parser.add_argument('--schemes', nargs='+', choices=SCHEMES, default=SCHEMES)
        parser.add_argument('--models', nargs='+', choices=MODELS, default=MODELS)
        parser.add_argument('--corpus', default=DEFAULT_CORPUS, help='YAML file of SELECT, DELETE and INSERT '
                                                                     'statements (statements on missing tables '
                                                                     'are skipped)')
        parser.add_argument('--iterations', type=int, default=settings.ICDB_BENCH_MIN_ITERATIONS)
        parser.add_argument('--workers', type=int, default=settings.ICDB_VERIFY_WORKERS)
        parser.add_argument('--work-dir', help='Keep the converted files here (default: a temporary directory)')
        parser.add_argument('--out', choices=OUTPUT_FORMATS, default='text', help='Format of the results')
        parser.add_argument('--path', help='Write the results to this file instead of stdout')
        parser.add_argument('--save', action='store_true', help='Store the results as BenchResult rows')

    def handle(self, *args, **options):
        """Command handle
        """
        if options['iterations'] < 1:
            raise CommandError('At least one iteration is required', returncode=2)
        if options['iterations'] < settings.ICDB_BENCH_MIN_ITERATIONS:
            self.stderr.write(self.style.WARNING('Fewer than {} iterations, means may be unstable'.format(
                settings.ICDB_BENCH_MIN_ITERATIONS
            )))

        try:
            corpus = load_corpus(options['corpus']) if options['corpus'] else None
            if options['work_dir']:
                results = self._run(options['work_dir'], corpus, options)
            else:
                with tempfile.TemporaryDirectory() as work_dir:
                    results = self._run(work_dir, corpus, options)
        except (BenchException, ConversionException, RewriteException, SchemeException, CodecException,
                StoreException, VerificationException, OSError) as e:
            raise CommandError(str(e), returncode=2)

        if options['save']:
            for result in results:
                result.save()
        self._write(self._render(results, options['out']), options['path'])

    def _run(self, work_dir, corpus, options):
        return run_time_bench(options['dataset'], options['schemes'], options['models'], work_dir, corpus,
                              options['iterations'], options['workers'], settings.ICDB_BENCH_WARMUP_SHARE,
                              options=CodecOptions.from_settings())

    def _render(self, results, out):
        if out == 'csv':
            return format_csv(results)
        if out == 'json':
            return format_json(results)
        return ''.join('{:<8} {:<4} {:<18} {:>14.3f} ±{:<10.3f} {}\n'.format(
            result.scheme or '-', result.model, result.metric, result.mean, result.std, result.query
        ) for result in results)

    def _write(self, text, path):
        if not path:
            self.stdout.write(text, ending='')
            return
        try:
            with open(path, 'w', newline='', encoding='utf-8') as f:
                f.write(text)
        except OSError as e:
            raise CommandError('Cannot write "{}": {}'.format(path, e), returncode=2)
