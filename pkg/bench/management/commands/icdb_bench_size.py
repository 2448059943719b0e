import tempfile

from django.conf import settings
from django.core.management import BaseCommand, CommandError

from bench.exceptions import BenchException
from bench.harness import OUTPUT_FORMATS, format_csv, format_json, run_size_bench
from codec.codes import CodecOptions
from codec.exceptions import CodecException
from conversion.exceptions import ConversionException
from rewrite.exceptions import RewriteException
from schemes.exceptions import SchemeException

SCHEMES = ['rsa', 'pbkdf2', 'aes']
MODELS = ['ocf', 'oct']


class Command(BaseCommand):
    help = 'Measures the size of a dataset before and after conversion'

    def add_arguments(self, parser):
        """Argument handle
        """
        parser.add_argument('--dataset', required=True, help='Directory written by icdb_generate_dataset')
        parser.add_argument('--schemes', nargs='+', choices=SCHEMES, default=SCHEMES)
        parser.add_argument('--models', nargs='+', choices=MODELS, default=MODELS)
        parser.add_argument('--iterations', type=int, default=settings.ICDB_BENCH_MIN_ITERATIONS,
                            help='Timed conversions per scheme and model, warm-up runs excluded')
        parser.add_argument('--work-dir', help='Keep the converted files here (default: a temporary directory)')
        parser.add_argument('--out', choices=OUTPUT_FORMATS, default='text', help='Format of the results')
        parser.add_argument('--path', help='Write the results to this file instead of stdout')
        parser.add_argument('--save', action='store_true', help='Store the results as BenchResult rows')

    def handle(self, *args, **options):
        """Command handle
        """
        if options['iterations'] < 1:
            raise CommandError('At least one iteration is required', returncode=2)
        try:
            if options['work_dir']:
                results = self._run(options['work_dir'], options)
            else:
                with tempfile.TemporaryDirectory() as work_dir:
                    results = self._run(work_dir, options)
        except (BenchException, ConversionException, RewriteException, SchemeException, CodecException,
                OSError) as e:
            raise CommandError(str(e), returncode=2)

        if options['save']:
            for result in results:
                result.save()
        self._write(self._render(results, options['out']), options['path'])

    def _run(self, work_dir, options):
        return run_size_bench(options['dataset'], options['schemes'], options['models'], work_dir,
                              options=CodecOptions.from_settings(), iterations=options['iterations'],
                              warmup_share=settings.ICDB_BENCH_WARMUP_SHARE)

    def _render(self, results, out):
        if out == 'csv':
            return format_csv(results)
        if out == 'json':
            return format_json(results)
        return ''.join('{:<8} {:<4} {:<16} {:>16.2f}\n'.format(
            result.scheme or '-', result.model, result.metric, result.mean
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
