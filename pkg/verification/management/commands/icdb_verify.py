import json
import sys

from django.conf import settings
from django.core.management import BaseCommand, CommandError

from codec.codes import CodecOptions
from codec.exceptions import CodecException
from icrl.exceptions import IcrlException
from icrl.revocation import Icrl
from rewrite.exceptions import RewriteException
from rewrite.schema import load_icdb_catalog
from schemes.exceptions import SchemeException
from schemes.keys import read_key_file
from store.embedded import open_embedded_store
from store.exceptions import StoreException
from verification.exceptions import VerificationException
from verification.report import VerificationReport
from verification.runner import QueryRunner


class Command(BaseCommand):
    help = 'Verifies every code of the converted data files of a schema'

    def add_arguments(self, parser):
        """Argument handle
        """
        parser.add_argument('--model', required=True, choices=['ocf', 'oct'])
        parser.add_argument('--schema', help='Path of the YAML schema file (default: ICDB_SCHEMA_FILE)')
        parser.add_argument('--suffix', help='Code column suffix of the OCF model (default: ICDB_IC_SUFFIX)')
        parser.add_argument('--keys', required=True, help='Path of the key file')
        parser.add_argument('--icrl', required=True, help='Path of the ICRL file')
        parser.add_argument('--data-dir', required=True, help='Directory holding the converted <table>.txt files')
        parser.add_argument('--table', action='append', help='Only verify this table (repeatable)')
        parser.add_argument('--workers', type=int, default=settings.ICDB_VERIFY_WORKERS)
        parser.add_argument('--out', choices=['text', 'json'], default='text')

    def handle(self, *args, **options):
        """Command handle
        """
        reports = {}
        try:
            catalog = load_icdb_catalog(options['schema'], options['model'], options['suffix'])
            key = read_key_file(options['keys'])
            icrl = Icrl.load(options['icrl'])
            store = open_embedded_store(catalog, options['data_dir'])
            runner = QueryRunner(store, catalog, options['model'], key, icrl, CodecOptions.from_settings(),
                                 options['workers'])
            names = options['table'] or [table.table_name for table in catalog]
            for name in names:
                table = catalog.table(name)
                reports[table.table_name] = runner.run('SELECT * FROM `{}`;'.format(table.table_name)).report
        except (RewriteException, SchemeException, CodecException, IcrlException, StoreException,
                VerificationException, OSError) as e:
            raise CommandError(str(e), returncode=2)

        if options['out'] == 'json':
            self.stdout.write(json.dumps({name: report.to_dict() for name, report in reports.items()}, indent=2))
        else:
            for name, report in reports.items():
                self.stdout.write('== {}'.format(name))
                self.stdout.write(report.to_text())

        overall = VerificationReport.merge(reports.values())
        if not overall.is_valid:
            self.stderr.write('{} of {} checks failed'.format(len(overall.failures), overall.total))
            sys.exit(1)
        self.stdout.write(self.style.SUCCESS('All {} checks VALID'.format(overall.total)))
