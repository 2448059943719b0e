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
from store.connectors import DjangoConnector
from store.embedded import open_embedded_store
from store.exceptions import StoreException
from verification.exceptions import IntegrityFailure, VerificationException
from verification.runner import QueryRunner


class Command(BaseCommand):
    help = 'Runs a SQL statement against an ICDB and verifies the returned rows'

    def add_arguments(self, parser):
        """Argument handle
        """
        parser.add_argument('--model', required=True, choices=['ocf', 'oct'])
        parser.add_argument('--schema', help='Path of the YAML schema file (default: ICDB_SCHEMA_FILE)')
        parser.add_argument('--suffix', help='Code column suffix of the OCF model (default: ICDB_IC_SUFFIX)')
        parser.add_argument('--keys', required=True, help='Path of the key file')
        parser.add_argument('--icrl', required=True, help='Path of the ICRL file')
        parser.add_argument('--embedded', action='store_true',
                            help='Run on an in-memory store loaded from --data-dir instead of the ICDB_DSN server')
        parser.add_argument('--data-dir', help='Directory holding the converted <table>.txt files (--embedded)')
        parser.add_argument('--workers', type=int, default=settings.ICDB_VERIFY_WORKERS)
        parser.add_argument('--out', choices=['text', 'json'], default='text')
        parser.add_argument('sql')

    def handle(self, *args, **options):
        """Command handle
        """
        try:
            catalog = load_icdb_catalog(options['schema'], options['model'], options['suffix'])
            key = read_key_file(options['keys'])
            icrl = Icrl.load(options['icrl'])
            connector = self._connector(catalog, options)
            runner = QueryRunner(connector, catalog, options['model'], key, icrl, CodecOptions.from_settings(),
                                 options['workers'])
            outcome = runner.run(options['sql'])
        except IntegrityFailure as e:
            self._write_report(e.report, options['out'])
            self.stderr.write('DELETE refused, nothing was deleted')
            sys.exit(1)
        except (RewriteException, SchemeException, CodecException, IcrlException, StoreException,
                VerificationException, OSError) as e:
            raise CommandError(str(e), returncode=2)

        if outcome.kind == 'INSERT':
            self._save(icrl, options)
            self.stdout.write(self.style.SUCCESS('Inserted {} row(s)'.format(outcome.rowcount)))
            return

        if outcome.kind == 'DELETE':
            self._save(icrl, options)
            self.stdout.write(self.style.SUCCESS('Deleted {} row(s), revoked {} serial(s)'.format(
                outcome.rowcount, len(outcome.revoked)
            )))
        elif options['out'] == 'text':
            self.stdout.write('\t'.join(outcome.result.columns))
            for row in outcome.result.rows:
                self.stdout.write('\t'.join('NULL' if cell is None else cell for cell in row))

        self._write_report(outcome.report, options['out'], outcome.result if options['out'] == 'json' else None)
        if not outcome.is_valid:
            sys.exit(1)

    def _connector(self, catalog, options):
        if options['embedded']:
            if not options['data_dir']:
                raise CommandError('--embedded needs --data-dir', returncode=2)
            return open_embedded_store(catalog, options['data_dir'])
        if not settings.ICDB_EXTERNAL_DATABASE:
            raise CommandError('No database configured, pass --dsn or ICDB_DSN, or use --embedded', returncode=2)
        return DjangoConnector(settings.ICDB_DATABASE_ALIAS)

    def _save(self, icrl, options):
        if options['embedded']:
            self.stderr.write('Embedded store is not persisted, the ICRL was left unchanged')
            return
        try:
            icrl.save(options['icrl'])
        except (IcrlException, OSError) as e:
            raise CommandError('Statement ran, but the ICRL could not be saved: {}'.format(e), returncode=2)

    def _write_report(self, report, out, result=None):
        if out == 'json':
            data = report.to_dict()
            if result is not None:
                data['columns'] = list(result.columns)
                data['rows'] = [list(row) for row in result.rows]
            self.stdout.write(json.dumps(data, indent=2))
        else:
            self.stdout.write(report.to_text())
