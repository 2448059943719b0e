from django.core.management import BaseCommand, CommandError

from codec.codes import CodecOptions
from icrl.exceptions import IcrlException
from icrl.revocation import Icrl
from rewrite.exceptions import RewriteException
from rewrite.parser import parse
from rewrite.rewriter import plan_delete, plan_insert, rewrite_select
from rewrite.schema import load_icdb_catalog
from schemes.exceptions import SchemeException
from schemes.keys import read_key_file


class Command(BaseCommand):
    help = 'Rewrites a SQL statement into the statement(s) to run against an ICDB'

    def add_arguments(self, parser):
        """Argument handle
        """
        parser.add_argument('--model', required=True, choices=['ocf', 'oct'])
        parser.add_argument('--suffix', help='Code column suffix of the OCF model (default: ICDB_IC_SUFFIX)')
        parser.add_argument('--schema', help='Path of the YAML schema file (default: ICDB_SCHEMA_FILE)')
        parser.add_argument('--scheme', choices=['rsa', 'pbkdf2', 'aes'], default='aes',
                            help='Code scheme, decides whether OCT projections need a second fetch')
        parser.add_argument('--keys', help='Path of the key file (INSERT only)')
        parser.add_argument('--icrl', help='Path of the ICRL file serials are allocated from (INSERT only)')
        parser.add_argument('sql')

    def handle(self, *args, **options):
        """Command handle
        """
        try:
            catalog = load_icdb_catalog(options['schema'], options['model'], options['suffix'])
            query = parse(options['sql'])
            if query.kind == 'SELECT':
                plan = rewrite_select(query, catalog, options['model'], options['scheme'])
            elif query.kind == 'DELETE':
                plan = plan_delete(query, catalog, options['model'])
            else:
                plan = self._insert(query, catalog, options)
        except (RewriteException, SchemeException, IcrlException, OSError) as e:
            raise CommandError(str(e), returncode=2)

        self.stdout.write(plan.icdb_sql)
        if plan.second_fetch_sql:
            self.stdout.write(plan.second_fetch_sql)
        if plan.kind == 'DELETE':
            self.stdout.write(plan.statement_sql)
            self.stdout.write('-- then revoke the serials of the selected rows')

    def _insert(self, query, catalog, options):
        if not options['keys'] or not options['icrl']:
            raise CommandError('INSERT needs --keys and --icrl', returncode=2)
        key = read_key_file(options['keys'])
        icrl = Icrl.load_or_create(options['icrl'])
        plan = plan_insert(query, catalog, options['model'], key, icrl, CodecOptions.from_settings())
        icrl.save(options['icrl'])
        return plan
