import os

from django.conf import settings
from django.core.management import BaseCommand, CommandError

from codec.exceptions import CodecException
from conversion.ddl import emit_load_statements
from conversion.exceptions import ConversionException
from conversion.tasks import convert_catalog
from icrl.exceptions import IcrlException
from icrl.revocation import Icrl
from rewrite.exceptions import RewriteException
from rewrite.schema import SchemaCatalog
from schemes.exceptions import SchemeException
from schemes.keys import read_key_file


class Command(BaseCommand):
    help = 'Converts the dump files of a schema into ICDB data files'

    def add_arguments(self, parser):
        """Argument handle
        """
        parser.add_argument('--model', required=True, choices=['ocf', 'oct'])
        parser.add_argument('--schema', help='Path of the YAML schema file (default: ICDB_SCHEMA_FILE)')
        parser.add_argument('--keys', required=True, help='Path of the key file')
        parser.add_argument('--icrl', required=True, help='Path of the ICRL file (created if missing)')
        parser.add_argument('--in', dest='in_dir', required=True, help='Directory holding <table>.txt dump files')
        parser.add_argument('--out', dest='out_dir', required=True, help='Directory for the converted files')
        parser.add_argument('--load-file', help='Write the LOAD DATA statements to this file instead of stdout')
        parser.add_argument('--salt-seed', type=int, help='Seed PBKDF2 salts for reproducible output')
        parser.add_argument('--tasks', action='store_true', help='Convert the tables as django-q tasks')

    def handle(self, *args, **options):
        """Command handle
        """
        path = options['schema'] or settings.ICDB_SCHEMA_FILE
        if not path:
            raise CommandError('No schema file given and ICDB_SCHEMA_FILE is not set', returncode=2)

        try:
            catalog = SchemaCatalog.load(path)
            read_key_file(options['keys'])
            icrl = Icrl.load_or_create(options['icrl'])
            os.makedirs(options['out_dir'], exist_ok=True)
            outcomes = convert_catalog(
                catalog, options['in_dir'], options['out_dir'], options['model'], options['keys'], icrl,
                salt_seed=options['salt_seed'], use_tasks=options['tasks'],
            )
            icrl.save(options['icrl'])
        except (ConversionException, RewriteException, SchemeException, CodecException, IcrlException,
                OSError) as e:
            raise CommandError(str(e), returncode=2)

        for table_name, out_path, outcome in outcomes:
            if options['tasks']:
                self.stdout.write('{}: queued as task {}'.format(table_name, outcome))
            else:
                self.stdout.write(self.style.SUCCESS('{}: {} row(s), {} -> {} bytes ({:.2f}x)'.format(
                    table_name, outcome.rows, outcome.bytes_in, outcome.bytes_out, outcome.ratio
                )))

        statements = emit_load_statements(catalog, {name: os.path.abspath(out) for name, out, _ in outcomes})
        if options['load_file']:
            with open(options['load_file'], 'w') as f:
                f.write(statements)
        else:
            self.stdout.write(statements, ending='')
