from django.conf import settings
from django.core.management import BaseCommand, CommandError

from conversion.ddl import emit_catalog_ddl, emit_dump_statement
from conversion.tasks import data_file_path
from rewrite.exceptions import RewriteException
from rewrite.schema import SchemaCatalog


class Command(BaseCommand):
    help = 'Prints the DDL that converts a plain schema into its ICDB layout'

    def add_arguments(self, parser):
        """Argument handle
        """
        parser.add_argument('--model', required=True, choices=['ocf', 'oct'])
        parser.add_argument('--suffix', help='Code column suffix of the OCF model (default: ICDB_IC_SUFFIX)')
        parser.add_argument('--schema', help='Path of the YAML schema file (default: ICDB_SCHEMA_FILE)')
        parser.add_argument('--dump-dir', help='Also print the statements dumping every table into this directory')

    def handle(self, *args, **options):
        """Command handle
        """
        path = options['schema'] or settings.ICDB_SCHEMA_FILE
        if not path:
            raise CommandError('No schema file given and ICDB_SCHEMA_FILE is not set', returncode=2)
        try:
            catalog = SchemaCatalog.load(path)
            statements = emit_catalog_ddl(
                catalog, options['model'],
                suffix=options['suffix'] or settings.ICDB_IC_SUFFIX,
                serial_column=settings.ICDB_OCT_SERIAL_COLUMN,
                ic_column=settings.ICDB_OCT_IC_COLUMN,
            )
        except (RewriteException, OSError) as e:
            raise CommandError(str(e), returncode=2)

        if options['dump_dir']:
            for table in catalog:
                self.stdout.write(emit_dump_statement(table.table_name,
                                                      data_file_path(options['dump_dir'], table.table_name)))
        for statement in statements:
            self.stdout.write(statement)
