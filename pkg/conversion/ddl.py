"""DDL, LOAD and dump statements in the MySQL dialect
"""
from rewrite.parser import Literal, quote_identifier
from rewrite.schema import Model

_FIELDS = "FIELDS TERMINATED BY '|' LINES TERMINATED BY '\\n'"


def emit_schema_ddl(table, model, suffix='_IC', serial_column='Serial', ic_column='IC'):
    """ALTER statements that turn a plain table into its ICDB layout

    Raises SchemaMismatchError when a code column would collide with an
    existing one.
    """
    model = Model.parse(model)
    converted = table.to_icdb(model, suffix, serial_column, ic_column)
    name = quote_identifier(table.table_name)

    if model is Model.OCF:
        return ['ALTER TABLE {} ADD COLUMN {} TEXT NOT NULL AFTER {};'.format(
            name, quote_identifier(converted.ic_column_for(column.name)), quote_identifier(column.name)
        ) for column in table.data_columns]

    return [
        'ALTER TABLE {} ADD COLUMN {} BIGINT UNSIGNED NOT NULL;'.format(
            name, quote_identifier(converted.serial_column.name)
        ),
        'ALTER TABLE {} ADD COLUMN {} TEXT NOT NULL;'.format(name, quote_identifier(converted.tuple_ic_column.name)),
    ]


def emit_catalog_ddl(catalog, model, suffix='_IC', serial_column='Serial', ic_column='IC'):
    statements = []
    for table in catalog:
        statements.extend(emit_schema_ddl(table, model, suffix, serial_column, ic_column))
    return statements


def emit_load_statement(table_name, path):
    return 'LOAD DATA INFILE {} REPLACE INTO TABLE {} {};'.format(
        Literal(path).sql(), quote_identifier(table_name), _FIELDS
    )


def emit_load_statements(catalog, paths):
    """One LOAD DATA statement per table; paths maps table names to converted files
    """
    return '\n'.join(emit_load_statement(table.table_name, paths[table.table_name]) for table in catalog) + '\n'


def emit_dump_statement(table_name, path):
    """Statement that dumps a plain table into the data file format conversion reads
    """
    return 'SELECT * INTO OUTFILE {} {} FROM {};'.format(Literal(path).sql(), _FIELDS, quote_identifier(table_name))
