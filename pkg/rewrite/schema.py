"""Table layouts of plain databases and of their OCF/OCT conversions

A schema file is YAML:

    tables:
      - name: City
        key: [ID]
        columns: [ID, Name, CountryCode, District, Population]

Tables may also be declared in converted form (`model: ocf|oct`, columns as
mappings with `ic: true` / `serial: true`).
"""
import enum
import logging
from dataclasses import dataclass, field, replace
from typing import Optional, Tuple

import yaml

from rewrite.exceptions import (
    AmbiguousColumnError, SchemaFileError, SchemaMismatchError, UnknownColumnError, UnknownTableError,
)

logger = logging.getLogger(__name__)


class Model(enum.Enum):
    OCF = 'ocf'
    OCT = 'oct'

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise SchemaMismatchError('Unknown ICDB model "{}"'.format(value))


@dataclass(frozen=True)
class Column:
    name: str
    is_key: bool = False
    is_ic: bool = False
    is_serial: bool = False

    @property
    def is_data(self):
        return not (self.is_ic or self.is_serial)


@dataclass(frozen=True)
class TableSchema:
    table_name: str
    columns: Tuple[Column, ...]
    model: Optional[Model] = None
    ic_suffix: str = '_IC'
    _index: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, 'columns', tuple(self.columns))
        object.__setattr__(self, '_index', {column.name.lower(): i for i, column in enumerate(self.columns)})

    @property
    def column_names(self):
        return [column.name for column in self.columns]

    @property
    def data_columns(self):
        return [column for column in self.columns if column.is_data]

    @property
    def data_column_names(self):
        return [column.name for column in self.data_columns]

    @property
    def key_columns(self):
        return [column for column in self.columns if column.is_key]

    @property
    def serial_column(self):
        return next((column for column in self.columns if column.is_serial), None)

    @property
    def tuple_ic_column(self):
        if self.model is not Model.OCT:
            return None
        return next((column for column in self.columns if column.is_ic), None)

    def has_column(self, name):
        return name.lower() in self._index

    def position(self, name):
        try:
            return self._index[name.lower()]
        except KeyError:
            raise UnknownColumnError('Table {} has no column "{}"'.format(self.table_name, name))

    def column(self, name):
        return self.columns[self.position(name)]

    def ic_column_for(self, name):
        """Name of the OCF code column that accompanies a data column
        """
        column = self.column(name)
        companion = column.name + self.ic_suffix
        if self.model is not Model.OCF or not self.has_column(companion) or not self.column(companion).is_ic:
            raise SchemaMismatchError('Column {}.{} has no "{}" code column'.format(
                self.table_name, column.name, companion
            ))
        return self.column(companion).name

    def validate(self):
        if not self.key_columns:
            raise SchemaMismatchError('Table {} has no key column'.format(self.table_name))
        if len(self._index) != len(self.columns):
            raise SchemaMismatchError('Table {} repeats a column name'.format(self.table_name))
        if self.model is None:
            if any(not column.is_data for column in self.columns):
                raise SchemaMismatchError('Plain table {} declares code columns'.format(self.table_name))
        elif self.model is Model.OCF:
            expected = []
            for column in self.data_columns:
                expected.extend([column.name.lower(), (column.name + self.ic_suffix).lower()])
            if [column.name.lower() for column in self.columns] != expected or \
                    any(not self.columns[i].is_ic for i in range(1, len(self.columns), 2)):
                raise SchemaMismatchError('Table {} is not in OCF layout'.format(self.table_name))
        else:
            serials = [column for column in self.columns if column.is_serial]
            codes = [column for column in self.columns if column.is_ic]
            if len(serials) != 1 or len(codes) != 1:
                raise SchemaMismatchError('OCT table {} needs exactly one serial and one IC column'.format(
                    self.table_name
                ))
        return self

    def to_icdb(self, model, suffix='_IC', serial_column='Serial', ic_column='IC'):
        """Converted layout of a plain table
        """
        model = Model.parse(model)
        if self.model is not None:
            if self.model is not model:
                raise SchemaMismatchError('Table {} is already converted to {}'.format(
                    self.table_name, self.model.value
                ))
            return self

        columns = []
        if model is Model.OCF:
            for column in self.columns:
                companion = column.name + suffix
                if self.has_column(companion):
                    raise SchemaMismatchError('Table {} already has a column named {}'.format(
                        self.table_name, companion
                    ))
                columns.extend([column, Column(companion, is_ic=True)])
        else:
            for name in (serial_column, ic_column):
                if self.has_column(name):
                    raise SchemaMismatchError('Table {} already has a column named {}'.format(self.table_name, name))
            columns = list(self.columns) + [Column(serial_column, is_serial=True), Column(ic_column, is_ic=True)]
        return replace(self, columns=tuple(columns), model=model, ic_suffix=suffix)


def plain_table(name, columns, key):
    key = {part.lower() for part in key}
    return TableSchema(name, tuple(Column(column, is_key=column.lower() in key) for column in columns)).validate()


class SchemaCatalog:
    """Case-insensitive set of table schemas
    """

    def __init__(self, tables=()):
        self._tables = {}
        for table in tables:
            if table.table_name.lower() in self._tables:
                raise SchemaFileError('Table {} is declared twice'.format(table.table_name))
            self._tables[table.table_name.lower()] = table

    def __iter__(self):
        return iter(self._tables.values())

    def __len__(self):
        return len(self._tables)

    def table(self, name):
        try:
            return self._tables[name.lower()]
        except KeyError:
            raise UnknownTableError('Unknown table "{}"'.format(name))

    def to_icdb(self, model, suffix='_IC', serial_column='Serial', ic_column='IC'):
        return SchemaCatalog(table.to_icdb(model, suffix, serial_column, ic_column) for table in self)

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict) or not isinstance(data.get('tables'), list):
            raise SchemaFileError('Schema must be a mapping with a "tables" list')
        tables = []
        for entry in data['tables']:
            try:
                tables.append(_table_from_entry(entry))
            except (KeyError, TypeError, AttributeError) as e:
                raise SchemaFileError('Malformed table entry {!r}: {}'.format(entry, e))
        return cls(tables)

    @classmethod
    def from_yaml(cls, text):
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as e:
            raise SchemaFileError('Invalid YAML: {}'.format(e))
        return cls.from_dict(data)

    @classmethod
    def load(cls, path):
        with open(path, 'r', encoding='utf-8') as f:
            catalog = cls.from_yaml(f.read())
        logger.info('Loaded {} table schema(s) from "{}"'.format(len(catalog), path))
        return catalog

    def to_dict(self):
        return {'tables': [_entry_from_table(table) for table in self]}

    def dumps(self):
        return yaml.safe_dump(self.to_dict(), sort_keys=False)


def _table_from_entry(entry):
    key = {str(part).lower() for part in entry['key']}
    columns = []
    for column in entry['columns']:
        if isinstance(column, dict):
            name = str(column['name'])
            columns.append(Column(name, is_key=name.lower() in key, is_ic=bool(column.get('ic')),
                                  is_serial=bool(column.get('serial'))))
        else:
            columns.append(Column(str(column), is_key=str(column).lower() in key))
    model = Model.parse(entry['model']) if entry.get('model') else None
    return TableSchema(str(entry['name']), tuple(columns), model=model,
                       ic_suffix=str(entry.get('suffix', '_IC'))).validate()


def _entry_from_table(table):
    entry = {'name': table.table_name, 'key': [column.name for column in table.key_columns]}
    if table.model is None:
        entry['columns'] = table.column_names
    else:
        entry['model'] = table.model.value
        entry['suffix'] = table.ic_suffix
        entry['columns'] = [
            {'name': column.name, 'ic': True} if column.is_ic
            else {'name': column.name, 'serial': True} if column.is_serial
            else column.name
            for column in table.columns
        ]
    return entry


def resolve_column(ref, scope, include_codes=False):
    """Find the table of a column reference among the tables of a query

    scope is a list of (alias, TableSchema) pairs where alias is the name the
    query uses for the table. Returns (scope position, Column).
    """
    candidates = []
    for position, (alias, table) in enumerate(scope):
        if ref.table is not None and ref.table.lower() not in (alias.lower(), table.table_name.lower()):
            continue
        if table.has_column(ref.name):
            column = table.column(ref.name)
            if column.is_data or include_codes:
                candidates.append((position, column))

    if not candidates:
        if ref.table is not None and not any(
                ref.table.lower() in (alias.lower(), table.table_name.lower()) for alias, table in scope):
            raise UnknownTableError('Table "{}" is not part of the query'.format(ref.table))
        raise UnknownColumnError('Unknown column "{}"'.format(ref.sql()))
    if len(candidates) > 1:
        raise AmbiguousColumnError('Column "{}" is ambiguous'.format(ref.sql()))
    return candidates[0]


def load_icdb_catalog(path, model, suffix=None):
    """Load a schema file and convert it to the ICDB layout of a model

    Falls back to ICDB_SCHEMA_FILE and the configured code column names.
    """
    from django.conf import settings

    path = path or settings.ICDB_SCHEMA_FILE
    if not path:
        raise SchemaFileError('No schema file given and ICDB_SCHEMA_FILE is not set')
    try:
        catalog = SchemaCatalog.load(path)
    except OSError as e:
        raise SchemaFileError('Cannot read schema file "{}": {}'.format(path, e))
    return catalog.to_icdb(
        model,
        suffix=suffix or settings.ICDB_IC_SUFFIX,
        serial_column=settings.ICDB_OCT_SERIAL_COLUMN,
        ic_column=settings.ICDB_OCT_IC_COLUMN,
    )
