"""In-memory table store evaluating the parser's SQL subset

Cells are text or None. Comparisons follow the server's loose typing: when
both operands read as decimal numbers they compare numerically, otherwise as
strings; any comparison with NULL is false.
"""
import itertools
import logging
import os
import threading
from decimal import Decimal, InvalidOperation

from conversion.datafile import read_data_file
from rewrite.exceptions import UnknownTableError
from rewrite.parser import BoolOp, ColumnRef, parse
from rewrite.schema import resolve_column
from store.connectors import Connector, ResultSet
from store.exceptions import ConstraintViolationError, ExecutionError, UnknownRowError

logger = logging.getLogger(__name__)

_COMPARE = {
    '=': lambda a, b: a == b,
    '!=': lambda a, b: a != b,
    '<>': lambda a, b: a != b,
    '<': lambda a, b: a < b,
    '>': lambda a, b: a > b,
    '<=': lambda a, b: a <= b,
    '>=': lambda a, b: a >= b,
}


def _number(text):
    try:
        number = Decimal(text.strip())
    except (InvalidOperation, ValueError):
        return None
    return number if number.is_finite() else None


def compare(left, op, right):
    if left is None or right is None:
        return False
    a, b = _number(left), _number(right)
    if a is None or b is None:
        a, b = left, right
    return _COMPARE[op](a, b)


class _Table:
    def __init__(self, schema):
        self.schema = schema
        self.key_positions = [schema.position(column.name) for column in schema.key_columns]
        self.rows = []
        self.keys = {}

    def key_of(self, row):
        return tuple(row[position] for position in self.key_positions)

    def reindex(self):
        self.keys = {self.key_of(row): i for i, row in enumerate(self.rows)}

    def add(self, row, replace=False):
        key = self.key_of(row)
        if any(part is None for part in key):
            raise ConstraintViolationError('NULL key in {}'.format(self.schema.table_name))
        if key in self.keys:
            if not replace:
                raise ConstraintViolationError('Duplicate key {} in {}'.format(key, self.schema.table_name))
            self.rows[self.keys[key]] = row
            return
        self.keys[key] = len(self.rows)
        self.rows.append(row)


class EmbeddedStore(Connector):
    supports_load_data = True
    supports_alter = False

    def __init__(self):
        self._tables = {}
        self._lock = threading.RLock()

    def create_table(self, schema):
        with self._lock:
            if schema.table_name.lower() in self._tables:
                raise ExecutionError('Table {} already exists'.format(schema.table_name))
            self._tables[schema.table_name.lower()] = _Table(schema)

    def table(self, name):
        try:
            return self._tables[name.lower()]
        except KeyError:
            raise UnknownTableError('Unknown table "{}"'.format(name))

    def schema_of(self, name):
        return self.table(name).schema

    def rows_of(self, name):
        return [tuple(row) for row in self.table(name).rows]

    def load_data_file(self, name, path):
        """LOAD DATA ... REPLACE: rows with an existing key overwrite it
        """
        table = self.table(name)
        rows = read_data_file(path)
        with self._lock:
            for number, row in enumerate(rows, 1):
                if len(row) != len(table.schema.columns):
                    raise ExecutionError('Row {} of "{}" has {} fields, {} expects {}'.format(
                        number, path, len(row), table.schema.table_name, len(table.schema.columns)
                    ))
                table.add(list(row), replace=True)
        logger.info('Loaded {} row(s) into {}'.format(len(rows), table.schema.table_name))
        return len(rows)

    # Row level access used by the attack operations

    def find_row(self, name, key):
        table = self.table(name)
        try:
            return table.keys[tuple(key)]
        except KeyError:
            raise UnknownRowError('No row with key {} in {}'.format(tuple(key), table.schema.table_name))

    def get_row(self, name, key):
        return tuple(self.table(name).rows[self.find_row(name, key)])

    def set_cell(self, name, key, column, value):
        table = self.table(name)
        with self._lock:
            index = self.find_row(name, key)
            row = table.rows[index]
            row[table.schema.position(column)] = value
            if table.schema.position(column) in table.key_positions:
                table.reindex()

    def swap_cells(self, name, pairs):
        """Swap cells between rows; pairs holds ((key_a, column_a), (key_b, column_b)) coordinates
        """
        table = self.table(name)
        with self._lock:
            located = [((self.find_row(name, key_a), table.schema.position(column_a)),
                        (self.find_row(name, key_b), table.schema.position(column_b)))
                       for (key_a, column_a), (key_b, column_b) in pairs]
            for (row_a, cell_a), (row_b, cell_b) in located:
                rows = table.rows
                rows[row_a][cell_a], rows[row_b][cell_b] = rows[row_b][cell_b], rows[row_a][cell_a]
            table.reindex()

    def insert_row(self, name, row, replace=False):
        table = self.table(name)
        if len(row) != len(table.schema.columns):
            raise ExecutionError('{} expects {} cells, got {}'.format(
                table.schema.table_name, len(table.schema.columns), len(row)
            ))
        with self._lock:
            table.add(list(row), replace=replace)

    def delete_row(self, name, key):
        table = self.table(name)
        with self._lock:
            del table.rows[self.find_row(name, key)]
            table.reindex()

    # Statements

    def execute(self, sql):
        query = parse(sql) if isinstance(sql, str) else sql
        logger.debug('Embedded {} on {}'.format(query.kind, ', '.join(t.name for t in query.all_tables)))
        if query.kind == 'SELECT':
            return self._select(query)
        with self._lock:
            if query.kind == 'DELETE':
                return self._delete(query)
            return self._insert(query)

    def _scope(self, query):
        return [(ref.name, self.table(ref.name).schema) for ref in query.all_tables]

    def _compile(self, expression, scope):
        """Turn an expression into a predicate over a list of rows, one per table in scope
        """
        if isinstance(expression, BoolOp):
            parts = [self._compile(operand, scope) for operand in expression.operands]
            if expression.op == 'AND':
                return lambda rows: all(part(rows) for part in parts)
            return lambda rows: any(part(rows) for part in parts)
        left = self._operand(expression.left, scope)
        right = self._operand(expression.right, scope)
        op = expression.op
        return lambda rows: compare(left(rows), op, right(rows))

    def _operand(self, operand, scope):
        if isinstance(operand, ColumnRef):
            position, column = resolve_column(operand, scope, include_codes=True)
            index = scope[position][1].position(column.name)
            return lambda rows: rows[position][index]
        value = operand.value
        return lambda rows: value

    def _matches(self, query, scope):
        """Combinations of rows (one per table in scope) passing the joins and the WHERE clause
        """
        where = self._compile(query.where, scope) if query.where is not None else None
        width = len(query.tables)
        joins = [(self.table(join.table.name).rows, self._compile(join.condition, scope[:width + depth + 1]))
                 for depth, join in enumerate(query.joins)]
        sources = [self.table(ref.name).rows for ref in query.tables]
        for combination in itertools.product(*sources):
            yield from self._join(list(combination), joins, where)

    def _join(self, rows, joins, where):
        if not joins:
            if where is None or where(rows):
                yield rows
            return
        candidates, condition = joins[0]
        for row in candidates:
            candidate = rows + [row]
            if condition(candidate):
                yield from self._join(candidate, joins[1:], where)

    def _select(self, query):
        scope = self._scope(query)
        if query.star:
            picks = [(position, i) for position, (_, schema) in enumerate(scope) for i in range(len(schema.columns))]
            names = [schema.columns[i].name for position, (_, schema) in enumerate(scope)
                     for i in range(len(schema.columns))]
        else:
            picks = []
            names = []
            for ref in query.select_attrs:
                position, column = resolve_column(ref, scope, include_codes=True)
                picks.append((position, scope[position][1].position(column.name)))
                names.append(ref.sql())

        result = []
        seen = set()
        for rows in self._matches(query, scope):
            row = tuple(rows[position][i] for position, i in picks)
            if query.distinct:
                if row in seen:
                    continue
                seen.add(row)
            result.append(row)
        return ResultSet(tuple(names), result, len(result))

    def _delete(self, query):
        table = self.table(query.tables[0].name)
        scope = self._scope(query)
        where = self._compile(query.where, scope) if query.where is not None else None
        kept = [row for row in table.rows if where is not None and not where([row])]
        deleted = len(table.rows) - len(kept)
        table.rows = kept
        table.reindex()
        return ResultSet(rowcount=deleted)

    def _insert(self, query):
        table = self.table(query.tables[0].name)
        positions = [table.schema.position(column.name) for column in query.insert_columns]
        staged = []
        for literals in query.insert_rows:
            row = [None] * len(table.schema.columns)
            for position, literal in zip(positions, literals):
                row[position] = literal.value
            staged.append(row)

        keys = set(table.keys)
        for row in staged:
            key = table.key_of(row)
            if any(part is None for part in key) or key in keys:
                raise ConstraintViolationError('Duplicate or NULL key {} in {}'.format(key, table.schema.table_name))
            keys.add(key)
        for row in staged:
            table.add(row)
        return ResultSet(rowcount=len(staged))


def open_embedded_store(catalog, data_dir, extension='.txt'):
    """Create every table of a converted catalog and load its <table><extension> file from data_dir
    """
    store = EmbeddedStore()
    for schema in catalog:
        store.create_table(schema)
        store.load_data_file(schema.table_name, os.path.join(data_dir, schema.table_name + extension))
    return store
