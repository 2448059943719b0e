import logging
from dataclasses import dataclass, field
from typing import Optional, Tuple

from codec.cells import encode_field_cell, encode_tuple_cells
from codec.codes import DEFAULT_OPTIONS, FieldCoordinates, TupleImage, generate_field_code, generate_tuple_code
from rewrite.exceptions import MissingKeyError, RewriteException, SchemaMismatchError
from rewrite.parser import ColumnRef, Literal, parse, quote_identifier
from rewrite.schema import Model, resolve_column
from schemes.keys import SchemeId

logger = logging.getLogger(__name__)

REVOKE = 'REVOKE'


@dataclass(frozen=True)
class FieldCheck:
    """One OCF field of a result row: value, code cell and the key cells that form its entity key
    """
    table: str
    attribute: str
    value_index: int
    ic_index: int
    key_indexes: Tuple[int, ...]


@dataclass(frozen=True)
class TupleCheck:
    """One OCT tuple of a result row

    values maps each returned data attribute (schema order) to its result position.
    """
    table: str
    values: Tuple[Tuple[str, int], ...]
    serial_index: int
    ic_index: int
    columns: Tuple[str, ...]

    @property
    def complete(self):
        return len(self.values) == len(self.columns)


@dataclass(frozen=True)
class RewritePlan:
    kind: str
    model: Model
    icdb_sql: str
    columns: Tuple[str, ...] = ()
    field_checks: Tuple[FieldCheck, ...] = ()
    tuple_checks: Tuple[TupleCheck, ...] = ()
    second_fetch_sql: Optional[str] = None
    second_fetch_columns: Tuple[str, ...] = ()
    second_fetch_checks: Tuple[TupleCheck, ...] = ()
    statement_sql: Optional[str] = None
    post_actions: Tuple[str, ...] = ()
    distinct: bool = False
    serials: Tuple[int, ...] = field(default=(), repr=False)

    @property
    def verify_columns(self):
        if self.model is Model.OCF:
            return [(check.value_index, check.ic_index, (check.table, check.attribute)) for check in self.field_checks]
        return [(tuple(index for _, index in check.values), check.serial_index, check.ic_index)
                for check in self.tuple_checks]

    @property
    def serial_indexes(self):
        """Result positions whose cells carry serials (revoked after a DELETE)
        """
        if self.model is Model.OCF:
            return [check.ic_index for check in self.field_checks]
        return [check.serial_index for check in self.tuple_checks]


class _SelectList:
    """Rewritten select list, deduplicated by (table, column, role)
    """

    def __init__(self):
        self.texts = []
        self.positions = {}

    def add(self, text, table, column, role='data'):
        marker = (table.lower(), column.lower(), role)
        if marker not in self.positions:
            self.positions[marker] = len(self.texts)
            self.texts.append(text)
        return self.positions[marker]

    def index(self, table, column, role='data'):
        return self.positions[(table.lower(), column.lower(), role)]


class _Scope:
    def __init__(self, query, catalog, model):
        self.query = query
        self.model = model
        self.entries = []
        for ref in query.all_tables:
            table = catalog.table(ref.name)
            if table.model is not model:
                raise SchemaMismatchError('Table {} is not converted to {}'.format(table.table_name, model.value))
            self.entries.append((ref, table))
        self.multi = len(self.entries) > 1
        self.quote = query.uses_backticks

    @property
    def aliases(self):
        return [(ref.name, table) for ref, table in self.entries]

    def resolve(self, ref):
        position, column = resolve_column(ref, self.aliases)
        return self.entries[position], column

    def text(self, entry, column_name, original=None):
        """Select list text of a column, following the query's qualification and quoting
        """
        ref, _ = entry
        if original is not None and original.table is not None:
            qualifier = original.table
        elif self.multi:
            qualifier = ref.name
        else:
            qualifier = None
        return ColumnRef(column_name, table=qualifier).sql(quote=self.quote)

    def requested(self):
        """Data attributes the query asks for: the select list, star expanded
        """
        if self.query.star:
            return [(entry, column, None) for entry in self.entries for column in entry[1].data_columns]
        requested = []
        for ref in self.query.select_attrs:
            entry, column = self.resolve(ref)
            requested.append((entry, column, ref))
        return requested

    def conditions(self):
        return [self.resolve(ref) + (ref,) for ref in self.query.condition_columns]


def _assemble(query, select_list, from_clause=None):
    return 'SELECT {}{} {}{}'.format(
        'DISTINCT ' if query.distinct and query.kind == 'SELECT' else '',
        ', '.join(select_list.texts),
        from_clause if from_clause is not None else query.from_clause,
        ';' if query.terminated else '',
    )


def _full_tuple_query(query, scope):
    """Every data, serial and IC column of every table, same FROM and WHERE
    """
    select_list = _SelectList()
    for entry in scope.entries:
        for column in entry[1].data_columns:
            select_list.add(scope.text(entry, column.name), entry[1].table_name, column.name)
    checks = _serial_columns(scope, select_list)
    return select_list, checks


def _serial_columns(scope, select_list, requested=()):
    checks = []
    for entry in scope.entries:
        table = entry[1]
        serial_index = select_list.add(scope.text(entry, table.serial_column.name), table.table_name,
                                       table.serial_column.name, 'serial')
        ic_index = select_list.add(scope.text(entry, table.tuple_ic_column.name), table.table_name,
                                   table.tuple_ic_column.name, 'ic')
        present = {column.name.lower() for e, column, _ in requested if e is entry} if requested else None
        values = tuple(
            (column.name, select_list.index(table.table_name, column.name))
            for column in table.data_columns
            if present is None or column.name.lower() in present
        )
        checks.append(TupleCheck(table.table_name, values, serial_index, ic_index, tuple(table.data_column_names)))
    return checks


def rewrite_select_ocf(query, catalog):
    """Inject key columns, condition columns and code columns into a SELECT over OCF tables

    Output order: requested attributes, keys, condition attributes, then the
    code columns of requested and condition attributes.
    """
    if query.kind != 'SELECT':
        raise RewriteException('Expected a SELECT statement, got {}'.format(query.kind))
    scope = _Scope(query, catalog, Model.OCF)
    select_list = _SelectList()

    requested = scope.requested()
    conditions = scope.conditions()
    for entry, column, ref in requested:
        text = ref.sql() if ref is not None else scope.text(entry, column.name)
        select_list.add(text, entry[1].table_name, column.name)
    for entry in scope.entries:
        for column in entry[1].key_columns:
            select_list.add(scope.text(entry, column.name), entry[1].table_name, column.name)
    for entry, column, ref in conditions:
        select_list.add(scope.text(entry, column.name, original=ref), entry[1].table_name, column.name)

    checks = []
    for entry, column, ref in requested + conditions:
        table = entry[1]
        ic_name = table.ic_column_for(column.name)
        if (table.table_name.lower(), ic_name.lower(), 'ic') in select_list.positions:
            continue
        ic_index = select_list.add(scope.text(entry, ic_name, original=ref), table.table_name, ic_name, 'ic')
        checks.append(FieldCheck(
            table=table.table_name,
            attribute=column.name,
            value_index=select_list.index(table.table_name, column.name),
            ic_index=ic_index,
            key_indexes=tuple(select_list.index(table.table_name, key.name) for key in table.key_columns),
        ))

    plan = RewritePlan(
        kind='SELECT', model=Model.OCF, icdb_sql=_assemble(query, select_list), columns=tuple(select_list.texts),
        field_checks=tuple(checks), distinct=query.distinct,
    )
    logger.debug('OCF rewrite: {}'.format(plan.icdb_sql))
    return plan


def rewrite_select_oct(query, catalog, scheme=SchemeId.AES_CIPHER):
    """Inject condition columns and the Serial/IC pair of every table into a SELECT over OCT tables

    Codes of MAC and signature schemes can only be checked over the full tuple,
    so partial projections get a second query fetching the complete tuples.
    """
    if query.kind != 'SELECT':
        raise RewriteException('Expected a SELECT statement, got {}'.format(query.kind))
    scope = _Scope(query, catalog, Model.OCT)
    select_list = _SelectList()

    requested = scope.requested()
    conditions = scope.conditions()
    for entry, column, ref in requested:
        text = ref.sql() if ref is not None else scope.text(entry, column.name)
        select_list.add(text, entry[1].table_name, column.name)
    for entry, column, ref in conditions:
        select_list.add(scope.text(entry, column.name, original=ref), entry[1].table_name, column.name)

    checks = _serial_columns(scope, select_list, requested + conditions)

    second_sql = None
    second_columns = ()
    second_checks = ()
    if SchemeId.parse(scheme) is not SchemeId.AES_CIPHER and not all(check.complete for check in checks):
        second_list, second = _full_tuple_query(query, scope)
        second_sql = _assemble(query, second_list)
        second_columns = tuple(second_list.texts)
        second_checks = tuple(second)

    plan = RewritePlan(
        kind='SELECT', model=Model.OCT, icdb_sql=_assemble(query, select_list), columns=tuple(select_list.texts),
        tuple_checks=tuple(checks), second_fetch_sql=second_sql, second_fetch_columns=second_columns,
        second_fetch_checks=second_checks, distinct=query.distinct,
    )
    logger.debug('OCT rewrite: {}'.format(plan.icdb_sql))
    return plan


def rewrite_select(query, catalog, model, scheme=SchemeId.AES_CIPHER):
    if isinstance(query, str):
        query = parse(query)
    if Model.parse(model) is Model.OCF:
        return rewrite_select_ocf(query, catalog)
    return rewrite_select_oct(query, catalog, scheme)


def plan_delete(query, catalog, model):
    """Three phase delete: fetch and verify the doomed rows, delete them, revoke their serials
    """
    if isinstance(query, str):
        query = parse(query)
    if query.kind != 'DELETE':
        raise RewriteException('Expected a DELETE statement, got {}'.format(query.kind))
    model = Model.parse(model)
    scope = _Scope(query, catalog, model)
    entry = scope.entries[0]
    table = entry[1]
    select_list = _SelectList()

    for column in table.data_columns:
        select_list.add(scope.text(entry, column.name), table.table_name, column.name)
    field_checks = []
    tuple_checks = []
    if model is Model.OCF:
        for column in table.data_columns:
            ic_name = table.ic_column_for(column.name)
            field_checks.append(FieldCheck(
                table=table.table_name,
                attribute=column.name,
                value_index=select_list.index(table.table_name, column.name),
                ic_index=select_list.add(scope.text(entry, ic_name), table.table_name, ic_name, 'ic'),
                key_indexes=tuple(select_list.index(table.table_name, key.name) for key in table.key_columns),
            ))
    else:
        tuple_checks = _serial_columns(scope, select_list)

    statement = query.source.strip()
    return RewritePlan(
        kind='DELETE', model=model, icdb_sql=_assemble(query, select_list), columns=tuple(select_list.texts),
        field_checks=tuple(field_checks), tuple_checks=tuple(tuple_checks), statement_sql=statement,
        post_actions=(REVOKE,),
    )


def plan_insert(query, catalog, model, key, icrl, options=DEFAULT_OPTIONS, salt_source=None):
    """Compute the codes of an INSERT and emit the ICDB statement carrying them

    OCF: one code per supplied field, the key columns must be supplied.
    OCT: one code per row over all data columns, absent ones as NULL.
    Serials are allocated from the ICRL, which makes this a writer operation.
    """
    if isinstance(query, str):
        query = parse(query)
    if query.kind != 'INSERT':
        raise RewriteException('Expected an INSERT statement, got {}'.format(query.kind))
    model = Model.parse(model)
    scope = _Scope(query, catalog, model)
    ref, table = scope.entries[0]

    columns = [table.column(column.name) for column in query.insert_columns]
    for column in columns:
        if not column.is_data:
            raise SchemaMismatchError('INSERT may not name code column {}'.format(column.name))
    supplied = {column.name.lower(): i for i, column in enumerate(columns)}

    if model is Model.OCF:
        missing = [key_column.name for key_column in table.key_columns if key_column.name.lower() not in supplied]
        if missing:
            raise MissingKeyError('INSERT into {} lacks key column(s) {}'.format(table.table_name, ', '.join(missing)))
        extra = [table.ic_column_for(column.name) for column in columns]
        count = len(columns) * len(query.insert_rows)
    else:
        extra = [table.serial_column.name, table.tuple_ic_column.name]
        count = len(query.insert_rows)

    block = icrl.allocate_block(count)
    serials = iter(block)
    rows = []
    for row in query.insert_rows:
        values = [literal.value for literal in row]
        if model is Model.OCF:
            entity_key = tuple(values[supplied[key_column.name.lower()]] for key_column in table.key_columns)
            cells = []
            for column, value in zip(columns, values):
                coords = FieldCoordinates(table.table_name, column.name, entity_key)
                salt = salt_source() if salt_source else None
                cells.append(encode_field_cell(generate_field_code(key, coords, value, next(serials), salt, options)))
        else:
            image = TupleImage(table.table_name, tuple(
                (column.name, values[supplied[column.name.lower()]] if column.name.lower() in supplied else None)
                for column in table.data_columns
            ))
            salt = salt_source() if salt_source else None
            cells = list(encode_tuple_cells(generate_tuple_code(key, image, next(serials), salt, options)))
        rows.append(list(row) + [Literal(cell) for cell in cells])

    names = [column.sql() for column in query.insert_columns]
    names += [quote_identifier(name) if scope.quote else name for name in extra]
    statement = 'INSERT INTO {} ({}) VALUES {}{}'.format(
        ref.sql(), ', '.join(names),
        ', '.join('({})'.format(', '.join(value.sql() for value in row)) for row in rows),
        ';' if query.terminated else '',
    )
    logger.info('Planned INSERT of {} row(s) into {} with serials {}-{}'.format(
        len(rows), table.table_name, block.first, block.last
    ))
    return RewritePlan(
        kind='INSERT', model=model, icdb_sql=statement, statement_sql=statement, serials=tuple(block),
    )
