"""Detection matrix of the adversary operations over every scheme and model

Codes cover single fields or single rows, so removing a whole row stays
invisible; every other attack has to be detected.
"""
import logging
import os
from dataclasses import dataclass, field
from typing import List, Tuple

from bench.datasets import generate_dataset
from bench.harness import bench_key, convert_dataset
from icrl.revocation import Icrl
from rewrite.schema import Model
from schemes.keys import SchemeId
from store.attacks import (
    attack_delete, attack_forge, attack_insert, attack_replay_old, attack_substitute, snapshot_row,
)
from store.embedded import open_embedded_store
from verification.runner import QueryRunner

logger = logging.getLogger(__name__)

ATTACKS = (
    'forge', 'forge_code', 'substitute', 'substitute_value', 'substitute_in_row', 'substitute_value_in_row',
    'replay', 'replay_wrong_table', 'insert', 'delete',
)
UNDETECTABLE = frozenset(['delete'])
TARGET_TABLE = 'City'
TARGET_COLUMN = 'Name'
NEIGHBOUR_COLUMN = 'District'
FOREIGN_TABLE = 'CountryLanguage'
TARGET_QUERY = 'SELECT * FROM City;'


@dataclass(frozen=True)
class AttackOutcome:
    scheme: SchemeId
    model: Model
    attack: str
    detected: bool
    statuses: Tuple[str, ...] = ()

    @property
    def expected(self):
        return self.attack not in UNDETECTABLE

    @property
    def deviates(self):
        return self.detected != self.expected


@dataclass(frozen=True)
class SweepMiss:
    table: str
    row: int
    column: str
    flagged: Tuple[int, ...]


@dataclass
class SweepResult:
    """Outcome of forging every single cell of every table, one at a time
    """
    scheme: SchemeId
    model: Model
    checked: int = 0
    misses: List[SweepMiss] = field(default_factory=list)


def _cell(store, table, row, column):
    return row[store.schema_of(table).position(column)]


def _code_column(store, table, column):
    schema = store.schema_of(table)
    if schema.model is Model.OCF:
        return schema.ic_column_for(column)
    return schema.tuple_ic_column.name


def mutate_cell(column, cell):
    """A different cell text of the same kind, so a forgery is never a no-op
    """
    if cell is None or cell == '':
        return '~'
    if column.is_serial:
        return str(int(cell) + 1) if cell.isdigit() else cell + '~'
    if column.is_ic:
        return ('B' if cell[0] == 'A' else 'A') + cell[1:]
    return cell + '~'


def transplant_row(source, saved, target):
    """Fit a row saved from the source table into the target table's layout, codes travelling along
    """
    data = source.data_columns
    row = []
    for index in range(len(target.data_columns)):
        column = data[index % len(data)]
        row.append(saved[source.position(column.name)])
        if target.model is Model.OCF:
            row.append(saved[source.position(source.ic_column_for(column.name))])
    if target.model is Model.OCT:
        row.extend([saved[source.position(source.serial_column.name)],
                    saved[source.position(source.tuple_ic_column.name)]])
    return row


def _forge(store, runner, targets, rows):
    first = targets['column'][0]
    value = _cell(store, TARGET_TABLE, store.get_row(TARGET_TABLE, first), TARGET_COLUMN)
    attack_forge(store, TARGET_TABLE, first, TARGET_COLUMN, value + 'x')


def _forge_code(store, runner, targets, rows):
    first = targets['column'][0]
    column = store.schema_of(TARGET_TABLE).column(_code_column(store, TARGET_TABLE, TARGET_COLUMN))
    cell = _cell(store, TARGET_TABLE, store.get_row(TARGET_TABLE, first), column.name)
    attack_forge(store, TARGET_TABLE, first, column.name, mutate_cell(column, cell))


def _substitute(store, runner, targets, rows, move_codes=True):
    first, second = targets['column']
    attack_substitute(store, TARGET_TABLE, (first, TARGET_COLUMN), (second, TARGET_COLUMN), move_codes=move_codes)


def _substitute_value(store, runner, targets, rows):
    _substitute(store, runner, targets, rows, move_codes=False)


def _substitute_in_row(store, runner, targets, rows, move_codes=True):
    key = targets['row']
    attack_substitute(store, TARGET_TABLE, (key, TARGET_COLUMN), (key, NEIGHBOUR_COLUMN), move_codes=move_codes)


def _substitute_value_in_row(store, runner, targets, rows):
    _substitute_in_row(store, runner, targets, rows, move_codes=False)


def _replay(store, runner, targets, rows):
    first = targets['column'][0]
    saved = snapshot_row(store, TARGET_TABLE, first)
    runner.run("DELETE FROM City WHERE ID = '{}';".format(first[0]))
    attack_replay_old(store, TARGET_TABLE, saved)


def _replay_wrong_table(store, runner, targets, rows):
    saved = store.rows_of(FOREIGN_TABLE)[0]
    row = transplant_row(store.schema_of(FOREIGN_TABLE), saved, store.schema_of(TARGET_TABLE))
    attack_replay_old(store, TARGET_TABLE, row)


def _insert(store, runner, targets, rows):
    row = list(snapshot_row(store, TARGET_TABLE, targets['column'][0]))
    row[0] = str(rows + 1)
    attack_insert(store, TARGET_TABLE, row)


def _delete(store, runner, targets, rows):
    attack_delete(store, TARGET_TABLE, targets['column'][1])


OPERATIONS = {
    'forge': _forge,
    'forge_code': _forge_code,
    'substitute': _substitute,
    'substitute_value': _substitute_value,
    'substitute_in_row': _substitute_in_row,
    'substitute_value_in_row': _substitute_value_in_row,
    'replay': _replay,
    'replay_wrong_table': _replay_wrong_table,
    'insert': _insert,
    'delete': _delete,
}


def _targets(store):
    """Keys of two rows with different names, and of a row whose name differs from its district

    Swapping equal cells changes nothing, so those pairs are avoided.
    """
    rows = store.rows_of(TARGET_TABLE)
    name = lambda row: _cell(store, TARGET_TABLE, row, TARGET_COLUMN)  # noqa: E731
    first = rows[0]
    second = next(row for row in rows[1:] if name(row) != name(first))
    in_row = next(row for row in rows if name(row) != _cell(store, TARGET_TABLE, row, NEIGHBOUR_COLUMN))
    return {'column': ((first[0],), (second[0],)), 'row': (in_row[0],)}


def _combinations(schemes, models, work_dir, rows, seed):
    """Yield scheme, model, key, ICDB catalog, converted directory and ICRL of a small world dataset
    """
    dataset_dir = os.path.join(work_dir, 'dataset')
    catalog = generate_dataset('world', rows, seed, dataset_dir)
    for scheme in schemes:
        scheme = SchemeId.parse(scheme)
        key = bench_key(scheme, seed)
        for model in models:
            model = Model.parse(model)
            out_dir = os.path.join(work_dir, '{}-{}'.format(scheme.alias, model.value))
            icrl, _ = convert_dataset(catalog, dataset_dir, out_dir, model, key)
            yield scheme, model, key, catalog.to_icdb(model), out_dir, icrl


def run_attack_matrix(schemes, models, work_dir, rows=8, seed=1, attacks=ATTACKS):
    """Run each attack on a fresh converted copy of a small world dataset

    Returns one AttackOutcome per scheme, model and attack.
    """
    outcomes = []
    for scheme, model, key, icdb_catalog, out_dir, icrl in _combinations(schemes, models, work_dir, rows, seed):
        for attack in attacks:
            store = open_embedded_store(icdb_catalog, out_dir)
            runner = QueryRunner(store, icdb_catalog, model, key, Icrl.loads(icrl.dumps()))
            OPERATIONS[attack](store, runner, _targets(store), rows)
            report = runner.run(TARGET_QUERY).report
            outcome = AttackOutcome(scheme, model, attack, not report.is_valid,
                                    tuple(sorted({failure.status.value for failure in report.failures})))
            if outcome.deviates:
                logger.warning('{} on {}-{}: detected={}, expected={}'.format(
                    attack, scheme.alias, model.value, outcome.detected, outcome.expected
                ))
            outcomes.append(outcome)
    return outcomes


def run_forgery_sweep(schemes, models, work_dir, rows=4, seed=1):
    """Forge every cell (data, code and serial) of every table once and verify the table after each edit

    A forgery counts as caught when the report flags exactly the edited row.
    """
    results = []
    for scheme, model, key, icdb_catalog, out_dir, icrl in _combinations(schemes, models, work_dir, rows, seed):
        store = open_embedded_store(icdb_catalog, out_dir)
        runner = QueryRunner(store, icdb_catalog, model, key, icrl)
        result = SweepResult(scheme, model)
        for schema in icdb_catalog:
            name = schema.table_name
            sql = 'SELECT * FROM `{}`;'.format(name)
            table = store.table(name)
            for index in range(len(store.rows_of(name))):
                for position, column in enumerate(schema.columns):
                    original = store.rows_of(name)[index][position]
                    attack_forge(store, name, table.key_of(store.rows_of(name)[index]), column.name,
                                 mutate_cell(column, original))
                    report = runner.run(sql).report
                    flagged = tuple(sorted({failure.row for failure in report.failures}))
                    attack_forge(store, name, table.key_of(store.rows_of(name)[index]), column.name, original)
                    result.checked += 1
                    if flagged != (index,):
                        result.misses.append(SweepMiss(name, index, column.name, flagged))
        if result.misses:
            logger.warning('{}-{}: {} of {} forgeries not pinned to their row'.format(
                scheme.alias, model.value, len(result.misses), result.checked
            ))
        results.append(result)
    return results


def deviations(outcomes):
    return [outcome for outcome in outcomes if outcome.deviates]


def format_matrix(outcomes):
    """Text table, one line per scheme and model, one column per attack
    """
    attacks = list(dict.fromkeys(outcome.attack for outcome in outcomes))
    width = max([len(attack) for attack in attacks] + [len('detected!')]) + 2
    lines = ['{:<12}'.format('') + ''.join('{:>{}}'.format(attack, width) for attack in attacks)]
    cells = {}
    for outcome in outcomes:
        mark = 'detected' if outcome.detected else 'missed'
        if outcome.deviates:
            mark += '!'
        cells.setdefault('{}-{}'.format(outcome.scheme.alias, outcome.model.value), {})[outcome.attack] = mark
    for name, marks in cells.items():
        lines.append('{:<12}'.format(name) + ''.join('{:>{}}'.format(marks.get(attack, ''), width)
                                                     for attack in attacks))
    return '\n'.join(lines)


def format_sweep(results):
    lines = []
    for result in results:
        lines.append('{}-{}: {} forgeries, {} missed'.format(
            result.scheme.alias, result.model.value, result.checked, len(result.misses)
        ))
        lines.extend('  {}.{}[{}] flagged rows {}'.format(miss.table, miss.column, miss.row, list(miss.flagged))
                     for miss in result.misses)
    return '\n'.join(lines)
