"""Adversary operations on an EmbeddedStore

Each operation changes exactly the cells it names. Keys are tuples of the
row's primary key values.
"""
import logging

from rewrite.schema import Model

logger = logging.getLogger(__name__)


def snapshot_row(store, table, key):
    """Copy of a complete stored row (data and code cells), for later replay
    """
    return store.get_row(table, key)


def attack_forge(store, table, key, column, value):
    """Overwrite one cell, a data value or a code
    """
    logger.debug('Forging {}.{} of {}'.format(table, column, key))
    store.set_cell(table, key, column, value)


def _code_columns(schema, column):
    if schema.model is Model.OCF:
        return [schema.ic_column_for(column)]
    return [schema.serial_column.name, schema.tuple_ic_column.name]


def attack_substitute(store, table, coord_a, coord_b, move_codes=False):
    """Swap the values of two (key, column) coordinates of a table

    With move_codes the codes travel along: the companion code cells under
    OCF, the Serial and IC cells of the two rows under OCT.
    """
    (key_a, column_a), (key_b, column_b) = coord_a, coord_b
    schema = store.schema_of(table)
    pairs = [((key_a, column_a), (key_b, column_b))]
    if move_codes and (schema.model is Model.OCF or tuple(key_a) != tuple(key_b)):
        pairs.extend(((key_a, code_a), (key_b, code_b)) for code_a, code_b in zip(
            _code_columns(schema, column_a), _code_columns(schema, column_b)
        ))
    store.swap_cells(table, pairs)
    logger.debug('Substituted {}.{} of {} with {} of {}'.format(table, column_a, key_a, column_b, key_b))


def attack_replay_old(store, table, saved_row):
    """Put a previously saved row back, replacing any current row with its key
    """
    store.insert_row(table, saved_row, replace=True)


def attack_insert(store, table, forged_row):
    """Add a row with attacker chosen cells; duplicate keys violate the store's constraint
    """
    store.insert_row(table, forged_row)


def attack_delete(store, table, key):
    store.delete_row(table, key)
    logger.debug('Deleted {} from {}'.format(key, table))
