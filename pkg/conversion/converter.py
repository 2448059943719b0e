"""Data file conversion into the OCF and OCT layouts

Field text is copied byte for byte; codes are computed over the unescaped
values. Serials are drawn from one SerialBlock per file, row major.
"""
import logging
import os
import random
from dataclasses import dataclass
from typing import Optional

from codec.cells import encode_field_cell, encode_tuple_cells, field_cell_length, tuple_cells_length
from codec.codes import (
    DEFAULT_OPTIONS, FieldCoordinates, TupleImage, canonical_field_message, canonical_tuple_message,
    generate_field_code, generate_tuple_code,
)
from conversion.datafile import DELIMITER, join_record, read_records, unescape_field, write_records
from conversion.exceptions import ArityError, ConversionException, DataFileError
from icrl.revocation import SerialBlock
from rewrite.schema import Model
from schemes.primitives import SALT_BYTES, code_length

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConversionResult:
    table_name: str
    rows: int
    serials: Optional[SerialBlock]
    bytes_in: int
    bytes_out: int

    @property
    def ratio(self):
        if not self.bytes_in:
            return 1.0
        return self.bytes_out / self.bytes_in


def seeded_salt_source(seed):
    """Deterministic PBKDF2 salts, so repeated conversions produce identical files
    """
    rng = random.Random(seed)
    return lambda: rng.randbytes(SALT_BYTES)


def _plain(table):
    if table.model is not None:
        raise ConversionException('Table {} is already converted to {}'.format(table.table_name, table.model.value))
    return table


def decode_records(records, table):
    """Check arity and entity keys of raw records and return their values
    """
    _plain(table)
    key_positions = [table.position(column.name) for column in table.key_columns]
    rows = []
    for row, cells in enumerate(records, 1):
        if len(cells) != len(table.columns):
            raise ArityError('{} expects {} fields, got {}'.format(table.table_name, len(table.columns), len(cells)),
                             row=row)
        values = [unescape_field(cell, row) for cell in cells]
        if any(values[position] is None for position in key_positions):
            raise DataFileError('key column of {} is NULL'.format(table.table_name), row=row)
        rows.append(values)
    return rows


def serials_needed(row_count, table, model):
    if Model.parse(model) is Model.OCF:
        return row_count * len(table.columns)
    return row_count


def _entity_key(table, values):
    return tuple(values[table.position(column.name)] for column in table.key_columns)


def convert_records(records, table, model, key, block, options=DEFAULT_OPTIONS, salt_source=None):
    """Yield converted raw records

    block must hold exactly the serials the records need.
    """
    model = Model.parse(model)
    rows = decode_records(records, table)
    if len(block) != serials_needed(len(rows), table, model):
        raise ConversionException('Block of {} serials does not fit {} row(s) of {}'.format(
            len(block), len(rows), table.table_name
        ))
    serials = iter(block)

    for cells, values in zip(records, rows):
        salt = None
        if model is Model.OCF:
            entity_key = _entity_key(table, values)
            out = []
            for column, cell, value in zip(table.columns, cells, values):
                coords = FieldCoordinates(table.table_name, column.name, entity_key)
                if salt_source:
                    salt = salt_source()
                ic = generate_field_code(key, coords, value, next(serials), salt, options)
                out.extend([cell, encode_field_cell(ic)])
        else:
            image = TupleImage(table.table_name, tuple(zip(table.column_names, values)))
            if salt_source:
                salt = salt_source()
            ic = generate_tuple_code(key, image, next(serials), salt, options)
            out = list(cells) + list(encode_tuple_cells(ic))
        yield out


def convert_file_with_block(in_path, out_path, table, model, key, block, options=DEFAULT_OPTIONS, salt_source=None,
                            records=None):
    if records is None:
        records = read_records(in_path)
    write_records(out_path, convert_records(records, table, model, key, block, options, salt_source))
    result = ConversionResult(
        table_name=table.table_name,
        rows=len(records),
        serials=block if len(block) else None,
        bytes_in=os.path.getsize(in_path),
        bytes_out=os.path.getsize(out_path),
    )
    logger.info('Converted {} row(s) of {} into "{}" ({} -> {} bytes)'.format(
        result.rows, table.table_name, out_path, result.bytes_in, result.bytes_out
    ))
    return result


def convert_data_file(in_path, out_path, table, model, key, icrl, options=DEFAULT_OPTIONS, salt_source=None):
    """Convert one dump file, allocating its serials from the ICRL

    The whole file is checked before any serial is allocated.
    """
    records = read_records(in_path)
    rows = decode_records(records, table)
    count = serials_needed(len(rows), table, model)
    block = icrl.allocate_block(count) if count else SerialBlock(icrl.next_serial, 0)
    return convert_file_with_block(in_path, out_path, table, model, key, block, options, salt_source, records)


def predict_converted_size(records, table, model, key, first_serial, options=DEFAULT_OPTIONS):
    """Exact byte size of the converted file of records, serials starting at first_serial
    """
    model = Model.parse(model)
    rows = decode_records(records, table)
    size = sum(len(join_record(cells).encode('utf-8')) for cells in records)
    serial = first_serial
    delimiter = len(DELIMITER)

    for values in rows:
        if model is Model.OCF:
            entity_key = _entity_key(table, values)
            for column, value in zip(table.columns, values):
                coords = FieldCoordinates(table.table_name, column.name, entity_key)
                message = canonical_field_message(coords, value, serial, bind_table=options.bind_table)
                size += delimiter + field_cell_length(code_length(key, len(message)), serial)
                serial += 1
        else:
            image = TupleImage(table.table_name, tuple(zip(table.column_names, values)))
            message = canonical_tuple_message(image, serial)
            size += 2 * delimiter + sum(tuple_cells_length(code_length(key, len(message)), serial))
            serial += 1
    return size
