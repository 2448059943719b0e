"""Verification of result sets against the checks of a RewritePlan

Malformed responses never raise: whatever cannot be checked is recorded as
STRUCTURAL so the rest of the report survives.
"""
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor

from codec.cells import decode_field_cell, decode_tuple_cells
from codec.codes import (
    DEFAULT_OPTIONS, FieldCoordinates, TupleImage, Verdict, VerdictStatus, verify_field_code, verify_tuple_code,
    verify_tuple_projection,
)
from codec.exceptions import CodecException
from rewrite.schema import Model
from schemes.exceptions import SchemeException
from schemes.keys import SchemeId
from verification.exceptions import WorkerCountError
from verification.report import Failure, VerificationReport

logger = logging.getLogger(__name__)


def _cell(row, index):
    if index >= len(row):
        raise IndexError('row has {} cells, check needs position {}'.format(len(row), index))
    return row[index]


def _record(report, row, check, attribute, entity, verdict, diffs=None):
    failure = None
    if not verdict.is_valid:
        failure = Failure(row=row, column=check.ic_index, table=check.table, attribute=attribute,
                          entity=tuple(entity), status=verdict.status, detail=verdict.detail,
                          attributes=tuple(diffs) if diffs else None)
    report.add(verdict.status, failure)


def _structural(detail):
    return Verdict(VerdictStatus.STRUCTURAL, detail)


def _verify_field(row, check, key, icrl, options):
    entity = ()
    try:
        entity = tuple(_cell(row, index) for index in check.key_indexes)
        if any(part is None for part in entity):
            return entity, _structural('NULL entity key')
        value = _cell(row, check.value_index)
        ic = decode_field_cell(_cell(row, check.ic_index), key.scheme)
        coords = FieldCoordinates(check.table, check.attribute, entity)
        return entity, verify_field_code(key, coords, value, ic, icrl, options)
    except (IndexError, CodecException, SchemeException) as e:
        return entity, _structural(str(e))


def _full_tuples(second_rows, plan):
    """Index the rows of the second fetch by the serial of every table
    """
    tuples = [{} for _ in plan.second_fetch_checks]
    for row in second_rows or ():
        for position, check in enumerate(plan.second_fetch_checks):
            if check.serial_index < len(row):
                tuples[position][row[check.serial_index]] = row
    return tuples


def _verify_tuple(row, position, check, plan, key, icrl, options, full_tuples):
    presented = []
    try:
        presented = [(attribute, _cell(row, index)) for attribute, index in check.values]
        serial_text = _cell(row, check.serial_index)
        ic = decode_tuple_cells(serial_text, _cell(row, check.ic_index), key.scheme)

        if check.complete:
            return presented, verify_tuple_code(key, TupleImage(check.table, presented), ic, icrl, options)
        if key.scheme is SchemeId.AES_CIPHER:
            return presented, verify_tuple_projection(key, check.columns, presented, ic, icrl)

        # MAC and signature codes need the complete tuple from the second fetch
        full_check = plan.second_fetch_checks[position] if position < len(plan.second_fetch_checks) else None
        full_row = full_tuples[position].get(serial_text) if full_check else None
        if full_row is None:
            return presented, (_structural('complete tuple of serial {} was not fetched'.format(serial_text)), None)
        full = [(attribute, _cell(full_row, index)) for attribute, index in full_check.values]
        differing = [attribute for attribute, value in presented if dict(full)[attribute] != value]
        if differing:
            return presented, (Verdict(VerdictStatus.FORGED, 'projection differs from the complete tuple'),
                               differing)
        full_ic = decode_tuple_cells(_cell(full_row, full_check.serial_index), _cell(full_row, full_check.ic_index),
                                     key.scheme)
        if full_ic != ic:
            return presented, (Verdict(VerdictStatus.FORGED, 'complete tuple carries a different code'), None)
        return presented, verify_tuple_code(key, TupleImage(check.table, full), ic, icrl, options)
    except (IndexError, KeyError, CodecException, SchemeException) as e:
        return presented, (_structural(str(e)), None)


def _entity_of(presented, table_keys):
    values = dict(presented)
    return tuple(values.get(name) for name in table_keys) if table_keys else ()


def verify_result_set(rows, plan, key, icrl, options=DEFAULT_OPTIONS, row_offset=0, second_rows=None,
                      table_keys=None):
    """Verify every check of the plan on every row

    icrl only needs is_valid(), pass a snapshot for a consistent batch.
    table_keys optionally maps table names to key column names, used to name
    OCT failures by their entity.
    """
    started = time.perf_counter()
    report = VerificationReport()
    table_keys = table_keys or {}

    if plan.model is Model.OCF:
        for i, row in enumerate(rows, row_offset):
            for check in plan.field_checks:
                entity, verdict = _verify_field(row, check, key, icrl, options)
                _record(report, i, check, check.attribute, entity, verdict)
    else:
        full_tuples = _full_tuples(second_rows, plan)
        for i, row in enumerate(rows, row_offset):
            for position, check in enumerate(plan.tuple_checks):
                presented, (verdict, diffs) = _verify_tuple(row, position, check, plan, key, icrl, options,
                                                            full_tuples)
                entity = _entity_of(presented, table_keys.get(check.table))
                _record(report, i, check, None, entity, verdict, diffs)

    report.timings['verify_ms'] = (time.perf_counter() - started) * 1000
    if not report.is_valid:
        logger.warning('{} of {} checks failed'.format(len(report.failures), report.total))
    return report.finish()


def verify_parallel(rows, plan, key, icrl, workers, options=DEFAULT_OPTIONS, second_rows=None, table_keys=None):
    """verify_result_set over contiguous row chunks in worker processes

    The merged report equals the sequential one, except for timings.
    """
    if workers < 1:
        raise WorkerCountError('At least one worker is required, got {}'.format(workers))
    rows = list(rows)
    if hasattr(icrl, 'snapshot'):
        icrl = icrl.snapshot()
    if workers == 1 or len(rows) < 2:
        return verify_result_set(rows, plan, key, icrl, options, second_rows=second_rows, table_keys=table_keys)

    started = time.perf_counter()
    size = math.ceil(len(rows) / workers)
    with ProcessPoolExecutor(max_workers=workers) as executor:
        futures = [
            executor.submit(verify_result_set, rows[start:start + size], plan, key, icrl, options, start,
                            second_rows, table_keys)
            for start in range(0, len(rows), size)
        ]
        report = VerificationReport.merge(future.result() for future in futures)
    report.timings['verify_ms'] = (time.perf_counter() - started) * 1000
    logger.info('Verified {} row(s) with {} workers in {:.1f} ms'.format(len(rows), workers,
                                                                        report.timings['verify_ms']))
    return report
