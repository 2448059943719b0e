import logging
import os

from django_q.tasks import async_task

from codec.codes import CodecOptions
from conversion.converter import convert_file_with_block, decode_records, seeded_salt_source, serials_needed
from conversion.datafile import read_records
from icrl.revocation import SerialBlock
from schemes.keys import read_key_file

logger = logging.getLogger(__name__)

DATA_FILE_EXTENSION = '.txt'


def data_file_path(directory, table_name):
    return os.path.join(directory, table_name + DATA_FILE_EXTENSION)


def convert_table(in_path, out_path, table, model, key_path, first_serial, serial_count, salt_seed=None):
    """Converts one table's dump file with serials pre-allocated by the caller
    """
    key = read_key_file(key_path)
    salt_source = None
    if salt_seed is not None:
        salt_source = seeded_salt_source('{}:{}'.format(salt_seed, table.table_name))
    return convert_file_with_block(in_path, out_path, table, model, key, SerialBlock(first_serial, serial_count),
                                   CodecOptions.from_settings(), salt_source)


def convert_catalog(catalog, in_dir, out_dir, model, key_path, icrl, salt_seed=None, use_tasks=False):
    """Converts the dump file of every table in the catalog

    All files are checked and all serials allocated up front, so the table
    conversions never touch the ICRL and may run as django-q tasks. Returns
    (table name, output path, ConversionResult or task id) triples.
    """
    jobs = []
    for table in catalog:
        in_path = data_file_path(in_dir, table.table_name)
        records = read_records(in_path)
        rows = decode_records(records, table)
        jobs.append((table, in_path, serials_needed(len(rows), table, model)))

    total = sum(count for _, _, count in jobs)
    if total:
        blocks = icrl.allocate_block(total).split([count for _, _, count in jobs])
    else:
        blocks = [SerialBlock(icrl.next_serial, 0) for _ in jobs]

    outcomes = []
    for (table, in_path, count), block in zip(jobs, blocks):
        out_path = data_file_path(out_dir, table.table_name)
        args = (in_path, out_path, table, model, key_path, block.first, block.count, salt_seed)
        if use_tasks:
            logger.info('Queueing conversion of {} with serials {}-{}'.format(table.table_name, block.first,
                                                                                block.last))
            outcome = async_task('conversion.tasks.convert_table', *args)
        else:
            outcome = convert_table(*args)
        outcomes.append((table.table_name, out_path, outcome))
    return outcomes
