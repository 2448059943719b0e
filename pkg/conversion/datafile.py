"""Delimiter separated data files as dumped by the database server

One record per LF terminated line, fields separated by `|`. Inside a field
a backslash escapes the delimiter, itself and control characters (`\\n`,
`\\r`, `\\t`, `\\0`); a field consisting of `\\N` alone is NULL.
"""
import logging

from conversion.exceptions import DataFileError

logger = logging.getLogger(__name__)

DELIMITER = '|'
TERMINATOR = '\n'
NULL_FIELD = '\\N'

_ESCAPE = {'\\': '\\\\', '|': '\\|', '\n': '\\n', '\r': '\\r', '\t': '\\t', '\0': '\\0'}
_UNESCAPE = {'\\': '\\', '|': '|', 'n': '\n', 'r': '\r', 't': '\t', '0': '\0'}


def escape_field(value):
    if value is None:
        return NULL_FIELD
    return ''.join(_ESCAPE.get(char, char) for char in value)


def unescape_field(text, row=None):
    if text == NULL_FIELD:
        return None
    out = []
    chars = iter(text)
    for char in chars:
        if char != '\\':
            out.append(char)
            continue
        escaped = next(chars, None)
        if escaped not in _UNESCAPE:
            raise DataFileError('unknown escape sequence "\\{}"'.format(escaped or ''), row=row)
        out.append(_UNESCAPE[escaped])
    return ''.join(out)


def split_record(line, row=None):
    """Split a record into its raw (still escaped) field texts
    """
    cells = []
    start = 0
    i = 0
    while i < len(line):
        if line[i] == '\\':
            if i + 1 == len(line):
                raise DataFileError('dangling backslash at end of record', row=row)
            i += 2
            continue
        if line[i] == DELIMITER:
            cells.append(line[start:i])
            start = i + 1
        i += 1
    cells.append(line[start:])
    return cells


def join_record(cells):
    return DELIMITER.join(cells) + TERMINATOR


def parse_records(data):
    """Raw records of a file's bytes; the last record may lack its terminator
    """
    try:
        text = data.decode('utf-8')
    except UnicodeDecodeError as e:
        line = data[:e.start].count(b'\n') + 1
        raise DataFileError('not valid UTF-8', row=line)
    if not text:
        return []
    lines = text.split(TERMINATOR)
    if lines[-1] == '':
        lines.pop()
    return [split_record(line, row=number) for number, line in enumerate(lines, 1)]


def read_records(path):
    with open(path, 'rb') as f:
        records = parse_records(f.read())
    logger.debug('Read {} record(s) from "{}"'.format(len(records), path))
    return records


def write_records(path, records):
    with open(path, 'wb') as f:
        for cells in records:
            f.write(join_record(cells).encode('utf-8'))


def read_data_file(path):
    """Rows of unescaped values (None for NULL)
    """
    return [[unescape_field(cell, row) for cell in cells] for row, cells in enumerate(read_records(path), 1)]


def write_data_file(path, rows):
    try:
        write_records(path, ([escape_field(value) for value in row] for row in rows))
    except UnicodeEncodeError as e:
        raise DataFileError('value cannot be encoded as UTF-8: {}'.format(e))
    logger.debug('Wrote data file "{}"'.format(path))
