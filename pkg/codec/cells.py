"""Text encoding of integrity codes inside table cells

OCF stores `<base64>:<serial>` next to every field, OCT stores the serial in
its own column and the base64 code in the IC column.
"""
import base64
import binascii

from codec.codes import IntegrityCode
from codec.exceptions import InvalidSerialError, MalformedCellError


def _b64(code):
    return base64.b64encode(code).decode('ascii')


def _unb64(text):
    try:
        code = base64.b64decode(text.encode('ascii'), validate=True)
    except (binascii.Error, UnicodeEncodeError):
        raise MalformedCellError('IC cell is not valid base64')
    if not code:
        raise MalformedCellError('IC cell is empty')
    return code


def _serial(text):
    if not text or not text.isascii() or not text.isdigit():
        raise MalformedCellError('Serial "{}" is not a number'.format(text))
    return int(text)


def encode_field_cell(ic):
    return '{}:{}'.format(_b64(ic.code), ic.serial)


def decode_field_cell(text, scheme):
    if text is None:
        raise MalformedCellError('IC cell is NULL')
    code_text, sep, serial_text = text.rpartition(':')
    if not sep:
        raise MalformedCellError('IC cell lacks the ":<serial>" part')
    try:
        return IntegrityCode(_unb64(code_text), _serial(serial_text), scheme)
    except InvalidSerialError as e:
        raise MalformedCellError(str(e))


def encode_tuple_cells(ic):
    return str(ic.serial), _b64(ic.code)


def decode_tuple_cells(serial_text, code_text, scheme):
    if serial_text is None or code_text is None:
        raise MalformedCellError('Serial or IC cell is NULL')
    try:
        return IntegrityCode(_unb64(code_text), _serial(serial_text), scheme)
    except InvalidSerialError as e:
        raise MalformedCellError(str(e))


def field_cell_length(code_length, serial):
    """Length of an OCF cell for a code of the given byte length
    """
    return 4 * ((code_length + 2) // 3) + 1 + len(str(serial))


def tuple_cells_length(code_length, serial):
    return len(str(serial)), 4 * ((code_length + 2) // 3)
