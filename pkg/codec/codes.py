import enum
import logging
from dataclasses import dataclass, field
from typing import Optional, Tuple

from codec.exceptions import (
    InvalidCoordinatesError, InvalidSerialError, MalformedMessageError, SchemeMismatchError,
)
from schemes.exceptions import MalformedCodeError
from schemes.keys import SchemeId
from schemes.primitives import SchemeOptions, check_code, check_structure, emit_code, recover_plaintext

logger = logging.getLogger(__name__)

UNIT_SEPARATOR = 0x1F
RECORD_SEPARATOR = 0x1E
ESCAPE = 0x10
NULL_TOKEN = b'\x00'
MAX_SERIAL = 2 ** 64 - 1

_ESCAPED = frozenset((0x00, ESCAPE, RECORD_SEPARATOR, UNIT_SEPARATOR))


@dataclass(frozen=True)
class CodecOptions:
    scheme: SchemeOptions = field(default_factory=SchemeOptions)
    bind_table: bool = False

    @classmethod
    def from_settings(cls):
        from django.conf import settings

        return cls(scheme=SchemeOptions.from_settings(), bind_table=settings.ICDB_BIND_TABLE)


DEFAULT_OPTIONS = CodecOptions()


class VerdictStatus(enum.Enum):
    VALID = 'VALID'
    FORGED = 'FORGED'
    STALE = 'STALE'
    STRUCTURAL = 'STRUCTURAL'


@dataclass(frozen=True)
class Verdict:
    status: VerdictStatus
    detail: str = ''

    @property
    def is_valid(self):
        return self.status is VerdictStatus.VALID


VALID = Verdict(VerdictStatus.VALID)


@dataclass(frozen=True)
class IntegrityCode:
    code: bytes
    serial: int
    scheme: SchemeId

    def __post_init__(self):
        if not 0 < self.serial <= MAX_SERIAL:
            raise InvalidSerialError('Serial {} is outside 1..2^64-1'.format(self.serial))


@dataclass(frozen=True)
class FieldCoordinates:
    table_name: str
    attribute_name: str
    entity_key: Tuple[str, ...]

    def __post_init__(self):
        if not self.table_name or not self.attribute_name:
            raise InvalidCoordinatesError('Table and attribute names must not be empty')
        if not self.entity_key:
            raise InvalidCoordinatesError('Entity key of {}.{} is empty'.format(self.table_name, self.attribute_name))
        object.__setattr__(self, 'entity_key', tuple(self.entity_key))


@dataclass(frozen=True)
class TupleImage:
    table_name: str
    values: Tuple[Tuple[str, Optional[str]], ...]

    def __post_init__(self):
        object.__setattr__(self, 'values', tuple((name, value) for name, value in self.values))
        names = [name for name, _ in self.values]
        if not names:
            raise InvalidCoordinatesError('Tuple of {} has no attributes'.format(self.table_name))
        if len(set(names)) != len(names):
            raise InvalidCoordinatesError('Tuple of {} repeats an attribute'.format(self.table_name))

    @property
    def attribute_names(self):
        return [name for name, _ in self.values]


def escape(value):
    """Encode a text value (None for NULL) so it never contains a bare separator
    """
    if value is None:
        return NULL_TOKEN
    out = bytearray()
    for byte in value.encode('utf-8'):
        if byte in _ESCAPED:
            out.append(ESCAPE)
        out.append(byte)
    return bytes(out)


def unescape(data):
    if data == NULL_TOKEN:
        return None
    out = bytearray()
    pending_escape = False
    for byte in data:
        if pending_escape:
            if byte not in _ESCAPED:
                raise MalformedMessageError('Invalid escape sequence')
            out.append(byte)
            pending_escape = False
        elif byte == ESCAPE:
            pending_escape = True
        elif byte in _ESCAPED:
            raise MalformedMessageError('Unescaped control byte 0x{:02x}'.format(byte))
        else:
            out.append(byte)
    if pending_escape:
        raise MalformedMessageError('Dangling escape byte')
    try:
        return out.decode('utf-8')
    except UnicodeDecodeError:
        raise MalformedMessageError('Recovered value is not UTF-8')


def split_unescaped(data, separator):
    """Split on separator bytes that are not preceded by the escape byte
    """
    parts = []
    current = bytearray()
    pending_escape = False
    for byte in data:
        if pending_escape:
            current.append(byte)
            pending_escape = False
        elif byte == ESCAPE:
            current.append(byte)
            pending_escape = True
        elif byte == separator:
            parts.append(bytes(current))
            current = bytearray()
        else:
            current.append(byte)
    parts.append(bytes(current))
    return parts


def _serial_bytes(serial):
    return str(serial).encode('ascii')


def canonical_field_message(coords, value, serial, bind_table=False):
    entity_key = bytes([RECORD_SEPARATOR]).join(escape(part) for part in coords.entity_key)
    parts = [_serial_bytes(serial), escape(coords.attribute_name), escape(value), entity_key]
    if bind_table:
        parts.append(escape(coords.table_name))
    return bytes([UNIT_SEPARATOR]).join(parts)


def canonical_tuple_message(tuple_image, serial):
    parts = [escape(value) for _, value in tuple_image.values]
    parts.append(_serial_bytes(serial))
    return bytes([UNIT_SEPARATOR]).join(parts)


def parse_tuple_message(message, column_count):
    """Split a recovered tuple message back into its values and serial
    """
    parts = split_unescaped(message, UNIT_SEPARATOR)
    if len(parts) != column_count + 1:
        raise MalformedMessageError('Expected {} values, recovered {}'.format(column_count, len(parts) - 1))
    serial_text = parts[-1]
    if not serial_text.isdigit():
        raise MalformedMessageError('Recovered serial is not a number')
    return [unescape(part) for part in parts[:-1]], int(serial_text)


def _ensure_scheme(key, ic):
    if ic.scheme is not key.scheme:
        raise SchemeMismatchError('Code was produced by {}, key is {}'.format(ic.scheme.value, key.scheme.value))


def _structural(key, ic):
    try:
        check_structure(key, ic.code)
    except MalformedCodeError as e:
        return Verdict(VerdictStatus.STRUCTURAL, str(e))
    return None


def _freshness(ic, icrl):
    if not icrl.is_valid(ic.serial):
        return Verdict(VerdictStatus.STALE, 'serial {} is revoked or unallocated'.format(ic.serial))
    return VALID


def generate_field_code(key, coords, value, serial, salt=None, options=DEFAULT_OPTIONS):
    message = canonical_field_message(coords, value, serial, bind_table=options.bind_table)
    return IntegrityCode(emit_code(key, message, salt=salt, options=options.scheme), serial, key.scheme)


def verify_field_code(key, coords, value, ic, icrl, options=DEFAULT_OPTIONS):
    """Verify one field; STALE is only reported for codes that check
    """
    _ensure_scheme(key, ic)
    verdict = _structural(key, ic)
    if verdict:
        return verdict

    message = canonical_field_message(coords, value, ic.serial, bind_table=options.bind_table)
    if not check_code(key, message, ic.code, options=options.scheme):
        logger.debug('Field {}.{} {} does not match its code'.format(
            coords.table_name, coords.attribute_name, coords.entity_key
        ))
        return Verdict(VerdictStatus.FORGED, 'code does not match {}'.format(coords.attribute_name))
    return _freshness(ic, icrl)


def generate_tuple_code(key, tuple_image, serial, salt=None, options=DEFAULT_OPTIONS):
    message = canonical_tuple_message(tuple_image, serial)
    return IntegrityCode(emit_code(key, message, salt=salt, options=options.scheme), serial, key.scheme)


def _recovered_diffs(key, column_names, presented, ic):
    """Decrypt an AES tuple code and list presented attributes that differ from the recovered ones
    """
    try:
        values, serial = parse_tuple_message(recover_plaintext(key, ic.code), len(column_names))
    except (MalformedCodeError, MalformedMessageError) as e:
        return None, Verdict(VerdictStatus.STRUCTURAL, 'unrecoverable tuple code: {}'.format(e))
    recovered = dict(zip(column_names, values))
    unknown = [name for name, _ in presented if name not in recovered]
    if unknown:
        return None, Verdict(VerdictStatus.STRUCTURAL, 'unknown attributes: {}'.format(', '.join(unknown)))
    diffs = [name for name, value in presented if recovered[name] != value]
    if serial != ic.serial:
        return diffs, Verdict(VerdictStatus.FORGED, 'serial {} does not match code serial {}'.format(ic.serial, serial))
    if diffs:
        return diffs, Verdict(VerdictStatus.FORGED, 'attributes differ: {}'.format(', '.join(diffs)))
    return diffs, None


def verify_tuple_code(key, tuple_image, ic, icrl, options=DEFAULT_OPTIONS):
    """Verify a full tuple; AES codes additionally tell which attributes were changed
    """
    _ensure_scheme(key, ic)
    verdict = _structural(key, ic)
    if verdict:
        return verdict, None

    message = canonical_tuple_message(tuple_image, ic.serial)
    if check_code(key, message, ic.code, options=options.scheme):
        return _freshness(ic, icrl), None

    if key.scheme is not SchemeId.AES_CIPHER:
        return Verdict(VerdictStatus.FORGED, 'tuple does not match its code'), None

    diffs, verdict = _recovered_diffs(key, tuple_image.attribute_names, tuple_image.values, ic)
    return verdict or Verdict(VerdictStatus.FORGED, 'tuple does not match its code'), diffs


def verify_tuple_projection(key, column_names, presented, ic, icrl):
    """Verify a projected subset of an AES tuple by decrypting its code

    column_names is the full schema order of the table, presented a list of (attribute, value)
    pairs that the query returned.
    """
    _ensure_scheme(key, ic)
    if key.scheme is not SchemeId.AES_CIPHER:
        raise SchemeMismatchError('Only AES tuple codes can be verified from a projection')
    verdict = _structural(key, ic)
    if verdict:
        return verdict, None

    diffs, verdict = _recovered_diffs(key, column_names, presented, ic)
    if verdict:
        return verdict, diffs
    return _freshness(ic, icrl), None
