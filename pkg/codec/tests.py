import itertools
import random

from django.test import SimpleTestCase
from hypothesis import given, settings
from hypothesis import strategies as st

from codec.cells import (
    decode_field_cell, decode_tuple_cells, encode_field_cell, encode_tuple_cells, field_cell_length,
)
from codec.codes import (
    CodecOptions, FieldCoordinates, IntegrityCode, TupleImage, VerdictStatus, canonical_field_message,
    canonical_tuple_message, escape, generate_field_code, generate_tuple_code, parse_tuple_message, unescape,
    verify_field_code, verify_tuple_code, verify_tuple_projection,
)
from codec.exceptions import (
    InvalidCoordinatesError, InvalidSerialError, MalformedCellError, MalformedMessageError, SchemeMismatchError,
)
from icrl.revocation import Icrl
from schemes.keys import SchemeId
from schemes.primitives import recover_plaintext
from schemes.sample_keys import all_sample_keys, sample_key

NAMES = [
    ('1', 'George', 'Smith'),
    ('2', 'Ben', 'Martinez'),
    ('3', 'Bob', 'Jones'),
]
COLUMNS = ['ID', 'First_Name', 'Last_Name']


def coords(attribute, key, table='Person'):
    return FieldCoordinates(table, attribute, (key,))


def tuple_image(row, table='Person'):
    return TupleImage(table, tuple(zip(COLUMNS, row)))


class OcfTable:
    """A 3x3 table of field codes with one serial per field
    """

    def __init__(self, key, icrl):
        self.key = key
        self.icrl = icrl
        self.values = [list(row) for row in NAMES]
        self.codes = []
        for row in self.values:
            serials = icrl.allocate(len(row))
            self.codes.append([
                generate_field_code(key, coords(column, row[0]), value, serial)
                for column, value, serial in zip(COLUMNS, row, serials)
            ])

    def verdicts(self):
        return [
            [
                verify_field_code(self.key, coords(COLUMNS[j], self.entity_key(i)), self.values[i][j],
                                  self.codes[i][j], self.icrl).status
                for j in range(len(COLUMNS))
            ]
            for i in range(len(self.values))
        ]

    def entity_key(self, i):
        return NAMES[i][0]


class CanonicalMessageTestCase(SimpleTestCase):
    def test_field_message_layout(self):
        """Test the byte layout of a field message
        """
        message = canonical_field_message(coords('First_Name', '2'), 'Ben', 2)
        self.assertEqual(message, b'2\x1fFirst_Name\x1fBen\x1f2')

    def test_every_part_binds(self):
        """Test if changing any of the four parts changes the message
        """
        base = canonical_field_message(coords('First_Name', '2'), 'Ben', 2)
        self.assertNotEqual(base, canonical_field_message(coords('Last_Name', '2'), 'Ben', 2))
        self.assertNotEqual(base, canonical_field_message(coords('First_Name', '3'), 'Ben', 2))
        self.assertNotEqual(base, canonical_field_message(coords('First_Name', '2'), 'Bob', 2))
        self.assertNotEqual(base, canonical_field_message(coords('First_Name', '2'), 'Ben', 3))

    def test_empty_and_null(self):
        """Test if empty string and NULL give distinct messages
        """
        c = coords('First_Name', '2')
        self.assertNotEqual(canonical_field_message(c, '', 2), canonical_field_message(c, None, 2))
        self.assertEqual(canonical_field_message(c, '', 2), b'2\x1fFirst_Name\x1f\x1f2')

    def test_composite_key(self):
        """Test if composite keys are joined by the record separator
        """
        c = FieldCoordinates('CountryLanguage', 'Percentage', ('NLD', 'Dutch'))
        self.assertEqual(canonical_field_message(c, '95.6', 9), b'9\x1fPercentage\x1f95.6\x1fNLD\x1eDutch')

    def test_bind_table(self):
        """Test if the table name is only bound when asked to
        """
        first = coords('Name', '1', table='City')
        second = coords('Name', '1', table='Country')
        self.assertEqual(canonical_field_message(first, 'X', 1), canonical_field_message(second, 'X', 1))
        self.assertNotEqual(canonical_field_message(first, 'X', 1, bind_table=True),
                            canonical_field_message(second, 'X', 1, bind_table=True))

    def test_tuple_message_layout(self):
        """Test the byte layout of a tuple message, including the single column case
        """
        image = TupleImage('Person', (('First_Name', 'George'), ('Last_Name', 'Smith')))
        self.assertEqual(canonical_tuple_message(image, 1234), b'George\x1fSmith\x1f1234')
        self.assertEqual(canonical_tuple_message(TupleImage('T', (('A', 'x'),)), 5), b'x\x1f5')

    def test_tuple_permutation(self):
        """Test if permuting two values changes a tuple message
        """
        first = TupleImage('T', (('A', 'a'), ('B', 'b'), ('C', 'c')))
        second = TupleImage('T', (('A', 'b'), ('B', 'a'), ('C', 'c')))
        self.assertNotEqual(canonical_tuple_message(first, 1), canonical_tuple_message(second, 1))

    def test_parse_tuple_message(self):
        """Test if a tuple message parses back into values and serial
        """
        image = TupleImage('T', (('A', 'x|\x1f'), ('B', None), ('C', '')))
        values, serial = parse_tuple_message(canonical_tuple_message(image, 77), 3)
        self.assertEqual(values, ['x|\x1f', None, ''])
        self.assertEqual(serial, 77)
        with self.assertRaises(MalformedMessageError):
            parse_tuple_message(canonical_tuple_message(image, 77), 2)

    def test_invalid_coordinates(self):
        """Test if empty identifiers, empty keys and repeated attributes are refused
        """
        with self.assertRaises(InvalidCoordinatesError):
            FieldCoordinates('T', '', ('1',))
        with self.assertRaises(InvalidCoordinatesError):
            FieldCoordinates('T', 'A', ())
        with self.assertRaises(InvalidCoordinatesError):
            TupleImage('T', (('A', '1'), ('A', '2')))

    def test_serial_range(self):
        """Test if serial 0 is reserved
        """
        with self.assertRaises(InvalidSerialError):
            IntegrityCode(b'x', 0, SchemeId.AES_CIPHER)


class EscapeTestCase(SimpleTestCase):
    def test_round_trip_random(self):
        """Test escape and unescape over ten thousand random strings with control bytes
        """
        rng = random.Random(23)
        alphabet = 'ab|\\\x00\x10\x1e\x1f\xe9中'
        for _ in range(10 ** 4):
            value = ''.join(rng.choice(alphabet) for _ in range(rng.randint(0, 12)))
            self.assertEqual(unescape(escape(value)), value)

    @given(st.one_of(st.none(), st.text()))
    @settings(max_examples=500, deadline=None)
    def test_round_trip_property(self, value):
        """Test if unescape inverts escape for any text or NULL
        """
        self.assertEqual(unescape(escape(value)), value)

    def test_no_bare_separators(self):
        """Test if escaped values never contain an unescaped separator
        """
        escaped = escape('a\x1fb\x1ec\x10d')
        self.assertEqual(escaped, b'a\x10\x1fb\x10\x1ec\x10\x10d')

    def test_invalid_escape(self):
        """Test if a dangling or invalid escape sequence is rejected
        """
        for data in (b'a\x10', b'a\x10b', b'a\x1fb'):
            with self.assertRaises(MalformedMessageError):
                unescape(data)


class InjectivityTestCase(SimpleTestCase):
    def test_small_alphabet_exhaustive(self):
        """Test distinct field inputs over a small alphabet for message collisions
        """
        alphabet = ['', 'a', '\x1f', '\x1e', '\x10', 'a\x1f', '\x1fa', '\x1e\x1f']
        seen = {}
        for attribute, value, key in itertools.product(['A', 'A\x1f'], alphabet, alphabet):
            for serial in (1, 11):
                triple = (attribute, value, key, serial)
                message = canonical_field_message(FieldCoordinates('T', attribute, (key,)), value, serial)
                self.assertNotIn(message, seen, triple)
                seen[message] = triple

    def test_composite_keys_exhaustive(self):
        """Test if composite keys never collide with each other
        """
        alphabet = ['', 'a', '\x1e', 'a\x1e']
        seen = set()
        for key in itertools.chain(itertools.product(alphabet, repeat=1), itertools.product(alphabet, repeat=2)):
            message = canonical_field_message(FieldCoordinates('T', 'A', key), 'v', 1)
            self.assertNotIn(message, seen)
            seen.add(message)

    def test_random_collisions(self):
        """Test a hundred thousand random field and tuple inputs for collisions
        """
        rng = random.Random(29)
        alphabet = 'ab\x1f\x1e\x10'
        fields = {}
        tuples = {}

        def text():
            return ''.join(rng.choice(alphabet) for _ in range(rng.randint(0, 4)))

        for _ in range(10 ** 5):
            triple = (text(), text(), (text(),), rng.randint(1, 9))
            message = canonical_field_message(FieldCoordinates('T', 'A' + triple[0], triple[2]), triple[1], triple[3])
            self.assertEqual(fields.setdefault(message, triple), triple)

            row = tuple(rng.choice([None, text()]) for _ in range(2))
            serial = rng.randint(1, 9)
            message = canonical_tuple_message(TupleImage('T', (('A', row[0]), ('B', row[1]))), serial)
            self.assertEqual(tuples.setdefault(message, (row, serial)), (row, serial))


class FieldCodeTestCase(SimpleTestCase):
    def setUp(self):
        self.icrl = Icrl()

    def test_round_trip(self):
        """Test if an untampered field verifies under every scheme
        """
        for key in all_sample_keys():
            serial = self.icrl.allocate(1)[0]
            ic = generate_field_code(key, coords('First_Name', '2'), 'Ben', serial)
            self.assertEqual(ic.scheme, key.scheme)
            verdict = verify_field_code(key, coords('First_Name', '2'), 'Ben', ic, self.icrl)
            self.assertTrue(verdict.is_valid)

    def test_distinct_codes(self):
        """Test if entity key and serial both participate in the code
        """
        key = sample_key('rsa')
        first, second = self.icrl.allocate(2)
        self.assertNotEqual(generate_field_code(key, coords('Last_Name', '1'), 'Smith', first).code,
                            generate_field_code(key, coords('Last_Name', '2'), 'Smith', first).code)
        self.assertNotEqual(generate_field_code(key, coords('Last_Name', '1'), 'Smith', first).code,
                            generate_field_code(key, coords('Last_Name', '1'), 'Smith', second).code)

    def test_edited_value(self):
        """Test if a value edited after code creation verifies FORGED
        """
        for key in all_sample_keys():
            serial = self.icrl.allocate(1)[0]
            ic = generate_field_code(key, coords('First_Name', '2'), 'Ben', serial)
            verdict = verify_field_code(key, coords('First_Name', '2'), 'Bill', ic, self.icrl)
            self.assertEqual(verdict.status, VerdictStatus.FORGED)

    def test_revoked_serial(self):
        """Test if a valid pair turns STALE once its serial is revoked
        """
        for key in all_sample_keys():
            serial = self.icrl.allocate(1)[0]
            ic = generate_field_code(key, coords('First_Name', '2'), 'Ben', serial)
            self.icrl.revoke([serial])
            verdict = verify_field_code(key, coords('First_Name', '2'), 'Ben', ic, self.icrl)
            self.assertEqual(verdict.status, VerdictStatus.STALE)

    def test_unallocated_serial(self):
        """Test if a checking code with a serial beyond the watermark is STALE
        """
        key = sample_key('pbkdf2')
        ic = generate_field_code(key, coords('First_Name', '2'), 'Ben', 50)
        self.assertEqual(verify_field_code(key, coords('First_Name', '2'), 'Ben', ic, self.icrl).status,
                         VerdictStatus.STALE)

    def test_forged_and_revoked(self):
        """Test if an edited value with a revoked serial is reported FORGED, not STALE
        """
        key = sample_key('aes')
        serial = self.icrl.allocate(1)[0]
        ic = generate_field_code(key, coords('First_Name', '2'), 'Ben', serial)
        self.icrl.revoke([serial])
        self.assertEqual(verify_field_code(key, coords('First_Name', '2'), 'Bill', ic, self.icrl).status,
                         VerdictStatus.FORGED)

    def test_structural(self):
        """Test if a truncated code is STRUCTURAL
        """
        for key in all_sample_keys():
            ic = IntegrityCode(b'short', self.icrl.allocate(1)[0], key.scheme)
            verdict = verify_field_code(key, coords('First_Name', '2'), 'Ben', ic, self.icrl)
            self.assertEqual(verdict.status, VerdictStatus.STRUCTURAL)

    def test_scheme_mismatch(self):
        """Test if verifying with a key of another scheme is an error
        """
        ic = generate_field_code(sample_key('aes'), coords('First_Name', '2'), 'Ben', self.icrl.allocate(1)[0])
        with self.assertRaises(SchemeMismatchError):
            verify_field_code(sample_key('pbkdf2'), coords('First_Name', '2'), 'Ben', ic, self.icrl)

    def test_bind_table_option(self):
        """Test if bound table names turn cross-table substitutions into forgeries
        """
        key = sample_key('pbkdf2')
        options = CodecOptions(bind_table=True)
        serial = self.icrl.allocate(1)[0]
        ic = generate_field_code(key, coords('Name', '1', table='City'), 'X', serial, options=options)
        self.assertTrue(verify_field_code(key, coords('Name', '1', table='City'), 'X', ic, self.icrl,
                                          options=options).is_valid)
        self.assertEqual(verify_field_code(key, coords('Name', '1', table='Country'), 'X', ic, self.icrl,
                                           options=options).status, VerdictStatus.FORGED)
        unbound = generate_field_code(key, coords('Name', '1', table='City'), 'X', self.icrl.allocate(1)[0])
        self.assertTrue(verify_field_code(key, coords('Name', '1', table='Country'), 'X', unbound, self.icrl).is_valid)


class TamperOracleTestCase(SimpleTestCase):
    def test_single_field_mutations(self):
        """Test if each of the nine single-field edits of a 3x3 table is flagged exactly at its coordinate
        """
        for key in all_sample_keys():
            table = OcfTable(key, Icrl())
            for i, j in itertools.product(range(3), range(3)):
                original = table.values[i][j]
                table.values[i][j] = original + '!'
                verdicts = table.verdicts()
                for k, m in itertools.product(range(3), range(3)):
                    expected = VerdictStatus.FORGED if (k, m) == (i, j) else VerdictStatus.VALID
                    self.assertEqual(verdicts[k][m], expected, (key.scheme, i, j, k, m))
                table.values[i][j] = original

    def test_swaps(self):
        """Test if swapping values, with or without their codes, flags every touched coordinate
        """
        for key in all_sample_keys():
            table = OcfTable(key, Icrl())
            for a, b in (((0, 1), (0, 2)), ((0, 1), (1, 1))):
                for move_codes in (False, True):
                    (ai, aj), (bi, bj) = a, b
                    table.values[ai][aj], table.values[bi][bj] = table.values[bi][bj], table.values[ai][aj]
                    if move_codes:
                        table.codes[ai][aj], table.codes[bi][bj] = table.codes[bi][bj], table.codes[ai][aj]
                    verdicts = table.verdicts()
                    self.assertEqual(verdicts[ai][aj], VerdictStatus.FORGED)
                    self.assertEqual(verdicts[bi][bj], VerdictStatus.FORGED)
                    table.values[ai][aj], table.values[bi][bj] = table.values[bi][bj], table.values[ai][aj]
                    if move_codes:
                        table.codes[ai][aj], table.codes[bi][bj] = table.codes[bi][bj], table.codes[ai][aj]

    def test_tuple_mutations(self):
        """Test if each single-field edit of an OCT table is flagged at exactly its row
        """
        for key in all_sample_keys():
            icrl = Icrl()
            rows = [list(row) for row in NAMES]
            codes = [generate_tuple_code(key, tuple_image(row), icrl.allocate(1)[0]) for row in rows]
            for i, j in itertools.product(range(3), range(3)):
                original = rows[i][j]
                rows[i][j] = original + '!'
                for k in range(3):
                    verdict, _ = verify_tuple_code(key, tuple_image(rows[k]), codes[k], icrl)
                    expected = VerdictStatus.FORGED if k == i else VerdictStatus.VALID
                    self.assertEqual(verdict.status, expected)
                rows[i][j] = original


class TupleCodeTestCase(SimpleTestCase):
    def setUp(self):
        self.icrl = Icrl()

    def test_round_trip(self):
        """Test if an untampered tuple verifies without diffs
        """
        for key in all_sample_keys():
            ic = generate_tuple_code(key, tuple_image(NAMES[0]), self.icrl.allocate(1)[0])
            verdict, diffs = verify_tuple_code(key, tuple_image(NAMES[0]), ic, self.icrl)
            self.assertTrue(verdict.is_valid)
            self.assertIsNone(diffs)

    def test_aes_recovers_tuple(self):
        """Test if an AES tuple code decrypts into the original values and serial
        """
        key = sample_key('aes')
        serial = self.icrl.allocate(1)[0]
        ic = generate_tuple_code(key, tuple_image(NAMES[1]), serial)
        values, recovered_serial = parse_tuple_message(recover_plaintext(key, ic.code), 3)
        self.assertEqual(values, list(NAMES[1]))
        self.assertEqual(recovered_serial, serial)

    def test_distinct_serials(self):
        """Test if identical tuples with distinct serials get distinct codes
        """
        for key in all_sample_keys():
            first, second = self.icrl.allocate(2)
            salt = bytes(24)
            self.assertNotEqual(generate_tuple_code(key, tuple_image(NAMES[0]), first, salt=salt).code,
                                generate_tuple_code(key, tuple_image(NAMES[0]), second, salt=salt).code)

    def test_aes_diffs(self):
        """Test if AES names the altered attribute
        """
        key = sample_key('aes')
        ic = generate_tuple_code(key, tuple_image(NAMES[0]), self.icrl.allocate(1)[0])
        verdict, diffs = verify_tuple_code(key, tuple_image(('1', 'George', 'Smyth')), ic, self.icrl)
        self.assertEqual(verdict.status, VerdictStatus.FORGED)
        self.assertEqual(diffs, ['Last_Name'])

    def test_mac_has_no_diffs(self):
        """Test if MAC and signature schemes only tell that the tuple is wrong
        """
        for scheme in ('pbkdf2', 'rsa'):
            key = sample_key(scheme)
            ic = generate_tuple_code(key, tuple_image(NAMES[0]), self.icrl.allocate(1)[0])
            verdict, diffs = verify_tuple_code(key, tuple_image(('1', 'George', 'Smyth')), ic, self.icrl)
            self.assertEqual(verdict.status, VerdictStatus.FORGED)
            self.assertIsNone(diffs)

    def test_revoked_tuple(self):
        """Test if a revoked tuple verifies STALE
        """
        key = sample_key('aes')
        serial = self.icrl.allocate(1)[0]
        ic = generate_tuple_code(key, tuple_image(NAMES[0]), serial)
        self.icrl.revoke([serial])
        verdict, _ = verify_tuple_code(key, tuple_image(NAMES[0]), ic, self.icrl)
        self.assertEqual(verdict.status, VerdictStatus.STALE)

    def test_projection(self):
        """Test if an AES tuple verifies from a projection of its columns
        """
        key = sample_key('aes')
        serial = self.icrl.allocate(1)[0]
        ic = generate_tuple_code(key, tuple_image(NAMES[2]), serial)
        verdict, diffs = verify_tuple_projection(key, COLUMNS, [('Last_Name', 'Jones')], ic, self.icrl)
        self.assertTrue(verdict.is_valid)
        verdict, diffs = verify_tuple_projection(key, COLUMNS, [('Last_Name', 'Jonas')], ic, self.icrl)
        self.assertEqual(verdict.status, VerdictStatus.FORGED)
        self.assertEqual(diffs, ['Last_Name'])
        self.icrl.revoke([serial])
        verdict, _ = verify_tuple_projection(key, COLUMNS, [('Last_Name', 'Jones')], ic, self.icrl)
        self.assertEqual(verdict.status, VerdictStatus.STALE)

    def test_projection_serial_swap(self):
        """Test if a projection presented with another row's serial is FORGED
        """
        key = sample_key('aes')
        first, second = self.icrl.allocate(2)
        ic = generate_tuple_code(key, tuple_image(NAMES[0]), first)
        swapped = IntegrityCode(ic.code, second, ic.scheme)
        verdict, _ = verify_tuple_projection(key, COLUMNS, [('First_Name', 'George')], swapped, self.icrl)
        self.assertEqual(verdict.status, VerdictStatus.FORGED)

    def test_projection_needs_aes(self):
        """Test if projections of MAC tuples cannot be verified from the code alone
        """
        key = sample_key('pbkdf2')
        ic = generate_tuple_code(key, tuple_image(NAMES[0]), self.icrl.allocate(1)[0])
        with self.assertRaises(SchemeMismatchError):
            verify_tuple_projection(key, COLUMNS, [('First_Name', 'George')], ic, self.icrl)


class CellTestCase(SimpleTestCase):
    def test_field_cell(self):
        """Test the OCF cell text and its parser
        """
        ic = IntegrityCode(b'\x00\x01\x02', 42, SchemeId.AES_CIPHER)
        self.assertEqual(encode_field_cell(ic), 'AAEC:42')
        self.assertEqual(decode_field_cell('AAEC:42', SchemeId.AES_CIPHER), ic)
        self.assertEqual(len(encode_field_cell(ic)), field_cell_length(3, 42))

    def test_tuple_cells(self):
        """Test the OCT serial and IC cells
        """
        ic = IntegrityCode(b'\xff' * 4, 7, SchemeId.PBKDF2_MAC)
        self.assertEqual(encode_tuple_cells(ic), ('7', '/////w=='))
        self.assertEqual(decode_tuple_cells('7', '/////w==', SchemeId.PBKDF2_MAC), ic)

    def test_malformed_cells(self):
        """Test if broken cells raise MalformedCellError
        """
        for text in (None, '', 'AAEC', 'AAEC:', 'AAEC:x', 'A*EC:4', ':4', 'AAEC:0', 'AAEC:-1'):
            with self.assertRaises(MalformedCellError, msg=repr(text)):
                decode_field_cell(text, SchemeId.AES_CIPHER)
        for serial, code in ((None, 'AAEC'), ('7', None), ('', 'AAEC'), ('7', '!!'), ('0', 'AAEC')):
            with self.assertRaises(MalformedCellError):
                decode_tuple_cells(serial, code, SchemeId.AES_CIPHER)
