import io
import os
import random
import tempfile

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, TestCase
from hypothesis import given, settings
from hypothesis import strategies as st

from codec.cells import decode_field_cell, decode_tuple_cells
from codec.codes import FieldCoordinates, TupleImage, verify_field_code, verify_tuple_code
from conversion.converter import (
    convert_data_file, decode_records, predict_converted_size, seeded_salt_source,
)
from conversion.datafile import (
    escape_field, parse_records, read_data_file, read_records, split_record, unescape_field, write_data_file,
)
from conversion.ddl import emit_dump_statement, emit_load_statement, emit_load_statements, emit_schema_ddl
from conversion.exceptions import ArityError, ConversionException, DataFileError
from conversion.tasks import convert_catalog, data_file_path
from icrl.revocation import Icrl
from rewrite.exceptions import SchemaMismatchError
from rewrite.schema import SchemaCatalog, plain_table
from schemes.keys import SchemeId, write_key_file
from schemes.sample_keys import all_sample_keys, sample_key

CITY = plain_table('City', ['ID', 'Name', 'CountryCode', 'District', 'Population'], ['ID'])
PERSON = plain_table('Person', ['ID', 'Name'], ['ID'])
WORDS = ['Kabul', 'Qandahar', 'Amsterdam', 'Rotterdam', 'Haag', 'Utrecht', 'Tilburg', 'Groningen', 'Breda']


def random_rows(rng, count):
    return [[str(i + 1), rng.choice(WORDS), rng.choice(['NLD', 'AFG', 'a|b']), rng.choice(WORDS + [None]),
             str(rng.randint(0, 10 ** 6))] for i in range(count)]


class DataFileTestCase(SimpleTestCase):
    def test_escape(self):
        """Test the backslash convention for delimiters, backslashes, line feeds and NULL
        """
        self.assertEqual(escape_field('a|b\\c\nd'), 'a\\|b\\\\c\\nd')
        self.assertEqual(escape_field(None), '\\N')
        self.assertEqual(escape_field(''), '')
        self.assertEqual(unescape_field('a\\|b\\\\c\\nd'), 'a|b\\c\nd')
        self.assertIsNone(unescape_field('\\N'))
        self.assertEqual(unescape_field('\\\\N'), '\\N')

    def test_split_record(self):
        """Test if escaped delimiters do not split fields
        """
        self.assertEqual(split_record('1|a\\|b|\\N'), ['1', 'a\\|b', '\\N'])
        self.assertEqual(split_record('|'), ['', ''])
        with self.assertRaises(DataFileError):
            split_record('1|a\\')

    def test_unknown_escape(self):
        """Test if an unknown escape sequence is rejected with its row
        """
        with self.assertRaises(DataFileError) as cm:
            unescape_field('a\\qb', row=4)
        self.assertEqual(cm.exception.row, 4)

    def test_parse_records(self):
        """Test record splitting, a missing final terminator and broken UTF-8
        """
        self.assertEqual(parse_records(b''), [])
        self.assertEqual(parse_records(b'1|a\n2|b\n'), [['1', 'a'], ['2', 'b']])
        self.assertEqual(parse_records(b'1|a\n2|b'), [['1', 'a'], ['2', 'b']])
        with self.assertRaises(DataFileError) as cm:
            parse_records(b'1|a\n2|\xff\n')
        self.assertEqual(cm.exception.row, 2)

    @given(st.lists(st.lists(st.one_of(st.none(), st.text()), min_size=3, max_size=3), max_size=10))
    @settings(max_examples=100, deadline=None)
    def test_file_round_trip(self, rows):
        """Test if written values are read back unchanged
        """
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'dump.txt')
            try:
                write_data_file(path, rows)
            except DataFileError:
                return
            self.assertEqual(read_data_file(path), rows)


class DdlTestCase(SimpleTestCase):
    def test_ocf_ddl(self):
        """Test if OCF adds one code column after every data column
        """
        statements = emit_schema_ddl(CITY, 'ocf')
        self.assertEqual(len(statements), 5)
        self.assertEqual(statements[0], 'ALTER TABLE `City` ADD COLUMN `ID_IC` TEXT NOT NULL AFTER `ID`;')
        self.assertEqual(statements[4],
                         'ALTER TABLE `City` ADD COLUMN `Population_IC` TEXT NOT NULL AFTER `Population`;')

    def test_oct_ddl(self):
        """Test if OCT adds the serial and code columns at the end of the table
        """
        self.assertEqual(emit_schema_ddl(CITY, 'oct'), [
            'ALTER TABLE `City` ADD COLUMN `Serial` BIGINT UNSIGNED NOT NULL;',
            'ALTER TABLE `City` ADD COLUMN `IC` TEXT NOT NULL;',
        ])

    def test_collision(self):
        """Test if an existing column with a code column name is refused
        """
        table = plain_table('City', ['ID', 'Name', 'Name_IC'], ['ID'])
        with self.assertRaises(SchemaMismatchError):
            emit_schema_ddl(table, 'ocf')
        with self.assertRaises(SchemaMismatchError):
            emit_schema_ddl(plain_table('t', ['ID', 'Serial'], ['ID']), 'oct')

    def test_load_statement(self):
        """Test the LOAD DATA statement and the quoting of its path
        """
        self.assertEqual(
            emit_load_statement('City', '/data/City.txt'),
            "LOAD DATA INFILE '/data/City.txt' REPLACE INTO TABLE `City` FIELDS TERMINATED BY '|' "
            "LINES TERMINATED BY '\\n';",
        )
        self.assertIn("'/data/o''brien/City.txt'", emit_load_statement('City', "/data/o'brien/City.txt"))
        catalog = SchemaCatalog([CITY, PERSON])
        text = emit_load_statements(catalog, {'City': '/a/City.txt', 'Person': '/a/Person.txt'})
        self.assertEqual(text.count('LOAD DATA INFILE'), 2)
        self.assertTrue(text.endswith('\n'))

    def test_dump_statement(self):
        """Test the statement dumping a plain table
        """
        self.assertEqual(
            emit_dump_statement('City', '/data/City.txt'),
            "SELECT * INTO OUTFILE '/data/City.txt' FIELDS TERMINATED BY '|' LINES TERMINATED BY '\\n' FROM `City`;",
        )


class ConvertDataFileTestCase(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.in_path = os.path.join(self.tmp.name, 'in.txt')
        self.out_path = os.path.join(self.tmp.name, 'out.txt')

    def test_ocf(self):
        """Test if every field is followed by a verifiable code cell
        """
        key = sample_key('aes')
        write_data_file(self.in_path, [['1', 'George'], ['2', 'Ben|Jr'], ['3', None]])
        icrl = Icrl()
        result = convert_data_file(self.in_path, self.out_path, PERSON, 'ocf', key, icrl)
        self.assertEqual(result.rows, 3)
        self.assertEqual(icrl.next_serial, 7)

        original = read_records(self.in_path)
        converted = read_records(self.out_path)
        self.assertEqual([len(cells) for cells in converted], [4, 4, 4])
        for before, after in zip(original, converted):
            self.assertEqual(after[0::2], before)
            values = [unescape_field(cell) for cell in before]
            for attribute, value, cell in zip(['ID', 'Name'], values, after[1::2]):
                ic = decode_field_cell(cell, SchemeId.AES_CIPHER)
                verdict = verify_field_code(key, FieldCoordinates('Person', attribute, (values[0],)), value, ic, icrl)
                self.assertTrue(verdict.is_valid)

    def test_oct(self):
        """Test if every row gains a serial and a verifiable code
        """
        key = sample_key('pbkdf2')
        write_data_file(self.in_path, [['1', 'George'], ['2', None]])
        icrl = Icrl()
        convert_data_file(self.in_path, self.out_path, PERSON, 'oct', key, icrl)
        self.assertEqual(icrl.next_serial, 3)
        for cells in read_records(self.out_path):
            self.assertEqual(len(cells), 4)
            values = [unescape_field(cell) for cell in cells[:2]]
            ic = decode_tuple_cells(cells[2], cells[3], SchemeId.PBKDF2_MAC)
            verdict, _ = verify_tuple_code(key, TupleImage('Person', tuple(zip(['ID', 'Name'], values))), ic, icrl)
            self.assertTrue(verdict.is_valid)

    def test_empty_file(self):
        """Test if an empty dump converts to an empty file without allocating serials
        """
        open(self.in_path, 'wb').close()
        icrl = Icrl()
        result = convert_data_file(self.in_path, self.out_path, PERSON, 'ocf', sample_key('aes'), icrl)
        self.assertEqual(os.path.getsize(self.out_path), 0)
        self.assertEqual(icrl, Icrl())
        self.assertIsNone(result.serials)
        self.assertEqual(result.ratio, 1.0)

    def test_arity(self):
        """Test if a short row is reported before any serial is allocated
        """
        with open(self.in_path, 'w') as f:
            f.write('1|George\n2\n')
        icrl = Icrl()
        with self.assertRaises(ArityError) as cm:
            convert_data_file(self.in_path, self.out_path, PERSON, 'ocf', sample_key('aes'), icrl)
        self.assertEqual(cm.exception.row, 2)
        self.assertEqual(icrl.next_serial, 1)

    def test_null_key(self):
        """Test if a NULL key value is refused
        """
        write_data_file(self.in_path, [[None, 'George']])
        with self.assertRaises(DataFileError):
            decode_records(read_records(self.in_path), PERSON)

    def test_converted_table(self):
        """Test if a converted table layout cannot be converted again
        """
        with self.assertRaises(ConversionException):
            decode_records([], PERSON.to_icdb('ocf'))

    def test_size_prediction(self):
        """Test if converted files have exactly the predicted size for every scheme and model
        """
        rng = random.Random(5)
        for key in all_sample_keys():
            for model in ('ocf', 'oct'):
                write_data_file(self.in_path, random_rows(rng, rng.randint(1, 20)))
                icrl = Icrl(next_serial=rng.randint(1, 10 ** 6))
                first = icrl.next_serial
                predicted = predict_converted_size(read_records(self.in_path), CITY, model, key, first)
                convert_data_file(self.in_path, self.out_path, CITY, model, key, icrl)
                self.assertEqual(os.path.getsize(self.out_path), predicted, (key.scheme, model))

    def test_pbkdf2_ocf_size_formula(self):
        """Test the PBKDF2 OCF size against a per-field count of code bytes
        """
        rng = random.Random(11)
        key = sample_key('pbkdf2')
        for _ in range(10):
            write_data_file(self.in_path, random_rows(rng, rng.randint(1, 30)))
            icrl = Icrl(next_serial=rng.randint(1, 10 ** 9))
            serial = icrl.next_serial
            expected = os.path.getsize(self.in_path)
            for _ in read_records(self.in_path):
                for _ in CITY.columns:
                    expected += 1 + 64 + 1 + len(str(serial))
                    serial += 1
            convert_data_file(self.in_path, self.out_path, CITY, 'ocf', key, icrl)
            self.assertEqual(os.path.getsize(self.out_path), expected)

    def test_restart_safety(self):
        """Test if converting twice with a fresh ICRL produces identical files
        """
        write_data_file(self.in_path, random_rows(random.Random(3), 10))
        for key in all_sample_keys():
            outputs = []
            for attempt in range(2):
                out_path = os.path.join(self.tmp.name, 'out{}.txt'.format(attempt))
                convert_data_file(self.in_path, out_path, CITY, 'ocf', key, Icrl(),
                                  salt_source=seeded_salt_source(42))
                with open(out_path, 'rb') as f:
                    outputs.append(f.read())
            self.assertEqual(outputs[0], outputs[1], key.scheme)


class ConvertCatalogTestCase(TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.in_dir = os.path.join(self.tmp.name, 'in')
        self.out_dir = os.path.join(self.tmp.name, 'out')
        os.makedirs(self.in_dir)
        os.makedirs(self.out_dir)
        self.key_path = os.path.join(self.tmp.name, 'keys.txt')
        write_key_file(sample_key('aes'), self.key_path)
        self.catalog = SchemaCatalog([CITY, PERSON])
        write_data_file(data_file_path(self.in_dir, 'City'), random_rows(random.Random(1), 4))
        write_data_file(data_file_path(self.in_dir, 'Person'), [['1', 'a'], ['2', 'b']])

    def test_serials_are_preallocated(self):
        """Test if tables receive consecutive, disjoint serial blocks
        """
        icrl = Icrl()
        outcomes = convert_catalog(self.catalog, self.in_dir, self.out_dir, 'ocf', self.key_path, icrl)
        self.assertEqual(icrl.next_serial, 1 + 4 * 5 + 2 * 2)
        blocks = [result.serials for _, _, result in outcomes]
        self.assertEqual((blocks[0].first, blocks[0].count), (1, 20))
        self.assertEqual((blocks[1].first, blocks[1].count), (21, 4))

    def test_tasks(self):
        """Test if the django-q tasks write the same files as the inline conversion
        """
        convert_catalog(self.catalog, self.in_dir, self.out_dir, 'oct', self.key_path, Icrl(), use_tasks=True)
        inline_dir = os.path.join(self.tmp.name, 'inline')
        os.makedirs(inline_dir)
        convert_catalog(self.catalog, self.in_dir, inline_dir, 'oct', self.key_path, Icrl())
        for table in self.catalog:
            with open(data_file_path(self.out_dir, table.table_name), 'rb') as a, \
                    open(data_file_path(inline_dir, table.table_name), 'rb') as b:
                self.assertEqual(a.read(), b.read())


class ConvertCommandTestCase(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.schema = os.path.join(self.tmp.name, 'schema.yaml')
        with open(self.schema, 'w') as f:
            f.write(SchemaCatalog([PERSON]).dumps())

    def test_convert_schema(self):
        """Test if the schema command prints one ALTER per column
        """
        out = io.StringIO()
        call_command('icdb_convert_schema', model='ocf', schema=self.schema, stdout=out)
        self.assertEqual(out.getvalue().count('ALTER TABLE `Person`'), 2)

    def test_convert_data(self):
        """Test if the data command converts, saves the ICRL and prints LOAD statements
        """
        in_dir = os.path.join(self.tmp.name, 'in')
        out_dir = os.path.join(self.tmp.name, 'out')
        os.makedirs(in_dir)
        write_data_file(data_file_path(in_dir, 'Person'), [['1', 'a'], ['2', 'b']])
        keys = os.path.join(self.tmp.name, 'keys.txt')
        icrl = os.path.join(self.tmp.name, 'icrl.txt')
        write_key_file(sample_key('rsa'), keys)

        out = io.StringIO()
        call_command('icdb_convert_data', model='oct', schema=self.schema, keys=keys, icrl=icrl, in_dir=in_dir,
                     out_dir=out_dir, stdout=out)
        self.assertEqual(Icrl.load(icrl).next_serial, 3)
        self.assertIn('LOAD DATA INFILE', out.getvalue())
        self.assertEqual(len(read_records(data_file_path(out_dir, 'Person'))), 2)

    def test_missing_dump(self):
        """Test if a missing dump file is a usage error
        """
        keys = os.path.join(self.tmp.name, 'keys.txt')
        write_key_file(sample_key('aes'), keys)
        with self.assertRaises(CommandError):
            call_command('icdb_convert_data', model='ocf', schema=self.schema, keys=keys,
                         icrl=os.path.join(self.tmp.name, 'icrl.txt'), in_dir=self.tmp.name,
                         out_dir=self.tmp.name, stdout=io.StringIO())
