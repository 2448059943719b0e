import os
import random
import tempfile

from django.test import SimpleTestCase, TestCase

from conversion.converter import convert_data_file, seeded_salt_source
from conversion.datafile import write_data_file
from icrl.revocation import Icrl
from rewrite.exceptions import UnknownTableError
from rewrite.schema import Model, SchemaCatalog, plain_table
from schemes.sample_keys import sample_key
from store.attacks import (
    attack_delete, attack_forge, attack_insert, attack_replay_old, attack_substitute, snapshot_row,
)
from store.connectors import DjangoConnector
from store.embedded import EmbeddedStore, compare, open_embedded_store
from store.exceptions import ConstraintViolationError, ExecutionError, UnknownRowError

CITY = plain_table('City', ['ID', 'Name', 'CountryCode', 'District', 'Population'], ['ID'])
COUNTRY = plain_table('Country', ['Code', 'Name', 'Continent'], ['Code'])
CITY_ROWS = [
    ('9', 'Kabul', 'AFG', 'Kabol', '1780000'),
    ('30', 'Qandahar', 'AFG', None, '237500'),
    ('250', 'Amsterdam', 'NLD', 'Noord-Holland', '731200'),
    ('1000', 'Rotterdam', 'NLD', 'Zuid-Holland', '593321'),
    ('1001', 'Madrid', 'ESP', 'Madrid', '2879052'),
]
COUNTRY_ROWS = [
    ('AFG', 'Afghanistan', 'Asia'),
    ('NLD', 'Netherlands', 'Europe'),
    ('ESP', 'Spain', 'Europe'),
]


def world_store():
    store = EmbeddedStore()
    for schema, rows in ((CITY, CITY_ROWS), (COUNTRY, COUNTRY_ROWS)):
        store.create_table(schema)
        for row in rows:
            store.insert_row(schema.table_name, row)
    return store


def ids(result):
    return [row[0] for row in result.rows]


class CompareTestCase(SimpleTestCase):
    def test_numeric(self):
        """Test if numbers compare by value and everything else as strings
        """
        self.assertTrue(compare('30', '<', '250'))
        self.assertFalse(compare('30', '<', '250x'))
        self.assertTrue(compare('1.50', '=', '1.5'))
        self.assertTrue(compare('abc', '<', 'abd'))
        self.assertFalse(compare('NLD', '=', 'nld'))

    def test_null(self):
        """Test if every comparison with NULL is false
        """
        for op in ('=', '!=', '<>', '<', '>', '<=', '>='):
            self.assertFalse(compare(None, op, 'a'))
            self.assertFalse(compare('a', op, None))


class ExecuteTestCase(SimpleTestCase):
    def setUp(self):
        self.store = world_store()

    def test_star(self):
        """Test if a star select returns every row and column in storage order
        """
        result = self.store.execute('SELECT * FROM City;')
        self.assertEqual(result.rows, list(CITY_ROWS))
        self.assertEqual(result.columns, tuple(CITY.column_names))

    def test_loose_typing(self):
        """Test if a quoted number still compares numerically
        """
        self.assertEqual(ids(self.store.execute("SELECT ID FROM City WHERE `ID`<'250';")), ['9', '30'])
        self.assertEqual(ids(self.store.execute('SELECT ID FROM City WHERE ID >= 1000;')), ['1000', '1001'])

    def test_null_condition(self):
        """Test if NULL cells match neither a condition nor its negation
        """
        equal = ids(self.store.execute("SELECT ID FROM City WHERE District = 'Kabol';"))
        different = ids(self.store.execute("SELECT ID FROM City WHERE District != 'Kabol';"))
        self.assertEqual(equal, ['9'])
        self.assertEqual(different, ['250', '1000', '1001'])

    def test_boolean_operators(self):
        """Test AND, OR and parentheses against a brute force filter
        """
        result = self.store.execute(
            "SELECT ID FROM City WHERE CountryCode = 'ESP' OR (CountryCode = 'NLD' AND Population > '600000');"
        )
        expected = [row[0] for row in CITY_ROWS
                    if row[2] == 'ESP' or (row[2] == 'NLD' and int(row[4]) > 600000)]
        self.assertEqual(ids(result), expected)

    def test_random_filters(self):
        """Test single comparisons on random data against a brute force filter
        """
        rng = random.Random(3)
        store = EmbeddedStore()
        store.create_table(CITY)
        rows = [(str(i), rng.choice(['a', 'b', 'c']), rng.choice(['NLD', 'AFG']), rng.choice(['x', None]),
                 str(rng.randint(0, 100))) for i in range(200)]
        for row in rows:
            store.insert_row('City', row)
        operators = {'=': int.__eq__, '<': int.__lt__, '>': int.__gt__, '<=': int.__le__, '>=': int.__ge__,
                     '<>': int.__ne__}
        for op, function in operators.items():
            threshold = rng.randint(0, 100)
            with self.subTest(op=op, threshold=threshold):
                result = store.execute("SELECT ID FROM City WHERE Population {} '{}';".format(op, threshold))
                self.assertEqual(ids(result), [row[0] for row in rows if function(int(row[4]), threshold)])

    def test_distinct(self):
        """Test if DISTINCT removes repeated result rows
        """
        result = self.store.execute('SELECT DISTINCT CountryCode FROM City;')
        self.assertEqual(result.rows, [('AFG',), ('NLD',), ('ESP',)])

    def test_join(self):
        """Test if an inner join pairs rows by its condition
        """
        result = self.store.execute(
            "SELECT City.Name, Country.Name FROM Country INNER JOIN City ON Country.Code = City.CountryCode "
            "WHERE Country.Continent = 'Europe';"
        )
        self.assertEqual(result.rows, [('Amsterdam', 'Netherlands'), ('Rotterdam', 'Netherlands'),
                                       ('Madrid', 'Spain')])

    def test_delete(self):
        """Test if DELETE removes exactly the matching rows
        """
        result = self.store.execute("DELETE FROM `City` WHERE `CountryCode`='NLD';")
        self.assertEqual(result.rowcount, 2)
        self.assertEqual(ids(self.store.execute('SELECT ID FROM City;')), ['9', '30', '1001'])
        self.assertEqual(self.store.execute('DELETE FROM `City`;').rowcount, 3)
        self.assertEqual(self.store.rows_of('City'), [])

    def test_insert(self):
        """Test if INSERT fills absent columns with NULL and keeps keys unique
        """
        result = self.store.execute("INSERT INTO `City` (ID, Name, CountryCode) VALUES ('4080', 'Boise', 'USA');")
        self.assertEqual(result.rowcount, 1)
        self.assertEqual(self.store.get_row('City', ('4080',)), ('4080', 'Boise', 'USA', None, None))
        with self.assertRaises(ConstraintViolationError):
            self.store.execute("INSERT INTO City (ID, Name) VALUES ('5000', 'a'), ('9', 'b');")
        self.assertEqual(len(self.store.rows_of('City')), len(CITY_ROWS) + 1)

    def test_unknown_table(self):
        """Test if statements on unknown tables fail
        """
        with self.assertRaises(UnknownTableError):
            self.store.execute('SELECT * FROM Nowhere;')
        with self.assertRaises(ExecutionError):
            self.store.create_table(CITY)


class LoadTestCase(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def test_replace(self):
        """Test if loading a file replaces rows with the same key
        """
        store = world_store()
        path = os.path.join(self.tmp.name, 'City.txt')
        write_data_file(path, [['9', 'Kabul|Old', 'AFG', None, '1'], ['77', 'New', 'AFG', None, '2']])
        self.assertEqual(store.load_data_file('City', path), 2)
        self.assertEqual(store.get_row('City', ('9',)), ('9', 'Kabul|Old', 'AFG', None, '1'))
        self.assertEqual(len(store.rows_of('City')), len(CITY_ROWS) + 1)

    def test_arity(self):
        """Test if a file row of the wrong width is refused
        """
        store = world_store()
        path = os.path.join(self.tmp.name, 'City.txt')
        write_data_file(path, [['9', 'Kabul']])
        with self.assertRaises(ExecutionError):
            store.load_data_file('City', path)

    def test_open_converted(self):
        """Test if a converted catalog is created and loaded from a directory
        """
        key = sample_key('aes')
        icrl = Icrl()
        plain_path = os.path.join(self.tmp.name, 'plain.txt')
        write_data_file(plain_path, COUNTRY_ROWS)
        convert_data_file(plain_path, os.path.join(self.tmp.name, 'Country.txt'), COUNTRY, 'oct', key, icrl)
        catalog = SchemaCatalog([COUNTRY]).to_icdb('oct')
        store = open_embedded_store(catalog, self.tmp.name)
        self.assertEqual(len(store.rows_of('Country')), 3)
        self.assertEqual(store.execute("SELECT Serial FROM Country WHERE Code = 'ESP';").rows, [('3',)])


class AttackTestCase(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def converted_store(self, model):
        plain_path = os.path.join(self.tmp.name, 'plain.txt')
        write_data_file(plain_path, CITY_ROWS)
        convert_data_file(plain_path, os.path.join(self.tmp.name, 'City.txt'), CITY, model, sample_key('pbkdf2'),
                          Icrl(), salt_source=seeded_salt_source(1))
        catalog = SchemaCatalog([CITY]).to_icdb(model)
        return open_embedded_store(catalog, self.tmp.name), catalog.table('City')

    def changed_cells(self, before, after):
        return {(i, j) for i, (old, new) in enumerate(zip(before, after))
                for j, (a, b) in enumerate(zip(old, new)) if a != b}

    def test_forge(self):
        """Test if a forgery changes only the named cell
        """
        store, table = self.converted_store(Model.OCF)
        before = store.rows_of('City')
        attack_forge(store, 'City', ('250',), 'Population', '1')
        self.assertEqual(self.changed_cells(before, store.rows_of('City')), {(2, table.position('Population'))})

    def test_substitute(self):
        """Test if a substitution swaps the two values and, on request, their codes
        """
        store, table = self.converted_store(Model.OCF)
        before = store.rows_of('City')
        attack_substitute(store, 'City', (('9',), 'Name'), (('30',), 'Name'))
        name = table.position('Name')
        self.assertEqual(self.changed_cells(before, store.rows_of('City')), {(0, name), (1, name)})

        store, table = self.converted_store(Model.OCF)
        attack_substitute(store, 'City', (('9',), 'Name'), (('30',), 'Name'), move_codes=True)
        code = table.position('Name_IC')
        self.assertEqual(self.changed_cells(before, store.rows_of('City')), {(0, name), (1, name), (0, code),
                                                                             (1, code)})
        self.assertEqual(store.rows_of('City')[0][code], before[1][code])

    def test_substitute_oct(self):
        """Test if OCT substitutions carry the Serial and IC cells of both rows
        """
        store, table = self.converted_store(Model.OCT)
        before = store.rows_of('City')
        attack_substitute(store, 'City', (('9',), 'Name'), (('250',), 'District'), move_codes=True)
        positions = {table.position(name) for name in ('Serial', 'IC')}
        expected = {(0, table.position('Name')), (2, table.position('District'))}
        expected |= {(row, position) for row in (0, 2) for position in positions}
        self.assertEqual(self.changed_cells(before, store.rows_of('City')), expected)

    def test_key_substitution(self):
        """Test if swapping key values keeps the rows reachable by their new keys
        """
        store, _ = self.converted_store(Model.OCT)
        attack_substitute(store, 'City', (('9',), 'ID'), (('30',), 'ID'))
        self.assertEqual(store.get_row('City', ('30',))[1], 'Kabul')

    def test_replay(self):
        """Test if a saved row replaces the current row with its key
        """
        store, _ = self.converted_store(Model.OCT)
        saved = snapshot_row(store, 'City', ('30',))
        attack_forge(store, 'City', ('30',), 'Name', 'x')
        attack_replay_old(store, 'City', saved)
        self.assertEqual(store.get_row('City', ('30',)), saved)
        attack_delete(store, 'City', ('30',))
        attack_replay_old(store, 'City', saved)
        self.assertEqual(len(store.rows_of('City')), len(CITY_ROWS))

    def test_insert_and_delete(self):
        """Test if insertion and deletion add and remove exactly one row
        """
        store, _ = self.converted_store(Model.OCT)
        row = list(snapshot_row(store, 'City', ('9',)))
        with self.assertRaises(ConstraintViolationError):
            attack_insert(store, 'City', row)
        row[0] = '42'
        attack_insert(store, 'City', row)
        self.assertEqual(len(store.rows_of('City')), len(CITY_ROWS) + 1)
        attack_delete(store, 'City', ('42',))
        self.assertEqual(len(store.rows_of('City')), len(CITY_ROWS))
        with self.assertRaises(UnknownRowError):
            attack_delete(store, 'City', ('42',))


class DjangoConnectorTestCase(TestCase):
    def setUp(self):
        self.connector = DjangoConnector('default')
        self.connector.execute('CREATE TABLE icdb_scratch (id INTEGER PRIMARY KEY, name TEXT)')

    def test_text_cells(self):
        """Test if results come back as text cells with NULL as None
        """
        inserted = self.connector.execute("INSERT INTO icdb_scratch (id, name) VALUES (1, 'a'), (2, NULL)")
        self.assertEqual(inserted.rowcount, 2)
        result = self.connector.execute('SELECT id, name FROM icdb_scratch ORDER BY id')
        self.assertEqual(result.columns, ('id', 'name'))
        self.assertEqual(result.rows, [('1', 'a'), ('2', None)])
        self.assertFalse(self.connector.supports_load_data)

    def test_errors(self):
        """Test if backend errors become ExecutionError
        """
        with self.assertRaises(ExecutionError):
            self.connector.execute('SELECT nothing FROM icdb_scratch')
