import io
import os
import tempfile

import yaml
from django.contrib.auth.models import User
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, TestCase
from django.urls import reverse

from codec.cells import decode_field_cell, decode_tuple_cells
from codec.codes import FieldCoordinates, TupleImage, verify_field_code, verify_tuple_code
from icrl.revocation import Icrl
from rewrite.exceptions import (
    AmbiguousColumnError, MissingKeyError, SchemaFileError, SchemaMismatchError, SqlSyntaxError,
    UnknownColumnError, UnknownTableError, UnsupportedConstructError,
)
from rewrite.parser import BoolOp, ColumnRef, Comparison, Literal, parse, render, tokenize
from rewrite.rewriter import plan_delete, plan_insert, rewrite_select
from rewrite.schema import Model, SchemaCatalog, plain_table
from schemes.keys import SchemeId
from schemes.sample_keys import sample_key

FIXTURES = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'fixtures')
WORLD = SchemaCatalog.load(os.path.join(FIXTURES, 'world.yaml'))
COMPANY = SchemaCatalog.load(os.path.join(FIXTURES, 'company.yaml'))

with open(os.path.join(FIXTURES, 'corpus.yaml')) as f:
    CORPUS = yaml.safe_load(f)


def column_set(columns):
    return {column.replace('`', '').upper() for column in columns}


class ParserTestCase(SimpleTestCase):
    def test_select(self):
        """Test if a SELECT with DISTINCT, a join and a nested condition is parsed
        """
        query = parse("SELECT DISTINCT a.x, y FROM a INNER JOIN b ON a.id = b.id WHERE x = 'v' OR (y < 3 AND z != 1);")
        self.assertEqual(query.kind, 'SELECT')
        self.assertTrue(query.distinct)
        self.assertEqual(query.select_attrs, (ColumnRef('x', 'a'), ColumnRef('y')))
        self.assertEqual([table.name for table in query.all_tables], ['a', 'b'])
        self.assertEqual(query.joins[0].condition, Comparison(ColumnRef('id', 'a'), '=', ColumnRef('id', 'b')))
        self.assertIsInstance(query.where, BoolOp)
        self.assertEqual(query.where.op, 'OR')
        self.assertEqual([column.name for column in query.condition_columns], ['x', 'y', 'z'])

    def test_and_chains_are_flat(self):
        """Test if a chain of ANDs becomes one operator node
        """
        query = parse('SELECT x FROM t WHERE a = 1 AND b = 2 AND c = 3')
        self.assertEqual(query.where.op, 'AND')
        self.assertEqual(len(query.where.operands), 3)
        self.assertFalse(query.terminated)

    def test_insert(self):
        """Test if an INSERT with several rows, NULL and escaped strings is parsed
        """
        query = parse("INSERT INTO t (a, b) VALUES ('it''s', NULL), ('x\\ny', 4);")
        self.assertEqual(query.kind, 'INSERT')
        self.assertEqual(query.insert_rows, (
            (Literal("it's"), Literal(None)),
            (Literal('x\ny'), Literal('4', is_number=True)),
        ))

    def test_insert_value_count(self):
        """Test if a row with the wrong number of values is rejected
        """
        with self.assertRaises(SqlSyntaxError):
            parse("INSERT INTO t (a, b) VALUES ('1');")
        with self.assertRaises(SqlSyntaxError):
            parse("INSERT INTO t (a, a) VALUES ('1', '2');")

    def test_backticks(self):
        """Test if backtick quoted identifiers are recognized
        """
        query = parse("SELECT `Name` FROM `City` WHERE `ID` < '250';")
        self.assertTrue(query.uses_backticks)
        self.assertTrue(query.tables[0].quoted)
        self.assertEqual(query.condition_columns[0].name, 'ID')

    def test_unsupported_constructs(self):
        """Test if constructs outside the subset raise a dedicated error
        """
        for sql in ('SELECT COUNT(*) FROM City;', 'SELECT Name FROM City ORDER BY Name;',
                    'SELECT Name FROM City GROUP BY Name;', 'SELECT Name FROM City LIMIT 3;',
                    'SELECT Name FROM City WHERE ID IN (1, 2);', "SELECT Name FROM City WHERE Name LIKE 'A%';",
                    'SELECT Name FROM City WHERE ID = (SELECT 1);', 'SELECT City.* FROM City;',
                    'SELECT Name FROM City LEFT JOIN Country ON Code = CountryCode;',
                    'SELECT Name FROM City WHERE ID = ?;', 'SELECT Name FROM City WHERE ID = Population + 1;',
                    "UPDATE City SET Name = 'x';"):
            with self.assertRaises(UnsupportedConstructError, msg=sql):
                parse(sql)

    def test_syntax_error_offset(self):
        """Test if errors point at the byte offset of the offending token
        """
        with self.assertRaises(UnsupportedConstructError) as cm:
            parse('SELECT Name FROM City ORDER BY Name;')
        self.assertEqual(cm.exception.offset, 22)
        with self.assertRaises(UnsupportedConstructError) as cm:
            parse("SELECT Name FROM City WHERE Name = 'é' ORDER BY Name;")
        self.assertEqual(cm.exception.offset, 40)
        with self.assertRaises(SqlSyntaxError) as cm:
            parse('SELECT Name FROM')
        self.assertEqual(cm.exception.offset, 16)

    def test_trailing_garbage(self):
        """Test if anything after the terminating semicolon is rejected
        """
        with self.assertRaises(SqlSyntaxError):
            parse('SELECT a FROM t; SELECT b FROM t;')

    def test_tokens_carry_offsets(self):
        """Test if tokens map back to their source text
        """
        sql = "SELECT x FROM t WHERE y = 'a b'"
        for token in tokenize(sql)[:-1]:
            if token.kind == 'word':
                self.assertEqual(sql[token.start:token.end], token.value)

    def test_render_round_trip(self):
        """Test if rendering and parsing again yields the same statement for the whole corpus
        """
        statements = [entry['sql'] for entry in CORPUS['select'] + CORPUS['delete']] + CORPUS['insert']
        for sql in statements:
            query = parse(sql)
            self.assertEqual(parse(render(query)), query, sql)


class SchemaTestCase(SimpleTestCase):
    def test_world_schema(self):
        """Test if the schema fixture declares keys and column order
        """
        self.assertEqual(len(WORLD), 3)
        language = WORLD.table('countrylanguage')
        self.assertEqual([column.name for column in language.key_columns], ['CountryCode', 'Language'])

    def test_ocf_layout(self):
        """Test if OCF conversion pairs every column with its code column
        """
        table = WORLD.to_icdb('ocf', suffix='_SVC').table('City')
        self.assertEqual(table.column_names[:4], ['ID', 'ID_SVC', 'Name', 'Name_SVC'])
        self.assertEqual(table.ic_column_for('name'), 'Name_SVC')
        self.assertIs(table.model, Model.OCF)

    def test_oct_layout(self):
        """Test if OCT conversion appends the serial and code columns
        """
        table = WORLD.to_icdb('oct').table('City')
        self.assertEqual(table.column_names[-2:], ['Serial', 'IC'])
        self.assertEqual(table.data_column_names, ['ID', 'Name', 'CountryCode', 'District', 'Population'])

    def test_suffix_collision(self):
        """Test if a suffix that collides with an existing column is refused
        """
        table = plain_table('t', ['a', 'a_IC'], ['a'])
        with self.assertRaises(SchemaMismatchError):
            table.to_icdb('ocf')

    def test_converted_schema_round_trip(self):
        """Test if a converted catalog survives its YAML form
        """
        catalog = COMPANY.to_icdb('oct')
        loaded = SchemaCatalog.from_yaml(catalog.dumps())
        self.assertEqual(loaded.table('employee'), catalog.table('employee'))

    def test_malformed_schema(self):
        """Test if broken schema files are rejected
        """
        for text in ('tables: 3', '- a', 'tables:\n  - name: t\n    columns: [a]\n', 'tables: [', ''):
            with self.assertRaises((SchemaFileError, SchemaMismatchError), msg=text):
                SchemaCatalog.from_yaml(text)


class RewriteSelectTestCase(SimpleTestCase):
    def setUp(self):
        self.company_ocf = COMPANY.to_icdb('ocf')
        self.company_oct = COMPANY.to_icdb('oct')
        self.world_ocf = WORLD.to_icdb('ocf', suffix='_SVC')

    def test_ocf_query(self):
        """Test the exact OCF rewrite of a one table selection
        """
        plan = rewrite_select('SELECT lname FROM employee WHERE dno = 5;', self.company_ocf, 'ocf')
        self.assertEqual(plan.icdb_sql, 'SELECT lname, ssn, dno, lname_IC, dno_IC FROM employee WHERE dno = 5;')
        self.assertEqual([(check.attribute, check.value_index, check.ic_index, check.key_indexes)
                          for check in plan.field_checks], [('lname', 0, 3, (1,)), ('dno', 2, 4, (1,))])

    def test_oct_query(self):
        """Test the exact OCT rewrite of a one table selection
        """
        plan = rewrite_select('SELECT lname FROM employee WHERE dno = 5;', self.company_oct, 'oct')
        self.assertEqual(plan.icdb_sql, 'SELECT lname, dno, Serial, IC FROM employee WHERE dno = 5;')
        self.assertIsNone(plan.second_fetch_sql)
        check = plan.tuple_checks[0]
        self.assertEqual((check.values, check.serial_index, check.ic_index), ((('lname', 0), ('dno', 1)), 2, 3))
        self.assertFalse(check.complete)

    def test_oct_second_fetch(self):
        """Test if MAC and signature codes ask for the complete tuples of a partial projection
        """
        catalog = WORLD.to_icdb('oct')
        plan = rewrite_select("SELECT Name FROM City WHERE ID = '1';", catalog, 'oct', SchemeId.PBKDF2_MAC)
        self.assertEqual(plan.second_fetch_sql,
                         "SELECT ID, Name, CountryCode, District, Population, Serial, IC FROM City WHERE ID = '1';")
        self.assertTrue(plan.second_fetch_checks[0].complete)

        full = rewrite_select('SELECT * FROM City;', catalog, 'oct', SchemeId.RSA_SIGN)
        self.assertIsNone(full.second_fetch_sql)

    def test_corpus_columns(self):
        """Test if the rewritten select lists hold the expected columns of the query corpus
        """
        for entry in CORPUS['select']:
            plan = rewrite_select(entry['sql'], self.world_ocf, 'ocf')
            expected = column_set(entry['icdb'] + entry.get('expected_extra', []))
            self.assertEqual(column_set(plan.columns), expected, entry['sql'])

    def test_condition_columns_are_added(self):
        """Test if a condition attribute outside the select list is returned with its code
        """
        plan = rewrite_select(CORPUS['select'][1]['sql'], self.world_ocf, 'ocf')
        self.assertIn('COUNTRYCODE', column_set(plan.columns))
        self.assertIn('COUNTRYCODE_SVC', column_set(plan.columns))
        self.assertTrue(plan.distinct)
        self.assertTrue(plan.icdb_sql.startswith('SELECT DISTINCT '))

    def test_join_keys(self):
        """Test if join keys are returned without codes and ON columns are not checked
        """
        plan = rewrite_select(CORPUS['select'][7]['sql'], self.world_ocf, 'ocf')
        self.assertIn('Country.Code', plan.columns)
        self.assertIn('City.ID', plan.columns)
        checked = {(check.table, check.attribute) for check in plan.field_checks}
        self.assertNotIn(('Country', 'Code'), checked)
        self.assertNotIn(('City', 'CountryCode'), checked)
        self.assertEqual(len(plan.field_checks), 5)

    def test_from_where_verbatim(self):
        """Test if FROM and WHERE of the rewritten query are the tokens of the original
        """
        for entry in CORPUS['select']:
            original = parse(entry['sql'])
            rewritten = parse(rewrite_select(original, self.world_ocf, 'ocf').icdb_sql)
            self.assertEqual(rewritten.tables, original.tables)
            self.assertEqual(rewritten.joins, original.joins)
            self.assertEqual(rewritten.where, original.where)
            self.assertEqual(rewritten.from_clause, original.from_clause)

    def test_no_duplicates(self):
        """Test if attributes named several times are returned once
        """
        plan = rewrite_select("SELECT ssn, ssn, lname FROM employee WHERE ssn = '1' AND lname = 'x';",
                              self.company_ocf, 'ocf')
        self.assertEqual(plan.columns, ('ssn', 'lname', 'ssn_IC', 'lname_IC'))

    def test_backticks_follow_the_query(self):
        """Test if injected columns are quoted when the select list is
        """
        plan = rewrite_select('SELECT `lname` FROM employee;', self.company_ocf, 'ocf')
        self.assertEqual(plan.icdb_sql, 'SELECT `lname`, `ssn`, `lname_IC` FROM employee;')

    def test_resolution_errors(self):
        """Test if unknown, foreign and ambiguous columns are reported
        """
        with self.assertRaises(UnknownColumnError):
            rewrite_select('SELECT Foo FROM City;', self.world_ocf, 'ocf')
        with self.assertRaises(UnknownTableError):
            rewrite_select('SELECT Name FROM Town;', self.world_ocf, 'ocf')
        with self.assertRaises(UnknownTableError):
            rewrite_select('SELECT Country.Name FROM City;', self.world_ocf, 'ocf')
        with self.assertRaises(AmbiguousColumnError):
            rewrite_select('SELECT Name FROM Country INNER JOIN City ON Country.Code = City.CountryCode;',
                           self.world_ocf, 'ocf')

    def test_code_columns_are_not_data(self):
        """Test if a query naming a code column directly is rejected
        """
        with self.assertRaises(UnknownColumnError):
            rewrite_select('SELECT Name_SVC FROM City;', self.world_ocf, 'ocf')

    def test_model_mismatch(self):
        """Test if rewriting against an unconverted or differently converted schema fails
        """
        with self.assertRaises(SchemaMismatchError):
            rewrite_select('SELECT lname FROM employee;', COMPANY, 'ocf')
        with self.assertRaises(SchemaMismatchError):
            rewrite_select('SELECT lname FROM employee;', self.company_ocf, 'oct')


class PlanDeleteTestCase(SimpleTestCase):
    def test_corpus_deletes(self):
        """Test if the first phase fetches every column and code under the original condition
        """
        catalog = WORLD.to_icdb('ocf', suffix='_SVC')
        for entry in CORPUS['delete']:
            plan = plan_delete(entry['sql'], catalog, 'ocf')
            table = catalog.table(entry['table'])
            self.assertEqual(column_set(plan.columns), column_set(table.column_names), entry['sql'])
            self.assertEqual(parse(plan.icdb_sql).where, parse(entry['sql']).where)
            self.assertEqual(plan.statement_sql, entry['sql'])
            self.assertEqual(plan.post_actions, ('REVOKE',))
            self.assertEqual(len(plan.serial_indexes), len(table.data_columns))

    def test_oct_delete(self):
        """Test if an OCT delete fetches the complete tuples with serial and code
        """
        plan = plan_delete("DELETE FROM employee WHERE dno = 5;", COMPANY.to_icdb('oct'), 'oct')
        self.assertEqual(plan.icdb_sql, 'SELECT fname, minit, lname, ssn, bdate, address, sex, salary, superssn, '
                                        'dno, Serial, IC FROM employee WHERE dno = 5;')
        self.assertEqual(plan.serial_indexes, [10])


class PlanInsertTestCase(SimpleTestCase):
    def setUp(self):
        self.key = sample_key('aes')
        self.icrl = Icrl()

    def test_ocf_insert(self):
        """Test if every supplied field gets a verifiable code with a fresh serial
        """
        plan = plan_insert(CORPUS['insert'][0], WORLD.to_icdb('ocf', suffix='_SVC'), 'ocf', self.key, self.icrl)
        statement = parse(plan.icdb_sql)
        self.assertEqual([column.name for column in statement.insert_columns], [
            'ID', 'Name', 'CountryCode', 'District', 'Population',
            'ID_SVC', 'Name_SVC', 'CountryCode_SVC', 'District_SVC', 'Population_SVC',
        ])
        self.assertEqual(plan.serials, (1, 2, 3, 4, 5))
        self.assertEqual(self.icrl.next_serial, 6)

        row = [literal.value for literal in statement.insert_rows[0]]
        for i, attribute in enumerate(['ID', 'Name', 'CountryCode', 'District', 'Population']):
            ic = decode_field_cell(row[5 + i], SchemeId.AES_CIPHER)
            verdict = verify_field_code(self.key, FieldCoordinates('City', attribute, ('4080',)), row[i], ic,
                                        self.icrl)
            self.assertTrue(verdict.is_valid, attribute)

    def test_oct_insert(self):
        """Test if a row gets one tuple code with absent columns coded as NULL
        """
        plan = plan_insert(CORPUS['insert'][1], WORLD.to_icdb('oct'), 'oct', self.key, self.icrl)
        statement = parse(plan.icdb_sql)
        self.assertEqual([column.name for column in statement.insert_columns],
                         ['ID', 'Name', 'CountryCode', 'Serial', 'IC'])
        row = [literal.value for literal in statement.insert_rows[0]]
        ic = decode_tuple_cells(row[3], row[4], SchemeId.AES_CIPHER)
        image = TupleImage('City', (('ID', '4080'), ('Name', 'Boise'), ('CountryCode', 'USA'), ('District', None),
                                    ('Population', None)))
        verdict, _ = verify_tuple_code(self.key, image, ic, self.icrl)
        self.assertTrue(verdict.is_valid)
        self.assertEqual(plan.serials, (1,))

    def test_several_rows(self):
        """Test if a multi row INSERT allocates one consecutive block
        """
        plan = plan_insert("INSERT INTO employee (ssn, lname) VALUES ('1', 'a'), ('2', 'b');", COMPANY.to_icdb('ocf'),
                           'ocf', self.key, self.icrl)
        self.assertEqual(plan.serials, (1, 2, 3, 4))
        self.assertEqual(len(parse(plan.icdb_sql).insert_rows), 2)

    def test_missing_key(self):
        """Test if an OCF insert without the key columns is refused before allocating serials
        """
        with self.assertRaises(MissingKeyError):
            plan_insert("INSERT INTO City (Name) VALUES ('x');", WORLD.to_icdb('ocf'), 'ocf', self.key, self.icrl)
        self.assertEqual(self.icrl.next_serial, 1)

    def test_code_column_in_insert(self):
        """Test if an INSERT may not provide code columns itself
        """
        with self.assertRaises(SchemaMismatchError):
            plan_insert("INSERT INTO City (ID, ID_IC) VALUES ('1', 'x');", WORLD.to_icdb('ocf'), 'ocf', self.key,
                        self.icrl)


class RewriteCommandTestCase(SimpleTestCase):
    def test_select(self):
        """Test if the command prints the rewritten SELECT
        """
        out = io.StringIO()
        call_command('icdb_rewrite', 'SELECT lname FROM employee WHERE dno = 5;', model='ocf', suffix='_IC',
                     schema=os.path.join(FIXTURES, 'company.yaml'), stdout=out)
        self.assertEqual(out.getvalue().strip(),
                         'SELECT lname, ssn, dno, lname_IC, dno_IC FROM employee WHERE dno = 5;')

    def test_insert(self):
        """Test if the command allocates INSERT serials from the ICRL file
        """
        with tempfile.TemporaryDirectory() as tmp:
            keys = os.path.join(tmp, 'keys.txt')
            icrl = os.path.join(tmp, 'icrl.txt')
            call_command('icdb_keygen', scheme='pbkdf2', keys=keys, seed=3, stdout=io.StringIO())
            call_command('icdb_rewrite', CORPUS['insert'][4], model='oct', keys=keys, icrl=icrl,
                         schema=os.path.join(FIXTURES, 'world.yaml'), stdout=io.StringIO())
            self.assertEqual(Icrl.load(icrl).next_serial, 2)

    def test_errors(self):
        """Test if syntax errors and INSERT without keys are usage errors
        """
        schema = os.path.join(FIXTURES, 'company.yaml')
        with self.assertRaises(CommandError):
            call_command('icdb_rewrite', 'SELECT FROM', model='ocf', schema=schema, stdout=io.StringIO())
        with self.assertRaises(CommandError):
            call_command('icdb_rewrite', "INSERT INTO employee (ssn) VALUES ('1');", model='ocf', schema=schema,
                         stdout=io.StringIO())


class RewriteAPITestCase(TestCase):
    def setUp(self):
        self.test_user = User.objects.create_user('test', 'test@example.com', 'test')
        self.client.force_login(self.test_user)
        self.schema = COMPANY.to_dict()

    def test_rewrite(self):
        """Test if the API returns the plan of a SELECT
        """
        resp = self.client.post(reverse('api-rewrite', kwargs={'version': 'v1'}), {
            'sql': 'SELECT lname FROM employee WHERE dno = 5;',
            'model': 'ocf',
            'schema': self.schema,
        }, content_type='application/json')
        self.assertEqual(resp.status_code, 200)
        self.assertEqual(resp.json()['icdb_sql'],
                         'SELECT lname, ssn, dno, lname_IC, dno_IC FROM employee WHERE dno = 5;')
        self.assertEqual(resp.json()['field_checks'][0]['attribute'], 'lname')

    def test_delete_plan(self):
        """Test if the API returns the phases of a DELETE
        """
        resp = self.client.post(reverse('api-rewrite', kwargs={'version': 'v1'}), {
            'sql': 'DELETE FROM employee WHERE dno = 5;',
            'model': 'oct',
            'schema': self.schema,
        }, content_type='application/json')
        self.assertEqual(resp.status_code, 200)
        self.assertEqual(resp.json()['post_actions'], ['REVOKE'])
        self.assertEqual(resp.json()['tuple_checks'][0]['serial_index'], 10)

    def test_bad_requests(self):
        """Test if syntax errors and INSERT statements are rejected
        """
        for sql in ('SELECT FROM', "INSERT INTO employee (ssn) VALUES ('1');"):
            resp = self.client.post(reverse('api-rewrite', kwargs={'version': 'v1'}), {
                'sql': sql, 'model': 'ocf', 'schema': self.schema,
            }, content_type='application/json')
            self.assertEqual(resp.status_code, 400, sql)

    def test_anonymous(self):
        """Test if anonymous users are turned away
        """
        self.client.logout()
        resp = self.client.post(reverse('api-rewrite', kwargs={'version': 'v1'}), {
            'sql': 'SELECT lname FROM employee;', 'model': 'ocf', 'schema': self.schema,
        }, content_type='application/json')
        self.assertIn(resp.status_code, (401, 403))
