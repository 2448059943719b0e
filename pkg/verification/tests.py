import io
import json
import os
import random
import tempfile
import time
import unittest
from unittest import mock

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from codec.cells import decode_field_cell
from codec.codes import VerdictStatus
from conversion.converter import convert_data_file
from conversion.datafile import read_records, write_data_file, write_records
from conversion.tasks import data_file_path
from icrl.revocation import Icrl
from rewrite.rewriter import rewrite_select
from rewrite.schema import Model, SchemaCatalog, plain_table
from schemes.keys import SchemeId, write_key_file
from schemes.sample_keys import sample_key
from store.attacks import (
    attack_delete, attack_forge, attack_insert, attack_replay_old, attack_substitute, snapshot_row,
)
from store.embedded import open_embedded_store
from verification.engine import verify_parallel, verify_result_set
from verification.exceptions import IntegrityFailure, WorkerCountError
from verification.management.commands.icdb_query import Command as QueryCommand
from verification.report import Failure, VerificationReport
from verification.runner import QueryRunner

CITY = plain_table('City', ['ID', 'Name', 'CountryCode', 'District', 'Population'], ['ID'])
LANGUAGE = plain_table('CountryLanguage', ['CountryCode', 'Language', 'IsOfficial', 'Percentage'],
                       ['CountryCode', 'Language'])
CITY_ROWS = [
    ['1', 'Kabul', 'AFG', 'Kabol', '1780000'],
    ['2', 'Qandahar', 'AFG', 'Qandahar', '237500'],
    ['3', 'Amsterdam', 'NLD', 'Noord-Holland', '731200'],
    ['4', 'Den|Haag', 'NLD', None, '440900'],
]
LANGUAGE_ROWS = [
    ['AFG', 'Pashto', 'T', '52.4'],
    ['AFG', 'Dari', 'T', '32.1'],
    ['NLD', 'Dutch', 'T', '95.6'],
]
SELECT_ALL = 'SELECT * FROM City;'
COMBINATIONS = [(scheme, model) for scheme in SchemeId for model in Model]
ACCEPTANCE = os.environ.get('ICDB_ACCEPTANCE') == '1'


class IcdbFixture:
    """Converted City and CountryLanguage tables loaded into an embedded store
    """

    def __init__(self, directory, scheme, model, city_rows=CITY_ROWS):
        self.key = sample_key(scheme)
        self.model = model
        self.icrl = Icrl()
        plain = SchemaCatalog([CITY, LANGUAGE])
        in_dir = os.path.join(directory, 'in')
        self.data_dir = os.path.join(directory, 'out')
        os.makedirs(in_dir, exist_ok=True)
        os.makedirs(self.data_dir, exist_ok=True)
        for table, rows in ((CITY, city_rows), (LANGUAGE, LANGUAGE_ROWS)):
            write_data_file(data_file_path(in_dir, table.table_name), rows)
            convert_data_file(data_file_path(in_dir, table.table_name),
                              data_file_path(self.data_dir, table.table_name), table, model, self.key, self.icrl)
        self.catalog = plain.to_icdb(model)
        self.store = open_embedded_store(self.catalog, self.data_dir)

    def runner(self, workers=1):
        return QueryRunner(self.store, self.catalog, self.model, self.key, self.icrl, workers=workers)

    def select(self, sql=SELECT_ALL, workers=1):
        return self.runner(workers).run(sql).report

    def serials_of(self, table_name, key):
        """Serials carried by a stored row, read straight from its code cells
        """
        table = self.catalog.table(table_name)
        row = self.store.get_row(table_name, key)
        if self.model is Model.OCT:
            return [int(row[table.position(table.serial_column.name)])]
        return sorted(decode_field_cell(row[table.position(table.ic_column_for(column.name))], self.key.scheme).serial
                      for column in table.data_columns)


class FixtureTestCase(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def fixture(self, scheme, model, city_rows=CITY_ROWS):
        directory = os.path.join(self.tmp.name, '{}-{}'.format(SchemeId.parse(scheme).alias, model.value))
        return IcdbFixture(directory, scheme, model, city_rows)


class PipelineTestCase(FixtureTestCase):
    def test_round_trip(self):
        """Test if converted, loaded and rewritten SELECT * results verify for every scheme and model
        """
        for scheme, model in COMBINATIONS:
            with self.subTest(scheme=scheme, model=model):
                fixture = self.fixture(scheme, model)
                report = fixture.select()
                self.assertTrue(report.is_valid, report.to_text())
                per_row = len(CITY.columns) if model is Model.OCF else 1
                self.assertEqual(report.total, len(CITY_ROWS) * per_row)
                self.assertEqual(report.summary()['valid'], report.total)

    def test_composite_key_table(self):
        """Test if a table with a two column key verifies
        """
        for model in Model:
            with self.subTest(model=model):
                report = self.fixture('pbkdf2', model).select('SELECT * FROM CountryLanguage;')
                self.assertTrue(report.is_valid, report.to_text())

    def test_projection(self):
        """Test if projected OCT queries verify with and without a second fetch
        """
        for scheme in SchemeId:
            with self.subTest(scheme=scheme):
                fixture = self.fixture(scheme, Model.OCT)
                outcome = fixture.runner().run("SELECT Name FROM City WHERE CountryCode = 'NLD';")
                self.assertTrue(outcome.is_valid, outcome.report.to_text())
                self.assertEqual(outcome.report.total, 2)
                self.assertEqual(outcome.second_result is not None, scheme is not SchemeId.AES_CIPHER)

    def test_join(self):
        """Test if both tables of a join are verified
        """
        fixture = self.fixture('aes', Model.OCF)
        outcome = fixture.runner().run(
            'SELECT City.Name, CountryLanguage.Language FROM City '
            'INNER JOIN CountryLanguage ON City.CountryCode = CountryLanguage.CountryCode;'
        )
        self.assertEqual(len(outcome.result.rows), 2 * 2 + 2 * 1)
        self.assertTrue(outcome.is_valid, outcome.report.to_text())

    def test_phase_timings(self):
        """Test if SELECT outcomes carry rewrite, fetch and verify timings
        """
        outcome = self.fixture('aes', Model.OCT).runner().run(SELECT_ALL)
        self.assertEqual(set(outcome.timings), {'rewrite_ms', 'fetch_ms', 'verify_ms'})
        self.assertEqual(set(outcome.report.to_dict()['timings']), {'fetch_ms', 'verify_ms'})


class AttackTestCase(FixtureTestCase):
    def test_forge_value(self):
        """Test if an edited value is reported FORGED at its coordinate
        """
        for scheme, model in COMBINATIONS:
            with self.subTest(scheme=scheme, model=model):
                fixture = self.fixture(scheme, model)
                attack_forge(fixture.store, 'City', ('2',), 'Name', 'Forged')
                report = fixture.select()
                self.assertEqual(len(report.failures), 1)
                failure = report.failures[0]
                self.assertEqual((failure.row, failure.status), (1, VerdictStatus.FORGED))
                self.assertEqual(failure.entity, ('2',))
                if model is Model.OCF:
                    self.assertEqual(failure.coordinate(), 'City.Name[2]')
                elif scheme is SchemeId.AES_CIPHER:
                    self.assertEqual(failure.attributes, ('Name',))

    def test_forge_code(self):
        """Test if edited codes are reported FORGED or STRUCTURAL
        """
        fixture = self.fixture('rsa', Model.OCF)
        other = fixture.store.get_row('City', ('1',))[fixture.catalog.table('City').position('Name_IC')]
        attack_forge(fixture.store, 'City', ('2',), 'Name_IC', other)
        attack_forge(fixture.store, 'City', ('3',), 'Name_IC', 'garbage')
        statuses = [failure.status for failure in fixture.select().failures]
        self.assertEqual(statuses, [VerdictStatus.FORGED, VerdictStatus.STRUCTURAL])

        fixture = self.fixture('aes', Model.OCT)
        attack_forge(fixture.store, 'City', ('2',), 'Serial', 'x')
        self.assertEqual([failure.status for failure in fixture.select().failures], [VerdictStatus.STRUCTURAL])

    def test_noop_forge(self):
        """Test if writing back the same bytes stays VALID
        """
        fixture = self.fixture('pbkdf2', Model.OCF)
        attack_forge(fixture.store, 'City', ('3',), 'Name', 'Amsterdam')
        self.assertTrue(fixture.select().is_valid)

    def test_substitute(self):
        """Test if swapped values are detected, with or without their codes
        """
        for scheme, model in COMBINATIONS:
            for move_codes in (False, True):
                with self.subTest(scheme=scheme, model=model, move_codes=move_codes):
                    fixture = self.fixture(scheme, model)
                    attack_substitute(fixture.store, 'City', (('1',), 'Name'), (('3',), 'Name'), move_codes)
                    report = fixture.select()
                    self.assertEqual([failure.row for failure in report.failures], [0, 2])
                    self.assertEqual(report.summary()['forged'], 2)

    def test_substitute_within_row(self):
        """Test if swapping two attributes of the same row is detected
        """
        for scheme, model in COMBINATIONS:
            with self.subTest(scheme=scheme, model=model):
                fixture = self.fixture(scheme, model)
                attack_substitute(fixture.store, 'City', (('1',), 'Name'), (('1',), 'District'), move_codes=True)
                report = fixture.select()
                self.assertEqual({failure.row for failure in report.failures}, {0})
                self.assertEqual({failure.status for failure in report.failures}, {VerdictStatus.FORGED})

    def test_replay_after_delete(self):
        """Test if a deleted row put back with its old codes verifies STALE
        """
        for scheme, model in COMBINATIONS:
            with self.subTest(scheme=scheme, model=model):
                fixture = self.fixture(scheme, model)
                saved = snapshot_row(fixture.store, 'City', ('2',))
                expected = fixture.serials_of('City', ('2',))

                outcome = fixture.runner().run("DELETE FROM City WHERE ID = '2';")
                self.assertEqual(outcome.rowcount, 1)
                self.assertEqual(list(outcome.revoked), expected)
                self.assertTrue(all(not fixture.icrl.is_valid(serial) for serial in expected))
                self.assertTrue(fixture.select().is_valid)

                attack_replay_old(fixture.store, 'City', saved)
                report = fixture.select()
                self.assertEqual({failure.status for failure in report.failures}, {VerdictStatus.STALE})
                self.assertEqual(len(report.failures), len(expected))

    def test_insert(self):
        """Test if a row inserted without the key is detected
        """
        for scheme, model in COMBINATIONS:
            with self.subTest(scheme=scheme, model=model):
                fixture = self.fixture(scheme, model)
                row = list(snapshot_row(fixture.store, 'City', ('1',)))
                row[0] = '99'
                attack_insert(fixture.store, 'City', row)
                report = fixture.select()
                self.assertFalse(report.is_valid)
                self.assertEqual({failure.entity for failure in report.failures}, {('99',)})

    def test_delete_goes_unnoticed(self):
        """Test if the remaining rows still verify after a row is removed
        """
        for scheme, model in COMBINATIONS:
            with self.subTest(scheme=scheme, model=model):
                fixture = self.fixture(scheme, model)
                attack_delete(fixture.store, 'City', ('3',))
                self.assertTrue(fixture.select().is_valid)

    @unittest.expectedFailure
    def test_delete_is_detected(self):
        """Test if removing a row is detected, which codes over single rows cannot do
        """
        fixture = self.fixture('aes', Model.OCT)
        attack_delete(fixture.store, 'City', ('3',))
        self.assertFalse(fixture.select().is_valid)


class RunnerTestCase(FixtureTestCase):
    def test_delete_refused(self):
        """Test if a DELETE over tampered rows deletes and revokes nothing
        """
        fixture = self.fixture('pbkdf2', Model.OCF)
        attack_forge(fixture.store, 'City', ('3',), 'Population', '1')
        before = fixture.icrl.ranges
        with self.assertRaises(IntegrityFailure) as cm:
            fixture.runner().run("DELETE FROM City WHERE CountryCode = 'NLD';")
        self.assertEqual(len(cm.exception.report.failures), 1)
        self.assertEqual(len(fixture.store.rows_of('City')), len(CITY_ROWS))
        self.assertEqual(fixture.icrl.ranges, before)

    def test_delete_phases(self):
        """Test if the delete outcome times verification, execution and revocation
        """
        outcome = self.fixture('aes', Model.OCT).runner().run("DELETE FROM City WHERE Population < '500000';")
        self.assertEqual(outcome.rowcount, 2)
        self.assertEqual(len(outcome.revoked), 2)
        self.assertTrue({'verify_ms', 'execute_ms', 'revoke_ms'} <= set(outcome.timings))

    def test_insert(self):
        """Test if inserted rows verify and allocate fresh serials
        """
        for scheme, model in COMBINATIONS:
            with self.subTest(scheme=scheme, model=model):
                fixture = self.fixture(scheme, model)
                next_serial = fixture.icrl.next_serial
                outcome = fixture.runner().run(
                    "INSERT INTO City (ID, Name, CountryCode) VALUES ('10', 'Boise', 'USA'), ('11', 'Nampa', 'USA');"
                )
                self.assertEqual(outcome.rowcount, 2)
                self.assertEqual(set(outcome.timings), {'convert_ms', 'execute_ms'})
                self.assertEqual(fixture.icrl.next_serial, next_serial + (6 if model is Model.OCF else 2))
                report = fixture.select("SELECT ID, Name, CountryCode FROM City WHERE CountryCode = 'USA';")
                self.assertTrue(report.is_valid, report.to_text())
                if model is Model.OCT:
                    self.assertTrue(fixture.select().is_valid)


class EngineTestCase(FixtureTestCase):
    def test_parallel_determinism(self):
        """Test if every worker count produces the same report
        """
        rows = [[str(i), 'City {}'.format(i), 'NLD', 'District', str(i * 10)] for i in range(1, 41)]
        fixture = self.fixture('pbkdf2', Model.OCF, rows)
        attack_forge(fixture.store, 'City', ('7',), 'Name', 'x')
        attack_forge(fixture.store, 'City', ('33',), 'Population_IC', 'y')
        plan = rewrite_select(SELECT_ALL, fixture.catalog, Model.OCF)
        result = fixture.store.execute(plan.icdb_sql)
        reports = [verify_parallel(result.rows, plan, fixture.key, fixture.icrl, workers)
                   for workers in (1, 2, 4, 8)]
        self.assertEqual(len({report.canonical() for report in reports}), 1)
        self.assertEqual([failure.row for failure in reports[0].failures], [6, 32])

    @unittest.skipUnless((os.cpu_count() or 1) >= 4, 'Needs at least four CPUs')
    def test_parallel_speedup(self):
        """Test if four workers verify ten thousand RSA field codes at least one and a half times faster than one
        """
        rows = [[str(i), 'City {}'.format(i), 'NLD', 'District', str(i)] for i in range(1, 2001)]
        fixture = self.fixture('rsa', Model.OCF, rows)
        plan = rewrite_select(SELECT_ALL, fixture.catalog, Model.OCF)
        result = fixture.store.execute(plan.icdb_sql)
        self.assertGreaterEqual(len(result.rows) * len(plan.field_checks), 10000)

        def best(workers):
            durations = []
            for _ in range(3):
                started = time.perf_counter()
                report = verify_parallel(result.rows, plan, fixture.key, fixture.icrl, workers)
                durations.append(time.perf_counter() - started)
                self.assertTrue(report.is_valid)
            return min(durations)

        self.assertGreater(best(1) / best(4), 1.5)

    def test_worker_count(self):
        """Test if less than one worker is refused
        """
        fixture = self.fixture('aes', Model.OCT)
        plan = rewrite_select(SELECT_ALL, fixture.catalog, Model.OCT)
        with self.assertRaises(WorkerCountError):
            verify_parallel([], plan, fixture.key, fixture.icrl, 0)

    def test_structural(self):
        """Test if malformed result rows are recorded as STRUCTURAL instead of raising
        """
        for model in Model:
            with self.subTest(model=model):
                fixture = self.fixture('aes', model)
                plan = rewrite_select(SELECT_ALL, fixture.catalog, model)
                good = fixture.store.execute(plan.icdb_sql).rows[0]
                rows = [good[:1], tuple(None for _ in good), good]
                report = verify_result_set(rows, plan, fixture.key, fixture.icrl)
                self.assertEqual({failure.row for failure in report.failures}, {0, 1})
                self.assertEqual({failure.status for failure in report.failures}, {VerdictStatus.STRUCTURAL})
                self.assertEqual(report.summary()['valid'], len(plan.field_checks or plan.tuple_checks))

    def test_false_positives(self):
        """Test if untampered random data never fails verification
        """
        counts = {
            SchemeId.PBKDF2_MAC: 100000 if ACCEPTANCE else 600,
            SchemeId.AES_CIPHER: 100000 if ACCEPTANCE else 600,
            SchemeId.RSA_SIGN: 10000 if ACCEPTANCE else 100,
        }
        alphabet = 'aZ09 |\\\n\t:é'
        for scheme, count in counts.items():
            rng = random.Random(5)
            rows = [[str(i), ''.join(rng.choice(alphabet) for _ in range(rng.randint(0, 12))), 'NLD',
                     None if rng.random() < 0.2 else 'd', str(rng.randint(-5, 10 ** 6))]
                    for i in range(1, count // len(CITY.columns) + 1)]
            with self.subTest(scheme=scheme):
                report = self.fixture(scheme, Model.OCF, rows).select()
                self.assertTrue(report.is_valid, report.to_text())
                self.assertEqual(report.summary()['total'], count)


class ReportTestCase(SimpleTestCase):
    def setUp(self):
        self.report = VerificationReport()
        self.report.add(VerdictStatus.VALID)
        self.report.add(VerdictStatus.STALE, Failure(3, 4, 'City', 'Name', ('2',), VerdictStatus.STALE, 'revoked'))
        self.report.add(VerdictStatus.FORGED, Failure(1, 2, 'City', None, ('1',), VerdictStatus.FORGED, '',
                                                      ('Name',)))
        self.report.timings['verify_ms'] = 1.5
        self.report.finish()

    def test_json(self):
        """Test the field names of the JSON form
        """
        data = json.loads(self.report.to_json())
        self.assertEqual(set(data), {'total', 'valid', 'forged', 'stale', 'structural', 'failures', 'timings'})
        self.assertEqual(set(data['timings']), {'fetch_ms', 'verify_ms'})
        self.assertEqual((data['total'], data['valid'], data['forged'], data['stale']), (3, 1, 1, 1))
        self.assertEqual([failure['row'] for failure in data['failures']], [1, 3])
        self.assertEqual(data['failures'][0]['attributes'], ['Name'])

    def test_text(self):
        """Test if the text form lists every failure coordinate
        """
        text = self.report.to_text()
        self.assertTrue(text.startswith('INVALID 3 checks'))
        self.assertIn('row 1 City[1] FORGED (Name)', text)
        self.assertIn('row 3 City.Name[2] STALE: revoked', text)

    def test_canonical(self):
        """Test if the canonical form ignores timings
        """
        before = self.report.canonical()
        self.report.timings['verify_ms'] = 99.0
        self.assertEqual(self.report.canonical(), before)

    def test_merge(self):
        """Test if merged reports add up and keep failures sorted
        """
        merged = VerificationReport.merge([self.report, self.report])
        self.assertEqual(merged.total, 6)
        self.assertEqual([failure.row for failure in merged.failures], [1, 1, 3, 3])


class CommandTestCase(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.fixture = IcdbFixture(self.tmp.name, 'aes', Model.OCF)
        self.schema = os.path.join(self.tmp.name, 'schema.yaml')
        with open(self.schema, 'w') as f:
            f.write(SchemaCatalog([CITY, LANGUAGE]).dumps())
        self.keys = os.path.join(self.tmp.name, 'keys.txt')
        self.icrl = os.path.join(self.tmp.name, 'icrl.txt')
        write_key_file(self.fixture.key, self.keys)
        self.fixture.icrl.save(self.icrl)
        self.options = dict(model='ocf', schema=self.schema, keys=self.keys, icrl=self.icrl,
                            data_dir=self.fixture.data_dir)

    def tamper(self):
        path = data_file_path(self.fixture.data_dir, 'City')
        records = read_records(path)
        records[1][2] = 'Forged'
        write_records(path, records)

    def test_verify(self):
        """Test if verify exits cleanly on untampered files
        """
        out = io.StringIO()
        call_command('icdb_verify', stdout=out, **self.options)
        self.assertIn('All {} checks VALID'.format(4 * 5 + 3 * 4), out.getvalue())

    def test_verify_tampered(self):
        """Test if verify exits with 1 and names the forged coordinate
        """
        self.tamper()
        out = io.StringIO()
        with self.assertRaises(SystemExit) as cm:
            call_command('icdb_verify', stdout=out, stderr=io.StringIO(), **self.options)
        self.assertEqual(cm.exception.code, 1)
        self.assertIn('City.Name[2] FORGED', out.getvalue())

    def test_query_json(self):
        """Test if an embedded query prints its rows and report as JSON
        """
        out = io.StringIO()
        call_command('icdb_query', "SELECT Name FROM City WHERE ID = '3';", embedded=True, out='json', stdout=out,
                     **self.options)
        data = json.loads(out.getvalue())
        self.assertEqual(data['rows'][0][0], 'Amsterdam')
        self.assertEqual(data['valid'], data['total'])

    def test_query_tampered(self):
        """Test if a query over a forged row exits with 1
        """
        self.tamper()
        with self.assertRaises(SystemExit) as cm:
            call_command('icdb_query', 'SELECT * FROM City;', embedded=True, stdout=io.StringIO(), **self.options)
        self.assertEqual(cm.exception.code, 1)

    def test_query_icrl_not_saved(self):
        """Test if a DELETE whose ICRL cannot be written is an I/O error, not a crash
        """
        def connector(command, catalog, options):
            return open_embedded_store(catalog, self.fixture.data_dir)

        with mock.patch.object(QueryCommand, '_connector', connector), \
                mock.patch.object(Icrl, 'save', side_effect=OSError('No space left on device')):
            with self.assertRaises(CommandError) as cm:
                call_command('icdb_query', "DELETE FROM City WHERE ID = '3';", stdout=io.StringIO(),
                             stderr=io.StringIO(), **self.options)
        self.assertEqual(cm.exception.returncode, 2)
        self.assertIn('No space left', str(cm.exception))

    def test_query_without_database(self):
        """Test if a query without embedded store or DSN is a usage error
        """
        with self.assertRaises(CommandError):
            call_command('icdb_query', 'SELECT * FROM City;', stdout=io.StringIO(), **self.options)
