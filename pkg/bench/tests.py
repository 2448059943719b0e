import io
import json
import os
import tempfile
import unittest

from django.contrib.auth.models import User
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, TestCase
from django.urls import reverse

from bench.attack_suite import (
    ATTACKS, deviations, format_matrix, format_sweep, mutate_cell, run_attack_matrix, run_forgery_sweep, transplant_row,
)
from bench.datasets import generate_dataset, load_dataset
from bench.exceptions import ResultFileError, UnknownProfileError
from bench.management.commands.icdb_bench_time import DEFAULT_CORPUS as CORPUS_FILE
from bench.harness import (
    Measurement, applicable, bench_key, convert_dataset, format_csv, format_json, load_corpus, read_csv, run_size_bench,
    run_time_bench, summarize, warmup_runs, write_csv,
)
from bench.models import BenchResult
from bench.views.api import APIBenchResultList
from conversion.datafile import read_data_file
from conversion.tasks import data_file_path
from rewrite.schema import Model
from store.embedded import open_embedded_store
from verification.runner import QueryRunner

ACCEPTANCE = os.environ.get('ICDB_ACCEPTANCE') == '1'
TIMING_METRICS = ('_ms', '_seconds')


class DatasetTestCase(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def test_world(self):
        """Test if the world profile writes its schema and consistent tables
        """
        catalog = generate_dataset('world', 20, 1, self.tmp.name)
        self.assertEqual([table.table_name for table in load_dataset(self.tmp.name)],
                         ['City', 'Country', 'CountryLanguage'])
        cities = read_data_file(data_file_path(self.tmp.name, 'City'))
        countries = read_data_file(data_file_path(self.tmp.name, 'Country'))
        languages = read_data_file(data_file_path(self.tmp.name, 'CountryLanguage'))
        self.assertEqual(len(cities), 20)
        self.assertEqual(len(countries), 3)
        self.assertEqual(len({(row[0], row[1]) for row in languages}), len(languages))
        codes = {row[0] for row in countries}
        self.assertTrue({row[2] for row in cities} <= codes)
        for table in catalog:
            rows = read_data_file(data_file_path(self.tmp.name, table.table_name))
            self.assertEqual({len(row) for row in rows}, {len(table.columns)})

    def test_company(self):
        """Test if the company profile writes unique employee keys
        """
        generate_dataset('company', 15, 2, self.tmp.name)
        employees = read_data_file(data_file_path(self.tmp.name, 'employee'))
        self.assertEqual(len({row[3] for row in employees}), 15)
        self.assertEqual(len(read_data_file(data_file_path(self.tmp.name, 'department'))), 2)

    def test_seed(self):
        """Test if equal seeds write equal files
        """
        paths = []
        for name, seed in (('a', 5), ('b', 5), ('c', 6)):
            directory = os.path.join(self.tmp.name, name)
            generate_dataset('world', 30, seed, directory)
            with open(data_file_path(directory, 'City'), 'rb') as f:
                paths.append(f.read())
        self.assertEqual(paths[0], paths[1])
        self.assertNotEqual(paths[0], paths[2])

    def test_unknown_profile(self):
        """Test if an unknown profile is refused
        """
        with self.assertRaises(UnknownProfileError):
            generate_dataset('shop', 10, 1, self.tmp.name)


class StatisticsTestCase(SimpleTestCase):
    def test_warmup(self):
        """Test if the first tenth of the samples is dropped
        """
        mean, std, iterations = summarize([100.0] + [2.0] * 9 + [4.0] * 10)
        self.assertEqual(iterations, 18)
        self.assertAlmostEqual(mean, (2.0 * 8 + 4.0 * 10) / 18)

    def test_warmup_runs(self):
        """Test if the warm-up runs come on top of the requested iterations
        """
        self.assertEqual(warmup_runs(30), 3)
        self.assertEqual(warmup_runs(27), 3)
        self.assertEqual(warmup_runs(2), 1)
        self.assertEqual(warmup_runs(5, warmup_share=0), 0)
        samples = [50.0] * 3 + [1.0] * 30
        self.assertEqual(summarize(samples, warmup=warmup_runs(30)), (1.0, 0.0, 30))

    def test_std(self):
        """Test the sample standard deviation and the coefficient of variation
        """
        mean, std, iterations = summarize([1.0, 2.0, 3.0], warmup_share=0)
        self.assertEqual((mean, std, iterations), (2.0, 1.0, 3))
        self.assertEqual(Measurement('d', 'aes', 'oct', 'exec_ms', mean, std, iterations).cv, 0.5)
        self.assertEqual(summarize([7.0]), (7.0, 0.0, 1))

    def test_empty(self):
        """Test if summarizing nothing fails
        """
        with self.assertRaises(ValueError):
            summarize([])


class CsvTestCase(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.path = os.path.join(self.tmp.name, 'results.csv')

    def test_round_trip(self):
        """Test if measurements read back exactly as written
        """
        measurements = [
            Measurement('world', '', 'db', 'db_size_bytes', 12345.0),
            Measurement('world', 'rsa', 'ocf', 'verify_ms', 0.1 + 0.2, 1 / 3, 27, "SELECT * FROM `City`, 'x';"),
        ]
        write_csv(self.path, measurements)
        self.assertEqual(read_csv(self.path), measurements)

    def test_bad_file(self):
        """Test if foreign headers and broken numbers are rejected
        """
        with open(self.path, 'w') as f:
            f.write('a,b\n1,2\n')
        with self.assertRaises(ResultFileError):
            read_csv(self.path)
        write_csv(self.path, [Measurement('world', 'aes', 'oct', 'exec_ms', 1.0)])
        with open(self.path) as f:
            text = f.read().replace('1.0', 'one', 1)
        with open(self.path, 'w') as f:
            f.write(text)
        with self.assertRaises(ResultFileError):
            read_csv(self.path)


class HarnessTestCase(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.dataset = os.path.join(self.tmp.name, 'world')
        self.catalog = generate_dataset('world', 12, 3, self.dataset)
        self.work = os.path.join(self.tmp.name, 'work')

    def metrics(self, results, scheme, model):
        return {result.metric: result for result in results if result.scheme == scheme and result.model == model}

    def test_size(self):
        """Test if converted datasets grow, OCF more than OCT
        """
        results = run_size_bench(self.dataset, ['pbkdf2', 'aes'], ['ocf', 'oct'], self.work, iterations=2)
        baseline = self.metrics(results, '', 'db')['db_size_bytes']
        expected = sum(os.path.getsize(data_file_path(self.dataset, table.table_name)) for table in self.catalog)
        self.assertEqual(baseline.mean, expected)
        for scheme in ('pbkdf2', 'aes'):
            ocf = self.metrics(results, scheme, 'ocf')
            oct = self.metrics(results, scheme, 'oct')
            self.assertGreater(oct['size_ratio'].mean, 1.0)
            self.assertGreater(ocf['size_ratio'].mean, oct['size_ratio'].mean)
            self.assertAlmostEqual(ocf['icdb_size_bytes'].mean, ocf['size_ratio'].mean * expected)
            self.assertGreater(ocf['convert_seconds'].mean, 0.0)
            self.assertEqual(ocf['convert_seconds'].iterations, 2)

    def test_size_ordering(self):
        """Test if AES-OCT stays below PBKDF2-OCF, which stays below RSA-OCF
        """
        results = run_size_bench(self.dataset, ['rsa', 'pbkdf2', 'aes'], ['ocf', 'oct'], self.work, iterations=1)
        ratio = {(result.scheme, result.model): result.mean for result in results if result.metric == 'size_ratio'}
        self.assertLess(ratio['aes', 'oct'], ratio['pbkdf2', 'ocf'])
        self.assertLess(ratio['pbkdf2', 'ocf'], ratio['rsa', 'ocf'])

    def test_conversion_ordering(self):
        """Test if AES-OCT converts faster than PBKDF2-OCF, which converts faster than RSA-OCF
        """
        dataset = os.path.join(self.tmp.name, 'larger')
        generate_dataset('world', 60, 3, dataset)
        results = run_size_bench(dataset, ['rsa', 'pbkdf2', 'aes'], ['ocf', 'oct'], self.work, iterations=3)
        seconds = {(result.scheme, result.model): result for result in results if result.metric == 'convert_seconds'}
        self.assertEqual({result.iterations for result in seconds.values()}, {3})
        self.assertLess(seconds['aes', 'oct'].mean, seconds['pbkdf2', 'ocf'].mean)
        self.assertLess(seconds['pbkdf2', 'ocf'].mean, seconds['rsa', 'ocf'].mean)

    def test_corpus_filter(self):
        """Test if statements on tables outside the dataset are skipped
        """
        statements = ['SELECT * FROM City;', 'SELECT lname FROM employee;']
        self.assertEqual(applicable(statements, self.catalog), ['SELECT * FROM City;'])

    def test_time(self):
        """Test if the time benchmark reports every phase of the corpus statements
        """
        corpus = load_corpus(CORPUS_FILE)
        results = run_time_bench(self.dataset, ['aes'], ['oct'], self.work, corpus, iterations=2)
        metrics = {result.metric for result in results}
        self.assertEqual(metrics, {
            'convert_seconds', 'exec_ms', 'ratio_vs_baseline', 'rewrite_ms', 'verify_ms', 'delete_verify_ms',
            'delete_execute_ms', 'delete_revoke_ms', 'insert_convert_ms', 'insert_execute_ms',
        })
        baselines = [result for result in results if result.model == 'db']
        self.assertEqual(len(baselines), len(self.catalog))
        verified = [result for result in results if result.metric == 'verify_ms']
        self.assertEqual(len(verified), len(corpus['select']))
        self.assertEqual({result.iterations for result in verified}, {2})
        inserts = [result for result in results if result.metric == 'insert_execute_ms']
        self.assertTrue(0 < len(inserts) <= len(corpus['insert']))
        timings = [result for result in results if result.metric.endswith(TIMING_METRICS)]
        self.assertEqual({result.iterations for result in timings}, {2})
        self.assertTrue(all(result.std >= 0 and result.cv >= 0 for result in timings))
        rows = json.loads(format_json(results))
        self.assertEqual(len(rows), len(results))
        for row, result in zip(rows, results):
            self.assertEqual(row['cv'], result.cv)
            self.assertEqual(row['metric'], result.metric)
        self.assertEqual(format_csv(results).splitlines()[0].split(',')[-1], 'cv')

    def test_select_phases(self):
        """Test if verifying RSA field codes takes longer than fetching and rewriting the same rows
        """
        dataset = os.path.join(self.tmp.name, 'select')
        generate_dataset('world', 80, 4, dataset)
        sql = 'SELECT * FROM City;'
        results = run_time_bench(dataset, ['rsa'], ['ocf'], self.work, {'select': [sql]}, iterations=3)
        phases = {result.metric: result for result in results if result.query == sql}
        self.assertEqual(set(phases), {'rewrite_ms', 'exec_ms', 'verify_ms'})
        self.assertGreater(phases['verify_ms'].mean, phases['exec_ms'].mean)
        self.assertGreater(phases['verify_ms'].mean, phases['rewrite_ms'].mean)


@unittest.skipUnless(ACCEPTANCE, 'Set ICDB_ACCEPTANCE=1 for the full-scale timing runs')
class TimingShapeTestCase(SimpleTestCase):
    ROWS = 10000
    ITERATIONS = 30

    def test_rsa_select_phases(self):
        """Test if RSA-OCF verification outweighs execution and fetch a hundredfold, with rewriting below a percent
        """
        with tempfile.TemporaryDirectory() as tmp:
            dataset = os.path.join(tmp, 'world')
            catalog = generate_dataset('world', self.ROWS, 1, dataset)
            key = bench_key('rsa')
            out_dir = os.path.join(tmp, 'rsa-ocf')
            icrl, _ = convert_dataset(catalog, dataset, out_dir, Model.OCF, key)
            icdb_catalog = catalog.to_icdb(Model.OCF)
            runner = QueryRunner(open_embedded_store(icdb_catalog, out_dir), icdb_catalog, Model.OCF, key, icrl)
            warmup = warmup_runs(self.ITERATIONS)
            phases = {'rewrite_ms': [], 'fetch_ms': [], 'verify_ms': []}
            for _ in range(self.ITERATIONS + warmup):
                timings = runner.run('SELECT * FROM City;').timings
                for name, samples in phases.items():
                    samples.append(timings[name])
        means = {name: summarize(samples, warmup=warmup)[0] for name, samples in phases.items()}
        self.assertGreaterEqual(means['verify_ms'], 100 * means['fetch_ms'])
        self.assertLessEqual(means['rewrite_ms'], 0.01 * sum(means.values()))


class AttackMatrixTestCase(SimpleTestCase):
    def test_matrix(self):
        """Test if every attack but row deletion is detected for every scheme and model
        """
        with tempfile.TemporaryDirectory() as work_dir:
            outcomes = run_attack_matrix(['rsa', 'pbkdf2', 'aes'], ['ocf', 'oct'], work_dir, rows=6)
        self.assertEqual(len(outcomes), 3 * 2 * len(ATTACKS))
        self.assertEqual(deviations(outcomes), [])
        replays = [outcome for outcome in outcomes if outcome.attack == 'replay']
        self.assertEqual({outcome.statuses for outcome in replays}, {('STALE',)})
        matrix = format_matrix(outcomes)
        self.assertEqual(matrix.count('missed'), 6)
        self.assertNotIn('!', matrix)


    def test_variants(self):
        """Test if value-only, same-row and wrong-table substitutions are detected by verification
        """
        attacks = ('substitute_value', 'substitute_in_row', 'substitute_value_in_row', 'replay_wrong_table')
        with tempfile.TemporaryDirectory() as work_dir:
            outcomes = run_attack_matrix(['rsa', 'pbkdf2', 'aes'], ['ocf', 'oct'], work_dir, rows=6, attacks=attacks)
        self.assertEqual(len(outcomes), 3 * 2 * len(attacks))
        self.assertTrue(all(outcome.detected for outcome in outcomes))
        self.assertTrue(all(outcome.statuses for outcome in outcomes))

    def test_forgery_sweep(self):
        """Test if forging any single cell of any table flags exactly that row
        """
        with tempfile.TemporaryDirectory() as work_dir:
            results = run_forgery_sweep(['rsa', 'pbkdf2', 'aes'], ['ocf', 'oct'], work_dir, rows=3)
        self.assertEqual(len(results), 6)
        for result in results:
            self.assertGreater(result.checked, 0)
            self.assertEqual(result.misses, [])
        self.assertEqual(format_sweep(results).count(', 0 missed'), 6)

    def test_mutate_and_transplant(self):
        """Test if forged cells always differ and transplanted rows fit the target table
        """
        with tempfile.TemporaryDirectory() as tmp:
            catalog = generate_dataset('world', 4, 1, tmp)
        city = catalog.to_icdb(Model.OCT).table('City')
        self.assertEqual(mutate_cell(city.column('Serial'), '7'), '8')
        self.assertEqual(mutate_cell(city.column('IC'), 'AQID'), 'BQID')
        self.assertEqual(mutate_cell(city.column('IC'), 'BQID'), 'AQID')
        self.assertEqual(mutate_cell(city.column('Name'), 'Breda'), 'Breda~')
        self.assertEqual(mutate_cell(city.column('Name'), None), '~')
        for model in (Model.OCF, Model.OCT):
            source = catalog.to_icdb(model).table('CountryLanguage')
            target = catalog.to_icdb(model).table('City')
            saved = [str(position) for position in range(len(source.columns))]
            self.assertEqual(len(transplant_row(source, saved, target)), len(target.columns))


class CommandTestCase(TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.dataset = os.path.join(self.tmp.name, 'company')

    def test_generate_and_size(self):
        """Test if a generated dataset is measured, written to CSV and stored
        """
        call_command('icdb_generate_dataset', profile='company', rows=8, out_dir=self.dataset, stdout=io.StringIO())
        csv_path = os.path.join(self.tmp.name, 'size.csv')
        out = io.StringIO()
        call_command('icdb_bench_size', dataset=self.dataset, schemes=['aes'], models=['ocf', 'oct'], iterations=2,
                     out='csv', path=csv_path, save=True, stdout=out)
        self.assertEqual(len(read_csv(csv_path)), 1 + 2 * 3)
        self.assertEqual(BenchResult.objects.filter(metric='size_ratio').count(), 2)
        self.assertEqual(out.getvalue(), '')
        self.assertEqual(BenchResult.objects.get(metric='convert_seconds', model='oct').iterations, 2)

    def test_size_json(self):
        """Test if the size results are printed as JSON with their coefficient of variation
        """
        call_command('icdb_generate_dataset', profile='company', rows=6, out_dir=self.dataset, stdout=io.StringIO())
        out = io.StringIO()
        call_command('icdb_bench_size', dataset=self.dataset, schemes=['pbkdf2'], models=['oct'], iterations=2,
                     out='json', stdout=out)
        rows = json.loads(out.getvalue())
        self.assertEqual([row['metric'] for row in rows],
                         ['db_size_bytes', 'icdb_size_bytes', 'size_ratio', 'convert_seconds'])
        self.assertTrue(all('cv' in row for row in rows))

    def test_size_text(self):
        """Test if the size results are printed as a text table by default
        """
        call_command('icdb_generate_dataset', profile='company', rows=6, out_dir=self.dataset, stdout=io.StringIO())
        out = io.StringIO()
        call_command('icdb_bench_size', dataset=self.dataset, schemes=['aes'], models=['oct'], iterations=1, stdout=out)
        self.assertIn('size_ratio', out.getvalue())
        self.assertEqual(len(out.getvalue().splitlines()), 4)

    def test_time_json(self):
        """Test if the time command writes JSON results to a file
        """
        call_command('icdb_generate_dataset', profile='company', rows=6, out_dir=self.dataset, stdout=io.StringIO())
        path = os.path.join(self.tmp.name, 'time.json')
        call_command('icdb_bench_time', dataset=self.dataset, schemes=['aes'], models=['oct'], iterations=1,
                     out='json', path=path, stdout=io.StringIO(), stderr=io.StringIO())
        with open(path) as f:
            rows = json.load(f)
        self.assertIn('convert_seconds', {row['metric'] for row in rows})
        self.assertEqual({row['iterations'] for row in rows if row['metric'].endswith(TIMING_METRICS)}, {1})

    def test_generate_bad_rows(self):
        """Test if a dataset of less than two rows is a usage error
        """
        with self.assertRaises(CommandError):
            call_command('icdb_generate_dataset', rows=1, out_dir=self.dataset)

    def test_attack(self):
        """Test if the attack command prints the matrix and exits cleanly
        """
        out = io.StringIO()
        call_command('icdb_attack', schemes=['pbkdf2'], models=['oct'], rows=4, stdout=out)
        self.assertIn('pbkdf2-oct', out.getvalue())
        self.assertIn('All attacks behaved as expected', out.getvalue())

    def test_attack_sweep(self):
        """Test if the attack command also sweeps forgeries over every cell
        """
        out = io.StringIO()
        call_command('icdb_attack', schemes=['aes'], models=['ocf'], rows=3, sweep=True, stdout=out)
        self.assertIn('aes-ocf:', out.getvalue())
        self.assertIn(', 0 missed', out.getvalue())


class BenchResultAPITestCase(TestCase):
    def setUp(self):
        self.test_user = User.objects.create_user('test', 'test@example.com', 'test')
        self.client.force_login(self.test_user)
        BenchResult.objects.create(dataset='world', scheme='rsa', model='ocf', metric='verify_ms', iterations=30,
                                   mean=20.0, std=2.0)
        BenchResult.objects.create(dataset='world', scheme='', model='db', metric='exec_ms', mean=0.5)

    def test_list(self):
        """Test if stored results are listed with their coefficient of variation
        """
        resp = self.client.get(reverse('api-bench-results', kwargs={'version': 'v1'}))
        self.assertEqual(resp.status_code, 200)
        self.assertEqual(resp.json()['count'], 2)
        resp = self.client.get(reverse('api-bench-results', kwargs={'version': 'v1'}), {'scheme': 'rsa'})
        results = resp.json()['results']
        self.assertEqual(len(results), 1)
        self.assertEqual(results[0]['cv'], 0.1)

    def test_read_only(self):
        """Test if results cannot be created through the API
        """
        resp = self.client.post(reverse('api-bench-results', kwargs={'version': 'v1'}), {
            'dataset': 'x', 'model': 'db', 'metric': 'exec_ms', 'mean': 1,
        })
        self.assertEqual(resp.status_code, 405)
        self.assertEqual(APIBenchResultList.permission_classes[0].__name__, 'IsAuthenticated')

    def test_anonymous(self):
        """Test if anonymous users are turned away
        """
        self.client.logout()
        resp = self.client.get(reverse('api-bench-results', kwargs={'version': 'v1'}))
        self.assertIn(resp.status_code, (401, 403))
