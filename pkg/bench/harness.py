"""Size and timing benchmarks of converted databases

Every timed operation runs a share of warm-up runs on top of the requested
iterations; the warm-up samples are dropped and the rest is reduced to mean
and standard deviation.
SELECT * is timed in pairs: the plain table and its ICDB form run back to
back in each iteration.
"""
import csv
import functools
import io
import json
import logging
import math
import os
import time
from dataclasses import asdict, dataclass, fields

import numpy as np
import yaml

from bench.datasets import load_dataset
from bench.exceptions import DatasetError, ResultFileError
from bench.models import BenchResult
from codec.codes import DEFAULT_OPTIONS
from conversion.converter import convert_data_file
from conversion.tasks import data_file_path
from icrl.revocation import Icrl
from rewrite.parser import parse
from rewrite.schema import Model
from schemes.keys import SchemeId, generate_keys
from store.embedded import open_embedded_store
from store.exceptions import ConstraintViolationError
from verification.runner import QueryRunner

logger = logging.getLogger(__name__)

DEFAULT_WARMUP_SHARE = 0.1
OUTPUT_FORMATS = ('text', 'csv', 'json')


@dataclass
class Measurement:
    dataset: str
    scheme: str
    model: str
    metric: str
    mean: float
    std: float = 0.0
    iterations: int = 1
    query: str = ''

    @property
    def cv(self):
        return self.std / self.mean if self.mean else 0.0

    def save(self):
        return BenchResult.objects.create(dataset=self.dataset, scheme=self.scheme, model=self.model,
                                          metric=self.metric, query=self.query, iterations=self.iterations,
                                          mean=self.mean, std=self.std)


CSV_FIELDS = [f.name for f in fields(Measurement)] + ['cv']


def warmup_runs(iterations, warmup_share=DEFAULT_WARMUP_SHARE):
    """Runs to add in front of the measured ones, so `iterations` samples remain after the warm-up
    """
    return int(math.ceil(iterations * warmup_share))


def summarize(samples, warmup_share=DEFAULT_WARMUP_SHARE, warmup=None):
    """(mean, std, kept iterations) of the samples after dropping the warm-up

    warmup is the number of leading samples to drop; without it the
    warm-up share of the samples is dropped.
    """
    if not samples:
        raise ValueError('Nothing to summarize')
    if warmup is None:
        warmup = int(math.floor(len(samples) * warmup_share))
    skip = min(warmup, len(samples) - 1)
    kept = np.asarray(samples[skip:], dtype=float)
    std = float(kept.std(ddof=1)) if len(kept) > 1 else 0.0
    return float(kept.mean()), std, len(kept)


def measurement(dataset, scheme, model, metric, samples, warmup_share=DEFAULT_WARMUP_SHARE, query='', warmup=None):
    mean, std, iterations = summarize(samples, warmup_share, warmup)
    return Measurement(dataset, scheme, model, metric, mean, std, iterations, query)


def format_csv(measurements):
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=CSV_FIELDS, lineterminator='\n')
    writer.writeheader()
    for item in measurements:
        row = asdict(item)
        row['mean'] = repr(item.mean)
        row['std'] = repr(item.std)
        row['cv'] = repr(item.cv)
        writer.writerow(row)
    return buffer.getvalue()


def format_json(measurements):
    return json.dumps([dict(asdict(item), cv=item.cv) for item in measurements], indent=2) + '\n'


def write_csv(path, measurements):
    with open(path, 'w', newline='', encoding='utf-8') as f:
        f.write(format_csv(measurements))
    logger.info('Wrote {} measurement(s) to "{}"'.format(len(measurements), path))


def read_csv(path):
    with open(path, newline='', encoding='utf-8') as f:
        reader = csv.DictReader(f)
        if reader.fieldnames != CSV_FIELDS:
            raise ResultFileError('"{}" does not have the header {}'.format(path, ','.join(CSV_FIELDS)))
        measurements = []
        for number, row in enumerate(reader, 2):
            try:
                measurements.append(Measurement(
                    row['dataset'], row['scheme'], row['model'], row['metric'], float(row['mean']),
                    float(row['std']), int(row['iterations']), row['query'],
                ))
            except (TypeError, ValueError) as e:
                raise ResultFileError('Line {} of "{}": {}'.format(number, path, e))
    return measurements


def load_corpus(path):
    """SELECT, DELETE and INSERT statements of a corpus file
    """
    with open(path, 'r', encoding='utf-8') as f:
        data = yaml.safe_load(f) or {}
    return {
        'select': [entry['sql'] if isinstance(entry, dict) else entry for entry in data.get('select', [])],
        'delete': [entry['sql'] if isinstance(entry, dict) else entry for entry in data.get('delete', [])],
        'insert': list(data.get('insert', [])),
    }


def applicable(statements, catalog):
    """Statements whose tables all exist in the catalog
    """
    names = {table.table_name.lower() for table in catalog}
    return [sql for sql in statements if all(ref.name.lower() in names for ref in parse(sql).all_tables)]


@functools.lru_cache(maxsize=None)
def bench_key(scheme, seed=1):
    """Seeded key material, so repeated runs measure identical codes
    """
    return generate_keys(SchemeId.parse(scheme), rng_seed=seed)


def convert_dataset(catalog, in_dir, out_dir, model, key, options=DEFAULT_OPTIONS):
    """Convert every dump file of a dataset, returning the ICRL and the ConversionResults
    """
    os.makedirs(out_dir, exist_ok=True)
    icrl = Icrl()
    results = [
        convert_data_file(data_file_path(in_dir, table.table_name), data_file_path(out_dir, table.table_name), table,
                          model, key, icrl, options)
        for table in catalog
    ]
    return icrl, results


def _timed_conversions(catalog, dataset_dir, out_dir, model, key, options, runs):
    """Convert the dataset `runs` times, each with a new ICRL

    Returns the durations in seconds with the ICRL and ConversionResults of the last run.
    """
    samples, icrl, conversions = [], None, []
    for _ in range(max(runs, 1)):
        started = time.perf_counter()
        icrl, conversions = convert_dataset(catalog, dataset_dir, out_dir, model, key, options)
        samples.append(time.perf_counter() - started)
    return samples, icrl, conversions


def _timed(function):
    started = time.perf_counter()
    value = function()
    return (time.perf_counter() - started) * 1000, value


def _label(dataset_dir, label):
    return label or os.path.basename(os.path.normpath(dataset_dir))


def _combinations(schemes, models):
    return [(SchemeId.parse(scheme), Model.parse(model)) for scheme in schemes for model in models]


def run_size_bench(dataset_dir, schemes, models, work_dir, label=None, options=DEFAULT_OPTIONS, iterations=30,
                   warmup_share=DEFAULT_WARMUP_SHARE):
    """Size of the plain dump files against their converted forms, and the conversion time

    The conversion runs `iterations` times after its warm-up runs.
    """
    warmup = warmup_runs(iterations, warmup_share)
    catalog = load_dataset(dataset_dir)
    label = _label(dataset_dir, label)
    try:
        db_size = sum(os.path.getsize(data_file_path(dataset_dir, table.table_name)) for table in catalog)
    except OSError as e:
        raise DatasetError('Incomplete dataset "{}": {}'.format(dataset_dir, e))
    results = [Measurement(label, '', 'db', 'db_size_bytes', float(db_size))]

    for scheme, model in _combinations(schemes, models):
        out_dir = os.path.join(work_dir, '{}-{}'.format(scheme.alias, model.value))
        seconds, _, conversions = _timed_conversions(catalog, dataset_dir, out_dir, model, bench_key(scheme), options,
                                                     iterations + warmup)
        icdb_size = sum(result.bytes_out for result in conversions)
        results.extend([
            Measurement(label, scheme.alias, model.value, 'icdb_size_bytes', float(icdb_size)),
            Measurement(label, scheme.alias, model.value, 'size_ratio', icdb_size / db_size if db_size else 1.0),
            measurement(label, scheme.alias, model.value, 'convert_seconds', seconds, warmup=warmup),
        ])
        logger.info('{}-{}: {} -> {} bytes'.format(scheme.alias, model.value, db_size, icdb_size))
    return results


def _fresh_runner(catalog, out_dir, model, key, icrl, options, workers):
    """Runner over a newly loaded store and a copy of the ICRL, for statements that change both
    """
    store = open_embedded_store(catalog, out_dir)
    return QueryRunner(store, catalog, model, key, Icrl.loads(icrl.dumps()), options, workers)


def run_time_bench(dataset_dir, schemes, models, work_dir, corpus=None, iterations=30, workers=1,
                   warmup_share=DEFAULT_WARMUP_SHARE, label=None, options=DEFAULT_OPTIONS):
    """Conversion, SELECT * against the plain baseline, and per phase timings of the corpus statements

    Every timing runs its warm-up runs first and then `iterations` measured runs; DELETE and INSERT
    statements run on a fresh store and ICRL each time.
    """
    warmup = warmup_runs(iterations, warmup_share)
    runs = iterations + warmup
    catalog = load_dataset(dataset_dir)
    label = _label(dataset_dir, label)
    corpus = corpus or {}
    selects = applicable(corpus.get('select', ()), catalog)
    deletes = applicable(corpus.get('delete', ()), catalog)
    inserts = applicable(corpus.get('insert', ()), catalog)
    baseline = open_embedded_store(catalog, dataset_dir)
    results = []

    for scheme, model in _combinations(schemes, models):
        key = bench_key(scheme)
        out_dir = os.path.join(work_dir, '{}-{}'.format(scheme.alias, model.value))
        seconds, icrl, _ = _timed_conversions(catalog, dataset_dir, out_dir, model, key, options, runs)
        results.append(measurement(label, scheme.alias, model.value, 'convert_seconds', seconds, warmup=warmup))

        icdb_catalog = catalog.to_icdb(model)
        runner = QueryRunner(open_embedded_store(icdb_catalog, out_dir), icdb_catalog, model, key, icrl, options,
                             workers)

        def record(metric, samples, query='', scheme_alias=scheme.alias, model_name=model.value):
            results.append(measurement(label, scheme_alias, model_name, metric, samples, query=query, warmup=warmup))
            return results[-1]

        for table in catalog:
            sql = 'SELECT * FROM `{}`;'.format(table.table_name)
            plain, icdb = [], []
            for _ in range(runs):
                plain.append(_timed(lambda: baseline.execute(sql))[0])
                icdb.append(runner.run(sql).timings['fetch_ms'])
            db = record('exec_ms', plain, sql, '', 'db')
            coded = record('exec_ms', icdb, sql)
            results.append(Measurement(label, scheme.alias, model.value, 'ratio_vs_baseline',
                                       coded.mean / db.mean if db.mean else 0.0, 0.0, coded.iterations, sql))

        for sql in selects:
            phases = {'rewrite_ms': [], 'fetch_ms': [], 'verify_ms': []}
            for _ in range(runs):
                timings = runner.run(sql).timings
                for name, samples in phases.items():
                    samples.append(timings[name])
            record('rewrite_ms', phases['rewrite_ms'], sql)
            record('exec_ms', phases['fetch_ms'], sql)
            record('verify_ms', phases['verify_ms'], sql)

        for sql, prefix, phases in [(sql, 'delete', ('verify', 'execute', 'revoke')) for sql in deletes] + \
                                   [(sql, 'insert', ('convert', 'execute')) for sql in inserts]:
            samples = {phase: [] for phase in phases}
            try:
                for _ in range(runs):
                    timings = _fresh_runner(icdb_catalog, out_dir, model, key, icrl, options, workers).run(sql).timings
                    for phase in phases:
                        samples[phase].append(timings[phase + '_ms'])
            except ConstraintViolationError as e:
                logger.warning('Skipping "{}": {}'.format(sql, e))
                continue
            for phase in phases:
                record('{}_{}_ms'.format(prefix, phase), samples[phase], sql)

        logger.info('Timed {}-{} over {} iteration(s)'.format(scheme.alias, model.value, iterations))
    return results
