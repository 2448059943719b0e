"""Synthetic databases shaped like the World and Company sample schemas

Generated values include delimiters, backslashes and NULLs so every dataset
also exercises the data file escaping.
"""
import logging
import os
import random

import rewrite
from conversion.datafile import write_data_file
from conversion.tasks import data_file_path
from rewrite.schema import SchemaCatalog
from bench.exceptions import UnknownProfileError

logger = logging.getLogger(__name__)

SCHEMA_FILE_NAME = 'schema.yaml'
PROFILES = ('world', 'company')

CONTINENTS = ['Asia', 'Europe', 'North America', 'Africa', 'Oceania', 'Antarctica', 'South America']
LANGUAGES = ['English', 'Spanish', 'Dutch', 'Pashto', 'Dari', 'Papiamento', 'Portuguese', 'Arabic', 'French']
SYLLABLES = ['ka', 'bul', 'am', 'ster', 'dam', 'rot', 'ter', 'haag', 'ut', 'recht', 'san', 'ta', 'fe', 'lo']


def profile_catalog(profile):
    """Plain schema of a profile, read from the rewrite fixtures
    """
    if profile not in PROFILES:
        raise UnknownProfileError('Unknown dataset profile "{}", choose one of {}'.format(profile, ', '.join(PROFILES)))
    return SchemaCatalog.load(os.path.join(os.path.dirname(rewrite.__file__), 'fixtures', profile + '.yaml'))


def _word(rng, parts=2):
    return ''.join(rng.choice(SYLLABLES) for _ in range(parts)).capitalize()


def _text(rng):
    """A name, sometimes carrying characters the data file format has to escape
    """
    value = '{} {}'.format(_word(rng), _word(rng, 3))
    roll = rng.random()
    if roll < 0.05:
        return value.replace(' ', '|')
    if roll < 0.08:
        return value + '\\'
    return value


def _maybe(rng, value, share=0.1):
    return None if rng.random() < share else value


def _country_codes(count):
    codes = []
    for i in range(count):
        codes.append(''.join(chr(ord('A') + (i // 26 ** position) % 26) for position in (2, 1, 0)))
    return codes


def _world(rng, rows):
    codes = _country_codes(max(3, rows // 10))
    countries = [[
        code, _text(rng), rng.choice(CONTINENTS), _word(rng, 3), '{:.2f}'.format(rng.uniform(1, 10 ** 7)),
        _maybe(rng, str(rng.randint(1800, 2000))), str(rng.randint(0, 10 ** 9)),
        _maybe(rng, '{:.1f}'.format(rng.uniform(40, 85))), '{:.2f}'.format(rng.uniform(0, 10 ** 6)),
        _maybe(rng, '{:.2f}'.format(rng.uniform(0, 10 ** 6))), _text(rng), rng.choice(['Republic', 'Monarchy']),
        _maybe(rng, _text(rng)), _maybe(rng, str(rng.randint(1, rows))), code[:2],
    ] for code in codes]
    cities = [[str(i), _text(rng), rng.choice(codes), _maybe(rng, _word(rng, 3)), str(rng.randint(0, 10 ** 7))]
              for i in range(1, rows + 1)]
    languages = []
    for code in codes:
        for language in rng.sample(LANGUAGES, 2):
            languages.append([code, language, rng.choice('TF'), '{:.1f}'.format(rng.uniform(0, 100))])
    return {'City': cities, 'Country': countries, 'CountryLanguage': languages}


def _company(rng, rows):
    departments = max(2, rows // 10)
    ssns = ['{:09d}'.format(100000000 + i * 7919) for i in range(rows)]
    employees = [[
        _word(rng), rng.choice('ABCDEFGHJKLMNOPRSTW'), _word(rng, 3), ssn,
        '19{:02d}-{:02d}-{:02d}'.format(rng.randint(40, 99), rng.randint(1, 12), rng.randint(1, 28)),
        '{} {}, Houston, TX'.format(rng.randint(1, 999), _word(rng)), rng.choice('MF'),
        str(rng.randint(20, 90) * 1000), _maybe(rng, rng.choice(ssns)), str(rng.randint(1, departments)),
    ] for ssn in ssns]
    department_rows = [[_word(rng, 3), str(number), rng.choice(ssns),
                        '20{:02d}-0{}-01'.format(rng.randint(0, 24), rng.randint(1, 9))]
                       for number in range(1, departments + 1)]
    return {'employee': employees, 'department': department_rows}


def generate_dataset(profile, rows, seed, out_dir):
    """Write the schema file and one dump file per table into out_dir

    rows is the size of the main table (City or employee); the other tables
    scale with it. Returns the plain SchemaCatalog.
    """
    catalog = profile_catalog(profile)
    rng = random.Random(seed)
    tables = _world(rng, rows) if profile == 'world' else _company(rng, rows)

    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, SCHEMA_FILE_NAME), 'w', encoding='utf-8') as f:
        f.write(catalog.dumps())
    for table in catalog:
        write_data_file(data_file_path(out_dir, table.table_name), tables[table.table_name])
    logger.info('Generated {} dataset with {} main row(s) in "{}"'.format(profile, rows, out_dir))
    return catalog


def load_dataset(directory):
    return SchemaCatalog.load(os.path.join(directory, SCHEMA_FILE_NAME))
