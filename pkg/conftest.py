"""Wire the Django test suites (``<app>/tests.py``) into pytest.

Mirrors what ``manage.py test`` does: configure settings, set up the test
environment and create the test databases for the session.
"""
import os

import django

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'icdb.settings')
django.setup()

import pytest  # noqa: E402
from django.test.utils import setup_databases, setup_test_environment, teardown_databases, teardown_test_environment  # noqa: E402,E501


@pytest.fixture(scope='session', autouse=True)
def _django_test_environment():
    setup_test_environment(debug=False)
    old_config = setup_databases(verbosity=0, interactive=False, aliases={'default'})
    yield
    teardown_databases(old_config, verbosity=0)
    teardown_test_environment()
