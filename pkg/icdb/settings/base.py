"""Django base settings
"""

import os

from ._parse_dsn import parse_dsn

# Build paths inside the project like this: os.path.join(BASE_DIR, ...)
BASE_DIR = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


# Application definition

INSTALLED_APPS = [
    'schemes.apps.SchemesConfig',
    'codec.apps.CodecConfig',
    'icrl.apps.IcrlConfig',
    'rewrite.apps.RewriteConfig',
    'conversion.apps.ConversionConfig',
    'verification.apps.VerificationConfig',
    'store.apps.StoreConfig',
    'bench.apps.BenchConfig',
    'django.contrib.admin',
    'django.contrib.auth',
    'django.contrib.contenttypes',
    'django.contrib.sessions',
    'django.contrib.messages',
    'django.contrib.staticfiles',
    'django_q',
    'rest_framework',
    'rest_framework.authtoken',
]

MIDDLEWARE = [
    'django.middleware.security.SecurityMiddleware',
    'django.contrib.sessions.middleware.SessionMiddleware',
    'django.middleware.common.CommonMiddleware',
    'django.middleware.csrf.CsrfViewMiddleware',
    'django.contrib.auth.middleware.AuthenticationMiddleware',
    'django.contrib.messages.middleware.MessageMiddleware',
    'django.middleware.clickjacking.XFrameOptionsMiddleware',
]

ROOT_URLCONF = 'icdb.urls'

TEMPLATES = [
    {
        'BACKEND': 'django.template.backends.django.DjangoTemplates',
        'DIRS': [],
        'APP_DIRS': True,
        'OPTIONS': {
            'context_processors': [
                'django.template.context_processors.debug',
                'django.template.context_processors.request',
                'django.contrib.auth.context_processors.auth',
                'django.contrib.messages.context_processors.messages',
            ],
        },
    },
]

WSGI_APPLICATION = 'icdb.wsgi.application'

DEFAULT_AUTO_FIELD = 'django.db.models.AutoField'


# Internationalization
# https://docs.djangoproject.com/en/4.2/topics/i18n/

LANGUAGE_CODE = 'en-us'

USE_I18N = True

USE_TZ = True


# Static files

STATIC_URL = '/static/'


# Logging

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'simple': {
            'format': '{levelname} {name}: {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'simple',
        },
    },
    'root': {
        'handlers': ['console'],
        'level': 'WARNING',
    },
    'loggers': {
        app: {
            'handlers': ['console'],
            'level': os.environ.get('ICDB_LOG_LEVEL', 'WARNING'),
            'propagate': False,
        }
        for app in ('schemes', 'codec', 'icrl', 'rewrite', 'conversion', 'verification', 'store', 'bench')
    },
}


# Queue

Q_CLUSTER = {
    'name': 'icdb',
    'sync': True,
    'orm': 'default',
    'save_limit': -1,
}


# REST Framework

REST_FRAMEWORK = {
    'DEFAULT_VERSIONING_CLASS': 'rest_framework.versioning.URLPathVersioning',
    'DEFAULT_AUTHENTICATION_CLASSES': (
        'rest_framework.authentication.TokenAuthentication',
        'rest_framework.authentication.SessionAuthentication',
    ),
    'DEFAULT_PAGINATION_CLASS': 'rest_framework.pagination.PageNumberPagination',
    'PAGE_SIZE': 30,
}


# Integrity codes

ICDB_IC_SUFFIX = '_IC'
ICDB_OCT_SERIAL_COLUMN = 'Serial'
ICDB_OCT_IC_COLUMN = 'IC'

ICDB_RSA_KEY_BITS = 1024
ICDB_MAC_SECRET_BYTES = 24
ICDB_AES_KEY_BYTES = 16
ICDB_PBKDF2_ITERATIONS = 10
ICDB_MAX_MESSAGE_BYTES = 1024 * 1024

# Bind the table name into OCF field messages (cross-table substitution):
ICDB_BIND_TABLE = False

# Default schema file of the rewrite, conversion and query commands
ICDB_SCHEMA_FILE = os.environ.get('ICDB_SCHEMA_FILE', '')


# Verification

ICDB_VERIFY_WORKERS = 1


# Benchmarks

ICDB_BENCH_MIN_ITERATIONS = 30
ICDB_BENCH_WARMUP_SHARE = 0.1


# External database server (adapter picked from the DSN scheme)

ICDB_DSN = os.environ.get('ICDB_DSN', '')
ICDB_DATABASE_ALIAS = 'icdb'
ICDB_EXTERNAL_DATABASE = parse_dsn(ICDB_DSN) if ICDB_DSN else None
