from urllib.parse import unquote, urlparse

ENGINES = {
    'mysql': 'django.db.backends.mysql',
    'mariadb': 'django.db.backends.mysql',
    'postgres': 'django.db.backends.postgresql',
    'postgresql': 'django.db.backends.postgresql',
    'sqlite': 'django.db.backends.sqlite3',
}


def parse_dsn(dsn):
    """Turn a connection string like mysql://user:pw@host:3306/world into a DATABASES entry
    """
    parsed = urlparse(dsn)
    if parsed.scheme not in ENGINES:
        raise ValueError('Unsupported DSN scheme "{}"'.format(parsed.scheme))

    if parsed.scheme == 'sqlite':
        # sqlite:///relative.db and sqlite:////absolute.db
        name = parsed.path[1:] if parsed.path.startswith('/') else parsed.path
    else:
        name = parsed.path.lstrip('/')

    return {
        'ENGINE': ENGINES[parsed.scheme],
        'NAME': unquote(name),
        'USER': unquote(parsed.username or ''),
        'PASSWORD': unquote(parsed.password or ''),
        'HOST': parsed.hostname or '',
        'PORT': str(parsed.port or ''),
    }
