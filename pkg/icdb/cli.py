"""Console launcher: ``icdb <subcommand> [options]`` runs the ``icdb_<subcommand>`` management command
"""
import os
import sys

SUBCOMMANDS = (
    'keygen', 'convert-schema', 'convert-data', 'rewrite', 'query', 'verify', 'revoke', 'bench-size', 'bench-time',
    'attack', 'generate-dataset',
)


def _pop_dsn(args):
    """Remove --dsn from the arguments, returning the DSN and the remaining arguments
    """
    dsn, rest = None, []
    iterator = iter(args)
    for arg in iterator:
        if arg == '--dsn':
            dsn = next(iterator, None)
            if dsn is None:
                raise ValueError('--dsn needs a value')
        elif arg.startswith('--dsn='):
            dsn = arg.split('=', 1)[1]
        else:
            rest.append(arg)
    return dsn, rest


def usage():
    return 'usage: icdb {{{}}} [options]'.format(','.join(SUBCOMMANDS))


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv or argv[0] in ('-h', '--help'):
        print(usage())
        return 0 if argv else 2
    if argv[0] not in SUBCOMMANDS:
        print(usage(), file=sys.stderr)
        print('icdb: unknown subcommand "{}"'.format(argv[0]), file=sys.stderr)
        return 2

    try:
        dsn, rest = _pop_dsn(argv[1:])
    except ValueError as e:
        print('icdb: {}'.format(e), file=sys.stderr)
        return 2
    # The DSN is read when the settings load, so it has to be in place before Django starts.
    if dsn:
        os.environ['ICDB_DSN'] = dsn
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'icdb.settings')

    from django.core.management import execute_from_command_line
    execute_from_command_line(['icdb', 'icdb_' + argv[0].replace('-', '_')] + rest)
    return 0


if __name__ == '__main__':
    sys.exit(main())
