import re

from django.core.management import BaseCommand, CommandError

from icrl.exceptions import IcrlException
from icrl.revocation import Icrl

_SERIAL_ARGUMENT = re.compile(r'^([1-9][0-9]*)(?:-([1-9][0-9]*))?$')


class Command(BaseCommand):
    help = 'Revokes serial numbers in the integrity code revocation list'

    def add_arguments(self, parser):
        """Argument handle
        """
        parser.add_argument('--icrl', required=True, help='Path of the ICRL file')
        parser.add_argument('serials', nargs='+', help='Serial number or inclusive range "a-b"')

    def handle(self, *args, **options):
        """Command handle
        """
        ranges = []
        for argument in options['serials']:
            match = _SERIAL_ARGUMENT.match(argument)
            if not match:
                raise CommandError('Invalid serial "{}"'.format(argument), returncode=2)
            first = int(match.group(1))
            last = int(match.group(2) or first)
            if first > last:
                raise CommandError('Invalid range "{}"'.format(argument), returncode=2)
            ranges.append((first, last))

        try:
            icrl = Icrl.load(options['icrl'])
            icrl.revoke_ranges(ranges)
            icrl.save(options['icrl'])
        except (IcrlException, OSError) as e:
            raise CommandError(str(e), returncode=2)

        self.stdout.write(self.style.SUCCESS('{} serials revoked in total, next serial is {}'.format(
            icrl.revoked_count, icrl.next_serial
        )))
