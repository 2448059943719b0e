from django.conf import settings
from django.core.management import BaseCommand, CommandError

from schemes.exceptions import SchemeException
from schemes.keys import SchemeId, generate_keys, write_key_file


class Command(BaseCommand):
    help = 'Generates the data owner\'s key file for one integrity code scheme'

    def add_arguments(self, parser):
        """Argument handle
        """
        parser.add_argument('--scheme', required=True, choices=['rsa', 'pbkdf2', 'aes'])
        parser.add_argument('--keys', required=True, help='Path of the key file to write')
        parser.add_argument('--seed', type=int, help='Fixed RNG seed (reproducible keys, tests only)')

    def handle(self, *args, **options):
        """Command handle
        """
        try:
            key = generate_keys(
                options['scheme'],
                rng_seed=options['seed'],
                rsa_bits=settings.ICDB_RSA_KEY_BITS,
                mac_secret_bytes=settings.ICDB_MAC_SECRET_BYTES,
                aes_key_bytes=settings.ICDB_AES_KEY_BYTES,
            )
            write_key_file(key, options['keys'])
        except (SchemeException, OSError) as e:
            raise CommandError(str(e), returncode=2)

        if key.scheme is SchemeId.AES_CIPHER:
            self.stderr.write(self.style.WARNING(
                'WARNING: AES codes use ECB mode, which leaks equal plaintext blocks'
            ))
        self.stdout.write(self.style.SUCCESS('Wrote {} key to {}'.format(key.scheme.value, options['keys'])))
