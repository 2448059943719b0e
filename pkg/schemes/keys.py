import base64
import binascii
import enum
import functools
import logging
import random
from dataclasses import dataclass, field

from Crypto.PublicKey import RSA
from Crypto.Random import get_random_bytes

from schemes.exceptions import InvalidKeyError, KeyFileError, UnsupportedSchemeError

logger = logging.getLogger(__name__)

RSA_MIN_BITS = 1024
AES_KEY_LENGTHS = (16, 24, 32)


class SchemeId(enum.Enum):
    RSA_SIGN = 'RSA_SIGN'
    PBKDF2_MAC = 'PBKDF2_MAC'
    AES_CIPHER = 'AES_CIPHER'

    @classmethod
    def parse(cls, value):
        """Accept the canonical name (RSA_SIGN) or the command line alias (rsa)
        """
        if isinstance(value, cls):
            return value
        try:
            return ALIASES[value.lower()]
        except (KeyError, AttributeError):
            pass
        try:
            return cls(value)
        except ValueError:
            raise UnsupportedSchemeError('Unsupported scheme "{}"'.format(value))

    @property
    def alias(self):
        return {self.RSA_SIGN: 'rsa', self.PBKDF2_MAC: 'pbkdf2', self.AES_CIPHER: 'aes'}[self]


ALIASES = {
    'rsa': SchemeId.RSA_SIGN,
    'pbkdf2': SchemeId.PBKDF2_MAC,
    'hash': SchemeId.PBKDF2_MAC,
    'aes': SchemeId.AES_CIPHER,
}


@functools.lru_cache(maxsize=16)
def import_rsa_key(der):
    """Parse a DER encoded RSA key once per process
    """
    try:
        return RSA.import_key(der)
    except (ValueError, IndexError, TypeError) as e:
        raise InvalidKeyError('Malformed RSA key: {}'.format(e))


@dataclass(frozen=True)
class KeyMaterial:
    """Secret (and, for RSA, public) key bytes of one scheme

    RSA: secret is the DER private key (modulus, private exponent and CRT values),
    public is the DER public key (modulus and public exponent).
    PBKDF2: secret is the MAC secret. AES: secret is the block cipher key.
    """
    scheme: SchemeId
    secret: bytes = field(repr=False)
    public: bytes = b''

    def __post_init__(self):
        if not isinstance(self.scheme, SchemeId):
            raise UnsupportedSchemeError('Unsupported scheme "{}"'.format(self.scheme))
        if not self.secret:
            raise InvalidKeyError('Zero-length key material for {}'.format(self.scheme.value))

        if self.scheme is SchemeId.RSA_SIGN:
            private_key = import_rsa_key(self.secret)
            if not private_key.has_private():
                raise InvalidKeyError('RSA secret does not contain a private key')
            if private_key.size_in_bits() < RSA_MIN_BITS:
                raise InvalidKeyError('RSA modulus has {} bits, at least {} are required'.format(
                    private_key.size_in_bits(), RSA_MIN_BITS
                ))
        elif self.public:
            raise InvalidKeyError('{} keys carry no public part'.format(self.scheme.value))

        if self.scheme is SchemeId.AES_CIPHER and len(self.secret) not in AES_KEY_LENGTHS:
            raise InvalidKeyError('AES key must be 16, 24 or 32 bytes, got {}'.format(len(self.secret)))

    @property
    def rsa_private(self):
        return import_rsa_key(self.secret)

    @property
    def rsa_public(self):
        if self.public:
            return import_rsa_key(self.public)
        return self.rsa_private.publickey()

    @property
    def modulus_bits(self):
        if self.scheme is not SchemeId.RSA_SIGN:
            return None
        return self.rsa_private.size_in_bits()


def _byte_source(rng_seed):
    if rng_seed is None:
        return get_random_bytes
    logger.warning('Generating keys from a fixed seed, which is only meant for tests')
    return random.Random(rng_seed).randbytes


def generate_keys(scheme, rng_seed=None, rsa_bits=1024, mac_secret_bytes=24, aes_key_bytes=16):
    """Generate key material for a scheme (reproducible when a seed is given)
    """
    scheme = SchemeId.parse(scheme)
    randfunc = _byte_source(rng_seed)

    if scheme is SchemeId.RSA_SIGN:
        if rsa_bits < RSA_MIN_BITS:
            raise InvalidKeyError('RSA modulus must have at least {} bits'.format(RSA_MIN_BITS))
        rsa_key = RSA.generate(rsa_bits, randfunc=randfunc)
        key = KeyMaterial(
            scheme=scheme,
            secret=rsa_key.export_key(format='DER'),
            public=rsa_key.publickey().export_key(format='DER'),
        )
    elif scheme is SchemeId.PBKDF2_MAC:
        if mac_secret_bytes < 1:
            raise InvalidKeyError('MAC secret length must be positive')
        key = KeyMaterial(scheme=scheme, secret=randfunc(mac_secret_bytes))
    else:
        key = KeyMaterial(scheme=scheme, secret=randfunc(aes_key_bytes))

    logger.info('Generated {} key material'.format(scheme.value))
    return key


def dump_key(key):
    """Serialize key material into the line oriented key file format
    """
    lines = [
        'scheme={}'.format(key.scheme.value),
        'secret={}'.format(base64.b64encode(key.secret).decode('ascii')),
    ]
    if key.public:
        lines.append('public={}'.format(base64.b64encode(key.public).decode('ascii')))
    return '\n'.join(lines) + '\n'


def _decode_line(line, number, expected_name):
    name, sep, value = line.partition('=')
    if not sep or name != expected_name:
        raise KeyFileError('expected "{}=…", got "{}"'.format(expected_name, line), line=number)
    return value


def _decode_base64(value, number):
    try:
        return base64.b64decode(value.encode('ascii'), validate=True)
    except (binascii.Error, UnicodeEncodeError):
        raise KeyFileError('invalid base64 payload', line=number)


def parse_key(text):
    """Parse the key file format, rejecting anything beyond the two or three expected lines
    """
    if not text.endswith('\n'):
        raise KeyFileError('missing trailing newline')
    lines = text[:-1].split('\n')
    if not 2 <= len(lines) <= 3:
        raise KeyFileError('expected 2 or 3 lines, got {}'.format(len(lines)))

    try:
        scheme = SchemeId(_decode_line(lines[0], 1, 'scheme'))
    except ValueError:
        raise KeyFileError('unknown scheme', line=1)
    secret = _decode_base64(_decode_line(lines[1], 2, 'secret'), 2)
    public = b''
    if len(lines) == 3:
        public = _decode_base64(_decode_line(lines[2], 3, 'public'), 3)

    try:
        return KeyMaterial(scheme=scheme, secret=secret, public=public)
    except InvalidKeyError as e:
        raise KeyFileError(str(e))


def write_key_file(key, path):
    with open(path, 'w', encoding='ascii', newline='\n') as f:
        f.write(dump_key(key))
    logger.info('Wrote {} key file "{}"'.format(key.scheme.value, path))


def read_key_file(path):
    with open(path, 'r', encoding='ascii', newline='') as f:
        return parse_key(f.read())
