"""Code emission and checking for the three integrity code schemes

RSA_SIGN    PKCS#1 v1.5 signature over SHA-256 of the message (deterministic)
PBKDF2_MAC  24-byte salt followed by PBKDF2-HMAC-SHA1(secret + message, salt), 24 bytes
AES_CIPHER  ECB encryption of the PKCS#7 padded message
"""
import hashlib
import logging
import math
from dataclasses import dataclass

from Crypto.Cipher import AES
from Crypto.Hash import SHA256
from Crypto.Random import get_random_bytes
from Crypto.Signature import pkcs1_15
from Crypto.Util.Padding import pad, unpad
from django.utils.crypto import constant_time_compare, pbkdf2

from schemes.exceptions import (
    EmptyMessageError, InvalidSaltError, MalformedCodeError, OversizeMessageError, UnsupportedOperationError,
)
from schemes.keys import SchemeId

logger = logging.getLogger(__name__)

SALT_BYTES = 24
MAC_BYTES = 24


@dataclass(frozen=True)
class SchemeOptions:
    pbkdf2_iterations: int = 10
    max_message_bytes: int = 1024 * 1024

    @classmethod
    def from_settings(cls):
        from django.conf import settings

        return cls(
            pbkdf2_iterations=settings.ICDB_PBKDF2_ITERATIONS,
            max_message_bytes=settings.ICDB_MAX_MESSAGE_BYTES,
        )


DEFAULT_OPTIONS = SchemeOptions()


def code_length(key, message_length):
    """Length law of the emitted code for a message of the given size
    """
    if key.scheme is SchemeId.RSA_SIGN:
        return key.rsa_private.size_in_bytes()
    if key.scheme is SchemeId.PBKDF2_MAC:
        return SALT_BYTES + MAC_BYTES
    return math.ceil((message_length + 1) / AES.block_size) * AES.block_size


def _check_message(message, options):
    if not message:
        raise EmptyMessageError('Cannot emit an integrity code for an empty message')
    if len(message) > options.max_message_bytes:
        raise OversizeMessageError('Message of {} bytes exceeds the maximum of {} bytes'.format(
            len(message), options.max_message_bytes
        ))


def _mac(key, message, salt, options):
    return pbkdf2(key.secret + message, salt, options.pbkdf2_iterations, dklen=MAC_BYTES, digest=hashlib.sha1)


def emit_code(key, message, salt=None, options=DEFAULT_OPTIONS):
    _check_message(message, options)

    if key.scheme is SchemeId.RSA_SIGN:
        return pkcs1_15.new(key.rsa_private).sign(SHA256.new(message))

    if key.scheme is SchemeId.PBKDF2_MAC:
        if salt is None:
            salt = get_random_bytes(SALT_BYTES)
        if len(salt) != SALT_BYTES:
            raise InvalidSaltError('PBKDF2 salt must be {} bytes, got {}'.format(SALT_BYTES, len(salt)))
        return salt + _mac(key, message, salt, options)

    return AES.new(key.secret, AES.MODE_ECB).encrypt(pad(message, AES.block_size))


def check_structure(key, code):
    """Raise MalformedCodeError unless the code length is plausible for the key
    """
    if key.scheme is SchemeId.AES_CIPHER:
        if not code or len(code) % AES.block_size:
            raise MalformedCodeError('AES code length {} is not a positive multiple of {}'.format(
                len(code), AES.block_size
            ))
        return
    expected = code_length(key, 0)
    if len(code) != expected:
        raise MalformedCodeError('{} code must be {} bytes, got {}'.format(key.scheme.value, expected, len(code)))


def check_code(key, message, code, options=DEFAULT_OPTIONS):
    check_structure(key, code)
    if not message or len(message) > options.max_message_bytes:
        return False

    if key.scheme is SchemeId.RSA_SIGN:
        try:
            pkcs1_15.new(key.rsa_public).verify(SHA256.new(message), code)
        except (ValueError, TypeError):
            return False
        return True

    if key.scheme is SchemeId.PBKDF2_MAC:
        salt, mac = code[:SALT_BYTES], code[SALT_BYTES:]
        return constant_time_compare(mac, _mac(key, message, salt, options))

    try:
        plaintext = _decrypt(key, code)
    except MalformedCodeError:
        return False
    return constant_time_compare(plaintext, message)


def _decrypt(key, code):
    try:
        return unpad(AES.new(key.secret, AES.MODE_ECB).decrypt(code), AES.block_size)
    except ValueError:
        raise MalformedCodeError('AES code does not decrypt to a padded message')


def recover_plaintext(key, code):
    """Invert an AES code; signatures and MACs cannot be inverted
    """
    if key.scheme is not SchemeId.AES_CIPHER:
        raise UnsupportedOperationError('{} codes cannot be decrypted'.format(key.scheme.value))
    check_structure(key, code)
    return _decrypt(key, code)
