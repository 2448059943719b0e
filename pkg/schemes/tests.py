import os
import random
import tempfile

from Crypto.Cipher import AES
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase
from hypothesis import given, settings
from hypothesis.strategies import binary

from schemes.exceptions import (
    InvalidKeyError, InvalidSaltError, KeyFileError, MalformedCodeError, OversizeMessageError,
    UnsupportedOperationError, UnsupportedSchemeError,
)
from schemes.keys import KeyMaterial, SchemeId, dump_key, generate_keys, parse_key, read_key_file
from schemes.primitives import SchemeOptions, check_code, code_length, emit_code, recover_plaintext
from schemes.sample_keys import all_sample_keys, sample_key


def flip_bit(data, bit):
    data = bytearray(data)
    data[bit // 8] ^= 1 << (bit % 8)
    return bytes(data)


class KeyGenerationTestCase(SimpleTestCase):
    def test_rsa_modulus_length(self):
        """Test if seeded RSA key generation produces a 1024-bit modulus
        """
        self.assertEqual(sample_key('rsa').modulus_bits, 1024)

    def test_mac_secret_length(self):
        """Test if the MAC secret is 24 bytes long
        """
        self.assertEqual(len(sample_key('pbkdf2').secret), 24)

    def test_seeded_keys_are_reproducible(self):
        """Test if the same seed yields the same key material
        """
        self.assertEqual(generate_keys(SchemeId.AES_CIPHER, rng_seed=7), generate_keys(SchemeId.AES_CIPHER, rng_seed=7))
        self.assertNotEqual(generate_keys(SchemeId.AES_CIPHER, rng_seed=7).secret,
                            generate_keys(SchemeId.AES_CIPHER, rng_seed=8).secret)

    def test_unsupported_scheme(self):
        """Test if an unknown scheme id is rejected
        """
        with self.assertRaises(UnsupportedSchemeError):
            generate_keys('ROT13')

    def test_zero_length_key(self):
        """Test if zero-length keys are rejected
        """
        with self.assertRaises(InvalidKeyError):
            KeyMaterial(scheme=SchemeId.PBKDF2_MAC, secret=b'')

    def test_short_rsa_modulus(self):
        """Test if RSA moduli below 1024 bits are refused
        """
        with self.assertRaises(InvalidKeyError):
            generate_keys('rsa', rng_seed=1, rsa_bits=512)


class KeyFileTestCase(SimpleTestCase):
    def test_round_trip(self):
        """Test if every scheme's key survives dump and parse bit-exactly
        """
        for key in all_sample_keys():
            text = dump_key(key)
            self.assertEqual(parse_key(text), key)
            self.assertEqual(dump_key(parse_key(text)), text)

    def test_layout(self):
        """Test if the key file has the documented line layout
        """
        lines = dump_key(sample_key('rsa')).split('\n')
        self.assertEqual(lines[0], 'scheme=RSA_SIGN')
        self.assertTrue(lines[1].startswith('secret='))
        self.assertTrue(lines[2].startswith('public='))
        self.assertEqual(lines[3], '')
        self.assertEqual(len(dump_key(sample_key('aes')).split('\n')), 3)

    def test_randomized_round_trip(self):
        """Test if randomized MAC and AES keys round-trip through the file format
        """
        rng = random.Random(3)
        for _ in range(1000):
            if rng.random() < 0.5:
                key = KeyMaterial(scheme=SchemeId.PBKDF2_MAC, secret=rng.randbytes(rng.randint(1, 64)))
            else:
                key = KeyMaterial(scheme=SchemeId.AES_CIPHER, secret=rng.randbytes(rng.choice((16, 24, 32))))
            self.assertEqual(parse_key(dump_key(key)), key)

    def test_missing_trailing_newline(self):
        """Test if a key file without trailing newline is rejected
        """
        with self.assertRaises(KeyFileError):
            parse_key(dump_key(sample_key('aes'))[:-1])

    def test_extra_content(self):
        """Test if unexpected lines are rejected
        """
        text = dump_key(sample_key('pbkdf2')) + 'comment=hello\n'
        with self.assertRaises(KeyFileError):
            parse_key(text)
        with self.assertRaises(KeyFileError):
            parse_key('secret=AAAA\nscheme=AES_CIPHER\n')

    def test_bad_base64(self):
        """Test if a broken base64 payload names the offending line
        """
        with self.assertRaises(KeyFileError) as cm:
            parse_key('scheme=AES_CIPHER\nsecret=***\n')
        self.assertEqual(cm.exception.line, 2)

    def test_keygen_command(self):
        """Test if the keygen command writes a readable key file
        """
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'owner.key')
            call_command('icdb_keygen', scheme='pbkdf2', keys=path, seed=7, stdout=open(os.devnull, 'w'))
            self.assertEqual(read_key_file(path), sample_key('pbkdf2'))

    def test_keygen_command_unwritable(self):
        """Test if IO errors turn into usage errors
        """
        with self.assertRaises(CommandError):
            call_command('icdb_keygen', scheme='aes', keys='/nonexistent/dir/owner.key',
                         stdout=open(os.devnull, 'w'), stderr=open(os.devnull, 'w'))


class EmitCodeTestCase(SimpleTestCase):
    def test_output_lengths(self):
        """Test the length law of every scheme
        """
        self.assertEqual(len(emit_code(sample_key('rsa'), b'Ben')), 128)
        self.assertEqual(len(emit_code(sample_key('pbkdf2'), b'Ben')), 48)
        self.assertEqual(len(emit_code(sample_key('aes'), b'x' * 20)), 32)

    def test_length_law_all_sizes(self):
        """Test the length law for message sizes 1..4096 (RSA sampled)
        """
        rng = random.Random(11)
        for key in all_sample_keys():
            sizes = range(1, 4097) if key.scheme is not SchemeId.RSA_SIGN else range(1, 4097, 97)
            for size in sizes:
                message = rng.randbytes(size)
                self.assertEqual(len(emit_code(key, message)), code_length(key, size))

    def test_aes_reference_vector(self):
        """Test AES against the FIPS-197 known answer and an independent ECB decryption
        """
        key = KeyMaterial(scheme=SchemeId.AES_CIPHER, secret=bytes.fromhex('000102030405060708090a0b0c0d0e0f'))
        plaintext = bytes.fromhex('00112233445566778899aabbccddeeff')
        code = emit_code(key, plaintext)
        self.assertEqual(code[:16].hex(), '69c4e0d86a7b0430d8cdb78070b4c55a')
        self.assertEqual(AES.new(key.secret, AES.MODE_ECB).decrypt(code)[:16], plaintext)

    def test_aes_round_trip(self):
        """Test if decrypting a 20-byte message's code returns the message
        """
        message = b'01234567890123456789'
        code = emit_code(sample_key('aes'), message)
        self.assertEqual(recover_plaintext(sample_key('aes'), code), message)

    def test_determinism(self):
        """Test if codes are pure functions of key, message and salt
        """
        salt = bytes(range(24))
        for key in all_sample_keys():
            self.assertEqual(emit_code(key, b'George', salt=salt), emit_code(key, b'George', salt=salt))

    def test_random_salt(self):
        """Test if PBKDF2 codes draw a fresh salt when none is given
        """
        key = sample_key('pbkdf2')
        self.assertNotEqual(emit_code(key, b'George'), emit_code(key, b'George'))

    def test_salt_length(self):
        """Test if a PBKDF2 salt of the wrong length is a scheme error
        """
        with self.assertRaises(InvalidSaltError):
            emit_code(sample_key('pbkdf2'), b'George', salt=bytes(16))

    def test_oversize(self):
        """Test if messages beyond the configured maximum are refused
        """
        options = SchemeOptions(max_message_bytes=16)
        with self.assertRaises(OversizeMessageError):
            emit_code(sample_key('aes'), b'x' * 17, options=options)

    def test_iteration_knob(self):
        """Test if the PBKDF2 iteration count changes the code
        """
        key = sample_key('pbkdf2')
        salt = bytes(24)
        self.assertNotEqual(emit_code(key, b'm', salt=salt),
                            emit_code(key, b'm', salt=salt, options=SchemeOptions(pbkdf2_iterations=11)))


class CheckCodeTestCase(SimpleTestCase):
    def test_round_trip(self):
        """Test if every scheme accepts its own code
        """
        for key in all_sample_keys():
            self.assertTrue(check_code(key, b'Smith', emit_code(key, b'Smith')))

    def test_message_bit_flips(self):
        """Test if every single-bit flip of a 16-byte message is rejected
        """
        message = bytes(range(16))
        for key in all_sample_keys():
            code = emit_code(key, message)
            for bit in range(128):
                self.assertFalse(check_code(key, flip_bit(message, bit), code))

    def test_code_bit_flips(self):
        """Test if every single-bit flip of the code is rejected or structurally invalid
        """
        message = bytes(range(16))
        for key in all_sample_keys():
            code = emit_code(key, message)
            for bit in range(len(code) * 8):
                try:
                    self.assertFalse(check_code(key, message, flip_bit(code, bit)))
                except MalformedCodeError:
                    pass

    def test_avalanche(self):
        """Test 1000 random single-bit message flips for false accepts
        """
        rng = random.Random(5)
        for key in all_sample_keys():
            for _ in range(1000 if key.scheme is not SchemeId.RSA_SIGN else 200):
                message = rng.randbytes(rng.randint(1, 64))
                code = emit_code(key, message)
                self.assertFalse(check_code(key, flip_bit(message, rng.randrange(len(message) * 8)), code))

    def test_malformed_length(self):
        """Test if implausible code lengths raise a structural error instead of returning False
        """
        for key in all_sample_keys():
            with self.assertRaises(MalformedCodeError):
                check_code(key, b'Smith', b'short')

    def test_salt_extracted_from_code(self):
        """Test if the PBKDF2 code equals a re-emission with its embedded salt
        """
        key = sample_key('pbkdf2')
        code = emit_code(key, b'Martinez')
        self.assertEqual(emit_code(key, b'Martinez', salt=code[:24]), code)

    @given(message=binary(min_size=1, max_size=512))
    @settings(max_examples=50, deadline=None)
    def test_check_accepts_exactly_own_code(self, message):
        """Test if AES and PBKDF2 accept every freshly emitted code
        """
        for scheme in ('aes', 'pbkdf2'):
            key = sample_key(scheme)
            self.assertTrue(check_code(key, message, emit_code(key, message)))


class RecoverPlaintextTestCase(SimpleTestCase):
    def test_inverse(self):
        """Test if recovery inverts emission
        """
        key = sample_key('aes')
        for message in (b'a', b'George|Smith', bytes(range(256))):
            self.assertEqual(recover_plaintext(key, emit_code(key, message)), message)

    def test_block_tamper(self):
        """Test if tampering one ciphertext block garbles exactly that plaintext block
        """
        key = sample_key('aes')
        message = b'A' * 16 + b'B' * 16 + b'C' * 5
        code = emit_code(key, message)
        tampered = code[:16] + flip_bit(code[16:32], 3) + code[32:]
        recovered = recover_plaintext(key, tampered)
        self.assertEqual(recovered[:16], message[:16])
        self.assertNotEqual(recovered[16:32], message[16:32])
        self.assertEqual(recovered[32:], message[32:])

    def test_unsupported_for_mac_and_signature(self):
        """Test if MAC and signature codes cannot be decrypted
        """
        for scheme in ('pbkdf2', 'rsa'):
            key = sample_key(scheme)
            with self.assertRaises(UnsupportedOperationError):
                recover_plaintext(key, emit_code(key, b'x'))
