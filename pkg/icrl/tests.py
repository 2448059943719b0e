import os
import random
import tempfile

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase
from hypothesis import given, settings
from hypothesis import strategies as st

from icrl.exceptions import AllocatorExhaustedError, IcrlException, IcrlFileError, UnallocatedSerialError
from icrl.revocation import MAX_SERIAL, Icrl, SerialBlock


def random_icrl(rng):
    icrl = Icrl()
    icrl.allocate(rng.randint(1, 500))
    picks = [rng.randrange(1, icrl.next_serial) for _ in range(rng.randint(0, 40))]
    icrl.revoke(picks)
    return icrl


class AllocateTestCase(SimpleTestCase):
    def test_fresh_allocation(self):
        """Test if a fresh list hands out 1, 2, 3 and continues with 4
        """
        icrl = Icrl()
        self.assertEqual(icrl.allocate(3), [1, 2, 3])
        self.assertEqual(icrl.allocate(1), [4])
        self.assertEqual(icrl.next_serial, 5)

    def test_uniqueness(self):
        """Test if a million allocations never repeat a serial
        """
        icrl = Icrl()
        seen = set()
        for _ in range(10 ** 6):
            seen.add(icrl.allocate(1)[0])
        self.assertEqual(len(seen), 10 ** 6)

    def test_exhaustion(self):
        """Test if the allocator refuses to overflow 64 bits
        """
        icrl = Icrl(next_serial=MAX_SERIAL)
        self.assertEqual(icrl.allocate(1), [MAX_SERIAL])
        with self.assertRaises(AllocatorExhaustedError):
            icrl.allocate(1)

    def test_count_must_be_positive(self):
        """Test if zero serials cannot be allocated
        """
        with self.assertRaises(IcrlException):
            Icrl().allocate(0)

    def test_block_split(self):
        """Test if a block splits into consecutive sub-blocks
        """
        block = Icrl().allocate_block(10)
        first, second = block.split([4, 6])
        self.assertEqual(list(first), [1, 2, 3, 4])
        self.assertEqual(second, SerialBlock(5, 6))
        with self.assertRaises(IcrlException):
            block.split([4, 5])


class RevokeTestCase(SimpleTestCase):
    def setUp(self):
        self.icrl = Icrl()
        self.icrl.allocate(3)

    def test_revoke(self):
        """Test if a revoked serial becomes invalid
        """
        self.icrl.revoke([2])
        self.assertFalse(self.icrl.is_valid(2))
        self.assertTrue(self.icrl.is_valid(1))
        self.assertTrue(self.icrl.is_valid(3))

    def test_idempotent(self):
        """Test if revoking twice yields the same state
        """
        self.icrl.revoke([2])
        once = self.icrl.dumps()
        self.icrl.revoke([2])
        self.assertEqual(self.icrl.dumps(), once)

    def test_unallocated(self):
        """Test if revoking a serial beyond the watermark is an error
        """
        with self.assertRaises(UnallocatedSerialError):
            self.icrl.revoke([7])
        with self.assertRaises(UnallocatedSerialError):
            self.icrl.revoke([0])

    def test_validity_brute_force(self):
        """Test is_valid for every serial up to twice the watermark
        """
        icrl = Icrl()
        icrl.allocate(20)
        revoked = {2, 3, 4, 8, 13, 20}
        icrl.revoke(revoked)
        snapshot = icrl.snapshot()
        for serial in range(0, 2 * icrl.next_serial):
            expected = 1 <= serial < icrl.next_serial and serial not in revoked
            self.assertEqual(icrl.is_valid(serial), expected, serial)
            self.assertEqual(snapshot.is_valid(serial), expected, serial)

    def test_snapshot_is_isolated(self):
        """Test if later revocations do not leak into an earlier snapshot
        """
        snapshot = self.icrl.snapshot()
        self.icrl.revoke([1])
        self.assertTrue(snapshot.is_valid(1))
        self.assertFalse(self.icrl.is_valid(1))


class IcrlFileTestCase(SimpleTestCase):
    def test_empty_state(self):
        """Test if a fresh list serializes to the watermark line only
        """
        self.assertEqual(Icrl().dumps(), 'next=1\n')

    def test_ranges(self):
        """Test the canonical range lines
        """
        icrl = Icrl()
        icrl.allocate(9)
        icrl.revoke([8, 2, 3, 4])
        self.assertEqual(icrl.dumps(), 'next=10\nrevoked=2-4\nrevoked=8\n')
        self.assertEqual(Icrl.loads(icrl.dumps()), icrl)

    def test_duplicate_next(self):
        """Test if a second watermark line is rejected with its line number
        """
        with self.assertRaises(IcrlFileError) as cm:
            Icrl.loads('next=10\nrevoked=2\nnext=11\n')
        self.assertEqual(cm.exception.line, 3)

    def test_malformed(self):
        """Test if broken lines are rejected
        """
        for text in ('', 'next=10', 'revoked=1\n', 'next=10\nrevoked=4-2\n', 'next=10\nrevoked=12\n',
                     'next=10\nrevoked=5\nrevoked=3\n', 'next=10\nrevoked=2-5\nrevoked=4\n', 'next=0\n',
                     'next=10\nrevoked=0\n', 'next=010\n', 'next=10\n\n'):
            with self.assertRaises(IcrlFileError, msg=repr(text)):
                Icrl.loads(text)

    def test_adjacent_ranges_merge(self):
        """Test if adjacent ranges are merged on load
        """
        self.assertEqual(Icrl.loads('next=10\nrevoked=2\nrevoked=3-4\n').dumps(), 'next=10\nrevoked=2-4\n')

    def test_randomized_round_trip(self):
        """Test save and load over a thousand random states
        """
        rng = random.Random(17)
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'icrl.txt')
            for _ in range(1000):
                icrl = random_icrl(rng)
                icrl.save(path)
                self.assertEqual(Icrl.load(path), icrl)
                with open(path) as f:
                    self.assertEqual(f.read(), icrl.dumps())

    @given(st.integers(min_value=1, max_value=10 ** 6), st.lists(st.integers(min_value=1, max_value=10 ** 6)))
    @settings(max_examples=200, deadline=None)
    def test_round_trip_property(self, allocated, picks):
        """Test if loads inverts dumps for arbitrary revocations
        """
        icrl = Icrl()
        icrl.allocate_block(allocated)
        icrl.revoke(pick for pick in picks if pick <= allocated)
        self.assertEqual(Icrl.loads(icrl.dumps()), icrl)


class RevokeCommandTestCase(SimpleTestCase):
    def test_revoke_command(self):
        """Test if the command revokes single serials and ranges
        """
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'icrl.txt')
            Icrl(next_serial=10).save(path)
            call_command('icdb_revoke', '2-4', '8', icrl=path, stdout=open(os.devnull, 'w'))
            self.assertEqual(Icrl.load(path).dumps(), 'next=10\nrevoked=2-4\nrevoked=8\n')

    def test_revoke_command_unallocated(self):
        """Test if revoking beyond the watermark fails as a usage error
        """
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'icrl.txt')
            Icrl(next_serial=3).save(path)
            with self.assertRaises(CommandError):
                call_command('icdb_revoke', '7', icrl=path, stdout=open(os.devnull, 'w'))
