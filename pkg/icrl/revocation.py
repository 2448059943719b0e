import bisect
import logging
import os
import re
import tempfile
from dataclasses import dataclass
from typing import Tuple

from icrl.exceptions import AllocatorExhaustedError, IcrlException, IcrlFileError, UnallocatedSerialError

logger = logging.getLogger(__name__)

MAX_SERIAL = 2 ** 64 - 1

_NUMBER = r'(0|[1-9][0-9]*)'
_NEXT_LINE = re.compile(r'^next={}$'.format(_NUMBER))
_REVOKED_LINE = re.compile(r'^revoked={}(?:-{})?$'.format(_NUMBER, _NUMBER))


def merge_ranges(ranges):
    """Sort inclusive (first, last) ranges and merge overlapping or adjacent ones
    """
    merged = []
    for first, last in sorted(ranges):
        if merged and first <= merged[-1][1] + 1:
            if last > merged[-1][1]:
                merged[-1][1] = last
        else:
            merged.append([first, last])
    return [(first, last) for first, last in merged]


def ranges_of(serials):
    """Collapse serial numbers into inclusive ranges
    """
    return merge_ranges((serial, serial) for serial in set(serials))


@dataclass(frozen=True)
class SerialBlock:
    """A contiguous range of serials handed out in one allocation
    """
    first: int
    count: int

    @property
    def last(self):
        return self.first + self.count - 1

    def __len__(self):
        return self.count

    def __iter__(self):
        return iter(range(self.first, self.first + self.count))

    def split(self, sizes):
        """Cut the block into consecutive sub-blocks, e.g. one per table
        """
        if sum(sizes) != self.count:
            raise IcrlException('Sub-block sizes {} do not add up to {}'.format(sum(sizes), self.count))
        blocks = []
        first = self.first
        for size in sizes:
            blocks.append(SerialBlock(first, size))
            first += size
        return blocks


@dataclass(frozen=True)
class IcrlSnapshot:
    """Immutable view of the revocation list for one verification batch
    """
    next_serial: int
    firsts: Tuple[int, ...]
    lasts: Tuple[int, ...]

    def is_valid(self, serial):
        if not 1 <= serial < self.next_serial:
            return False
        i = bisect.bisect_right(self.firsts, serial) - 1
        return i < 0 or serial > self.lasts[i]


class Icrl:
    """Serial allocator and revoked-serial registry

    A serial is valid when it was allocated (1 <= s < next_serial) and has not
    been revoked. Revoked serials are kept as sorted, merged inclusive ranges.
    Allocation and revocation need exclusive access; readers take a snapshot.
    """

    def __init__(self, next_serial=1, revoked=()):
        if not 1 <= next_serial <= MAX_SERIAL + 1:
            raise IcrlException('Watermark {} is outside 1..2^64'.format(next_serial))
        self._next_serial = next_serial
        self._ranges = merge_ranges(revoked)
        if self._ranges and (self._ranges[0][0] < 1 or self._ranges[-1][1] >= next_serial):
            raise UnallocatedSerialError('Revoked serials must lie within [1, {})'.format(next_serial))

    def __eq__(self, other):
        if not isinstance(other, Icrl):
            return NotImplemented
        return self._next_serial == other._next_serial and self._ranges == other._ranges

    def __repr__(self):
        return '<Icrl next={} revoked={}>'.format(self._next_serial, self.revoked_count)

    @property
    def next_serial(self):
        return self._next_serial

    @property
    def ranges(self):
        return list(self._ranges)

    @property
    def revoked_count(self):
        return sum(last - first + 1 for first, last in self._ranges)

    def allocate_block(self, n):
        if n < 1:
            raise IcrlException('Cannot allocate {} serials'.format(n))
        if self._next_serial + n - 1 > MAX_SERIAL:
            raise AllocatorExhaustedError('Serial space exhausted at {}'.format(self._next_serial))
        block = SerialBlock(self._next_serial, n)
        self._next_serial += n
        logger.debug('Allocated serials {}-{}'.format(block.first, block.last))
        return block

    def allocate(self, n):
        return list(self.allocate_block(n))

    def revoke(self, serials):
        serials = list(serials)
        if not serials:
            return
        for serial in serials:
            if not 1 <= serial < self._next_serial:
                raise UnallocatedSerialError('Serial {} has not been allocated (next is {})'.format(
                    serial, self._next_serial
                ))
        self.revoke_ranges(ranges_of(serials))

    def revoke_ranges(self, ranges):
        ranges = list(ranges)
        for first, last in ranges:
            if first > last or first < 1 or last >= self._next_serial:
                raise UnallocatedSerialError('Range {}-{} has not been allocated'.format(first, last))
        self._ranges = merge_ranges(self._ranges + list(ranges))
        logger.info('Revoked {} serial range(s), {} serials revoked in total'.format(
            len(ranges), self.revoked_count
        ))

    def is_valid(self, serial):
        if not 1 <= serial < self._next_serial:
            return False
        i = bisect.bisect_right(self._ranges, (serial, MAX_SERIAL + 1)) - 1
        return i < 0 or serial > self._ranges[i][1]

    def snapshot(self):
        return IcrlSnapshot(
            next_serial=self._next_serial,
            firsts=tuple(first for first, _ in self._ranges),
            lasts=tuple(last for _, last in self._ranges),
        )

    def dumps(self):
        lines = ['next={}'.format(self._next_serial)]
        for first, last in self._ranges:
            if first == last:
                lines.append('revoked={}'.format(first))
            else:
                lines.append('revoked={}-{}'.format(first, last))
        return '\n'.join(lines) + '\n'

    @classmethod
    def loads(cls, text):
        if not text.endswith('\n'):
            raise IcrlFileError('missing trailing newline')
        lines = text[:-1].split('\n')

        match = _NEXT_LINE.match(lines[0])
        if not match:
            raise IcrlFileError('expected "next=<serial>"', line=1)
        next_serial = int(match.group(1))
        if not 1 <= next_serial <= MAX_SERIAL + 1:
            raise IcrlFileError('watermark out of range', line=1)

        ranges = []
        for number, line in enumerate(lines[1:], start=2):
            if _NEXT_LINE.match(line):
                raise IcrlFileError('duplicate "next=" line', line=number)
            match = _REVOKED_LINE.match(line)
            if not match:
                raise IcrlFileError('expected "revoked=<a>" or "revoked=<a>-<b>"', line=number)
            first = int(match.group(1))
            last = int(match.group(2)) if match.group(2) is not None else first
            if first < 1 or first > last:
                raise IcrlFileError('invalid range {}-{}'.format(first, last), line=number)
            if last >= next_serial:
                raise IcrlFileError('serial {} was never allocated'.format(last), line=number)
            if ranges and first <= ranges[-1][1]:
                raise IcrlFileError('ranges must be ascending and non-overlapping', line=number)
            ranges.append((first, last))

        return cls(next_serial=next_serial, revoked=ranges)

    def save(self, path):
        """Write the canonical file form, replacing the target atomically
        """
        directory = os.path.dirname(os.path.abspath(path))
        with tempfile.NamedTemporaryFile('w', dir=directory, delete=False, encoding='ascii', newline='\n') as f:
            f.write(self.dumps())
        os.replace(f.name, path)
        logger.info('Saved ICRL "{}" (next={}, {} revoked)'.format(path, self._next_serial, self.revoked_count))

    @classmethod
    def load(cls, path):
        with open(path, 'r', encoding='ascii', newline='') as f:
            return cls.loads(f.read())

    @classmethod
    def load_or_create(cls, path):
        if os.path.exists(path):
            return cls.load(path)
        logger.info('ICRL "{}" does not exist yet, starting a fresh one'.format(path))
        return cls()
