import json
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from codec.codes import VerdictStatus


@dataclass(frozen=True)
class Failure:
    """A check that did not come out VALID

    row is the result row, column the result position of the checked code
    cell. attribute is None for tuple checks; attributes lists the changed
    attributes when an AES tuple code could tell.
    """
    row: int
    column: int
    table: str
    attribute: Optional[str]
    entity: Tuple[Optional[str], ...]
    status: VerdictStatus
    detail: str = ''
    attributes: Optional[Tuple[str, ...]] = None

    @property
    def sort_key(self):
        return self.row, self.column

    def coordinate(self):
        entity = ','.join('NULL' if part is None else part for part in self.entity)
        if self.attribute is None:
            return '{}[{}]'.format(self.table, entity)
        return '{}.{}[{}]'.format(self.table, self.attribute, entity)

    def to_dict(self):
        return {
            'row': self.row,
            'column': self.column,
            'table': self.table,
            'attribute': self.attribute,
            'entity': list(self.entity),
            'status': self.status.value,
            'detail': self.detail,
            'attributes': list(self.attributes) if self.attributes is not None else None,
        }


@dataclass
class VerificationReport:
    total: int = 0
    counts: Dict[VerdictStatus, int] = field(default_factory=lambda: {status: 0 for status in VerdictStatus})
    failures: List[Failure] = field(default_factory=list)
    timings: Dict[str, float] = field(default_factory=dict)

    @property
    def is_valid(self):
        return not self.failures

    def add(self, status, failure=None):
        self.total += 1
        self.counts[status] += 1
        if failure is not None:
            self.failures.append(failure)

    def finish(self):
        self.failures.sort(key=lambda failure: failure.sort_key)
        return self

    @classmethod
    def merge(cls, reports):
        merged = cls()
        for report in reports:
            merged.total += report.total
            for status, count in report.counts.items():
                merged.counts[status] += count
            merged.failures.extend(report.failures)
            for name, value in report.timings.items():
                merged.timings[name] = merged.timings.get(name, 0.0) + value
        return merged.finish()

    def summary(self):
        return {
            'total': self.total,
            'valid': self.counts[VerdictStatus.VALID],
            'forged': self.counts[VerdictStatus.FORGED],
            'stale': self.counts[VerdictStatus.STALE],
            'structural': self.counts[VerdictStatus.STRUCTURAL],
        }

    def to_dict(self, with_timings=True):
        data = self.summary()
        data['failures'] = [failure.to_dict() for failure in self.failures]
        if with_timings:
            data['timings'] = {
                'fetch_ms': round(self.timings.get('fetch_ms', 0.0), 3),
                'verify_ms': round(self.timings.get('verify_ms', 0.0), 3),
            }
        return data

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)

    def canonical(self):
        """Timing free serialization, identical for identical verification outcomes
        """
        return json.dumps(self.to_dict(with_timings=False), sort_keys=True, separators=(',', ':'))

    def to_text(self):
        lines = ['{} {} checks: {} valid, {} forged, {} stale, {} structural'.format(
            'VALID' if self.is_valid else 'INVALID', self.total, *list(self.summary().values())[1:]
        )]
        for failure in self.failures:
            line = 'row {} {} {}'.format(failure.row, failure.coordinate(), failure.status.value)
            if failure.attributes:
                line += ' ({})'.format(', '.join(failure.attributes))
            if failure.detail:
                line += ': {}'.format(failure.detail)
            lines.append(line)
        lines.append('fetch {:.3f} ms, verify {:.3f} ms'.format(
            self.timings.get('fetch_ms', 0.0), self.timings.get('verify_ms', 0.0)
        ))
        return '\n'.join(lines)
