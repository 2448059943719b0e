import logging
import time
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

from codec.cells import decode_field_cell
from codec.codes import DEFAULT_OPTIONS
from rewrite.parser import parse
from rewrite.rewriter import plan_delete, plan_insert, rewrite_select
from rewrite.schema import Model
from store.connectors import ResultSet
from verification.engine import verify_parallel
from verification.exceptions import IntegrityFailure
from verification.report import VerificationReport

logger = logging.getLogger(__name__)


def _ms(started):
    return (time.perf_counter() - started) * 1000


@dataclass
class QueryOutcome:
    kind: str
    plan: object
    result: ResultSet = field(default_factory=ResultSet)
    report: VerificationReport = field(default_factory=VerificationReport)
    timings: Dict[str, float] = field(default_factory=dict)
    revoked: Tuple[int, ...] = ()
    rowcount: int = 0
    second_result: Optional[ResultSet] = None

    @property
    def is_valid(self):
        return self.report.is_valid


class QueryRunner:
    """Rewrites a statement, runs it through a connector and verifies what comes back

    catalog must be converted to the model. DELETE and INSERT change the
    ICRL, the caller saves it.
    """

    def __init__(self, connector, catalog, model, key, icrl, options=DEFAULT_OPTIONS, workers=1,
                 salt_source=None):
        self.connector = connector
        self.catalog = catalog
        self.model = Model.parse(model)
        self.key = key
        self.icrl = icrl
        self.options = options
        self.workers = workers
        self.salt_source = salt_source

    @property
    def table_keys(self):
        return {table.table_name: [column.name for column in table.key_columns] for table in self.catalog}

    def run(self, sql):
        query = parse(sql)
        if query.kind == 'DELETE':
            return self.run_delete(query)
        if query.kind == 'INSERT':
            return self.run_insert(query)
        return self.run_select(query)

    def _fetch_and_verify(self, plan, timings):
        started = time.perf_counter()
        result = self.connector.execute(plan.icdb_sql)
        second = None
        if plan.second_fetch_sql:
            second = self.connector.execute(plan.second_fetch_sql)
        timings['fetch_ms'] = _ms(started)

        report = verify_parallel(
            result.rows, plan, self.key, self.icrl.snapshot(), self.workers, self.options,
            second_rows=second.rows if second else None, table_keys=self.table_keys,
        )
        timings['verify_ms'] = report.timings['verify_ms']
        report.timings['fetch_ms'] = timings['fetch_ms']
        return result, second, report

    def run_select(self, query):
        timings = {}
        started = time.perf_counter()
        plan = rewrite_select(query, self.catalog, self.model, self.key.scheme)
        timings['rewrite_ms'] = _ms(started)

        result, second, report = self._fetch_and_verify(plan, timings)
        logger.info('SELECT returned {} row(s), {}'.format(len(result.rows), 'valid' if report.is_valid
                                                            else 'INVALID'))
        return QueryOutcome('SELECT', plan, result, report, timings, rowcount=len(result.rows),
                            second_result=second)

    def _serials(self, plan, rows):
        serials = set()
        for row in rows:
            if plan.model is Model.OCF:
                serials.update(decode_field_cell(row[index], self.key.scheme).serial for index in plan.serial_indexes)
            else:
                serials.update(int(row[index]) for index in plan.serial_indexes)
        return sorted(serials)

    def run_delete(self, query):
        """Verify the rows about to go, delete them and revoke exactly their serials

        Raises IntegrityFailure without deleting anything when the rows do not verify.
        """
        timings = {}
        started = time.perf_counter()
        plan = plan_delete(query, self.catalog, self.model)
        timings['rewrite_ms'] = _ms(started)

        result, _, report = self._fetch_and_verify(plan, timings)
        if not report.is_valid:
            raise IntegrityFailure(report)

        started = time.perf_counter()
        deleted = self.connector.execute(plan.statement_sql)
        timings['execute_ms'] = _ms(started)

        started = time.perf_counter()
        serials = self._serials(plan, result.rows)
        if serials:
            self.icrl.revoke(serials)
        timings['revoke_ms'] = _ms(started)
        logger.info('Deleted {} row(s), revoked {} serial(s)'.format(deleted.rowcount, len(serials)))
        return QueryOutcome('DELETE', plan, result, report, timings, revoked=tuple(serials),
                            rowcount=deleted.rowcount)

    def run_insert(self, query):
        timings = {}
        started = time.perf_counter()
        plan = plan_insert(query, self.catalog, self.model, self.key, self.icrl, self.options, self.salt_source)
        timings['convert_ms'] = _ms(started)

        started = time.perf_counter()
        inserted = self.connector.execute(plan.icdb_sql)
        timings['execute_ms'] = _ms(started)
        return QueryOutcome('INSERT', plan, timings=timings, rowcount=inserted.rowcount)
