import abc
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from django.db import DatabaseError, connections

from store.exceptions import ExecutionError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ResultSet:
    """Column names and text cells of a statement; None is SQL NULL
    """
    columns: Tuple[str, ...] = ()
    rows: List[Tuple[Optional[str], ...]] = field(default_factory=list)
    rowcount: int = 0


class Connector(abc.ABC):
    supports_load_data = False
    supports_alter = False

    @abc.abstractmethod
    def execute(self, sql):
        """Run one statement and return its ResultSet
        """


def _text(value):
    if value is None:
        return None
    if isinstance(value, bytes):
        return value.decode('utf-8')
    return str(value)


class DjangoConnector(Connector):
    """Runs statements on a database configured in DATABASES (the `icdb` alias for an external server)
    """
    supports_alter = True

    def __init__(self, alias):
        self.alias = alias

    @property
    def connection(self):
        return connections[self.alias]

    @property
    def supports_load_data(self):
        return self.connection.vendor == 'mysql'

    def execute(self, sql):
        logger.debug('Executing on "{}": {}'.format(self.alias, sql))
        try:
            with self.connection.cursor() as cursor:
                cursor.execute(sql)
                if cursor.description is None:
                    return ResultSet(rowcount=cursor.rowcount)
                columns = tuple(column[0] for column in cursor.description)
                rows = [tuple(_text(value) for value in row) for row in cursor.fetchall()]
        except DatabaseError as e:
            raise ExecutionError(str(e))
        return ResultSet(columns, rows, len(rows))
