class StoreException(Exception):
    pass


class ConstraintViolationError(StoreException):
    """Duplicate or NULL primary key
    """
    pass


class UnknownRowError(StoreException):
    pass


class ExecutionError(StoreException):
    """The backend rejected or failed to run a statement
    """
    pass
