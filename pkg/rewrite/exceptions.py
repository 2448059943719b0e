class RewriteException(Exception):
    pass


class SqlSyntaxError(RewriteException):
    def __init__(self, message, offset=None):
        self.offset = offset
        if offset is not None:
            message = '{} (at byte {})'.format(message, offset)
        super().__init__(message)


class UnsupportedConstructError(SqlSyntaxError):
    pass


class SchemaFileError(RewriteException):
    pass


class UnknownTableError(RewriteException):
    pass


class UnknownColumnError(RewriteException):
    pass


class AmbiguousColumnError(RewriteException):
    pass


class SchemaMismatchError(RewriteException):
    """The schema does not have the layout the requested model needs
    """
    pass


class MissingKeyError(RewriteException):
    pass
