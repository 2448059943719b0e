class SchemeException(Exception):
    pass


class UnsupportedSchemeError(SchemeException):
    pass


class InvalidKeyError(SchemeException):
    pass


class KeyFileError(SchemeException):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = 'line {}: {}'.format(line, message)
        super().__init__(message)


class OversizeMessageError(SchemeException):
    pass


class EmptyMessageError(SchemeException):
    pass


class MalformedCodeError(SchemeException):
    """The code cannot have been produced by the scheme (length or padding), as opposed to a mismatch
    """
    pass


class UnsupportedOperationError(SchemeException):
    pass


class InvalidSaltError(SchemeException):
    pass
