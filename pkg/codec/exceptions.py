class CodecException(Exception):
    pass


class InvalidCoordinatesError(CodecException):
    pass


class InvalidSerialError(CodecException):
    pass


class SchemeMismatchError(CodecException):
    pass


class MalformedMessageError(CodecException):
    pass


class MalformedCellError(CodecException):
    pass
