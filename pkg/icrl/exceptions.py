class IcrlException(Exception):
    pass


class AllocatorExhaustedError(IcrlException):
    pass


class UnallocatedSerialError(IcrlException):
    """A serial beyond the allocator watermark was revoked or used
    """
    pass


class IcrlFileError(IcrlException):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = 'line {}: {}'.format(line, message)
        super().__init__(message)
