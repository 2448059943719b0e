class ConversionException(Exception):
    pass


class DataFileError(ConversionException):
    def __init__(self, message, row=None):
        self.row = row
        if row is not None:
            message = 'row {}: {}'.format(row, message)
        super().__init__(message)


class ArityError(DataFileError):
    pass
