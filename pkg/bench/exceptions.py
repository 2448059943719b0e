class BenchException(Exception):
    pass


class UnknownProfileError(BenchException):
    pass


class DatasetError(BenchException):
    pass


class ResultFileError(BenchException):
    """A result CSV file does not have the expected header or cells
    """
    pass
