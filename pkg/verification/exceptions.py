class VerificationException(Exception):
    pass


class WorkerCountError(VerificationException):
    pass


class IntegrityFailure(VerificationException):
    """A DELETE was refused because the rows it would remove did not verify
    """
    def __init__(self, report):
        self.report = report
        super().__init__('{} of {} checks failed'.format(len(report.failures), report.total))
