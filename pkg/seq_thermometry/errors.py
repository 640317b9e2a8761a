""" Exception hierarchy for the thermometry library

Every error raised on purpose by this package derives from
:class:`ThermometryError` and carries the process exit code the command
line front end reports for it.
"""


class ThermometryError(Exception):
    exit_code = 3


class ConfigError(ThermometryError):
    """ Invalid configuration, command line argument or input file
    """
    exit_code = 2


class DomainError(ThermometryError, ValueError):
    """ Argument outside the domain of an operation
    """


class NumericalError(ThermometryError):
    """ A numerical procedure did not converge

    :param message: human readable description
    :param diagnostics: whatever the procedure knew when it gave up
    """
    def __init__(self, message: str, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics

    def __str__(self):
        if not self.diagnostics:
            return super().__str__()
        details = ', '.join('{}={}'.format(k, v) for k, v in sorted(self.diagnostics.items()))
        return '{} ({})'.format(super().__str__(), details)


class NotFoundError(ThermometryError):
    pass


class ModelViolationError(ThermometryError):
    pass


class DivergenceError(ThermometryError):
    pass


class DependencyError(ThermometryError):
    pass


class UnidentifiableError(ThermometryError):
    pass


class InsufficientDataError(ThermometryError):
    pass


class CapacityError(ThermometryError):
    exit_code = 4
