"""Exception hierarchy shared by the flametemp modules."""


class FlameTempError(Exception):
    """Base class for all library errors."""


class ParseError(FlameTempError):
    def __init__(self, message, line_number=None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class DuplicateSpecies(ParseError):
    pass


class SerializeError(FlameTempError):
    pass


class PatchError(FlameTempError):
    pass


class DomainError(FlameTempError, ValueError):
    pass


class UnknownSpecies(FlameTempError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class UnsupportedFuel(FlameTempError):
    pass


class RichMixtureError(FlameTempError):
    pass


class NoBracket(FlameTempError):
    pass


class NoConvergence(FlameTempError):
    def __init__(self, message, **diagnostics):
        self.diagnostics = diagnostics
        super().__init__(message)


class SingularSystem(FlameTempError):
    def __init__(self, message, elements=()):
        self.elements = tuple(elements)
        super().__init__(message)


class NoCandidates(FlameTempError):
    pass
