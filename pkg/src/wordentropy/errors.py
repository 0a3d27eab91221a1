class WordEntropyError(Exception):
    """Base class for errors raised by this package."""


class ValidationError(WordEntropyError, ValueError):
    """Bad input: malformed files, invalid configuration, broken invariants."""


class UnknownTokenError(WordEntropyError, LookupError):
    pass


class DegenerateDistributionError(WordEntropyError, ValueError):
    pass


class MalformedWordError(ValidationError):
    pass


class TractabilityError(WordEntropyError):
    pass


class SchemaError(ValidationError):
    pass


class DegenerateFitError(WordEntropyError, ArithmeticError):
    pass


class CollinearityError(WordEntropyError, ArithmeticError):
    def __init__(self, message, columns=()):
        super().__init__(message)
        self.columns = tuple(columns)
