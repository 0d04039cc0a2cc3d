"""Exception hierarchy.

Every error carries a ``category`` used by the command line to pick an exit
code and to print a machine-readable tag.
"""


class BestQuoteError(Exception):
    category = "error"


class ParameterError(BestQuoteError, ValueError):
    category = "parameter"


class InfeasibleBalanceError(ParameterError):
    """Share inflow at a limit does not exceed the non-cancellation outflow."""


class NoKillingError(ParameterError):
    """Aggressive flows are both zero, so the best quote is never reset."""


class ConfigurationError(ParameterError):
    pass


class ConvergenceError(BestQuoteError, ArithmeticError):
    category = "convergence"


class CFDivergenceError(ConvergenceError):
    def __init__(self, message, partial_value=None, iterations=0):
        super().__init__(message)
        self.partial_value = partial_value
        self.iterations = iterations


class IntegrationError(ConvergenceError):
    pass


class NumericInstabilityError(ConvergenceError):
    pass


class TruncationError(BestQuoteError):
    category = "truncation"


class EmptyDistributionError(BestQuoteError, ValueError):
    category = "parameter"


class AlignmentError(BestQuoteError, ValueError):
    category = "parameter"


class ParseError(BestQuoteError, ValueError):
    category = "io"

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class OrderingError(ParseError):
    pass


class EmptyInputError(ParseError):
    pass
