"""Exception types raised across the package."""


class CGGMError(Exception):
    pass


class NonPositiveDefinite(CGGMError, ValueError):
    pass


class SingletonCluster(CGGMError, ValueError):
    pass


class CholeskyFailure(CGGMError, ArithmeticError):
    pass


class DimensionTooSmall(CGGMError, ValueError):
    pass


class IndivisibleK(CGGMError, ValueError):
    pass


class Infeasible(CGGMError, ArithmeticError):
    pass


class NotConverged(CGGMError, ArithmeticError):
    def __init__(self, message, iterations=None, max_violation=None):
        super().__init__(message)
        self.iterations = iterations
        self.max_violation = max_violation


class NonPositiveVariance(CGGMError, ArithmeticError):
    pass


class DomainError(CGGMError, ValueError):
    pass


class ParseError(CGGMError, ValueError):
    def __init__(self, message, line=None, column=None):
        loc = ""
        if line is not None:
            loc = f" (line {line}" + (f", column {column}" if column is not None else "") + ")"
        super().__init__(message + loc)
        self.line = line
        self.column = column


class NonRectangular(ParseError):
    pass


class EmptyGrid(CGGMError, ValueError):
    pass


class ConfigError(CGGMError, ValueError):
    pass
