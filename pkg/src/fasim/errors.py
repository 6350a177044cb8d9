"""Exception hierarchy shared by every fasim module."""


class FASimError(Exception):
    """Base class for all errors raised by fasim."""


class ExpressionError(FASimError):
    pass


class UnboundVariable(ExpressionError):
    def __init__(self, name):
        super().__init__(f"unbound variable {name!r}")
        self.name = name


class DomainError(ExpressionError):
    pass


class DivideByZero(ExpressionError):
    pass


class ParseError(FASimError):
    """Raised for malformed expressions or model files.

    ``line`` and ``column`` are 1-based and may be None when unknown.
    """

    def __init__(self, message, line=None, column=None):
        where = ""
        if line is not None:
            where = f"line {line}"
            if column is not None:
                where += f", column {column}"
            where += ": "
        super().__init__(where + message)
        self.line = line
        self.column = column


class ValidationError(FASimError):
    def __init__(self, diagnostics):
        lines = "; ".join(str(d) for d in diagnostics)
        super().__init__(f"model failed validation: {lines}")
        self.diagnostics = list(diagnostics)


class NotStaticallyInvertible(FASimError):
    pass


class SimulationError(FASimError):
    pass


class StepUnderflow(SimulationError):
    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


class InvariantViolated(SimulationError):
    def __init__(self, location, state=None):
        super().__init__(f"invariant of location {location!r} violated")
        self.location = location
        self.state = state
