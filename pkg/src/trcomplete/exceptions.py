class InvalidCoresError(ValueError):
    """Cores do not form a consistent tensor ring."""


class NoObservationsError(ValueError):
    """An operation needs at least one observed entry."""


class InvalidStateError(ValueError):
    """Streaming state does not match the incoming data."""


class NumericalError(ArithmeticError):
    """A solve failed or produced non-finite values."""
