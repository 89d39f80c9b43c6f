"""Exception hierarchy shared by all modules."""


class PlsError(Exception):
    """Base class for library errors."""


class DomainError(PlsError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class GeometryError(DomainError):
    """Measurement or node geometry cannot support the requested estimate."""


class ProtocolError(PlsError, RuntimeError):
    """A protocol step was invoked out of order or on an aborted session."""


class IntegrityError(ProtocolError):
    """Tag verification or reconciliation check failed."""


class ExhaustedError(ProtocolError):
    """No unused challenge-response pair remains."""
