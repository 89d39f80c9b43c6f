"""Physical-layer security laboratory."""

from plslab._accel import backend
from plslab.channel import Rng
from plslab.errors import (
    DomainError,
    ExhaustedError,
    GeometryError,
    IntegrityError,
    PlsError,
    ProtocolError,
)

__version__ = "0.1.0"

__all__ = [
    "Rng", "backend", "PlsError", "DomainError", "GeometryError", "ProtocolError",
    "IntegrityError", "ExhaustedError", "__version__",
]
