"""Exception and warning types shared across the package."""


class TopoFanoError(Exception):
    """Base class for every error raised by topofano."""


class ParameterError(TopoFanoError, ValueError):
    """A physical parameter violates a hard invariant."""


class GeometryError(ParameterError):
    """Invalid TI/QD geometry, e.g. the dot sits inside the sphere."""


class CalibrationError(TopoFanoError):
    """Material calibration could not bracket a root."""


class SingularityError(TopoFanoError, ArithmeticError):
    """Evaluation hit an undamped pole."""


class OutOfBandError(TopoFanoError, ValueError):
    """Frequency outside a band-limited reservoir."""


class UnsupportedSectorError(TopoFanoError, ValueError):
    """The single-excitation resolvent was requested with nonzero occupation."""


class OracleFailure(TopoFanoError):
    """The discretized-bath oracle disagreed with the closed form."""


class PhysicsWarning(UserWarning):
    """Non-fatal diagnostic: parameters are outside the regime the model is built for."""
