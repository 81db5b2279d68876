"""Exception and warning types raised across the package."""


class GaugeTomoError(Exception):
    """Base class for all package errors."""


class PointOutsideDomain(GaugeTomoError, ValueError):
    pass


class TrappedRay(GaugeTomoError, RuntimeError):
    """A geodesic did not leave the domain within the length budget."""


class IntegrationDiverged(GaugeTomoError, FloatingPointError):
    pass


class SingularGauge(GaugeTomoError, ValueError):
    pass


class JetMismatch(GaugeTomoError, ValueError):
    """Tangential boundary traces of two pairs disagree."""


class SingularWeight(GaugeTomoError, ValueError):
    pass


class SingularData(GaugeTomoError, ValueError):
    pass


class RayMissesM(GaugeTomoError, ValueError):
    pass


class SingularSystem(GaugeTomoError, RuntimeError):
    pass


class GaugeInconsistent(GaugeTomoError, RuntimeError):
    """Transport from two incoming directions gave different gauges."""

    def __init__(self, message, discrepancy=None, gauge=None):
        super().__init__(message)
        self.discrepancy = discrepancy
        self.gauge = gauge


class StagnationWarning(UserWarning):
    pass


class ParseError(GaugeTomoError, ValueError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ValidationError(GaugeTomoError, ValueError):
    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


class SchemaError(GaugeTomoError, ValueError):
    pass
